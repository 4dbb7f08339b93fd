#pragma once

#include <cmath>
#include <functional>
#include <random>

namespace testutil {

// Adaptive Simpson quadrature; independent of any quadrature in the library.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int depth = 24) {
    const double c = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fc = f(c);
    std::function<double(double, double, double, double, double, double, double, int)> rec =
        [&](double x0, double x2, double f0, double f1, double f2, double whole, double eps,
            int d) -> double {
        const double x1l = 0.5 * (x0 + 0.5 * (x0 + x2));
        const double x1r = 0.5 * (0.5 * (x0 + x2) + x2);
        const double fl = f(x1l), fr = f(x1r);
        const double xm = 0.5 * (x0 + x2);
        const double left = (xm - x0) / 6.0 * (f0 + 4.0 * fl + f1);
        const double right = (x2 - xm) / 6.0 * (f1 + 4.0 * fr + f2);
        if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps)
            return left + right + (left + right - whole) / 15.0;
        return rec(x0, xm, f0, fl, f1, left, eps / 2.0, d - 1) +
               rec(xm, x2, f1, fr, f2, right, eps / 2.0, d - 1);
    };
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    return rec(a, b, fa, fc, fb, whole, tol, depth);
}

// Deterministic uniform doubles for test inputs.
class Uniform {
public:
    explicit Uniform(std::uint64_t seed) : eng_(seed) {}
    double operator()(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(eng_() >> 11) * 0x1.0p-53);
    }

private:
    std::mt19937_64 eng_;
};

}  // namespace testutil
