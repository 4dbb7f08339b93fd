#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace relaxo {

/// Deterministic stream of standard-normal deviates.
///
/// Uses the fully specified mt19937_64 bit stream and an explicit
/// Box-Muller transform, so identical seeds produce identical samples
/// on every platform and standard library.
class NormalSampler {
public:
    explicit NormalSampler(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0,1], u2 in [0,1)
        const double u1 = 1.0 - uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    std::vector<double> take(std::size_t n) {
        std::vector<double> out(n);
        for (auto& v : out) v = next();
        return out;
    }

private:
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace relaxo
