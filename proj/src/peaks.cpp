#include "relaxo/peaks.hpp"

#include <cmath>
#include <stdexcept>

namespace relaxo {

PeakSet find_z2_peaks(const ImpedanceSpectrum& spectrum, bool quadratic_refine) {
    const auto& z = spectrum.z2;
    const std::size_t n = z.size();
    if (n < 3) throw std::invalid_argument("peak detection needs >= 3 frequencies");

    PeakSet out;
    std::size_t i = 0;
    while (i < n) {
        // [i, j] is a run of equal values
        std::size_t j = i;
        while (j + 1 < n && z[j + 1] == z[i]) ++j;
        const bool rising = i > 0 && z[i - 1] < z[i];
        const bool falling = j + 1 < n && z[j + 1] < z[i];
        if (rising && falling) {
            std::size_t idx = i + (j - i) / 2;  // plateau midpoint
            double omega = spectrum.freq_grid.omegas[idx];
            if (quadratic_refine && i == j && idx > 0 && idx + 1 < n) {
                // vertex of the parabola through the three points in log omega
                const double ym = z[idx - 1], y0 = z[idx], yp = z[idx + 1];
                const double denom = ym - 2.0 * y0 + yp;
                if (denom < 0.0) {
                    const double delta = 0.5 * (ym - yp) / denom;
                    const double lw = std::log(spectrum.freq_grid.omegas[idx]);
                    const double h = std::log(spectrum.freq_grid.omegas[idx + 1] / spectrum.freq_grid.omegas[idx]);
                    omega = std::exp(lw + delta * h);
                }
            }
            out.peaks.push_back({idx, omega, 1.0 / omega});
        } else if ((i == 0 && falling) || (j + 1 == n && rising)) {
            out.boundary_maxima.push_back(i == 0 ? i : j);
        }
        i = j + 1;
    }
    return out;
}

std::vector<std::pair<double, double>> nyquist_curve(const ImpedanceSpectrum& spectrum) {
    std::vector<std::pair<double, double>> out;
    out.reserve(spectrum.size());
    for (std::size_t i = 0; i < spectrum.size(); ++i) out.emplace_back(spectrum.z1[i], spectrum.z2[i]);
    return out;
}

}  // namespace relaxo
