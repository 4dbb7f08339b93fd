#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "relaxo/forward.hpp"

namespace relaxo {

struct Peak {
    std::size_t index;  // grid index (plateau midpoint for flat tops)
    double omega;
    double t_star;  // 1/omega, the associated process time
};

struct PeakSet {
    std::vector<Peak> peaks;
    std::vector<std::size_t> boundary_maxima;  // flagged, not reported as peaks
};

/// Strict local maxima of Z2; plateaus collapse to their midpoint. Maxima at
/// the first or last frequency are flagged rather than reported. With
/// quadratic_refine the peak frequency is interpolated between grid points.
/// Throws for spectra with fewer than 3 frequencies.
PeakSet find_z2_peaks(const ImpedanceSpectrum& spectrum, bool quadratic_refine = false);

/// (Z1, Z2) pairs in frequency order for plotting.
std::vector<std::pair<double, double>> nyquist_curve(const ImpedanceSpectrum& spectrum);

}  // namespace relaxo
