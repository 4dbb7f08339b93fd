#pragma once

#include <vector>

#include "relaxo/drt.hpp"
#include "relaxo/forward.hpp"

namespace relaxo {

struct ParamBounds {
    double lo = 0.0;
    double hi = 0.0;
};

struct ProcessInit {
    double t0 = 1.0;
    double shape = 0.5;
    double scale = 1.0;
};

struct FitConfig {
    ProcessKind family = ProcessKind::RQ;
    std::vector<ProcessInit> init;  // one entry per process
    ParamBounds t0_bounds{0.0, 100.0};
    ParamBounds shape_bounds{0.1, 1.0};
    ParamBounds scale_bounds{0.0, 1.1};
    int max_iterations = 500;
    double step_tol = 1e-10;
    double grad_tol = 1e-10;

    void validate() const;
};

struct FitResult {
    DrtModel model;  // fitted parameters, family per config
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<bool> active_lower, active_upper;  // per flattened parameter (t0, shape, scale)
};

/// Peak-based initializer: one process per detected Z2 peak with t0 = 1/omega
/// at the peak, shape 0.8 (RQ) or 0.69 (LN), scale 1. Throws when no interior
/// peak exists; the caller must then supply its own initial values.
FitConfig init_from_peaks(const ImpedanceSpectrum& spectrum, ProcessKind family);

/// Bounded Levenberg-Marquardt fit of the parametric model to the measured
/// spectrum in the stacked (Z1, Z2) 2-norm. Parameters are projected onto the
/// bound box each step; the returned residual never exceeds the initial one.
FitResult fit(const ImpedanceSpectrum& spectrum, const FitConfig& config);

}  // namespace relaxo
