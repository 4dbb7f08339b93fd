#include "relaxo/nlsfit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "relaxo/peaks.hpp"

namespace relaxo {

void FitConfig::validate() const {
    if (init.empty()) throw std::invalid_argument("fit needs at least one process");
    auto inside = [](double v, const ParamBounds& b) { return v > b.lo && v < b.hi; };
    for (const auto& p : init) {
        if (!inside(p.t0, t0_bounds) || !inside(p.shape, shape_bounds) || !inside(p.scale, scale_bounds))
            throw std::invalid_argument("initial parameters must lie strictly inside the bounds");
    }
}

FitConfig init_from_peaks(const ImpedanceSpectrum& spectrum, ProcessKind family) {
    const PeakSet peaks = find_z2_peaks(spectrum);
    if (peaks.peaks.empty())
        throw std::runtime_error(
            "no interior Z2 peak found; supply initial parameters explicitly");
    FitConfig cfg;
    cfg.family = family;
    for (const auto& p : peaks.peaks)
        cfg.init.push_back({p.t_star, family == ProcessKind::RQ ? 0.8 : 0.69, 1.0});
    return cfg;
}

namespace {

constexpr int kParamsPerProcess = 3;  // t0, shape, scale

struct BoundBox {
    std::vector<double> lo, hi;
};

// Effective (numerically safe) bounds. RQ beta stays a little below 1 so that
// near-Debye spikes remain resolvable by the synthesis quadrature; t0 stays
// strictly positive.
BoundBox make_bounds(const FitConfig& cfg) {
    BoundBox b;
    const std::size_t np = cfg.init.size();
    b.lo.resize(np * kParamsPerProcess);
    b.hi.resize(np * kParamsPerProcess);
    for (std::size_t p = 0; p < np; ++p) {
        b.lo[3 * p + 0] = std::max(cfg.t0_bounds.lo, 1e-10);
        b.hi[3 * p + 0] = cfg.t0_bounds.hi;
        b.lo[3 * p + 1] = cfg.shape_bounds.lo;
        b.hi[3 * p + 1] = cfg.family == ProcessKind::RQ ? std::min(cfg.shape_bounds.hi, 1.0) - 3e-3
                                                        : cfg.shape_bounds.hi;
        b.lo[3 * p + 2] = cfg.scale_bounds.lo;
        b.hi[3 * p + 2] = cfg.scale_bounds.hi;
    }
    return b;
}

DrtModel model_from(const Eigen::VectorXd& theta, ProcessKind family) {
    DrtModel m;
    for (Eigen::Index p = 0; p * 3 < theta.size(); ++p) {
        DrtProcess proc{family, theta[3 * p + 0], theta[3 * p + 1], std::max(theta[3 * p + 2], 0.0)};
        m.processes.push_back(proc);
    }
    return m;
}

Eigen::VectorXd residual_vector(const Eigen::VectorXd& theta, ProcessKind family,
                                const ImpedanceSpectrum& data) {
    const DrtModel m = model_from(theta, family);
    const ImpedanceSpectrum model = synthesize_spectrum(m, data.freq_grid);
    const std::size_t n = data.size();
    Eigen::VectorXd r(static_cast<Eigen::Index>(2 * n));
    for (std::size_t i = 0; i < n; ++i) {
        r[static_cast<Eigen::Index>(i)] = model.z1[i] - data.z1[i];
        r[static_cast<Eigen::Index>(n + i)] = model.z2[i] - data.z2[i];
    }
    return r;
}

Eigen::VectorXd clamp_to(const Eigen::VectorXd& theta, const BoundBox& b) {
    Eigen::VectorXd out = theta;
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out[i] = std::clamp(out[i], b.lo[static_cast<std::size_t>(i)], b.hi[static_cast<std::size_t>(i)]);
    return out;
}

}  // namespace

FitResult fit(const ImpedanceSpectrum& spectrum, const FitConfig& config) {
    config.validate();
    const auto np = static_cast<Eigen::Index>(config.init.size());
    const Eigen::Index dim = np * kParamsPerProcess;
    const BoundBox box = make_bounds(config);

    Eigen::VectorXd theta(dim);
    for (Eigen::Index p = 0; p < np; ++p) {
        theta[3 * p + 0] = config.init[static_cast<std::size_t>(p)].t0;
        theta[3 * p + 1] = config.init[static_cast<std::size_t>(p)].shape;
        theta[3 * p + 2] = config.init[static_cast<std::size_t>(p)].scale;
    }
    theta = clamp_to(theta, box);

    Eigen::VectorXd r = residual_vector(theta, config.family, spectrum);
    double f = r.squaredNorm();

    auto jacobian = [&](const Eigen::VectorXd& th, const Eigen::VectorXd& /*r0*/) {
        Eigen::MatrixXd J(r.size(), dim);
        for (Eigen::Index j = 0; j < dim; ++j) {
            const double h = 1e-6 * std::max(std::abs(th[j]), 1e-4);
            Eigen::VectorXd tp = th, tm = th;
            tp[j] = std::min(th[j] + h, box.hi[static_cast<std::size_t>(j)]);
            tm[j] = std::max(th[j] - h, box.lo[static_cast<std::size_t>(j)]);
            const double span = tp[j] - tm[j];
            if (span <= 0.0) {
                J.col(j).setZero();
                continue;
            }
            J.col(j) = (residual_vector(tp, config.family, spectrum) -
                        residual_vector(tm, config.family, spectrum)) /
                       span;
        }
        return J;
    };

    double mu = -1.0;  // initialized from the first Jacobian
    bool converged = false;
    int iter = 0;
    std::deque<double> gains;  // recent accepted improvements of ||r||^2

    for (; iter < config.max_iterations; ++iter) {
        const Eigen::MatrixXd J = jacobian(theta, r);
        const Eigen::VectorXd g = J.transpose() * r;  // half-gradient of ||r||^2
        Eigen::MatrixXd JtJ = J.transpose() * J;
        if (mu < 0.0) mu = 1e-3 * JtJ.diagonal().maxCoeff();

        // projected-gradient stationarity on the box
        double pg = 0.0;
        for (Eigen::Index i = 0; i < dim; ++i) {
            const double step = std::clamp(theta[i] - g[i], box.lo[static_cast<std::size_t>(i)],
                                           box.hi[static_cast<std::size_t>(i)]) -
                                theta[i];
            pg = std::max(pg, std::abs(step));
        }
        if (pg <= config.grad_tol * (1.0 + g.lpNorm<Eigen::Infinity>())) {
            converged = true;
            break;
        }

        // coordinates pinned at a bound with an outward-pointing gradient
        // leave the step computation entirely; otherwise the clamped step
        // zigzags along the active face
        std::vector<Eigen::Index> free;
        for (Eigen::Index i = 0; i < dim; ++i) {
            const bool at_lo = theta[i] <= box.lo[static_cast<std::size_t>(i)] && g[i] > 0.0;
            const bool at_hi = theta[i] >= box.hi[static_cast<std::size_t>(i)] && g[i] < 0.0;
            if (!at_lo && !at_hi) free.push_back(i);
        }
        if (free.empty()) {
            converged = true;  // every coordinate is blocked by its bound
            break;
        }
        const auto nf = static_cast<Eigen::Index>(free.size());
        Eigen::MatrixXd JtJf(nf, nf);
        Eigen::VectorXd gf(nf);
        for (Eigen::Index a = 0; a < nf; ++a) {
            gf[a] = g[free[static_cast<std::size_t>(a)]];
            for (Eigen::Index b = 0; b < nf; ++b)
                JtJf(a, b) = JtJ(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
        }

        bool accepted = false;
        bool small_step = false;
        double gain = 0.0;
        for (int tries = 0; tries < 25; ++tries) {
            Eigen::MatrixXd M = JtJf;
            M.diagonal() += mu * JtJf.diagonal().cwiseMax(1e-12);
            const Eigen::VectorXd delta_f = M.ldlt().solve(-gf);
            Eigen::VectorXd delta = Eigen::VectorXd::Zero(dim);
            for (Eigen::Index a = 0; a < nf; ++a) delta[free[static_cast<std::size_t>(a)]] = delta_f[a];
            const Eigen::VectorXd trial = clamp_to(theta + delta, box);
            const Eigen::VectorXd r_try = residual_vector(trial, config.family, spectrum);
            const double f_try = r_try.squaredNorm();
            if (f_try < f) {
                small_step = (trial - theta).lpNorm<Eigen::Infinity>() <=
                             config.step_tol * (1.0 + theta.lpNorm<Eigen::Infinity>());
                gain = f - f_try;
                theta = trial;
                r = r_try;
                f = f_try;
                mu = std::max(mu / 3.0, 1e-14);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if (!accepted) {  // damping exhausted: no descent direction at working precision
            converged = true;
            break;
        }
        if (small_step) {
            converged = true;
            ++iter;
            break;
        }
        // objective stagnation: the last few accepted steps improved ||r||^2
        // only at rounding level (typical when a parameter rides a bound and
        // the finite-difference gradient noise keeps producing micro-descents)
        gains.push_back(gain);
        if (gains.size() > 5) gains.pop_front();
        if (gains.size() == 5) {
            double recent = 0.0;
            for (double g5 : gains) recent += g5;
            if (recent <= 1e-10 * std::max(f, 1e-300)) {
                converged = true;
                ++iter;
                break;
            }
        }
    }

    FitResult result;
    result.model = model_from(theta, config.family);
    result.residual_norm = std::sqrt(f);
    result.iterations = iter;
    result.converged = converged;
    result.active_lower.resize(static_cast<std::size_t>(dim));
    result.active_upper.resize(static_cast<std::size_t>(dim));
    const double bound_tol = 1e-9;
    for (Eigen::Index i = 0; i < dim; ++i) {
        result.active_lower[static_cast<std::size_t>(i)] =
            theta[i] <= box.lo[static_cast<std::size_t>(i)] + bound_tol;
        result.active_upper[static_cast<std::size_t>(i)] =
            theta[i] >= box.hi[static_cast<std::size_t>(i)] - bound_tol;
    }
    return result;
}

}  // namespace relaxo
