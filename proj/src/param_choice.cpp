#include "relaxo/param_choice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace relaxo {

LambdaGrid LambdaGrid::log_spaced(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("bad lambda grid parameters");
    LambdaGrid g;
    g.values.resize(n);
    const double step = std::log(hi / lo) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g.values[i] = lo * std::exp(step * static_cast<double>(i));
    g.values.back() = hi;
    return g;
}

LambdaGrid LambdaGrid::standard() { return log_spaced(1e-8, 1e2, 50); }

LambdaGrid LambdaGrid::from_values(std::vector<double> values) {
    if (values.size() > 1 && values.front() > values.back()) std::reverse(values.begin(), values.end());
    LambdaGrid g{std::move(values)};
    g.validate();
    return g;
}

void LambdaGrid::validate() const {
    if (values.empty()) throw std::invalid_argument("empty lambda grid");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(values[i] > 0.0)) throw std::invalid_argument("lambda values must be positive");
        if (i > 0 && !(values[i] > values[i - 1]))
            throw std::invalid_argument("lambda grid must be strictly monotone");
    }
}

const char* criterion_label(SelectionCriterion c) { return c == SelectionCriterion::LC ? "lc" : "ncp"; }

SweepResult sweep(const RegularizedSolver& solver, const LambdaGrid& grid, SolveMethod method,
                  const Eigen::VectorXd* x_true, const NcpEvaluator* ncp) {
    grid.validate();
    std::optional<NcpEvaluator> local;
    if (!ncp) {
        local.emplace(static_cast<std::size_t>(solver.b().size()));
        ncp = &*local;
    }

    SweepResult result;
    result.entries.reserve(grid.size());
    for (double lambda : grid.values) {
        SweepEntry e;
        e.lambda = lambda;
        try {
            e.solution = solver.solve(method, lambda);
            e.solver_ok = e.solution.converged;
        } catch (const std::exception&) {
            e.solver_ok = false;
        }
        if (e.solution.x.size() > 0) {
            e.residual = solver.A() * e.solution.x - solver.b();
            e.ncp_dev = ncp->deviation(e.residual);
            if (x_true) e.s_space_error = (e.solution.x - *x_true).norm();
        }
        result.entries.push_back(std::move(e));
    }
    return result;
}

namespace {

struct CurvePoint {
    std::size_t entry_index;
    double x, y;  // log residual norm, log seminorm
};

}  // namespace

CornerResult lcurve_corner(const SweepResult& sweep) {
    std::vector<CurvePoint> pts;
    for (std::size_t i = 0; i < sweep.entries.size(); ++i) {
        const auto& e = sweep.entries[i];
        if (!e.solver_ok) continue;
        if (!(e.solution.residual_norm > 0.0) || !(e.solution.seminorm > 0.0)) continue;
        pts.push_back({i, std::log(e.solution.residual_norm), std::log(e.solution.seminorm)});
    }
    if (pts.size() < 3) throw std::invalid_argument("l-curve corner needs >= 3 usable points");

    // drop near-coincident consecutive points: they carry no corner
    // information and their cross products are dominated by rounding noise
    double span = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        span = std::max(span, std::hypot(pts[i].x - pts[0].x, pts[i].y - pts[0].y));
    const double dup_tol = std::max(span, 1e-300) * 1e-4;
    std::vector<CurvePoint> uniq{pts.front()};
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (std::hypot(pts[i].x - uniq.back().x, pts[i].y - uniq.back().y) > dup_tol) uniq.push_back(pts[i]);

    const double curv_floor = 1e-6 / std::max(span, 1e-300);  // below this the curve counts as straight
    double best_curv = curv_floor;
    std::optional<std::size_t> best;
    for (std::size_t i = 1; i + 1 < uniq.size(); ++i) {
        const auto& a = uniq[i - 1];
        const auto& b = uniq[i];
        const auto& c = uniq[i + 1];
        const double ux = b.x - a.x, uy = b.y - a.y;
        const double vx = c.x - b.x, vy = c.y - b.y;
        const double cross = ux * vy - uy * vx;  // positive for the corner turn of an L-shape
        const double dab = std::hypot(ux, uy);
        const double dbc = std::hypot(vx, vy);
        const double dac = std::hypot(c.x - a.x, c.y - a.y);
        if (dab == 0.0 || dbc == 0.0 || dac == 0.0) continue;
        const double curv = 2.0 * cross / (dab * dbc * dac);
        if (curv >= best_curv) {  // >= moves ties toward larger lambda
            best_curv = curv;
            best = i;
        }
    }

    CornerResult r;
    if (best) {
        r.index = uniq[*best].entry_index;
        r.lambda = sweep.entries[r.index].lambda;
        r.fallback = false;
        return r;
    }

    // collinear (or corner-free) curve: largest lambda whose residual stays
    // within 1% of the minimal residual
    double min_res = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) min_res = std::min(min_res, sweep.entries[p.entry_index].solution.residual_norm);
    std::size_t pick = pts.front().entry_index;
    for (const auto& p : pts)
        if (sweep.entries[p.entry_index].solution.residual_norm <= 1.01 * min_res) pick = p.entry_index;
    r.index = pick;
    r.lambda = sweep.entries[pick].lambda;
    r.fallback = true;
    return r;
}

NcpEvaluator::NcpEvaluator(std::size_t length) : n_(length) {
    if (n_ < 8) throw std::invalid_argument("ncp needs residual length >= 8");
    const std::size_t q = n_ / 2;
    cos_.resize(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(n_));
    sin_.resize(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(n_));
    const double w0 = 2.0 * std::numbers::pi / static_cast<double>(n_);
    for (std::size_t k = 1; k <= q; ++k)
        for (std::size_t j = 0; j < n_; ++j) {
            const double a = w0 * static_cast<double>(k) * static_cast<double>(j);
            cos_(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(j)) = std::cos(a);
            sin_(static_cast<Eigen::Index>(k - 1), static_cast<Eigen::Index>(j)) = std::sin(a);
        }
}

std::vector<double> NcpEvaluator::cumulative(const Eigen::VectorXd& residual) const {
    if (static_cast<std::size_t>(residual.size()) != n_)
        throw std::invalid_argument("residual length does not match evaluator");
    const std::size_t q = n_ / 2;
    const Eigen::VectorXd re = cos_ * residual;
    const Eigen::VectorXd im = sin_ * residual;

    std::vector<double> c(q, 0.0);
    double running = 0.0;
    for (std::size_t k = 0; k < q; ++k) {
        running += re[static_cast<Eigen::Index>(k)] * re[static_cast<Eigen::Index>(k)] +
                   im[static_cast<Eigen::Index>(k)] * im[static_cast<Eigen::Index>(k)];
        c[k] = running;
    }
    const double total = running;
    if (total <= 0.0) return std::vector<double>(q, 0.0);  // zero or constant residual
    for (auto& v : c) v /= total;
    c.back() = 1.0;  // exact by construction; protect against rounding
    return c;
}

double NcpEvaluator::deviation(const Eigen::VectorXd& residual, NcpMetric metric) const {
    if (residual.lpNorm<Eigen::Infinity>() == 0.0) return 0.0;
    const auto c = cumulative(residual);
    const double q = static_cast<double>(c.size());
    if (c.back() == 0.0) return 0.0;  // all power at DC
    double acc = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) {
        const double d = c[j] - static_cast<double>(j + 1) / q;
        acc = metric == NcpMetric::L2 ? acc + d * d : std::max(acc, std::abs(d));
    }
    return metric == NcpMetric::L2 ? std::sqrt(acc) : acc;
}

std::vector<double> ncp_cumulative(const Eigen::VectorXd& residual) {
    return NcpEvaluator(static_cast<std::size_t>(residual.size())).cumulative(residual);
}

double ncp_deviation(const Eigen::VectorXd& residual, NcpMetric metric) {
    return NcpEvaluator(static_cast<std::size_t>(residual.size())).deviation(residual, metric);
}

std::size_t ncp_select(const SweepResult& sweep) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < sweep.entries.size(); ++i) {
        const auto& e = sweep.entries[i];
        if (!e.solver_ok) continue;
        if (!best || e.ncp_dev <= sweep.entries[*best].ncp_dev) best = i;  // ties toward larger lambda
    }
    if (!best) throw std::runtime_error("ncp_select: no usable sweep entries");
    return *best;
}

std::size_t oracle_select(const SweepResult& sweep, const Eigen::VectorXd& x_true) {
    std::optional<std::size_t> best;
    double best_err = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sweep.entries.size(); ++i) {
        const auto& e = sweep.entries[i];
        if (!e.solver_ok || e.solution.x.size() == 0) continue;
        const double err = e.s_space_error ? *e.s_space_error : (e.solution.x - x_true).norm();
        if (err < best_err) {
            best_err = err;
            best = i;
        }
    }
    if (!best) throw std::runtime_error("oracle_select: no usable sweep entries");
    return *best;
}

double geometric_mean(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("geometric mean of an empty set");
    double acc = 0.0;
    for (double v : values) {
        if (!(v > 0.0)) throw std::domain_error("geometric mean requires positive values");
        acc += std::log(v);
    }
    return std::exp(acc / static_cast<double>(values.size()));
}

SelectionResult select_all(const SweepResult& sweep, const Eigen::VectorXd* x_true) {
    SelectionResult r;
    const auto corner = lcurve_corner(sweep);
    r.index_lc = corner.index;
    r.lambda_lc = corner.lambda;
    r.lc_fallback = corner.fallback;
    r.index_ncp = ncp_select(sweep);
    r.lambda_ncp = sweep.entries[r.index_ncp].lambda;
    if (x_true) {
        r.index_opt = oracle_select(sweep, *x_true);
        r.lambda_opt = sweep.entries[*r.index_opt].lambda;
    }
    return r;
}

}  // namespace relaxo
