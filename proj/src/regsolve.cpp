#include "relaxo/regsolve.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

namespace relaxo {

Regularizer build_regularizer(RegularizerKind kind, std::size_t n) {
    Regularizer reg{kind, {}};
    switch (kind) {
        case RegularizerKind::Identity:
            if (n < 1) throw std::invalid_argument("identity regularizer needs n >= 1");
            reg.matrix = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
            break;
        case RegularizerKind::FirstDiff: {
            if (n < 2) throw std::invalid_argument("first-difference regularizer needs n >= 2");
            reg.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n - 1), static_cast<Eigen::Index>(n));
            for (Eigen::Index i = 0; i < reg.matrix.rows(); ++i) {
                reg.matrix(i, i) = -1.0;
                reg.matrix(i, i + 1) = 1.0;
            }
            break;
        }
        case RegularizerKind::SecondDiff: {
            if (n < 3) throw std::invalid_argument("second-difference regularizer needs n >= 3");
            reg.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n - 2), static_cast<Eigen::Index>(n));
            for (Eigen::Index i = 0; i < reg.matrix.rows(); ++i) {
                reg.matrix(i, i) = 1.0;
                reg.matrix(i, i + 1) = -2.0;
                reg.matrix(i, i + 2) = 1.0;
            }
            break;
        }
    }
    return reg;
}

const char* regularizer_label(RegularizerKind kind) {
    switch (kind) {
        case RegularizerKind::Identity: return "I";
        case RegularizerKind::FirstDiff: return "L1";
        case RegularizerKind::SecondDiff: return "L2";
    }
    return "?";
}

const char* method_label(SolveMethod m) {
    switch (m) {
        case SolveMethod::LS: return "ls";
        case SolveMethod::NNLS_ActiveSet: return "nnls-as";
        case SolveMethod::NNLS_SBB: return "nnls-sbb";
    }
    return "?";
}

RegularizedSolver::RegularizedSolver(Eigen::MatrixXd A, Eigen::VectorXd b, Regularizer L)
    : A_(std::move(A)), b_(std::move(b)), L_(std::move(L)) {
    if (A_.rows() != b_.size()) throw std::invalid_argument("A and b dimensions disagree");
    if (L_.matrix.cols() != A_.cols()) throw std::invalid_argument("L and A column counts disagree");
    AtA_.noalias() = A_.transpose() * A_;
    LtL_.noalias() = L_.matrix.transpose() * L_.matrix;
    Atb_.noalias() = A_.transpose() * b_;
    btb_ = b_.squaredNorm();
}

RegularizedSolver RegularizedSolver::with_data(Eigen::VectorXd b) const {
    if (b.size() != b_.size()) throw std::invalid_argument("data vector has wrong length");
    RegularizedSolver out = *this;
    out.b_ = std::move(b);
    out.Atb_.noalias() = out.A_.transpose() * out.b_;
    out.btb_ = out.b_.squaredNorm();
    return out;
}

Solution RegularizedSolver::finish(Eigen::VectorXd x, int iterations, bool converged,
                                   SolveMethod method, bool min_norm) const {
    Solution s;
    s.residual_norm = (A_ * x - b_).norm();
    s.seminorm = (L_.matrix * x).norm();
    s.x = std::move(x);
    s.iterations = iterations;
    s.converged = converged;
    s.method = method;
    s.min_norm_fallback = min_norm;
    return s;
}

Eigen::MatrixXd RegularizedSolver::stacked_matrix(double lambda) const {
    if (lambda == 0.0) return A_;
    Eigen::MatrixXd S(A_.rows() + L_.matrix.rows(), A_.cols());
    S.topRows(A_.rows()) = A_;
    S.bottomRows(L_.matrix.rows()) = lambda * L_.matrix;
    return S;
}

Solution RegularizedSolver::ls(double lambda) const {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    const Eigen::MatrixXd S = stacked_matrix(lambda);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S.rows());
    rhs.head(b_.size()) = b_;

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(S);
    Eigen::VectorXd x = cod.solve(rhs);
    const bool deficient = cod.rank() < S.cols();
    return finish(std::move(x), 1, true, SolveMethod::LS, deficient);
}

namespace {

// Unconstrained subproblem on the passive set, via LDLT of the Gram
// submatrix. Returns false if the factorization is unusable.
bool solve_passive_gram(const Eigen::MatrixXd& G, const Eigen::VectorXd& c,
                        const std::vector<Eigen::Index>& passive, Eigen::VectorXd& z) {
    const auto p = static_cast<Eigen::Index>(passive.size());
    Eigen::MatrixXd Gpp(p, p);
    Eigen::VectorXd cp(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        cp[i] = c[passive[static_cast<std::size_t>(i)]];
        for (Eigen::Index j = 0; j < p; ++j)
            Gpp(i, j) = G(passive[static_cast<std::size_t>(i)], passive[static_cast<std::size_t>(j)]);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(Gpp);
    if (ldlt.info() != Eigen::Success) return false;
    z = ldlt.solve(cp);
    return z.allFinite();
}

}  // namespace

Solution RegularizedSolver::nnls_activeset(double lambda) const {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    const auto n = A_.cols();
    Eigen::MatrixXd G = AtA_;
    if (lambda != 0.0) G.noalias() += (lambda * lambda) * LtL_;
    const Eigen::VectorXd& c = Atb_;
    const double tau = 1e-8 * c.lpNorm<Eigen::Infinity>();

    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    std::vector<Eigen::Index> pidx;
    Eigen::VectorXd w = c;  // gradient of -1/2 objective: c - G x

    const int max_outer = 3 * static_cast<int>(n);
    int iter = 0;
    bool converged = false;

    auto recompute_w = [&]() {
        w = c;
        for (Eigen::Index j : pidx) w.noalias() -= G.col(j) * x[j];
    };

    while (iter < max_outer) {
        // pick the most violated zero-fixed coordinate; smallest index wins ties
        Eigen::Index enter = -1;
        double best = tau;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!passive[static_cast<std::size_t>(i)] && w[i] > best) {
                best = w[i];
                enter = i;
            }
        }
        if (enter < 0) {
            converged = true;
            break;
        }
        passive[static_cast<std::size_t>(enter)] = true;
        pidx.push_back(enter);
        std::sort(pidx.begin(), pidx.end());

        // inner loop: restore feasibility of the passive-set LS solution
        while (iter < max_outer) {
            ++iter;
            Eigen::VectorXd z;
            if (!solve_passive_gram(G, c, pidx, z)) {
                // degenerate subproblem: drop the entering index and stop
                passive[static_cast<std::size_t>(enter)] = false;
                pidx.erase(std::find(pidx.begin(), pidx.end(), enter));
                converged = false;
                iter = max_outer;
                break;
            }
            if (z.minCoeff() > 0.0) {
                x.setZero();
                for (std::size_t k = 0; k < pidx.size(); ++k) x[pidx[k]] = z[static_cast<Eigen::Index>(k)];
                break;
            }
            // step toward z until the first passive coordinate hits zero
            double alpha = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < pidx.size(); ++k) {
                const double zk = z[static_cast<Eigen::Index>(k)];
                if (zk <= 0.0) {
                    const double xk = x[pidx[k]];
                    alpha = std::min(alpha, xk / (xk - zk));
                }
            }
            if (!std::isfinite(alpha)) alpha = 0.0;
            for (std::size_t k = 0; k < pidx.size(); ++k) {
                const Eigen::Index j = pidx[k];
                x[j] += alpha * (z[static_cast<Eigen::Index>(k)] - x[j]);
            }
            // release coordinates that reached the boundary
            std::vector<Eigen::Index> keep;
            keep.reserve(pidx.size());
            for (Eigen::Index j : pidx) {
                if (x[j] <= 1e-14 * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
                    x[j] = 0.0;
                    passive[static_cast<std::size_t>(j)] = false;
                } else {
                    keep.push_back(j);
                }
            }
            pidx.swap(keep);
            if (pidx.empty()) break;
        }
        recompute_w();
    }

    // The Gram solve can lose accuracy on ill-conditioned passive sets; polish
    // the final support with a QR solve on the stacked columns if the KKT
    // certificate does not hold.
    if (!pidx.empty()) {
        bool kkt_ok = true;
        for (Eigen::Index j : pidx)
            if (std::abs(w[j]) > tau) kkt_ok = false;
        if (!kkt_ok) {
            const Eigen::MatrixXd S = stacked_matrix(lambda);
            Eigen::MatrixXd Sp(S.rows(), static_cast<Eigen::Index>(pidx.size()));
            for (std::size_t k = 0; k < pidx.size(); ++k) Sp.col(static_cast<Eigen::Index>(k)) = S.col(pidx[k]);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S.rows());
            rhs.head(b_.size()) = b_;
            Eigen::VectorXd z = Sp.colPivHouseholderQr().solve(rhs);
            if (z.allFinite() && z.minCoeff() >= 0.0) {
                x.setZero();
                for (std::size_t k = 0; k < pidx.size(); ++k) x[pidx[k]] = z[static_cast<Eigen::Index>(k)];
            }
        }
    }

    return finish(std::move(x), iter, converged, SolveMethod::NNLS_ActiveSet);
}

Solution RegularizedSolver::nnls_sbb(double lambda, const Eigen::VectorXd* init,
                                     const SbbOptions& opts) const {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
    const auto n = A_.cols();
    Eigen::MatrixXd G = AtA_;
    if (lambda != 0.0) G.noalias() += (lambda * lambda) * LtL_;
    const Eigen::VectorXd& c = Atb_;

    if (init && init->size() != n) throw std::invalid_argument("init vector has wrong length");
    if (init && init->minCoeff() < 0.0) throw std::invalid_argument("init must be nonnegative");
    Eigen::VectorXd x = init ? Eigen::VectorXd(init->cwiseMax(0.0)) : Eigen::VectorXd::Zero(n);

    auto objective = [&](const Eigen::VectorXd& v) { return v.dot(G * v) - 2.0 * c.dot(v) + btb_; };
    auto gradient = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return G * v - c; };

    Eigen::VectorXd g = gradient(x);
    double f = objective(x);
    Eigen::VectorXd best_x = x;
    double best_f = f;

    std::deque<double> window{f};
    auto proj_grad_norm = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& gv) {
        return (v - (v - gv).cwiseMax(0.0)).lpNorm<Eigen::Infinity>();
    };

    const double g0 = g.lpNorm<Eigen::Infinity>();
    double alpha = g0 > 0.0 ? 1.0 / g0 : 1.0;

    int iter = 0;
    bool converged = false;
    for (; iter < opts.max_iter; ++iter) {
        if (proj_grad_norm(x, g) <= opts.tol * (1.0 + g.lpNorm<Eigen::Infinity>())) {
            converged = true;
            break;
        }
        const double f_ref = *std::max_element(window.begin(), window.end());

        Eigen::VectorXd x_new;
        double f_new = 0.0;
        double step = alpha;
        for (int bt = 0; bt < 40; ++bt) {
            x_new = (x - step * g).cwiseMax(0.0);
            f_new = objective(x_new);
            const double slope = 2.0 * g.dot(x_new - x);  // full-objective directional derivative
            if (f_new <= f_ref + 1e-4 * slope || (x_new - x).lpNorm<Eigen::Infinity>() == 0.0) break;
            step *= 0.5;
        }
        const Eigen::VectorXd s = x_new - x;
        if (s.lpNorm<Eigen::Infinity>() == 0.0) {
            converged = true;  // projection arc stalled at a stationary point
            break;
        }
        Eigen::VectorXd g_new = gradient(x_new);
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 0.0) {
            // alternate the two Barzilai-Borwein step lengths
            alpha = (iter % 2 == 0) ? s.squaredNorm() / sy : sy / y.squaredNorm();
            alpha = std::clamp(alpha, 1e-15, 1e15);
        } else {
            alpha = std::max(step, 1e-15);
        }
        x = std::move(x_new);
        g = std::move(g_new);
        f = f_new;
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
        window.push_back(f);
        if (static_cast<int>(window.size()) > opts.window) window.pop_front();
    }
    if (f > best_f) x = best_x;  // never return worse than the best visited point

    return finish(std::move(x), iter, converged, SolveMethod::NNLS_SBB);
}

Solution RegularizedSolver::solve(SolveMethod method, double lambda) const {
    switch (method) {
        case SolveMethod::LS: return ls(lambda);
        case SolveMethod::NNLS_ActiveSet: return nnls_activeset(lambda);
        case SolveMethod::NNLS_SBB: return nnls_sbb(lambda);
    }
    throw std::logic_error("unreachable");
}

Solution solve_ls(const RegularizedProblem& p) {
    return RegularizedSolver(p.A, p.b, p.L).ls(p.lambda);
}

Solution solve_nnls_activeset(const RegularizedProblem& p) {
    return RegularizedSolver(p.A, p.b, p.L).nnls_activeset(p.lambda);
}

Solution solve_nnls_sbb(const RegularizedProblem& p, const Eigen::VectorXd* init, const SbbOptions& opts) {
    return RegularizedSolver(p.A, p.b, p.L).nnls_sbb(p.lambda, init, opts);
}

}  // namespace relaxo
