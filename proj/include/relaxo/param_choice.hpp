#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "relaxo/regsolve.hpp"

namespace relaxo {

struct LambdaGrid {
    std::vector<double> values;  // sorted ascending, strictly positive

    static LambdaGrid log_spaced(double lo, double hi, std::size_t n);
    /// 50 values log-spaced over [1e-8, 1e2].
    static LambdaGrid standard();
    /// Accepts a strictly monotone list (either direction) and stores it
    /// ascending.
    static LambdaGrid from_values(std::vector<double> values);

    std::size_t size() const { return values.size(); }
    void validate() const;
};

struct SweepEntry {
    double lambda = 0.0;
    Solution solution;
    Eigen::VectorXd residual;  // A x - b, length 2M
    double ncp_dev = 0.0;
    std::optional<double> s_space_error;  // ||x - x_true||_2 when truth is known
    bool solver_ok = false;
};

struct SweepResult {
    std::vector<SweepEntry> entries;  // ascending lambda

    std::size_t size() const { return entries.size(); }
};

enum class SelectionCriterion { LC, NCP };

const char* criterion_label(SelectionCriterion c);  // "lc", "ncp"

class NcpEvaluator;

/// Solves the problem once per grid value (cold started, so results do not
/// depend on sweep order). Solver failures are recorded and skipped by the
/// selection rules. A shared NcpEvaluator avoids rebuilding the DFT table
/// inside Monte-Carlo loops.
SweepResult sweep(const RegularizedSolver& solver, const LambdaGrid& grid, SolveMethod method,
                  const Eigen::VectorXd* x_true = nullptr, const NcpEvaluator* ncp = nullptr);

struct CornerResult {
    std::size_t index = 0;
    double lambda = 0.0;
    bool fallback = false;  // no usable corner; largest lambda near minimal residual
};

/// Corner of the (log residual norm, log seminorm) curve by maximum discrete
/// Menger curvature over interior points, ties toward larger lambda.
CornerResult lcurve_corner(const SweepResult& sweep);

enum class NcpMetric { L2, KS };

/// Normalized cumulative periodogram of the residual (DC excluded):
/// c_j = sum_{k<=j} |DFT(r)_k|^2 / total, j = 1..floor(len/2).
std::vector<double> ncp_cumulative(const Eigen::VectorXd& residual);

/// Distance of the cumulative periodogram from the white-noise line j/q.
/// L2 metric by default; KS is the sup-norm variant.
double ncp_deviation(const Eigen::VectorXd& residual, NcpMetric metric = NcpMetric::L2);

/// Precomputed DFT table for repeated deviations at a fixed residual length.
class NcpEvaluator {
public:
    explicit NcpEvaluator(std::size_t length);
    std::vector<double> cumulative(const Eigen::VectorXd& residual) const;
    double deviation(const Eigen::VectorXd& residual, NcpMetric metric = NcpMetric::L2) const;
    std::size_t length() const { return n_; }

private:
    std::size_t n_;
    Eigen::MatrixXd cos_, sin_;  // q x n
};

/// Index of the sweep entry whose residual is closest to white noise,
/// ties toward larger lambda.
std::size_t ncp_select(const SweepResult& sweep);

/// Index minimizing ||x(lambda) - x_true||_2.
std::size_t oracle_select(const SweepResult& sweep, const Eigen::VectorXd& x_true);

double geometric_mean(std::span<const double> values);

struct SelectionResult {
    double lambda_lc = 0.0;
    double lambda_ncp = 0.0;
    std::optional<double> lambda_opt;
    std::size_t index_lc = 0, index_ncp = 0;
    std::optional<std::size_t> index_opt;
    bool lc_fallback = false;
};

SelectionResult select_all(const SweepResult& sweep, const Eigen::VectorXd* x_true = nullptr);

}  // namespace relaxo
