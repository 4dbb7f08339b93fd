#pragma once

#include <Eigen/Dense>
#include <cstddef>

namespace relaxo {

enum class RegularizerKind { Identity, FirstDiff, SecondDiff };

struct Regularizer {
    RegularizerKind kind;
    Eigen::MatrixXd matrix;  // rows x n difference stencil, unscaled
};

/// Identity (n x n), forward differences [-1, 1] ((n-1) x n), or second
/// differences [1, -2, 1] ((n-2) x n). Throws for n too small.
Regularizer build_regularizer(RegularizerKind kind, std::size_t n);

const char* regularizer_label(RegularizerKind kind);  // "I", "L1", "L2"

enum class SolveMethod { LS, NNLS_ActiveSet, NNLS_SBB };

const char* method_label(SolveMethod m);  // "ls", "nnls-as", "nnls-sbb"

struct Solution {
    Eigen::VectorXd x;
    double residual_norm = 0.0;  // ||A x - b||_2
    double seminorm = 0.0;       // ||L x||_2
    int iterations = 0;
    bool converged = false;
    SolveMethod method = SolveMethod::LS;
    bool min_norm_fallback = false;  // LS hit a rank-deficient system at lambda = 0
};

struct SbbOptions {
    int max_iter = 5000;
    double tol = 1e-6;
    int window = 10;  // nonmonotone acceptance window
};

/// Tikhonov problem min ||A x - b||^2 + lambda^2 ||L x||^2, optionally with
/// x >= 0. All methods operate on the stacked system [A; lambda L] x ~ [b; 0].
struct RegularizedProblem {
    Eigen::MatrixXd A;  // (2M x N) stacked operator
    Eigen::VectorXd b;  // length 2M
    Regularizer L;
    double lambda = 0.0;
};

/// Shared per-(A, b, L) precomputation so that lambda sweeps and repeated
/// solves do not rebuild Gram matrices. Const methods are reentrant.
class RegularizedSolver {
public:
    RegularizedSolver(Eigen::MatrixXd A, Eigen::VectorXd b, Regularizer L);

    /// Same operator and regularizer, new data vector; reuses the cached
    /// Gram matrices. Used by Monte-Carlo loops over noise realizations.
    RegularizedSolver with_data(Eigen::VectorXd b) const;

    Solution solve(SolveMethod method, double lambda) const;
    Solution ls(double lambda) const;
    Solution nnls_activeset(double lambda) const;
    Solution nnls_sbb(double lambda, const Eigen::VectorXd* init = nullptr,
                      const SbbOptions& opts = {}) const;

    const Eigen::MatrixXd& A() const { return A_; }
    const Eigen::VectorXd& b() const { return b_; }
    const Regularizer& regularizer() const { return L_; }
    std::size_t n() const { return static_cast<std::size_t>(A_.cols()); }

private:
    Solution finish(Eigen::VectorXd x, int iterations, bool converged, SolveMethod method,
                    bool min_norm = false) const;
    Eigen::MatrixXd stacked_matrix(double lambda) const;

    Eigen::MatrixXd A_;
    Eigen::VectorXd b_;
    Regularizer L_;
    Eigen::MatrixXd AtA_, LtL_;
    Eigen::VectorXd Atb_;
    double btb_ = 0.0;
};

Solution solve_ls(const RegularizedProblem& p);
Solution solve_nnls_activeset(const RegularizedProblem& p);
Solution solve_nnls_sbb(const RegularizedProblem& p, const Eigen::VectorXd* init = nullptr,
                        const SbbOptions& opts = {});

}  // namespace relaxo
