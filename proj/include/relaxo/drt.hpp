#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace relaxo {

enum class ProcessKind { RQ, LN };

/// One relaxation process. `shape` is beta for RQ (Cole-Cole) processes and
/// sigma for lognormal ones; `t0` is the center relaxation time in seconds,
/// i.e. the location of the maximum of the time-domain density g(t).
struct DrtProcess {
    ProcessKind kind;
    double t0;
    double shape;
    double scale;

    static DrtProcess rq(double t0, double beta, double scale = 1.0);
    static DrtProcess lognormal(double t0, double sigma, double scale = 1.0);
    /// Lognormal process given the log-mean mu; t0 = exp(mu - sigma^2).
    static DrtProcess lognormal_from_mu(double mu, double sigma, double scale = 1.0);

    /// Log-mean of a lognormal process: mu = ln(t0) + sigma^2.
    double mu() const;

    /// Time at which t*g(t) is maximal: t0 for RQ, exp(mu) for LN.
    double peak_time() const;

    void validate() const;
};

struct DrtModel {
    std::vector<DrtProcess> processes;

    void validate() const;
    double total_scale() const;
};

struct SSpaceSample {
    double s;      // log-time coordinate, s = ln t
    double value;  // density f(s) = t g(t) at t = exp(s)
};

/// Time-domain density g(t) of the model (scale-weighted sum of unit
/// normalized process densities). Throws std::domain_error for t <= 0.
double eval_g(const DrtModel& model, double t);

/// g1(t) = t * g(t).
double eval_g1(const DrtModel& model, double t);

/// Log-time density f(s) = g1(exp(s)) sampled on a grid of s values.
std::vector<SSpaceSample> eval_f_s(const DrtModel& model, std::span<const double> s_grid);
std::vector<double> eval_f_values(const DrtModel& model, std::span<const double> s_grid);

/// RQ shape beta in (0,1) whose density peak height matches a lognormal of
/// width sigma sharing the same t0:
///   beta = (2/pi) * atan( sqrt(2 pi)/sigma * exp(-sigma^2/2) ).
/// Throws std::domain_error for sigma <= 0.
double matched_beta(double sigma);

/// Built-in two-family simulation sets A/B/C. Accepts "A-RQ" or "RQ-A"
/// spelling, case-insensitive. Throws std::invalid_argument for unknown names.
DrtModel builtin_model(std::string_view name);
std::vector<std::string> builtin_model_names();

}  // namespace relaxo
