#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "relaxo/forward.hpp"
#include "relaxo/param_choice.hpp"
#include "relaxo/regsolve.hpp"

namespace relaxo {

/// 100 * ||x - x_true||_2 / ||x_true||_2. Throws for zero truth.
double relative_error_percent(const Eigen::VectorXd& x, const Eigen::VectorXd& x_true);

struct ExperimentConfig {
    std::vector<std::string> sets = {"A-RQ"};
    Resolution resolution = Resolution::A4;
    SolveMethod method = SolveMethod::NNLS_ActiveSet;
    std::vector<RegularizerKind> regularizers = {RegularizerKind::Identity,
                                                 RegularizerKind::FirstDiff,
                                                 RegularizerKind::SecondDiff};
    SelectionCriterion criterion = SelectionCriterion::LC;
    std::vector<double> noise_levels = {0.001, 0.01, 0.05};
    int n_realizations = 100;
    std::uint64_t base_seed = 0;
    int jobs = 0;  // 0 = all hardware threads
    LambdaGrid lambda_grid = LambdaGrid::standard();

    void validate() const;
};

/// Mean/std of the kept errors plus the bookkeeping of the keep rule:
/// a realization is kept when its relative error is below 100%.
struct ErrorStats {
    double mean = 0.0;
    double stddev = 0.0;
    int n_kept = 0;
    int n_rejected = 0;  // error >= 100%
    int n_failed = 0;    // solver did not converge
};

ErrorStats aggregate_errors(std::span<const double> percent_errors, int n_failed);

struct RealizationRecord {
    bool ok = false;  // solver produced usable selections
    double lambda_lc = 0.0, lambda_ncp = 0.0, lambda_opt = 0.0;
    double err_lc = 0.0, err_ncp = 0.0, err_opt = 0.0;  // percent relative errors
};

struct CellResult {
    std::string set;
    RegularizerKind regularizer = RegularizerKind::Identity;
    double noise = 0.0;
    std::vector<RealizationRecord> realizations;
    ErrorStats stats_lc, stats_ncp;

    const ErrorStats& stats(SelectionCriterion c) const {
        return c == SelectionCriterion::LC ? stats_lc : stats_ncp;
    }
};

struct StatsTable {
    ExperimentConfig config;
    std::vector<CellResult> cells;  // ordered set-major, then regularizer, then noise

    const CellResult* find(const std::string& set, RegularizerKind reg, double noise) const;
};

/// Runs the full Monte-Carlo grid: per realization synthesize -> add noise ->
/// sweep -> select -> relative error, aggregated with the <100% keep rule.
/// Realization i uses seed base_seed ^ i; results are identical for any
/// number of jobs.
StatsTable monte_carlo(const ExperimentConfig& config);

struct CurveConfig {
    std::string set = "A-RQ";
    Resolution resolution = Resolution::A4;
    SolveMethod method = SolveMethod::NNLS_ActiveSet;
    RegularizerKind regularizer = RegularizerKind::Identity;
    double noise = 0.01;
    int n_realizations = 50;
    std::uint64_t base_seed = 0;
    int jobs = 0;
    LambdaGrid lambda_grid = LambdaGrid::standard();
};

/// Mean absolute s-space error per lambda over noise realizations, with the
/// geometric means of the selected-lambda streams and the grid minimizer.
struct MeanErrorCurve {
    std::vector<double> lambdas;
    std::vector<double> mean_abs_error;
    double lambda_opt = 0.0;  // grid minimizer of the mean curve
    double geo_lambda_lc = 0.0;
    double geo_lambda_ncp = 0.0;
    std::vector<double> lambda_lc_values, lambda_ncp_values, lambda_opt_values;  // per realization
};

MeanErrorCurve mean_error_curve(const CurveConfig& config);

/// Plain-text table in the "mean (std) n" cell format; n is omitted when all
/// realizations were kept.
std::string tabulate_text(const StatsTable& table, SelectionCriterion criterion);

void write_stats_csv(const std::filesystem::path& path, const StatsTable& table);
void write_curve_csv(const std::filesystem::path& path, const MeanErrorCurve& curve);
void write_selection_csv(const std::filesystem::path& path, const CellResult& cell);

/// "A-RQ" -> ("A", "RQ"); used by the CSV and table writers.
std::pair<std::string, std::string> split_set_name(const std::string& set);

}  // namespace relaxo
