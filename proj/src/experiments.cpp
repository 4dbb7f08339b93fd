#include "relaxo/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "relaxo/csv.hpp"
#include "relaxo/drt.hpp"

namespace relaxo {

double relative_error_percent(const Eigen::VectorXd& x, const Eigen::VectorXd& x_true) {
    if (x.size() != x_true.size()) throw std::invalid_argument("length mismatch");
    const double denom = x_true.norm();
    if (!(denom > 0.0)) throw std::domain_error("relative error needs a nonzero truth");
    return 100.0 * (x - x_true).norm() / denom;
}

void ExperimentConfig::validate() const {
    if (sets.empty()) throw std::invalid_argument("no simulation sets configured");
    for (const auto& s : sets) builtin_model(s);  // throws on unknown names
    if (regularizers.empty()) throw std::invalid_argument("no regularizers configured");
    if (noise_levels.empty()) throw std::invalid_argument("no noise levels configured");
    for (double eta : noise_levels)
        if (eta < 0.0) throw std::invalid_argument("noise levels must be >= 0");
    if (n_realizations < 1) throw std::invalid_argument("need at least one realization");
    lambda_grid.validate();
}

ErrorStats aggregate_errors(std::span<const double> percent_errors, int n_failed) {
    ErrorStats s;
    s.n_failed = n_failed;
    std::vector<double> kept;
    for (double e : percent_errors) {
        if (e < 100.0)
            kept.push_back(e);
        else
            ++s.n_rejected;
    }
    s.n_kept = static_cast<int>(kept.size());
    if (!kept.empty()) {
        double sum = 0.0;
        for (double e : kept) sum += e;
        s.mean = sum / static_cast<double>(kept.size());
        if (kept.size() > 1) {
            double ss = 0.0;
            for (double e : kept) ss += (e - s.mean) * (e - s.mean);
            s.stddev = std::sqrt(ss / static_cast<double>(kept.size() - 1));
        }
    }
    return s;
}

namespace {

int resolve_jobs(int jobs) {
    if (jobs > 0) return jobs;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(i) for i in [0, count) on `jobs` threads. Each index writes only its
// own output slot, so results do not depend on the schedule.
void parallel_for(int count, int jobs, const std::function<void(int)>& fn) {
    jobs = std::min(resolve_jobs(jobs), count);
    if (jobs <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(jobs));
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

struct CellInputs {
    const DiscreteOperator* op;
    const ImpedanceSpectrum* clean;
    Eigen::VectorXd truth;
};

}  // namespace

StatsTable monte_carlo(const ExperimentConfig& config) {
    config.validate();

    StatsTable table;
    table.config = config;

    const DiscreteOperator op = standard_operator(config.resolution);
    const NcpEvaluator ncp(2 * op.n_freq());

    // noiseless spectra and s-space truths, once per set
    std::map<std::string, ImpedanceSpectrum> clean;
    std::map<std::string, Eigen::VectorXd> truth;
    for (const auto& set : config.sets) {
        const DrtModel model = builtin_model(set);
        clean.emplace(set, synthesize_spectrum(model, op.freq_grid));
        const auto f = eval_f_values(model, op.log_time_grid.s_values);
        truth.emplace(set, Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size())));
    }

    for (const auto& set : config.sets) {
        for (RegularizerKind reg : config.regularizers) {
            const Regularizer L = build_regularizer(reg, op.n_nodes());
            const RegularizedSolver base(op.matrix, clean.at(set).stacked(), L);
            const Eigen::VectorXd& x_true = truth.at(set);

            for (double eta : config.noise_levels) {
                CellResult cell;
                cell.set = set;
                cell.regularizer = reg;
                cell.noise = eta;
                cell.realizations.resize(static_cast<std::size_t>(config.n_realizations));

                parallel_for(config.n_realizations, config.jobs, [&](int i) {
                    RealizationRecord rec;
                    const std::uint64_t seed = config.base_seed ^ static_cast<std::uint64_t>(i);
                    const ImpedanceSpectrum noisy = add_noise(clean.at(set), eta, seed);
                    const RegularizedSolver solver = base.with_data(noisy.stacked());
                    const SweepResult sw = sweep(solver, config.lambda_grid, config.method, &x_true, &ncp);
                    try {
                        const SelectionResult sel = select_all(sw, &x_true);
                        rec.lambda_lc = sel.lambda_lc;
                        rec.lambda_ncp = sel.lambda_ncp;
                        rec.lambda_opt = *sel.lambda_opt;
                        rec.err_lc = relative_error_percent(sw.entries[sel.index_lc].solution.x, x_true);
                        rec.err_ncp = relative_error_percent(sw.entries[sel.index_ncp].solution.x, x_true);
                        rec.err_opt = relative_error_percent(sw.entries[*sel.index_opt].solution.x, x_true);
                        rec.ok = true;
                    } catch (const std::exception&) {
                        rec.ok = false;  // counted as a solver failure for this realization
                    }
                    cell.realizations[static_cast<std::size_t>(i)] = rec;
                });

                std::vector<double> errs_lc, errs_ncp;
                int failed = 0;
                for (const auto& rec : cell.realizations) {
                    if (!rec.ok) {
                        ++failed;
                        continue;
                    }
                    errs_lc.push_back(rec.err_lc);
                    errs_ncp.push_back(rec.err_ncp);
                }
                cell.stats_lc = aggregate_errors(errs_lc, failed);
                cell.stats_ncp = aggregate_errors(errs_ncp, failed);
                table.cells.push_back(std::move(cell));
            }
        }
    }
    return table;
}

const CellResult* StatsTable::find(const std::string& set, RegularizerKind reg, double noise) const {
    for (const auto& c : cells)
        if (c.set == set && c.regularizer == reg && c.noise == noise) return &c;
    return nullptr;
}

MeanErrorCurve mean_error_curve(const CurveConfig& config) {
    if (config.n_realizations < 1) throw std::invalid_argument("need at least one realization");
    config.lambda_grid.validate();

    const DrtModel model = builtin_model(config.set);
    const DiscreteOperator op = standard_operator(config.resolution);
    const NcpEvaluator ncp(2 * op.n_freq());
    const ImpedanceSpectrum clean = synthesize_spectrum(model, op.freq_grid);
    const auto f = eval_f_values(model, op.log_time_grid.s_values);
    const Eigen::VectorXd x_true =
        Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
    const Regularizer L = build_regularizer(config.regularizer, op.n_nodes());
    const RegularizedSolver base(op.matrix, clean.stacked(), L);

    const std::size_t nl = config.lambda_grid.size();
    const int nr = config.n_realizations;
    std::vector<std::vector<double>> abs_err(static_cast<std::size_t>(nr));
    std::vector<SelectionResult> sels(static_cast<std::size_t>(nr));
    std::vector<char> ok(static_cast<std::size_t>(nr), 0);

    parallel_for(nr, config.jobs, [&](int i) {
        const std::uint64_t seed = config.base_seed ^ static_cast<std::uint64_t>(i);
        const ImpedanceSpectrum noisy = add_noise(clean, config.noise, seed);
        const RegularizedSolver solver = base.with_data(noisy.stacked());
        const SweepResult sw = sweep(solver, config.lambda_grid, config.method, &x_true, &ncp);
        auto& row = abs_err[static_cast<std::size_t>(i)];
        row.assign(nl, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t j = 0; j < nl; ++j)
            if (sw.entries[j].solver_ok && sw.entries[j].s_space_error)
                row[j] = *sw.entries[j].s_space_error;
        try {
            sels[static_cast<std::size_t>(i)] = select_all(sw, &x_true);
            ok[static_cast<std::size_t>(i)] = 1;
        } catch (const std::exception&) {
            ok[static_cast<std::size_t>(i)] = 0;
        }
    });

    MeanErrorCurve curve;
    curve.lambdas = config.lambda_grid.values;
    curve.mean_abs_error.assign(nl, 0.0);
    for (std::size_t j = 0; j < nl; ++j) {
        double sum = 0.0;
        int count = 0;
        for (int i = 0; i < nr; ++i) {
            const double v = abs_err[static_cast<std::size_t>(i)][j];
            if (std::isfinite(v)) {
                sum += v;
                ++count;
            }
        }
        curve.mean_abs_error[j] = count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
    }
    for (int i = 0; i < nr; ++i) {
        if (!ok[static_cast<std::size_t>(i)]) continue;
        const auto& s = sels[static_cast<std::size_t>(i)];
        curve.lambda_lc_values.push_back(s.lambda_lc);
        curve.lambda_ncp_values.push_back(s.lambda_ncp);
        if (s.lambda_opt) curve.lambda_opt_values.push_back(*s.lambda_opt);
    }
    if (curve.lambda_lc_values.empty()) throw std::runtime_error("all realizations failed");
    curve.geo_lambda_lc = geometric_mean(curve.lambda_lc_values);
    curve.geo_lambda_ncp = geometric_mean(curve.lambda_ncp_values);

    std::size_t arg = 0;
    for (std::size_t j = 1; j < nl; ++j)
        if (curve.mean_abs_error[j] < curve.mean_abs_error[arg]) arg = j;
    curve.lambda_opt = curve.lambdas[arg];
    return curve;
}

std::pair<std::string, std::string> split_set_name(const std::string& set) {
    const auto dash = set.find('-');
    if (dash == std::string::npos) return {set, ""};
    std::string a = set.substr(0, dash), b = set.substr(dash + 1);
    if (a == "RQ" || a == "LN") std::swap(a, b);  // accept "RQ-A" spelling
    return {a, b};
}

namespace {

std::string method_cell_label(SolveMethod m, RegularizerKind reg) {
    std::string base;
    switch (m) {
        case SolveMethod::LS: base = "LS"; break;
        case SolveMethod::NNLS_ActiveSet: base = "NNLS"; break;
        case SolveMethod::NNLS_SBB: base = "NNLS-SBB"; break;
    }
    return base + " (L=" + regularizer_label(reg) + ")";
}

std::string simulation_label(const std::string& set) {
    const auto [letter, family] = split_set_name(set);
    std::string num = letter == "A" ? "1" : letter == "B" ? "2" : letter == "C" ? "3" : letter;
    return "(" + num + "," + family + ")";
}

std::string stats_cell(const ErrorStats& s, int n_realizations) {
    if (s.n_kept == 0) return "- (-) 0";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.0f (%.2g)", s.mean, s.stddev);
    std::string cell = buf;
    if (s.n_kept != n_realizations) {
        cell += " ";
        cell += std::to_string(s.n_kept);
    }
    return cell;
}

std::string noise_header(double eta) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g%%", eta * 100.0);
    return buf;
}

}  // namespace

std::string tabulate_text(const StatsTable& table, SelectionCriterion criterion) {
    std::ostringstream out;
    const auto& cfg = table.config;

    std::vector<std::size_t> widths;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> head = {"Simulation", "Method"};
    for (double eta : cfg.noise_levels) head.push_back(noise_header(eta));
    rows.push_back(head);

    for (const auto& set : cfg.sets) {
        bool first_in_set = true;
        for (RegularizerKind reg : cfg.regularizers) {
            std::vector<std::string> row;
            row.push_back(first_in_set ? simulation_label(set) : "");
            row.push_back(method_cell_label(cfg.method, reg));
            for (double eta : cfg.noise_levels) {
                const CellResult* cell = table.find(set, reg, eta);
                row.push_back(cell ? stats_cell(cell->stats(criterion), cfg.n_realizations) : "");
            }
            rows.push_back(std::move(row));
            first_in_set = false;
        }
    }
    if (table.cells.empty()) rows.resize(1);  // header-only output for an empty grid

    widths.assign(rows[0].size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << row[c];
            if (c + 1 < row.size()) out << std::string(widths[c] - row[c].size() + 2, ' ');
        }
        out << '\n';
    }
    return out.str();
}

void write_stats_csv(const std::filesystem::path& path, const StatsTable& table) {
    CsvWriter csv(path);
    csv.header("simulation,family,resolution,method,regularizer,criterion,noise,mean,std,n_kept,n_failed");
    const auto& cfg = table.config;
    const std::string res = cfg.resolution == Resolution::A3 ? "A3" : "A4";
    for (const auto& cell : table.cells) {
        const auto [letter, family] = split_set_name(cell.set);
        for (SelectionCriterion crit : {SelectionCriterion::LC, SelectionCriterion::NCP}) {
            const ErrorStats& s = cell.stats(crit);
            csv.field(letter)
                .field(family)
                .field(res)
                .field(std::string(method_label(cfg.method)))
                .field(std::string(regularizer_label(cell.regularizer)))
                .field(std::string(criterion_label(crit)))
                .field(cell.noise)
                .field(s.mean)
                .field(s.stddev)
                .field(static_cast<long long>(s.n_kept))
                .field(static_cast<long long>(s.n_failed));
            csv.end_row();
        }
    }
}

void write_curve_csv(const std::filesystem::path& path, const MeanErrorCurve& curve) {
    CsvWriter csv(path);
    csv.header("lambda,mean_abs_error");
    for (std::size_t j = 0; j < curve.lambdas.size(); ++j) {
        csv.field(curve.lambdas[j]).field(curve.mean_abs_error[j]);
        csv.end_row();
    }
}

void write_selection_csv(const std::filesystem::path& path, const CellResult& cell) {
    CsvWriter csv(path);
    csv.header("realization,lambda_lc,lambda_ncp,lambda_opt");
    for (std::size_t i = 0; i < cell.realizations.size(); ++i) {
        const auto& r = cell.realizations[i];
        csv.field(static_cast<long long>(i));
        if (r.ok)
            csv.field(r.lambda_lc).field(r.lambda_ncp).field(r.lambda_opt);
        else
            csv.field("nan").field("nan").field("nan");
        csv.end_row();
    }
}

}  // namespace relaxo
