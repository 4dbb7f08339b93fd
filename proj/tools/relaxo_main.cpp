// relaxo: synthesize dielectric relaxation spectra, invert them for the
// distribution of relaxation times, and reproduce the solver/parameter-choice
// comparison experiments. See README.md for the file formats.

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "relaxo/config.hpp"
#include "relaxo/csv.hpp"
#include "relaxo/drt.hpp"
#include "relaxo/experiments.hpp"
#include "relaxo/forward.hpp"
#include "relaxo/nlsfit.hpp"
#include "relaxo/param_choice.hpp"
#include "relaxo/peaks.hpp"
#include "relaxo/regsolve.hpp"

namespace fs = std::filesystem;
using namespace relaxo;

namespace {

// exit code 2: configuration / usage problems (vs 3 for numerical failures)
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOpts {
    std::string out = ".";
    std::string config_path;
    std::optional<std::uint64_t> seed_flag;
    int jobs = 0;
    std::optional<IniConfig> config;

    std::uint64_t resolve_seed(std::uint64_t fallback = 0) const {
        if (seed_flag) return *seed_flag;
        if (const char* env = std::getenv("RELAXO_SEED")) {
            try {
                return std::stoull(env);
            } catch (const std::exception&) {
                throw UsageError("RELAXO_SEED is not an integer");
            }
        }
        if (config)
            if (auto v = config->get_int("run", "seed")) return static_cast<std::uint64_t>(*v);
        return fallback;
    }

    fs::path out_dir() const {
        if (out != ".") return out;
        if (config)
            if (auto v = config->get("run", "out")) return *v;
        return out;
    }

    int resolve_jobs() const {
        if (jobs > 0) return jobs;
        if (config)
            if (auto v = config->get_int("run", "jobs")) return static_cast<int>(*v);
        return 0;
    }
};

void attach_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("-o,--out", opts.out, "Output directory");
    cmd->add_option("-c,--config", opts.config_path, "INI config file (flags override it)");
    cmd->add_option("--seed", opts.seed_flag, "Base RNG seed");
    cmd->add_option("-j,--jobs", opts.jobs, "Worker threads (default: all cores)");
}

void load_config(CommonOpts& opts) {
    if (opts.config_path.empty()) return;
    try {
        opts.config = IniConfig::parse_file(opts.config_path);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

Resolution parse_resolution(const std::string& s) {
    if (s == "A3" || s == "a3") return Resolution::A3;
    if (s == "A4" || s == "a4") return Resolution::A4;
    throw UsageError("unknown matrix resolution: " + s + " (expected A3 or A4)");
}

RegularizerKind parse_regularizer(const std::string& s) {
    if (s == "I" || s == "i") return RegularizerKind::Identity;
    if (s == "L1" || s == "l1") return RegularizerKind::FirstDiff;
    if (s == "L2" || s == "l2") return RegularizerKind::SecondDiff;
    throw UsageError("unknown regularizer: " + s + " (expected I, L1 or L2)");
}

SolveMethod parse_method(const std::string& s) {
    if (s == "ls") return SolveMethod::LS;
    if (s == "nnls-as" || s == "nnls") return SolveMethod::NNLS_ActiveSet;
    if (s == "nnls-sbb" || s == "sbb") return SolveMethod::NNLS_SBB;
    throw UsageError("unknown method: " + s + " (expected ls, nnls-as or nnls-sbb)");
}

SelectionCriterion parse_criterion(const std::string& s) {
    if (s == "lc") return SelectionCriterion::LC;
    if (s == "ncp") return SelectionCriterion::NCP;
    throw UsageError("unknown criterion: " + s + " (expected lc or ncp)");
}

DrtModel resolve_model(const CommonOpts& opts, const std::string& set_name) {
    if (!set_name.empty()) {
        try {
            return builtin_model(set_name);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    if (opts.config) {
        try {
            if (auto m = model_from_config(*opts.config)) return *m;
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
    }
    throw UsageError("no model given: pass --set or a config file with a [model] section");
}

void write_spectrum_csv(const fs::path& path, const ImpedanceSpectrum& spec) {
    CsvWriter csv(path);
    csv.header("omega,z1,z2");
    for (std::size_t i = 0; i < spec.size(); ++i) {
        csv.field(spec.freq_grid.omegas[i]).field(spec.z1[i]).field(spec.z2[i]);
        csv.end_row();
    }
}

ImpedanceSpectrum read_spectrum_csv(const fs::path& path) {
    CsvTable table;
    try {
        table = read_csv(path);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    const int io = table.column_index("omega");
    const int i1 = table.column_index("z1");
    const int i2 = table.column_index("z2");
    if (io < 0 || i1 < 0 || i2 < 0)
        throw UsageError("spectrum CSV needs columns omega,z1,z2: " + path.string());
    ImpedanceSpectrum spec;
    for (const auto& row : table.rows) {
        try {
            spec.freq_grid.omegas.push_back(std::stod(row[static_cast<std::size_t>(io)]));
            spec.z1.push_back(std::stod(row[static_cast<std::size_t>(i1)]));
            spec.z2.push_back(std::stod(row[static_cast<std::size_t>(i2)]));
        } catch (const std::exception&) {
            throw UsageError("malformed number in " + path.string());
        }
    }
    try {
        spec.freq_grid.validate();
    } catch (const std::exception& e) {
        throw UsageError(std::string(e.what()) + ": " + path.string());
    }
    return spec;
}

LambdaGrid resolve_lambda_grid(const CommonOpts& opts, double lo, double hi, std::size_t n,
                               bool flags_set) {
    if (!flags_set && opts.config) {
        if (auto v = opts.config->get_double("grid", "lambda_min")) lo = *v;
        if (auto v = opts.config->get_double("grid", "lambda_max")) hi = *v;
        if (auto v = opts.config->get_int("grid", "lambda_count")) n = static_cast<std::size_t>(*v);
    }
    return LambdaGrid::log_spaced(lo, hi, n);
}

std::string echo_of(const CommonOpts& opts) {
    return opts.config ? opts.config->source_text() : std::string{};
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(CommonOpts& opts, const std::string& set_name, double noise, int ppd,
                 double omega_min, double omega_max) {
    load_config(opts);
    if (noise < 0.0) throw UsageError("noise level must be >= 0");
    const DrtModel model = resolve_model(opts, set_name);
    const std::uint64_t seed = opts.resolve_seed();

    const auto freq = FrequencyGrid::log_spaced(omega_min, omega_max, ppd);
    ImpedanceSpectrum spec = synthesize_spectrum(model, freq);
    if (noise > 0.0) spec = add_noise(spec, noise, seed);

    const fs::path dir = opts.out_dir();
    std::ostringstream name;
    name << "spectrum_" << (set_name.empty() ? "custom" : set_name) << "_noise" << noise << "_seed"
         << seed << ".csv";
    const fs::path file = dir / name.str();
    write_spectrum_csv(file, spec);

    RunManifest manifest("simulate", dir);
    manifest.set_config_echo(echo_of(opts));
    manifest.add_setting("set", set_name.empty() ? "custom" : set_name);
    manifest.add_setting("noise", format_full(noise));
    manifest.add_setting("seed", std::to_string(seed));
    manifest.add_artifact(file);
    manifest.write();
    std::cerr << "wrote " << file.string() << "\n";
    return 0;
}

// ------------------------------------------------------------------ invert

int cmd_invert(CommonOpts& opts, const std::string& input, const std::string& matrix,
               const std::string& reg, const std::string& method, const std::string& criterion,
               double fixed_lambda, const std::string& truth_set, double lam_lo, double lam_hi,
               std::size_t lam_n, bool lam_flags_set) {
    load_config(opts);
    const ImpedanceSpectrum spec = read_spectrum_csv(input);
    const Resolution res = parse_resolution(matrix);
    const RegularizerKind reg_kind = parse_regularizer(reg);
    const SolveMethod solve_method = parse_method(method);
    const SelectionCriterion crit = parse_criterion(criterion);

    const auto op = assemble_operator(spec.freq_grid, std::log(1e-6), std::log(1e4), res);
    const Regularizer L = build_regularizer(reg_kind, op.n_nodes());
    const RegularizedSolver solver(op.matrix, spec.stacked(), L);

    std::optional<Eigen::VectorXd> truth;
    if (!truth_set.empty()) {
        const DrtModel model = resolve_model(opts, truth_set);
        const auto f = eval_f_values(model, op.log_time_grid.s_values);
        truth = Eigen::Map<const Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()));
    }

    const fs::path dir = opts.out_dir();
    RunManifest manifest("invert", dir);
    manifest.set_config_echo(echo_of(opts));
    manifest.add_setting("input", input);
    manifest.add_setting("matrix", matrix);
    manifest.add_setting("regularizer", reg);
    manifest.add_setting("method", method);

    auto write_solution = [&](const fs::path& file, const Eigen::VectorXd& x) {
        CsvWriter csv(file);
        csv.header("s,x");
        for (std::size_t i = 0; i < op.n_nodes(); ++i) {
            csv.field(op.log_time_grid.s_values[i]).field(x[static_cast<Eigen::Index>(i)]);
            csv.end_row();
        }
        manifest.add_artifact(file);
    };

    if (fixed_lambda > 0.0) {
        const Solution sol = solver.solve(solve_method, fixed_lambda);
        if (!sol.converged) {
            std::cerr << "solver did not converge at lambda " << fixed_lambda << "\n";
            return 3;
        }
        write_solution(dir / "solution.csv", sol.x);
        manifest.add_setting("lambda", format_full(fixed_lambda));
        manifest.write();
        std::cerr << "wrote " << (dir / "solution.csv").string() << "\n";
        return 0;
    }

    const LambdaGrid grid = resolve_lambda_grid(opts, lam_lo, lam_hi, lam_n, lam_flags_set);
    const SweepResult sw = sweep(solver, grid, solve_method, truth ? &*truth : nullptr);

    SelectionResult sel;
    try {
        sel = select_all(sw, truth ? &*truth : nullptr);
    } catch (const std::exception& e) {
        std::cerr << "selection failed: " << e.what() << "\n";
        return 3;
    }

    {
        CsvWriter csv(dir / "sweep.csv");
        csv.header("lambda,residual_norm,seminorm,ncp_deviation,s_space_error");
        for (const auto& e : sw.entries) {
            csv.field(e.lambda)
                .field(e.solution.residual_norm)
                .field(e.solution.seminorm)
                .field(e.ncp_dev)
                .field(e.s_space_error ? format_full(*e.s_space_error) : "nan");
            csv.end_row();
        }
        manifest.add_artifact(dir / "sweep.csv");
    }
    {
        CsvWriter csv(dir / "selection.csv");
        csv.header("lambda_lc,lambda_ncp,lambda_opt,lc_fallback");
        csv.field(sel.lambda_lc)
            .field(sel.lambda_ncp)
            .field(sel.lambda_opt ? format_full(*sel.lambda_opt) : "nan")
            .field(static_cast<long long>(sel.lc_fallback));
        csv.end_row();
        manifest.add_artifact(dir / "selection.csv");
    }
    const std::size_t pick = crit == SelectionCriterion::LC ? sel.index_lc : sel.index_ncp;
    write_solution(dir / "solution.csv", sw.entries[pick].solution.x);
    manifest.add_setting("criterion", criterion);
    manifest.add_setting("lambda_selected", format_full(sw.entries[pick].lambda));
    manifest.write();
    std::cerr << "selected lambda " << sw.entries[pick].lambda << " (" << criterion << ")\n";
    return 0;
}

// ------------------------------------------------------------------- peaks

int cmd_peaks(CommonOpts& opts, const std::string& input, bool refine) {
    load_config(opts);
    const ImpedanceSpectrum spec = read_spectrum_csv(input);
    PeakSet peaks;
    try {
        peaks = find_z2_peaks(spec, refine);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    const fs::path dir = opts.out_dir();
    RunManifest manifest("peaks", dir);
    manifest.set_config_echo(echo_of(opts));
    manifest.add_setting("input", input);
    {
        CsvWriter csv(dir / "peaks.csv");
        csv.header("omega,t_star");
        for (const auto& p : peaks.peaks) {
            csv.field(p.omega).field(p.t_star);
            csv.end_row();
        }
        manifest.add_artifact(dir / "peaks.csv");
    }
    {
        CsvWriter csv(dir / "nyquist.csv");
        csv.header("z1,z2");
        for (const auto& [a, b] : nyquist_curve(spec)) {
            csv.field(a).field(b);
            csv.end_row();
        }
        manifest.add_artifact(dir / "nyquist.csv");
    }
    manifest.write();
    std::cerr << peaks.peaks.size() << " peak(s), " << peaks.boundary_maxima.size()
              << " boundary maxima flagged\n";
    return 0;
}

// --------------------------------------------------------------------- fit

int cmd_fit(CommonOpts& opts, const std::string& input, const std::string& family_name,
            bool ladder, const std::string& data_family_name, int realizations) {
    load_config(opts);
    const ProcessKind family = family_name == "LN" || family_name == "ln" ? ProcessKind::LN
                               : family_name == "RQ" || family_name == "rq"
                                   ? ProcessKind::RQ
                                   : throw UsageError("family must be RQ or LN");
    const fs::path dir = opts.out_dir();
    RunManifest manifest("fit", dir);
    manifest.set_config_echo(echo_of(opts));
    manifest.add_setting("family", family_name);

    const char* param_names[3] = {"t0", "shape", "scale"};
    const char* report_header = "family,noise_log10,param_name,true,mean_fit,std_fit,n";

    if (!ladder) {
        if (input.empty()) throw UsageError("fit needs a spectrum file (or --ladder)");
        const ImpedanceSpectrum spec = read_spectrum_csv(input);
        FitConfig cfg;
        try {
            cfg = init_from_peaks(spec, family);
        } catch (const std::exception& e) {
            std::cerr << e.what() << "\n";
            return 3;
        }
        const FitResult res = fit(spec, cfg);
        if (!res.converged) std::cerr << "fit did not converge; best iterate reported\n";
        CsvWriter csv(dir / "fit_report.csv");
        csv.header(report_header);
        for (std::size_t p = 0; p < res.model.processes.size(); ++p) {
            const auto& proc = res.model.processes[p];
            const double values[3] = {proc.t0, proc.shape, proc.scale};
            for (int k = 0; k < 3; ++k) {
                csv.field(family_name)
                    .field("nan")
                    .field(std::string(param_names[k]) + "_" + std::to_string(p + 1))
                    .field("nan")
                    .field(values[k])
                    .field(0.0)
                    .field(1LL);
                csv.end_row();
            }
        }
        manifest.add_setting("input", input);
        manifest.add_artifact(dir / "fit_report.csv");
        manifest.write();
        std::cerr << "residual " << res.residual_norm << " after " << res.iterations
                  << " iterations\n";
        return 0;
    }

    // Ladder protocol: aligned single-process data (t0 = 0.10, unit scale;
    // RQ beta = 0.72 or the matching lognormal sigma = 0.83), fitted over the
    // noise ladder with per-parameter mean and deviation.
    const ProcessKind data_family = data_family_name == "LN" || data_family_name == "ln"
                                        ? ProcessKind::LN
                                    : data_family_name == "RQ" || data_family_name == "rq"
                                        ? ProcessKind::RQ
                                        : throw UsageError("data family must be RQ or LN");
    if (realizations < 2) throw UsageError("ladder needs at least 2 realizations");

    CsvWriter csv(dir / "fit_report.csv");
    csv.header(report_header);

    const double t0_true = 0.10, beta_true = 0.72, sigma_true = 0.83, scale_true = 1.0;
    const DrtModel data_model{{data_family == ProcessKind::RQ
                                   ? DrtProcess::rq(t0_true, beta_true)
                                   : DrtProcess::lognormal(t0_true, sigma_true)}};
    const double shape_true = data_family == family
                                  ? (family == ProcessKind::RQ ? beta_true : sigma_true)
                                  : std::nan("");
    const auto freq = FrequencyGrid::standard();
    const ImpedanceSpectrum clean = synthesize_spectrum(data_model, freq);
    const std::uint64_t base_seed = opts.resolve_seed();

    const double noise_log10[] = {-6.0, -5.12, -4.25, -3.38, -2.5};
    for (double nl : noise_log10) {
        const double eta = std::pow(10.0, nl);
        double sums[3] = {0, 0, 0}, sq[3] = {0, 0, 0};
        int n_ok = 0;
        for (int i = 0; i < realizations; ++i) {
            const auto noisy = add_noise(clean, eta, base_seed ^ static_cast<std::uint64_t>(i));
            FitConfig cfg;
            try {
                cfg = init_from_peaks(noisy, family);
            } catch (const std::exception&) {
                continue;
            }
            const FitResult res = fit(noisy, cfg);
            if (!res.converged || res.model.processes.size() != 1) continue;
            const auto& proc = res.model.processes[0];
            const double v[3] = {proc.t0, proc.shape, proc.scale};
            for (int k = 0; k < 3; ++k) {
                sums[k] += v[k];
                sq[k] += v[k] * v[k];
            }
            ++n_ok;
        }
        const double truths[3] = {t0_true, shape_true, scale_true};
        for (int k = 0; k < 3; ++k) {
            const double mean = n_ok > 0 ? sums[k] / n_ok : std::nan("");
            const double var = n_ok > 1 ? std::max(0.0, (sq[k] - n_ok * mean * mean) / (n_ok - 1))
                                        : 0.0;
            csv.field(family_name)
                .field(nl)
                .field(param_names[k])
                .field(truths[k])
                .field(mean)
                .field(std::sqrt(var))
                .field(static_cast<long long>(n_ok));
            csv.end_row();
        }
        std::cerr << "noise 10^" << nl << ": " << n_ok << "/" << realizations << " fits kept\n";
    }
    manifest.add_setting("data_family", data_family_name);
    manifest.add_setting("realizations", std::to_string(realizations));
    manifest.add_artifact(dir / "fit_report.csv");
    manifest.write();
    return 0;
}

// ------------------------------------------------------------------- table

struct Preset {
    SolveMethod method;
    Resolution resolution;
    SelectionCriterion criterion;
    std::vector<double> noise;
};

Preset parse_preset(const std::string& name) {
    Preset p{SolveMethod::NNLS_ActiveSet, Resolution::A4, SelectionCriterion::LC,
             {0.001, 0.01, 0.05}};
    std::string rest = name;
    if (rest.rfind("ls-", 0) == 0) {
        p.method = SolveMethod::LS;
        rest = rest.substr(3);
    }
    const auto parts = [&]() {
        std::vector<std::string> out;
        std::istringstream ss(rest);
        std::string item;
        while (std::getline(ss, item, '-')) out.push_back(item);
        return out;
    }();
    if (parts.size() != 3) throw UsageError("unknown preset: " + name);
    p.criterion = parse_criterion(parts[0]);
    p.resolution = parse_resolution(parts[1] == "a3" ? "A3" : parts[1] == "a4" ? "A4" : parts[1]);
    if (parts[2] == "highnoise")
        p.noise = {0.001, 0.01, 0.05};
    else if (parts[2] == "lownoise")
        p.noise = {0.001, 0.003, 0.01};
    else
        throw UsageError("unknown noise band in preset: " + parts[2]);
    return p;
}

void write_selections_csv(const fs::path& path, const StatsTable& table) {
    CsvWriter csv(path);
    csv.header("set,regularizer,noise,realization,lambda_lc,lambda_ncp,lambda_opt");
    for (const auto& cell : table.cells)
        for (std::size_t i = 0; i < cell.realizations.size(); ++i) {
            const auto& r = cell.realizations[i];
            csv.field(cell.set)
                .field(std::string(regularizer_label(cell.regularizer)))
                .field(cell.noise)
                .field(static_cast<long long>(i));
            if (r.ok)
                csv.field(r.lambda_lc).field(r.lambda_ncp).field(r.lambda_opt);
            else
                csv.field("nan").field("nan").field("nan");
            csv.end_row();
        }
}

int cmd_table(CommonOpts& opts, const std::string& preset_name, const std::string& sets_arg,
              int realizations, double lam_lo, double lam_hi, std::size_t lam_n,
              bool lam_flags_set) {
    load_config(opts);

    ExperimentConfig cfg;
    if (!preset_name.empty()) {
        const Preset p = parse_preset(preset_name);
        cfg.method = p.method;
        cfg.resolution = p.resolution;
        cfg.criterion = p.criterion;
        cfg.noise_levels = p.noise;
    } else if (opts.config) {
        const auto& ini = *opts.config;
        if (auto v = ini.get("experiment", "matrix")) cfg.resolution = parse_resolution(*v);
        if (auto v = ini.get("experiment", "method")) cfg.method = parse_method(*v);
        if (auto v = ini.get("experiment", "criterion")) cfg.criterion = parse_criterion(*v);
        if (ini.has("experiment", "noise")) cfg.noise_levels = ini.get_double_list("experiment", "noise");
        if (ini.has("experiment", "regularizers")) {
            cfg.regularizers.clear();
            for (const auto& r : ini.get_list("experiment", "regularizers"))
                cfg.regularizers.push_back(parse_regularizer(r));
        }
        if (ini.has("experiment", "sets")) cfg.sets = ini.get_list("experiment", "sets");
        if (auto v = ini.get_int("experiment", "realizations"))
            cfg.n_realizations = static_cast<int>(*v);
    } else {
        throw UsageError("table needs --preset or a config file");
    }
    if (sets_arg == "all")
        cfg.sets = builtin_model_names();
    else if (!sets_arg.empty()) {
        cfg.sets.clear();
        std::istringstream ss(sets_arg);
        std::string item;
        while (std::getline(ss, item, ',')) cfg.sets.push_back(item);
    } else if (preset_name.empty() && cfg.sets.empty()) {
        cfg.sets = builtin_model_names();
    } else if (!preset_name.empty()) {
        cfg.sets = builtin_model_names();
    }
    if (realizations > 0) cfg.n_realizations = realizations;
    cfg.base_seed = opts.resolve_seed();
    cfg.jobs = opts.resolve_jobs();
    cfg.lambda_grid = resolve_lambda_grid(opts, lam_lo, lam_hi, lam_n, lam_flags_set);
    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }

    const StatsTable table = monte_carlo(cfg);
    const std::string text = tabulate_text(table, cfg.criterion);
    std::cout << text;

    const fs::path dir = opts.out_dir();
    RunManifest manifest("table", dir);
    manifest.set_config_echo(echo_of(opts));
    if (!preset_name.empty()) manifest.add_setting("preset", preset_name);
    manifest.add_setting("seed", std::to_string(cfg.base_seed));
    manifest.add_setting("realizations", std::to_string(cfg.n_realizations));
    {
        std::ofstream out(dir / "table.txt", std::ios::binary);
        out << text;
        manifest.add_artifact(dir / "table.txt");
    }
    write_stats_csv(dir / "stats.csv", table);
    manifest.add_artifact(dir / "stats.csv");
    write_selections_csv(dir / "selections.csv", table);
    manifest.add_artifact(dir / "selections.csv");
    manifest.write();
    return 0;
}

// ------------------------------------------------------------------- curve

int cmd_curve(CommonOpts& opts, const std::string& set_name, const std::string& matrix,
              const std::string& reg, const std::string& method, double noise, int realizations,
              double lam_lo, double lam_hi, std::size_t lam_n, bool lam_flags_set) {
    load_config(opts);
    CurveConfig cfg;
    cfg.set = set_name;
    cfg.resolution = parse_resolution(matrix);
    cfg.regularizer = parse_regularizer(reg);
    cfg.method = parse_method(method);
    cfg.noise = noise;
    cfg.n_realizations = realizations;
    cfg.base_seed = opts.resolve_seed();
    cfg.jobs = opts.resolve_jobs();
    cfg.lambda_grid = resolve_lambda_grid(opts, lam_lo, lam_hi, lam_n, lam_flags_set);
    try {
        builtin_model(cfg.set);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    const MeanErrorCurve curve = mean_error_curve(cfg);

    const fs::path dir = opts.out_dir();
    RunManifest manifest("curve", dir);
    manifest.set_config_echo(echo_of(opts));
    manifest.add_setting("set", cfg.set);
    manifest.add_setting("noise", format_full(noise));
    write_curve_csv(dir / "curve.csv", curve);
    manifest.add_artifact(dir / "curve.csv");
    {
        CsvWriter csv(dir / "markers.csv");
        csv.header("lambda_opt,geo_lambda_ncp,geo_lambda_lc");
        csv.field(curve.lambda_opt).field(curve.geo_lambda_ncp).field(curve.geo_lambda_lc);
        csv.end_row();
        manifest.add_artifact(dir / "markers.csv");
    }
    {
        CsvWriter csv(dir / "selections.csv");
        csv.header("realization,lambda_lc,lambda_ncp,lambda_opt");
        for (std::size_t i = 0; i < curve.lambda_lc_values.size(); ++i) {
            csv.field(static_cast<long long>(i))
                .field(curve.lambda_lc_values[i])
                .field(curve.lambda_ncp_values[i])
                .field(i < curve.lambda_opt_values.size() ? format_full(curve.lambda_opt_values[i])
                                                          : "nan");
            csv.end_row();
        }
        manifest.add_artifact(dir / "selections.csv");
    }
    manifest.write();
    std::cerr << "lambda_opt " << curve.lambda_opt << ", geo lambda_lc " << curve.geo_lambda_lc
              << ", geo lambda_ncp " << curve.geo_lambda_ncp << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DRT inversion of dielectric relaxation spectra"};
    app.require_subcommand(1);
    app.set_version_flag("--version", RELAXO_VERSION);

    CommonOpts sim_opts, inv_opts, peak_opts, fit_opts, table_opts, curve_opts;

    auto* sim = app.add_subcommand("simulate", "Synthesize an impedance spectrum");
    std::string sim_set;
    double sim_noise = 0.0, sim_wlo = 1e-4, sim_whi = 1e4;
    int sim_ppd = 10;
    sim->add_option("--set", sim_set, "Built-in simulation set (A-RQ .. C-LN)");
    sim->add_option("--noise", sim_noise, "Relative noise level (e.g. 0.001)");
    sim->add_option("--points-per-decade", sim_ppd, "Frequency grid density");
    sim->add_option("--omega-min", sim_wlo, "Lowest angular frequency");
    sim->add_option("--omega-max", sim_whi, "Highest angular frequency");
    attach_common(sim, sim_opts);

    auto* inv = app.add_subcommand("invert", "Invert a spectrum for the DRT");
    std::string inv_input, inv_matrix = "A4", inv_reg = "I", inv_method = "nnls-as",
                inv_criterion = "lc", inv_truth;
    double inv_lambda = 0.0, inv_lam_lo = 1e-8, inv_lam_hi = 1e2;
    std::size_t inv_lam_n = 50;
    inv->add_option("input", inv_input, "Spectrum CSV (omega,z1,z2)")->required();
    inv->add_option("--matrix", inv_matrix, "Discretization: A3 or A4");
    inv->add_option("--L", inv_reg, "Regularizer: I, L1 or L2");
    inv->add_option("--method", inv_method, "Solver: ls, nnls-as or nnls-sbb");
    inv->add_option("--criterion", inv_criterion, "Selection rule: lc or ncp");
    inv->add_option("--lambda", inv_lambda, "Fixed lambda (skips the sweep)");
    inv->add_option("--truth-set", inv_truth, "Known generating set, enables lambda_opt");
    auto* o1 = inv->add_option("--lambda-min", inv_lam_lo, "Sweep grid lower end");
    auto* o2 = inv->add_option("--lambda-max", inv_lam_hi, "Sweep grid upper end");
    auto* o3 = inv->add_option("--lambda-count", inv_lam_n, "Sweep grid size");
    attach_common(inv, inv_opts);

    auto* pk = app.add_subcommand("peaks", "Detect Z2 peaks and emit the Nyquist curve");
    std::string pk_input;
    bool pk_refine = false;
    pk->add_option("input", pk_input, "Spectrum CSV")->required();
    pk->add_flag("--refine", pk_refine, "Quadratic sub-grid peak interpolation");
    attach_common(pk, peak_opts);

    auto* ft = app.add_subcommand("fit", "Parametric RQ/LN least-squares fit");
    std::string ft_input, ft_family = "RQ", ft_data_family = "RQ";
    bool ft_ladder = false;
    int ft_realizations = 25;
    ft->add_option("input", ft_input, "Spectrum CSV (omit with --ladder)");
    ft->add_option("--family", ft_family, "Model family to fit: RQ or LN");
    ft->add_flag("--ladder", ft_ladder, "Run the noise-ladder fit protocol");
    ft->add_option("--data-family", ft_data_family, "Ladder data family: RQ or LN");
    ft->add_option("--realizations", ft_realizations, "Ladder realizations per noise level");
    attach_common(ft, fit_opts);

    auto* tb = app.add_subcommand("table", "Monte-Carlo error tables");
    std::string tb_preset, tb_sets;
    int tb_realizations = 0;
    double tb_lam_lo = 1e-8, tb_lam_hi = 1e2;
    std::size_t tb_lam_n = 50;
    tb->add_option("--preset", tb_preset,
                   "lc-a4-highnoise, ncp-a3-lownoise, ls-lc-a4-highnoise, ...");
    tb->add_option("--sets", tb_sets, "Comma list of simulation sets, or 'all'");
    tb->add_option("--realizations", tb_realizations, "Noise realizations per cell");
    auto* t1 = tb->add_option("--lambda-min", tb_lam_lo, "Sweep grid lower end");
    auto* t2 = tb->add_option("--lambda-max", tb_lam_hi, "Sweep grid upper end");
    auto* t3 = tb->add_option("--lambda-count", tb_lam_n, "Sweep grid size");
    attach_common(tb, table_opts);

    auto* cv = app.add_subcommand("curve", "Mean error against lambda with selection markers");
    std::string cv_set = "A-RQ", cv_matrix = "A4", cv_reg = "I", cv_method = "nnls-as";
    double cv_noise = 0.01;
    int cv_realizations = 50;
    double cv_lam_lo = 1e-8, cv_lam_hi = 1e2;
    std::size_t cv_lam_n = 50;
    cv->add_option("--set", cv_set, "Simulation set");
    cv->add_option("--matrix", cv_matrix, "Discretization: A3 or A4");
    cv->add_option("--L", cv_reg, "Regularizer: I, L1 or L2");
    cv->add_option("--method", cv_method, "Solver");
    cv->add_option("--noise", cv_noise, "Relative noise level");
    cv->add_option("--realizations", cv_realizations, "Noise realizations");
    auto* c1 = cv->add_option("--lambda-min", cv_lam_lo, "Sweep grid lower end");
    auto* c2 = cv->add_option("--lambda-max", cv_lam_hi, "Sweep grid upper end");
    auto* c3 = cv->add_option("--lambda-count", cv_lam_n, "Sweep grid size");
    attach_common(cv, curve_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed())
            return cmd_simulate(sim_opts, sim_set, sim_noise, sim_ppd, sim_wlo, sim_whi);
        if (inv->parsed())
            return cmd_invert(inv_opts, inv_input, inv_matrix, inv_reg, inv_method, inv_criterion,
                              inv_lambda, inv_truth, inv_lam_lo, inv_lam_hi, inv_lam_n,
                              o1->count() || o2->count() || o3->count());
        if (pk->parsed()) return cmd_peaks(peak_opts, pk_input, pk_refine);
        if (ft->parsed())
            return cmd_fit(fit_opts, ft_input, ft_family, ft_ladder, ft_data_family,
                           ft_realizations);
        if (tb->parsed())
            return cmd_table(table_opts, tb_preset, tb_sets, tb_realizations, tb_lam_lo, tb_lam_hi,
                             tb_lam_n, t1->count() || t2->count() || t3->count());
        if (cv->parsed())
            return cmd_curve(curve_opts, cv_set, cv_matrix, cv_reg, cv_method, cv_noise,
                             cv_realizations, cv_lam_lo, cv_lam_hi, cv_lam_n,
                             c1->count() || c2->count() || c3->count());
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
