// Acceptance suite: one criterion per number, one pass/fail line each.
// Run all with no arguments or a subset: relaxo_acceptance 1 4 7

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "relaxo/drt.hpp"
#include "relaxo/experiments.hpp"
#include "relaxo/forward.hpp"
#include "relaxo/nlsfit.hpp"
#include "relaxo/param_choice.hpp"
#include "relaxo/peaks.hpp"
#include "relaxo/regsolve.hpp"
#include "relaxo/rng.hpp"

using namespace relaxo;
namespace fs = std::filesystem;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void fail(const std::string& msg) {
        ok = false;
        if (!detail.empty()) detail += "; ";
        detail += msg;
    }
    void note(const std::string& msg) {
        if (!detail.empty()) detail += "; ";
        detail += msg;
    }
};

// ---------------------------------------------------------------------------
// 1. quadrature identities

Check criterion_quadrature() {
    Check c;
    const auto w = weights_preconditioned(std::log(10.0), 8);
    if (std::abs(w.weights.front() - 4.5) > 1e-12) c.fail("first weight != 4.5");
    if (std::abs(w.weights.back() - 0.45) > 1e-12) c.fail("last weight != 0.45");
    for (std::size_t i = 1; i + 1 < w.weights.size(); ++i)
        if (std::abs(w.weights[i] - 4.95) > 1e-12) c.fail("interior weight != 4.95");

    const DrtModel model = builtin_model("B-RQ");
    auto route_diff = [&](double ds) {
        const double s0 = -20.0, s1 = 12.0, omega = 3.0;
        const auto n = static_cast<std::size_t>(std::lround((s1 - s0) / ds)) + 1;
        const auto wp = weights_preconditioned(ds, n);
        const auto ws = weights_s_space(ds, n);
        double sp = 0.0, ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = std::exp(s0 + ds * static_cast<double>(i));
            const double v = eval_g1(model, t) * kernel_z1(omega, t);
            sp += wp.weights[i] * v;
            ss += ws.weights[i] * v;
        }
        return std::abs(sp - ss);
    };
    const double ratio = route_diff(0.05) / route_diff(0.025);
    {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "route ratio %.3f", ratio);
        c.note(buf);
    }
    if (!(ratio >= 3.5 && ratio <= 4.5)) c.fail("two-route ratio outside 4 +- 0.5");
    return c;
}

// ---------------------------------------------------------------------------
// 2. peak-matching identity

Check criterion_peak_matching() {
    Check c;
    const double t0 = 1.0;
    for (int i = 0; i <= 50; ++i) {
        const double sigma = 0.1 + 0.9 * i / 50.0;
        const double beta = matched_beta(sigma);
        const double lhs =
            std::sin(beta * std::numbers::pi) / (1.0 + std::cos(beta * std::numbers::pi)) /
            (2.0 * std::numbers::pi * t0);
        const double rhs = std::exp(-sigma * sigma / 2.0) /
                           (t0 * sigma * std::sqrt(2.0 * std::numbers::pi));
        if (std::abs(lhs - rhs) > 1e-12 * std::abs(rhs)) {
            c.fail("mismatch at sigma " + std::to_string(sigma));
            break;
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// 3. Z1 monotonicity across all six sets

Check criterion_z1_monotone() {
    Check c;
    const auto freq = FrequencyGrid::standard();
    for (const auto& name : builtin_model_names()) {
        const auto spec = synthesize_spectrum(builtin_model(name), freq);
        for (std::size_t i = 1; i < spec.size(); ++i)
            if (!(spec.z1[i] <= spec.z1[i - 1] + 1e-12)) {
                c.fail("Z1 increases for " + name);
                break;
            }
    }
    return c;
}

// ---------------------------------------------------------------------------
// 4. peak correlation per simulation set

Check criterion_peak_correlation() {
    Check c;
    const auto freq = FrequencyGrid::standard();
    const double step = std::log(freq.omegas[1] / freq.omegas[0]);

    for (const std::string fam : {"RQ", "LN"}) {
        // A: one peak at the reciprocal process time
        {
            const auto model = builtin_model("A-" + fam);
            const auto peaks = find_z2_peaks(synthesize_spectrum(model, freq));
            if (peaks.peaks.size() != 1)
                c.fail("A-" + fam + ": expected 1 peak, got " + std::to_string(peaks.peaks.size()));
            else if (std::abs(std::log(peaks.peaks[0].t_star) -
                              std::log(model.processes[0].peak_time())) > step + 1e-12)
                c.fail("A-" + fam + ": peak offset exceeds one grid step");
        }
        // B: two peaks
        {
            const auto peaks = find_z2_peaks(synthesize_spectrum(builtin_model("B-" + fam), freq));
            if (peaks.peaks.size() != 2)
                c.fail("B-" + fam + ": expected 2 peaks, got " + std::to_string(peaks.peaks.size()));
        }
        // C: one peak strictly between the process times
        {
            const auto model = builtin_model("C-" + fam);
            const auto peaks = find_z2_peaks(synthesize_spectrum(model, freq));
            if (peaks.peaks.size() != 1) {
                c.fail("C-" + fam + ": expected 1 peak, got " + std::to_string(peaks.peaks.size()));
            } else {
                const double lo = std::min(model.processes[0].peak_time(), model.processes[1].peak_time());
                const double hi = std::max(model.processes[0].peak_time(), model.processes[1].peak_time());
                if (!(peaks.peaks[0].t_star > lo && peaks.peaks[0].t_star < hi))
                    c.fail("C-" + fam + ": peak not between the process times");
            }
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// 5. NNLS correctness against brute force

Eigen::VectorXd nnls_bruteforce(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    const int n = static_cast<int>(A.cols());
    Eigen::VectorXd best = Eigen::VectorXd::Zero(n);
    double best_obj = (A * best - b).squaredNorm();
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        std::vector<int> idx;
        for (int j = 0; j < n; ++j)
            if (mask & (1u << j)) idx.push_back(j);
        Eigen::MatrixXd sub(A.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t k = 0; k < idx.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
        const Eigen::VectorXd z = sub.completeOrthogonalDecomposition().solve(b);
        if (z.minCoeff() < 0.0) continue;
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
        for (std::size_t k = 0; k < idx.size(); ++k) x[idx[k]] = z[static_cast<Eigen::Index>(k)];
        const double obj = (A * x - b).squaredNorm();
        if (obj < best_obj - 1e-12 * std::max(1.0, best_obj)) {
            best_obj = obj;
            best = x;
        }
    }
    return best;
}

Check criterion_nnls() {
    Check c;
    std::mt19937_64 eng(42);
    std::normal_distribution<double> n01;
    auto rnd_matrix = [&](int r, int cols) {
        Eigen::MatrixXd m(r, cols);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < cols; ++j) m(i, j) = n01(eng);
        return m;
    };

    const RegularizerKind kinds[] = {RegularizerKind::Identity, RegularizerKind::FirstDiff,
                                     RegularizerKind::SecondDiff};
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::MatrixXd A = rnd_matrix(6, 4);
        Eigen::VectorXd b(6);
        for (int i = 0; i < 6; ++i) b[i] = n01(eng);
        const Regularizer L = build_regularizer(kinds[trial % 3], 4);
        const double lambda = trial % 5 == 0 ? 0.0 : 0.05 * (1 + trial % 7);

        const auto sol = solve_nnls_activeset({A, b, L, lambda});
        if (!sol.converged) {
            c.fail("solver did not converge on trial " + std::to_string(trial));
            continue;
        }
        Eigen::MatrixXd S(A.rows() + L.matrix.rows(), A.cols());
        S.topRows(A.rows()) = A;
        S.bottomRows(L.matrix.rows()) = lambda * L.matrix;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S.rows());
        rhs.head(6) = b;
        const Eigen::VectorXd oracle = nnls_bruteforce(S, rhs);
        if ((sol.x - oracle).lpNorm<Eigen::Infinity>() >
            1e-8 * std::max(1.0, oracle.lpNorm<Eigen::Infinity>()))
            c.fail("brute-force mismatch on trial " + std::to_string(trial));

        // KKT certificate
        const Eigen::VectorXd g = S.transpose() * (S * sol.x - rhs);
        const double tau = 1e-8 * (S.transpose() * rhs).lpNorm<Eigen::Infinity>();
        for (Eigen::Index i = 0; i < sol.x.size(); ++i) {
            const bool bad = sol.x[i] > 0.0 ? std::abs(g[i]) > tau + 1e-13 : g[i] < -tau - 1e-13;
            if (bad) {
                c.fail("KKT violated on trial " + std::to_string(trial));
                break;
            }
        }
    }

    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd A = rnd_matrix(10, 6);
        Eigen::VectorXd b(10);
        for (int i = 0; i < 10; ++i) b[i] = n01(eng);
        const Regularizer L = build_regularizer(RegularizerKind::Identity, 6);
        const double lambda = 0.05;
        const auto as = solve_nnls_activeset({A, b, L, lambda});
        const auto bb = solve_nnls_sbb({A, b, L, lambda});
        const double obj_as = as.residual_norm * as.residual_norm +
                              lambda * lambda * as.seminorm * as.seminorm;
        const double obj_bb = bb.residual_norm * bb.residual_norm +
                              lambda * lambda * bb.seminorm * bb.seminorm;
        if (obj_bb > obj_as * (1.0 + 1e-6) + 1e-12)
            c.fail("SBB objective gap on trial " + std::to_string(trial));
    }
    return c;
}

// ---------------------------------------------------------------------------
// 6. parametric fit recovery at tiny noise

Check criterion_fit_recovery() {
    Check c;
    const double t0_true = 0.10, beta_true = 0.72, scale_true = 1.0;
    const DrtModel truth{{DrtProcess::rq(t0_true, beta_true, scale_true)}};
    const auto clean = synthesize_spectrum(truth, FrequencyGrid::standard());

    const int reps = 25;
    std::vector<double> t0s, betas, scales;
    for (int i = 0; i < reps; ++i) {
        const auto noisy = add_noise(clean, 1e-6, 900 + static_cast<std::uint64_t>(i));
        const auto res = fit(noisy, init_from_peaks(noisy, ProcessKind::RQ));
        if (!res.converged) {
            c.fail("fit " + std::to_string(i) + " did not converge");
            continue;
        }
        t0s.push_back(res.model.processes[0].t0);
        betas.push_back(res.model.processes[0].shape);
        scales.push_back(res.model.processes[0].scale);
    }
    auto stats = [](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return std::pair<double, double>(mean, std::sqrt(ss / static_cast<double>(v.size() - 1)));
    };
    const auto [mt, st] = stats(t0s);
    const auto [mb, sb] = stats(betas);
    const auto [ms, ssc] = stats(scales);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "t0 %.4f(%.1e) beta %.4f(%.1e) scale %.4f(%.1e)", mt, st, mb,
                  sb, ms, ssc);
    c.note(buf);
    if (std::abs(mt - t0_true) > 0.005) c.fail("t0 mean off by more than 0.005");
    if (std::abs(mb - beta_true) > 0.005) c.fail("shape mean off by more than 0.005");
    if (std::abs(ms - scale_true) > 0.005) c.fail("scale mean off by more than 0.005");
    if (st > 1e-5 || sb > 1e-5 || ssc > 1e-5) c.fail("per-parameter std above 1e-5");
    return c;
}

// ---------------------------------------------------------------------------
// 7. the (1,RQ) NNLS L=I A4 LC 0.1% table cell

Check criterion_table_cell() {
    Check c;
    ExperimentConfig cfg;
    cfg.sets = {"A-RQ"};
    cfg.resolution = Resolution::A4;
    cfg.method = SolveMethod::NNLS_ActiveSet;
    cfg.regularizers = {RegularizerKind::Identity};
    cfg.criterion = SelectionCriterion::LC;
    cfg.noise_levels = {0.001};
    cfg.n_realizations = 100;
    cfg.base_seed = 20260808;
    const auto table = monte_carlo(cfg);
    const auto& s = table.cells.at(0).stats_lc;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "mean %.2f std %.2f n_kept %d", s.mean, s.stddev, s.n_kept);
    c.note(buf);
    if (!(s.mean >= 14.0 && s.mean <= 24.0)) c.fail("mean outside [14, 24]");
    if (s.n_kept < 90) c.fail("n_kept below 90");
    return c;
}

// ---------------------------------------------------------------------------
// 8. NCP robustness at 5% noise

Check criterion_robustness() {
    Check c;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        ExperimentConfig cfg;
        cfg.sets = {"A-RQ", "B-RQ", "C-RQ"};
        cfg.resolution = Resolution::A4;
        cfg.method = SolveMethod::NNLS_ActiveSet;
        cfg.regularizers = {RegularizerKind::Identity, RegularizerKind::FirstDiff};
        cfg.noise_levels = {0.05};
        cfg.n_realizations = 100;
        cfg.base_seed = seed * 1000003ull;
        const auto table = monte_carlo(cfg);
        for (RegularizerKind reg : cfg.regularizers) {
            int wins = 0;
            for (const auto& set : cfg.sets) {
                const auto* cell = table.find(set, reg, 0.05);
                if (cell && cell->stats_ncp.n_kept >= cell->stats_lc.n_kept) ++wins;
            }
            char buf[96];
            std::snprintf(buf, sizeof(buf), "seed %llu L=%s wins %d/3",
                          static_cast<unsigned long long>(seed), regularizer_label(reg), wins);
            c.note(buf);
            if (wins < 2) c.fail("NCP kept fewer realizations than LC in 2+ sets");
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// 9. L-curve under-smoothing at high noise

Check criterion_undersmoothing() {
    Check c;
    for (RegularizerKind reg : {RegularizerKind::Identity, RegularizerKind::FirstDiff,
                                RegularizerKind::SecondDiff}) {
        CurveConfig cfg;
        cfg.set = "A-RQ";
        cfg.resolution = Resolution::A4;
        cfg.method = SolveMethod::NNLS_ActiveSet;
        cfg.regularizer = reg;
        cfg.noise = 0.05;
        cfg.n_realizations = 50;
        cfg.base_seed = 77;
        const auto curve = mean_error_curve(cfg);
        char buf[120];
        std::snprintf(buf, sizeof(buf), "L=%s geo_lc %.3e opt %.3e", regularizer_label(reg),
                      curve.geo_lambda_lc, curve.lambda_opt);
        c.note(buf);
        if (!(curve.geo_lambda_lc <= curve.lambda_opt))
            c.fail(std::string("geo lambda_lc above lambda_opt for L=") + regularizer_label(reg));
    }
    return c;
}

// ---------------------------------------------------------------------------
// 10. byte-identical reruns across job counts

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Check criterion_determinism() {
    Check c;

    // library level: same config, different worker counts
    ExperimentConfig cfg;
    cfg.sets = {"A-RQ"};
    cfg.resolution = Resolution::A3;
    cfg.regularizers = {RegularizerKind::Identity};
    cfg.noise_levels = {0.01};
    cfg.n_realizations = 6;
    cfg.base_seed = 5;
    cfg.lambda_grid = LambdaGrid::log_spaced(1e-7, 1e1, 16);
    cfg.jobs = 1;
    const auto t1 = monte_carlo(cfg);
    cfg.jobs = 3;
    const auto t2 = monte_carlo(cfg);
    const auto dir = fs::temp_directory_path() / "relaxo_accept10";
    fs::create_directories(dir);
    write_stats_csv(dir / "s1.csv", t1);
    write_stats_csv(dir / "s2.csv", t2);
    if (slurp(dir / "s1.csv") != slurp(dir / "s2.csv")) c.fail("library stats differ across jobs");

    // CLI level when the binary location is known
    if (const char* bin = std::getenv("RELAXO_BIN")) {
        const fs::path d1 = dir / "j1", d2 = dir / "j2";
        fs::remove_all(d1);
        fs::remove_all(d2);
        const std::string common = std::string(bin) +
                                   " table --preset lc-a3-highnoise --sets A-RQ --realizations 4"
                                   " --lambda-count 12 --seed 5";
        if (std::system((common + " -j 1 -o " + d1.string() + " >/dev/null 2>&1").c_str()) != 0)
            c.fail("cli run (jobs 1) failed");
        if (std::system((common + " -j 2 -o " + d2.string() + " >/dev/null 2>&1").c_str()) != 0)
            c.fail("cli run (jobs 2) failed");
        for (const char* f : {"stats.csv", "selections.csv", "table.txt"})
            if (slurp(d1 / f) != slurp(d2 / f)) c.fail(std::string("cli artifact differs: ") + f);
    } else {
        c.note("RELAXO_BIN unset, cli check skipped");
    }
    return c;
}

// ---------------------------------------------------------------------------
// 11. NCP statistic properties

Check criterion_ncp_properties() {
    Check c;
    NormalSampler rng(2);
    Eigen::VectorXd r(162);
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = rng.next();

    const double base = ncp_deviation(r);
    for (double alpha : {3.0, -0.5, 1e-6, 1e6}) {
        const double scaled = ncp_deviation(Eigen::VectorXd(alpha * r));
        if (std::abs(scaled - base) > 1e-12 * std::max(1.0, base))
            c.fail("scaling invariance broken at alpha " + std::to_string(alpha));
    }

    const auto cum = ncp_cumulative(r);
    if (cum.back() != 1.0) c.fail("c_q != 1");
    for (std::size_t i = 1; i < cum.size(); ++i)
        if (cum[i] < cum[i - 1]) c.fail("cumulative periodogram decreases");

    std::vector<double> devs;
    for (std::uint64_t trial = 0; trial < 200; ++trial) {
        NormalSampler gen(4000 + trial);
        Eigen::VectorXd w(128);
        for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = gen.next();
        devs.push_back(ncp_deviation(w));
    }
    double mean = 0.0;
    for (double d : devs) mean += d;
    mean /= static_cast<double>(devs.size());
    std::vector<double> sorted = devs;
    std::sort(sorted.begin(), sorted.end());
    const double q95 = sorted[static_cast<std::size_t>(0.95 * sorted.size()) - 1];
    char buf[64];
    std::snprintf(buf, sizeof(buf), "null mean %.3f q95 %.3f", mean, q95);
    c.note(buf);
    if (!(mean < q95)) c.fail("white-noise mean above its null 95th percentile");
    return c;
}

struct Criterion {
    int number;
    const char* title;
    std::function<Check()> run;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {1, "quadrature closed forms and two-route second-order agreement", criterion_quadrature},
        {2, "peak-height matching identity over sigma in [0.1, 1]", criterion_peak_matching},
        {3, "Z1 monotonicity for all six simulation sets", criterion_z1_monotone},
        {4, "Z2 peak correlation for the A/B/C sets", criterion_peak_correlation},
        {5, "NNLS solvers against brute force and KKT certificates", criterion_nnls},
        {6, "parametric RQ fit recovery at 1e-6 noise", criterion_fit_recovery},
        {7, "(1,RQ) NNLS L=I A4 LC 0.1% cell within the reference band", criterion_table_cell},
        {8, "NCP keeps more realizations than LC at 5% noise", criterion_robustness},
        {9, "geometric-mean LC lambda below lambda_opt at 5% noise", criterion_undersmoothing},
        {10, "byte-identical reruns for any job count", criterion_determinism},
        {11, "NCP statistic scaling, monotonicity and null calibration", criterion_ncp_properties},
    };

    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& crit : criteria) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), crit.number) == wanted.end())
            continue;
        Check result;
        try {
            result = crit.run();
        } catch (const std::exception& e) {
            result.fail(std::string("exception: ") + e.what());
        }
        std::printf("%s criterion %2d: %s%s%s\n", result.ok ? "PASS" : "FAIL", crit.number,
                    crit.title, result.detail.empty() ? "" : " -- ", result.detail.c_str());
        std::fflush(stdout);
        if (!result.ok) ++failures;
    }
    return failures;
}
