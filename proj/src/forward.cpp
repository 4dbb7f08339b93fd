#include "relaxo/forward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "relaxo/rng.hpp"

namespace relaxo {

namespace {
constexpr double kLn10 = 2.302585092994045684;
}

FrequencyGrid FrequencyGrid::log_spaced(double omega_min, double omega_max, int points_per_decade) {
    if (!(omega_min > 0.0) || !(omega_max > omega_min) || points_per_decade < 1)
        throw std::invalid_argument("bad frequency grid parameters");
    const double decades = std::log10(omega_max / omega_min);
    const auto n = static_cast<std::size_t>(std::lround(decades * points_per_decade)) + 1;
    FrequencyGrid g;
    g.omegas.resize(n);
    const double step = std::log(omega_max / omega_min) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) g.omegas[i] = omega_min * std::exp(step * static_cast<double>(i));
    g.omegas.back() = omega_max;
    g.validate();
    return g;
}

FrequencyGrid FrequencyGrid::standard() { return log_spaced(1e-4, 1e4, 10); }

void FrequencyGrid::validate() const {
    if (omegas.size() < 2) throw std::invalid_argument("frequency grid needs >= 2 points");
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        if (!(omegas[i] > 0.0)) throw std::invalid_argument("frequencies must be positive");
        if (i > 0 && !(omegas[i] > omegas[i - 1]))
            throw std::invalid_argument("frequencies must be strictly increasing");
    }
}

LogTimeGrid LogTimeGrid::uniform(double s_min, double s_max, std::size_t n) {
    if (n < 2 || !(s_max > s_min)) throw std::invalid_argument("bad log-time grid parameters");
    LogTimeGrid g;
    g.delta_s = (s_max - s_min) / static_cast<double>(n - 1);
    g.s_values.resize(n);
    g.t_values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        g.s_values[i] = s_min + g.delta_s * static_cast<double>(i);
        g.t_values[i] = std::exp(g.s_values[i]);
    }
    return g;
}

double LogTimeGrid::delta_t_decades() const { return delta_s / kLn10; }

QuadratureWeights weights_t_space(std::span<const double> t_nodes) {
    const std::size_t n = t_nodes.size();
    if (n < 2) throw std::invalid_argument("trapezoid weights need >= 2 nodes");
    for (std::size_t i = 1; i < n; ++i)
        if (!(t_nodes[i] > t_nodes[i - 1])) throw std::invalid_argument("nodes must be strictly increasing");
    QuadratureWeights w{QuadratureScheme::TSpaceRaw, std::vector<double>(n)};
    w.weights[0] = (t_nodes[1] - t_nodes[0]) / 2.0;
    for (std::size_t i = 1; i + 1 < n; ++i) w.weights[i] = (t_nodes[i + 1] - t_nodes[i - 1]) / 2.0;
    w.weights[n - 1] = (t_nodes[n - 1] - t_nodes[n - 2]) / 2.0;
    return w;
}

QuadratureWeights weights_preconditioned(double delta_s, std::size_t n) {
    if (!(delta_s > 0.0)) throw std::invalid_argument("delta_s must be positive");
    if (n < 2) throw std::invalid_argument("need >= 2 nodes");
    const double sh = std::sinh(delta_s);
    QuadratureWeights w{QuadratureScheme::TSpacePreconditioned, std::vector<double>(n, sh)};
    w.weights.front() = sh / (1.0 + std::exp(-delta_s));
    w.weights.back() = sh / (1.0 + std::exp(delta_s));
    return w;
}

QuadratureWeights weights_s_space(double delta_s, std::size_t n) {
    if (!(delta_s > 0.0)) throw std::invalid_argument("delta_s must be positive");
    if (n < 2) throw std::invalid_argument("need >= 2 nodes");
    QuadratureWeights w{QuadratureScheme::SSpaceTrapezoid, std::vector<double>(n, delta_s)};
    w.weights.front() = delta_s / 2.0;
    w.weights.back() = delta_s / 2.0;
    return w;
}

double kernel_z1(double omega, double t) {
    const double u = omega * t;
    return 1.0 / (1.0 + u * u);
}

double kernel_z2(double omega, double t) {
    const double u = omega * t;
    return u / (1.0 + u * u);
}

int nodes_per_decade(Resolution r) { return r == Resolution::A3 ? 10 : 20; }

DiscreteOperator assemble_operator(const FrequencyGrid& freq, double s_min, double s_max,
                                   Resolution resolution, QuadratureScheme scheme) {
    freq.validate();
    if (!(s_max > s_min)) throw std::invalid_argument("invalid s range");

    const double decades = (s_max - s_min) / kLn10;
    const auto n = static_cast<std::size_t>(std::lround(decades * nodes_per_decade(resolution))) + 1;

    DiscreteOperator op;
    op.freq_grid = freq;
    op.log_time_grid = LogTimeGrid::uniform(s_min, s_max, n);
    op.resolution = resolution;
    switch (scheme) {
        case QuadratureScheme::SSpaceTrapezoid:
            op.weights = weights_s_space(op.log_time_grid.delta_s, n);
            break;
        case QuadratureScheme::TSpacePreconditioned:
            op.weights = weights_preconditioned(op.log_time_grid.delta_s, n);
            break;
        case QuadratureScheme::TSpaceRaw:
            // Raw t-space trapezoid weights build the map acting on t-space
            // density samples g(t_i) instead of f(s_i).
            op.weights = weights_t_space(op.log_time_grid.t_values);
            break;
    }

    const std::size_t m = freq.size();
    op.matrix.resize(static_cast<Eigen::Index>(2 * m), static_cast<Eigen::Index>(n));
    for (std::size_t r = 0; r < m; ++r) {
        const double omega = freq.omegas[r];
        for (std::size_t c = 0; c < n; ++c) {
            const double t = op.log_time_grid.t_values[c];
            const double w = op.weights.weights[c];
            op.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = w * kernel_z1(omega, t);
            op.matrix(static_cast<Eigen::Index>(m + r), static_cast<Eigen::Index>(c)) = w * kernel_z2(omega, t);
        }
    }
    return op;
}

DiscreteOperator standard_operator(Resolution resolution, QuadratureScheme scheme) {
    return assemble_operator(FrequencyGrid::standard(), std::log(1e-6), std::log(1e4), resolution, scheme);
}

Eigen::VectorXd ImpedanceSpectrum::stacked() const {
    Eigen::VectorXd b(static_cast<Eigen::Index>(2 * size()));
    for (std::size_t i = 0; i < size(); ++i) {
        b[static_cast<Eigen::Index>(i)] = z1[i];
        b[static_cast<Eigen::Index>(size() + i)] = z2[i];
    }
    return b;
}

namespace {

// Narrowest process width in s; sets the synthesis resolution so that even
// near-Debye RQ spikes (width ~ pi*(1-beta)) are resolved.
double min_process_width(const DrtModel& model) {
    double w = 1.0;
    for (const auto& p : model.processes) {
        if (p.scale == 0.0) continue;
        const double pw = p.kind == ProcessKind::RQ ? 3.141592653589793 * (1.0 - p.shape) : p.shape;
        w = std::min(w, pw);
    }
    return std::max(w, 1e-6);
}

}  // namespace

ImpedanceSpectrum synthesize_spectrum(const DrtModel& model, const FrequencyGrid& freq) {
    model.validate();
    freq.validate();

    // >= 8x finer than A4 (20 nodes/decade), finer still for narrow processes.
    const double ds = std::min(kLn10 / 160.0, min_process_width(model) / 8.0);

    double s_lo = 0.0, s_hi = 0.0;
    bool first = true;
    for (const auto& p : model.processes) {
        if (p.scale == 0.0) continue;
        const double c = std::log(p.peak_time());
        s_lo = first ? c : std::min(s_lo, c);
        s_hi = first ? c : std::max(s_hi, c);
        first = false;
    }
    if (first) {  // all scales zero: the spectrum is identically zero
        ImpedanceSpectrum zero;
        zero.freq_grid = freq;
        zero.z1.assign(freq.size(), 0.0);
        zero.z2.assign(freq.size(), 0.0);
        return zero;
    }
    s_lo -= 8.0;
    s_hi += 8.0;

    auto chunk_mass = [&](double a, double b) {
        const auto n = static_cast<std::size_t>(std::ceil((b - a) / ds)) + 1;
        const double h = (b - a) / static_cast<double>(n - 1);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double f = eval_g1(model, std::exp(a + h * static_cast<double>(i)));
            sum += (i == 0 || i + 1 == n) ? f / 2.0 : f;
        }
        return sum * h;
    };

    // Extend the window until the added tail mass is negligible.
    double total = chunk_mass(s_lo, s_hi);
    const double tail_tol = 1e-8;
    constexpr double kChunk = 4.0;
    for (int guard = 0; guard < 64; ++guard) {
        const double left = chunk_mass(s_lo - kChunk, s_lo);
        if (left < tail_tol * total) break;
        s_lo -= kChunk;
        total += left;
    }
    for (int guard = 0; guard < 64; ++guard) {
        const double right = chunk_mass(s_hi, s_hi + kChunk);
        if (right < tail_tol * total) break;
        s_hi += kChunk;
        total += right;
    }

    const auto n = static_cast<std::size_t>(std::ceil((s_hi - s_lo) / ds)) + 1;
    const double h = (s_hi - s_lo) / static_cast<double>(n - 1);

    std::vector<double> t_nodes(n), fw(n);  // fw = trapezoid weight * f
    for (std::size_t i = 0; i < n; ++i) {
        const double s = s_lo + h * static_cast<double>(i);
        t_nodes[i] = std::exp(s);
        const double w = (i == 0 || i + 1 == n) ? h / 2.0 : h;
        fw[i] = w * eval_g1(model, t_nodes[i]);
    }

    ImpedanceSpectrum spec;
    spec.freq_grid = freq;
    spec.z1.resize(freq.size());
    spec.z2.resize(freq.size());
    for (std::size_t m = 0; m < freq.size(); ++m) {
        const double omega = freq.omegas[m];
        double acc1 = 0.0, acc2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double u = omega * t_nodes[i];
            const double k1 = 1.0 / (1.0 + u * u);
            acc1 += fw[i] * k1;
            acc2 += fw[i] * u * k1;
        }
        spec.z1[m] = acc1;
        spec.z2[m] = acc2;
    }
    return spec;
}

ImpedanceSpectrum add_noise(const ImpedanceSpectrum& spectrum, double eta, std::uint64_t seed) {
    if (eta < 0.0) throw std::domain_error("noise level must be >= 0");
    ImpedanceSpectrum out = spectrum;
    out.noise_level = eta;
    out.seed = seed;
    if (eta == 0.0) return out;
    NormalSampler rng(seed);
    for (auto& v : out.z1) v += eta * std::abs(v) * rng.next();
    for (auto& v : out.z2) v += eta * std::abs(v) * rng.next();
    return out;
}

}  // namespace relaxo
