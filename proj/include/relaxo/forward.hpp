#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "relaxo/drt.hpp"

namespace relaxo {

struct FrequencyGrid {
    std::vector<double> omegas;  // strictly increasing angular frequencies, rad/s

    static FrequencyGrid log_spaced(double omega_min, double omega_max, int points_per_decade);
    /// 10 points/decade over [1e-4, 1e4] rad/s (81 points).
    static FrequencyGrid standard();

    std::size_t size() const { return omegas.size(); }
    void validate() const;
};

struct LogTimeGrid {
    std::vector<double> s_values;  // uniformly spaced log-times s = ln t
    std::vector<double> t_values;  // exp(s) mirror
    double delta_s = 0.0;

    static LogTimeGrid uniform(double s_min, double s_max, std::size_t n);

    std::size_t size() const { return s_values.size(); }
    /// Decade spacing of the t grid: delta_t = delta_s / ln(10).
    double delta_t_decades() const;
};

enum class QuadratureScheme { TSpaceRaw, TSpacePreconditioned, SSpaceTrapezoid };

struct QuadratureWeights {
    QuadratureScheme scheme;
    std::vector<double> weights;
};

/// Trapezoid weights on an arbitrary strictly increasing t grid:
/// w_1 = dt_1/2, w_i = (dt_{i-1}+dt_i)/2, w_N = dt_{N-1}/2.
QuadratureWeights weights_t_space(std::span<const double> t_nodes);

/// Weights w_i/t_i for a log-spaced grid, in closed form:
/// sinh(ds) * [1/(1+e^{-ds}), 1, ..., 1, 1/(1+e^{ds})].
QuadratureWeights weights_preconditioned(double delta_s, std::size_t n);

/// Uniform trapezoid weights on the s grid: [ds/2, ds, ..., ds, ds/2].
QuadratureWeights weights_s_space(double delta_s, std::size_t n);

/// h(omega, t) = 1 / (1 + omega^2 t^2), in (0, 1].
double kernel_z1(double omega, double t);

/// omega t / (1 + omega^2 t^2), in [0, 1/2]; maximal at omega t = 1.
double kernel_z2(double omega, double t);

enum class Resolution { A3, A4 };

/// Nodes per decade of log-time for each resolution (A4 twice as fine as A3).
int nodes_per_decade(Resolution r);

/// Discretized forward map from log-time density samples f(s_i) to the
/// stacked (Z1, Z2) data vector: row block one holds weight_i * kernel_z1,
/// row block two weight_i * kernel_z2.
struct DiscreteOperator {
    Eigen::MatrixXd matrix;  // (2M x N)
    FrequencyGrid freq_grid;
    LogTimeGrid log_time_grid;
    QuadratureWeights weights;
    Resolution resolution;

    std::size_t n_freq() const { return freq_grid.size(); }
    std::size_t n_nodes() const { return log_time_grid.size(); }
};

DiscreteOperator assemble_operator(const FrequencyGrid& freq, double s_min, double s_max,
                                   Resolution resolution,
                                   QuadratureScheme scheme = QuadratureScheme::SSpaceTrapezoid);

/// Standard operator: s range [ln 1e-6, ln 1e4] with the standard
/// frequency grid; A3 has 101 nodes, A4 has 201.
DiscreteOperator standard_operator(Resolution resolution,
                                   QuadratureScheme scheme = QuadratureScheme::SSpaceTrapezoid);

struct ImpedanceSpectrum {
    FrequencyGrid freq_grid;
    std::vector<double> z1;  // real part
    std::vector<double> z2;  // imaginary-part magnitude
    double noise_level = 0.0;
    std::optional<std::uint64_t> seed;

    std::size_t size() const { return freq_grid.size(); }
    /// Stacked data vector [z1; z2], length 2M.
    Eigen::VectorXd stacked() const;
};

/// High-accuracy synthesis of (Z1, Z2) from a parametric model by trapezoid
/// quadrature in s on a grid at least 8x finer than A4, extended until the
/// truncated tail mass of f is below 1e-8 of the total.
ImpedanceSpectrum synthesize_spectrum(const DrtModel& model, const FrequencyGrid& freq);

/// Componentwise proportional Gaussian noise: b~_i = b_i + eta*|b_i|*eps_i
/// with eps_i drawn from NormalSampler(seed) in stacked order (z1 then z2).
ImpedanceSpectrum add_noise(const ImpedanceSpectrum& spectrum, double eta, std::uint64_t seed);

}  // namespace relaxo
