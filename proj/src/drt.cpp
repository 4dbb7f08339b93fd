#include "relaxo/drt.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace relaxo {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSqrt2Pi = 2.506628274631000502415765284811;

// Cole-Cole density, unit scale:
//   g_RQ(t) = 1/(2 pi t) * sin(beta pi) / (cosh(beta ln(t/t0)) + cos(beta pi))
// Along t = t0*e^s the direct substitution carries a factor exp(-s), not
// exp(-|s|); the two agree only at s = 0 where the peak heights are matched.
double g_rq(double t, double t0, double beta) {
    const double s = std::log(t / t0);
    return std::sin(beta * kPi) / (2.0 * kPi * t * (std::cosh(beta * s) + std::cos(beta * kPi)));
}

// Lognormal density, unit scale, mu = ln(t0) + sigma^2:
//   g_LN(t) = 1/(t sigma sqrt(2 pi)) * exp(-(ln t - mu)^2 / (2 sigma^2))
double g_ln(double t, double t0, double sigma) {
    const double z = (std::log(t) - (std::log(t0) + sigma * sigma)) / sigma;
    return std::exp(-0.5 * z * z) / (t * sigma * kSqrt2Pi);
}

}  // namespace

DrtProcess DrtProcess::rq(double t0, double beta, double scale) {
    DrtProcess p{ProcessKind::RQ, t0, beta, scale};
    p.validate();
    return p;
}

DrtProcess DrtProcess::lognormal(double t0, double sigma, double scale) {
    DrtProcess p{ProcessKind::LN, t0, sigma, scale};
    p.validate();
    return p;
}

DrtProcess DrtProcess::lognormal_from_mu(double mu, double sigma, double scale) {
    return lognormal(std::exp(mu - sigma * sigma), sigma, scale);
}

double DrtProcess::mu() const {
    if (kind != ProcessKind::LN) throw std::logic_error("mu() is defined for LN processes only");
    return std::log(t0) + shape * shape;
}

double DrtProcess::peak_time() const {
    return kind == ProcessKind::RQ ? t0 : std::exp(mu());
}

void DrtProcess::validate() const {
    if (!(t0 > 0.0) || !std::isfinite(t0)) throw std::invalid_argument("process t0 must be positive");
    if (scale < 0.0 || !std::isfinite(scale)) throw std::invalid_argument("process scale must be >= 0");
    if (kind == ProcessKind::RQ) {
        if (!(shape > 0.0 && shape < 1.0)) throw std::invalid_argument("RQ beta must lie in (0,1)");
    } else {
        if (!(shape > 0.0) || !std::isfinite(shape)) throw std::invalid_argument("LN sigma must be positive");
    }
}

void DrtModel::validate() const {
    if (processes.empty()) throw std::invalid_argument("model must contain at least one process");
    for (const auto& p : processes) p.validate();
}

double DrtModel::total_scale() const {
    double sum = 0.0;
    for (const auto& p : processes) sum += p.scale;
    return sum;
}

double eval_g(const DrtModel& model, double t) {
    if (!(t > 0.0)) throw std::domain_error("eval_g requires t > 0");
    double sum = 0.0;
    for (const auto& p : model.processes) {
        if (p.scale == 0.0) continue;
        sum += p.scale * (p.kind == ProcessKind::RQ ? g_rq(t, p.t0, p.shape) : g_ln(t, p.t0, p.shape));
    }
    return sum;
}

double eval_g1(const DrtModel& model, double t) { return t * eval_g(model, t); }

std::vector<SSpaceSample> eval_f_s(const DrtModel& model, std::span<const double> s_grid) {
    std::vector<SSpaceSample> out;
    out.reserve(s_grid.size());
    for (double s : s_grid) out.push_back({s, eval_g1(model, std::exp(s))});
    return out;
}

std::vector<double> eval_f_values(const DrtModel& model, std::span<const double> s_grid) {
    std::vector<double> out;
    out.reserve(s_grid.size());
    for (double s : s_grid) out.push_back(eval_g1(model, std::exp(s)));
    return out;
}

double matched_beta(double sigma) {
    if (!(sigma > 0.0)) throw std::domain_error("matched_beta requires sigma > 0");
    return (2.0 / kPi) * std::atan(kSqrt2Pi / sigma * std::exp(-0.5 * sigma * sigma));
}

namespace {

std::string normalize_set_name(std::string_view name) {
    std::string up;
    for (char c : name)
        if (c != ' ') up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    // accept "RQ-A" as a spelling of "A-RQ"
    for (const char* fam : {"RQ", "LN"}) {
        const std::string f = fam;
        if (up.size() == f.size() + 2 && up.rfind(f + "-", 0) == 0) return up.substr(f.size() + 1) + "-" + f;
    }
    return up;
}

}  // namespace

DrtModel builtin_model(std::string_view name) {
    const std::string key = normalize_set_name(name);
    const double sig1 = std::log(1.7);
    const double sig2 = std::log(1.5);

    if (key == "A-RQ") return {{DrtProcess::rq(std::exp(-1.5), 0.8, 1.0)}};
    if (key == "B-RQ")
        return {{DrtProcess::rq(std::exp(-4.0), 0.7, 0.5), DrtProcess::rq(1.0, 0.5, 0.5)}};
    if (key == "C-RQ")
        return {{DrtProcess::rq(std::exp(-1.5), 0.8, 0.5), DrtProcess::rq(std::exp(-0.5), 0.6, 0.5)}};
    if (key == "A-LN") return {{DrtProcess::lognormal_from_mu(-3.5, 0.8, 1.0)}};
    if (key == "B-LN")
        return {{DrtProcess::lognormal_from_mu(-7.0, sig1, 0.7), DrtProcess::lognormal_from_mu(1.0, sig2, 0.3)}};
    if (key == "C-LN")
        return {{DrtProcess::lognormal_from_mu(-5.0, sig1, 0.7), DrtProcess::lognormal_from_mu(-3.25, sig2, 0.3)}};
    throw std::invalid_argument("unknown simulation set: " + std::string(name));
}

std::vector<std::string> builtin_model_names() {
    return {"A-RQ", "B-RQ", "C-RQ", "A-LN", "B-LN", "C-LN"};
}

}  // namespace relaxo
