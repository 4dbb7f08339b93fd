#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "relaxo/drt.hpp"
#include "relaxo/experiments.hpp"
#include "relaxo/forward.hpp"
#include "relaxo/nlsfit.hpp"
#include "relaxo/param_choice.hpp"
#include "relaxo/peaks.hpp"
#include "relaxo/regsolve.hpp"

namespace py = pybind11;
using namespace relaxo;

namespace {

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

RegularizedProblem make_problem(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                RegularizerKind kind, double lambda) {
    return RegularizedProblem{A, b, build_regularizer(kind, static_cast<std::size_t>(A.cols())),
                              lambda};
}

}  // namespace

PYBIND11_MODULE(_relaxo, m) {
    m.doc() = "DRT inversion of dielectric relaxation spectra";
    m.attr("__version__") = RELAXO_VERSION;

    py::enum_<ProcessKind>(m, "ProcessKind")
        .value("RQ", ProcessKind::RQ)
        .value("LN", ProcessKind::LN);

    py::class_<DrtProcess>(m, "DrtProcess")
        .def_static("rq", &DrtProcess::rq, py::arg("t0"), py::arg("beta"), py::arg("scale") = 1.0)
        .def_static("lognormal", &DrtProcess::lognormal, py::arg("t0"), py::arg("sigma"),
                    py::arg("scale") = 1.0)
        .def_static("lognormal_from_mu", &DrtProcess::lognormal_from_mu, py::arg("mu"),
                    py::arg("sigma"), py::arg("scale") = 1.0)
        .def_readonly("kind", &DrtProcess::kind)
        .def_readonly("t0", &DrtProcess::t0)
        .def_readonly("shape", &DrtProcess::shape)
        .def_readonly("scale", &DrtProcess::scale)
        .def("peak_time", &DrtProcess::peak_time)
        .def("__repr__", [](const DrtProcess& p) {
            return std::string("DrtProcess(") + (p.kind == ProcessKind::RQ ? "RQ" : "LN") +
                   ", t0=" + std::to_string(p.t0) + ", shape=" + std::to_string(p.shape) +
                   ", scale=" + std::to_string(p.scale) + ")";
        });

    py::class_<DrtModel>(m, "DrtModel")
        .def(py::init([](std::vector<DrtProcess> procs) {
                 DrtModel model{std::move(procs)};
                 model.validate();
                 return model;
             }),
             py::arg("processes"))
        .def_readonly("processes", &DrtModel::processes)
        .def("total_scale", &DrtModel::total_scale);

    m.def("builtin_model", &builtin_model, py::arg("name"),
          "Built-in simulation set, e.g. 'A-RQ' or 'B-LN'");
    m.def("builtin_model_names", &builtin_model_names);
    m.def("matched_beta", &matched_beta, py::arg("sigma"),
          "RQ shape whose density peak matches a lognormal of width sigma");
    m.def("eval_g", &eval_g, py::arg("model"), py::arg("t"));
    m.def("eval_g1", &eval_g1, py::arg("model"), py::arg("t"));
    m.def(
        "eval_f_s",
        [](const DrtModel& model, const Eigen::VectorXd& s) {
            return to_vector(eval_f_values(
                model, std::span<const double>(s.data(), static_cast<std::size_t>(s.size()))));
        },
        py::arg("model"), py::arg("s_grid"), "Log-time density f(s) sampled on a grid");

    py::class_<FrequencyGrid>(m, "FrequencyGrid")
        .def_static("log_spaced", &FrequencyGrid::log_spaced, py::arg("omega_min"),
                    py::arg("omega_max"), py::arg("points_per_decade"))
        .def_static("standard", &FrequencyGrid::standard)
        .def_property_readonly("omegas", [](const FrequencyGrid& g) { return to_vector(g.omegas); })
        .def("__len__", &FrequencyGrid::size);

    py::enum_<Resolution>(m, "Resolution")
        .value("A3", Resolution::A3)
        .value("A4", Resolution::A4);

    py::enum_<QuadratureScheme>(m, "QuadratureScheme")
        .value("TSpaceRaw", QuadratureScheme::TSpaceRaw)
        .value("TSpacePreconditioned", QuadratureScheme::TSpacePreconditioned)
        .value("SSpaceTrapezoid", QuadratureScheme::SSpaceTrapezoid);

    py::class_<DiscreteOperator>(m, "DiscreteOperator")
        .def_readonly("matrix", &DiscreteOperator::matrix)
        .def_readonly("resolution", &DiscreteOperator::resolution)
        .def_property_readonly(
            "s_values", [](const DiscreteOperator& op) { return to_vector(op.log_time_grid.s_values); })
        .def_property_readonly(
            "t_values", [](const DiscreteOperator& op) { return to_vector(op.log_time_grid.t_values); })
        .def_property_readonly(
            "omegas", [](const DiscreteOperator& op) { return to_vector(op.freq_grid.omegas); })
        .def_property_readonly("delta_s",
                               [](const DiscreteOperator& op) { return op.log_time_grid.delta_s; });

    m.def("assemble_operator", &assemble_operator, py::arg("freq"), py::arg("s_min"),
          py::arg("s_max"), py::arg("resolution"),
          py::arg("scheme") = QuadratureScheme::SSpaceTrapezoid);
    m.def("standard_operator", &standard_operator, py::arg("resolution"),
          py::arg("scheme") = QuadratureScheme::SSpaceTrapezoid);

    m.def("weights_s_space",
          [](double ds, std::size_t n) { return to_vector(weights_s_space(ds, n).weights); });
    m.def("weights_preconditioned",
          [](double ds, std::size_t n) { return to_vector(weights_preconditioned(ds, n).weights); });
    m.def("kernel_z1", &kernel_z1, py::arg("omega"), py::arg("t"));
    m.def("kernel_z2", &kernel_z2, py::arg("omega"), py::arg("t"));

    py::class_<ImpedanceSpectrum>(m, "ImpedanceSpectrum")
        .def_property_readonly("omegas",
                               [](const ImpedanceSpectrum& s) { return to_vector(s.freq_grid.omegas); })
        .def_property_readonly("z1", [](const ImpedanceSpectrum& s) { return to_vector(s.z1); })
        .def_property_readonly("z2", [](const ImpedanceSpectrum& s) { return to_vector(s.z2); })
        .def_readonly("noise_level", &ImpedanceSpectrum::noise_level)
        .def("stacked", &ImpedanceSpectrum::stacked)
        .def("__len__", &ImpedanceSpectrum::size);

    m.def("synthesize_spectrum", &synthesize_spectrum, py::arg("model"), py::arg("freq"));
    m.def("add_noise", &add_noise, py::arg("spectrum"), py::arg("eta"), py::arg("seed"));

    py::enum_<RegularizerKind>(m, "RegularizerKind")
        .value("Identity", RegularizerKind::Identity)
        .value("FirstDiff", RegularizerKind::FirstDiff)
        .value("SecondDiff", RegularizerKind::SecondDiff);

    m.def(
        "regularizer_matrix",
        [](RegularizerKind kind, std::size_t n) { return build_regularizer(kind, n).matrix; },
        py::arg("kind"), py::arg("n"));

    py::enum_<SolveMethod>(m, "SolveMethod")
        .value("LS", SolveMethod::LS)
        .value("NNLS_ActiveSet", SolveMethod::NNLS_ActiveSet)
        .value("NNLS_SBB", SolveMethod::NNLS_SBB);

    py::class_<Solution>(m, "Solution")
        .def_readonly("x", &Solution::x)
        .def_readonly("residual_norm", &Solution::residual_norm)
        .def_readonly("seminorm", &Solution::seminorm)
        .def_readonly("iterations", &Solution::iterations)
        .def_readonly("converged", &Solution::converged)
        .def_readonly("method", &Solution::method);

    m.def(
        "solve_ls",
        [](const Eigen::MatrixXd& A, const Eigen::VectorXd& b, RegularizerKind L, double lam) {
            return solve_ls(make_problem(A, b, L, lam));
        },
        py::arg("A"), py::arg("b"), py::arg("L") = RegularizerKind::Identity,
        py::arg("lambda_") = 0.0);
    m.def(
        "solve_nnls",
        [](const Eigen::MatrixXd& A, const Eigen::VectorXd& b, RegularizerKind L, double lam) {
            return solve_nnls_activeset(make_problem(A, b, L, lam));
        },
        py::arg("A"), py::arg("b"), py::arg("L") = RegularizerKind::Identity,
        py::arg("lambda_") = 0.0);
    m.def(
        "solve_nnls_sbb",
        [](const Eigen::MatrixXd& A, const Eigen::VectorXd& b, RegularizerKind L, double lam) {
            return solve_nnls_sbb(make_problem(A, b, L, lam));
        },
        py::arg("A"), py::arg("b"), py::arg("L") = RegularizerKind::Identity,
        py::arg("lambda_") = 0.0);

    py::class_<SweepEntry>(m, "SweepEntry")
        .def_readonly("lambda_", &SweepEntry::lambda)
        .def_readonly("solution", &SweepEntry::solution)
        .def_readonly("ncp_deviation", &SweepEntry::ncp_dev)
        .def_readonly("solver_ok", &SweepEntry::solver_ok)
        .def_property_readonly("s_space_error", [](const SweepEntry& e) {
            return e.s_space_error ? py::cast(*e.s_space_error) : py::none();
        });

    py::class_<SweepResult>(m, "SweepResult")
        .def_readonly("entries", &SweepResult::entries)
        .def("__len__", &SweepResult::size);

    py::class_<SelectionResult>(m, "SelectionResult")
        .def_readonly("lambda_lc", &SelectionResult::lambda_lc)
        .def_readonly("lambda_ncp", &SelectionResult::lambda_ncp)
        .def_readonly("index_lc", &SelectionResult::index_lc)
        .def_readonly("index_ncp", &SelectionResult::index_ncp)
        .def_readonly("lc_fallback", &SelectionResult::lc_fallback)
        .def_property_readonly("lambda_opt", [](const SelectionResult& s) {
            return s.lambda_opt ? py::cast(*s.lambda_opt) : py::none();
        });

    m.def(
        "sweep",
        [](const Eigen::MatrixXd& A, const Eigen::VectorXd& b, RegularizerKind L,
           const Eigen::VectorXd& lambdas, SolveMethod method,
           std::optional<Eigen::VectorXd> x_true) {
            const RegularizedSolver solver(
                A, b, build_regularizer(L, static_cast<std::size_t>(A.cols())));
            const LambdaGrid grid = LambdaGrid::from_values(
                std::vector<double>(lambdas.data(), lambdas.data() + lambdas.size()));
            return sweep(solver, grid, method, x_true ? &*x_true : nullptr);
        },
        py::arg("A"), py::arg("b"), py::arg("L"), py::arg("lambdas"),
        py::arg("method") = SolveMethod::NNLS_ActiveSet, py::arg("x_true") = py::none());
    m.def(
        "select_all",
        [](const SweepResult& sw, std::optional<Eigen::VectorXd> x_true) {
            return select_all(sw, x_true ? &*x_true : nullptr);
        },
        py::arg("sweep"), py::arg("x_true") = py::none());

    m.def("ncp_deviation",
          [](const Eigen::VectorXd& r) { return ncp_deviation(r); }, py::arg("residual"));
    m.def("ncp_cumulative", &ncp_cumulative, py::arg("residual"));
    m.def(
        "geometric_mean",
        [](const std::vector<double>& v) { return geometric_mean(v); }, py::arg("values"));
    m.def("relative_error_percent", &relative_error_percent, py::arg("x"), py::arg("x_true"));

    py::class_<Peak>(m, "Peak")
        .def_readonly("index", &Peak::index)
        .def_readonly("omega", &Peak::omega)
        .def_readonly("t_star", &Peak::t_star);
    py::class_<PeakSet>(m, "PeakSet")
        .def_readonly("peaks", &PeakSet::peaks)
        .def_readonly("boundary_maxima", &PeakSet::boundary_maxima);
    m.def("find_z2_peaks", &find_z2_peaks, py::arg("spectrum"), py::arg("quadratic_refine") = false);
    m.def("nyquist_curve", &nyquist_curve, py::arg("spectrum"));

    py::class_<FitResult>(m, "FitResult")
        .def_readonly("model", &FitResult::model)
        .def_readonly("residual_norm", &FitResult::residual_norm)
        .def_readonly("iterations", &FitResult::iterations)
        .def_readonly("converged", &FitResult::converged);
    m.def(
        "fit_spectrum",
        [](const ImpedanceSpectrum& spec, ProcessKind family) {
            return fit(spec, init_from_peaks(spec, family));
        },
        py::arg("spectrum"), py::arg("family"),
        "Peak-initialized bounded least-squares fit of a parametric model");
}
