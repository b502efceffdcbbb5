#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mrisk/asymptotics.hpp"
#include "mrisk/errors.hpp"
#include "mrisk/risk.hpp"
#include "mrisk/simlab.hpp"
#include "mrisk/tuner.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

mrisk::Dataset make_dataset(Eigen::MatrixXd X, Eigen::VectorXd y, std::optional<Eigen::VectorXd> beta_star) {
  mrisk::Dataset d{std::move(X), std::move(y), std::move(beta_star), std::nullopt};
  d.validate();
  return d;
}

mrisk::FitOptions make_options(double kkt_tol, int max_iter) {
  mrisk::FitOptions o;
  o.kkt_tol = kkt_tol;
  o.max_iter = max_iter;
  o.validate();
  return o;
}

}  // namespace

PYBIND11_MODULE(_mrisk, m) {
  m.doc() = "Robust M-estimation with out-of-sample risk estimates.";

  py::register_exception<mrisk::InvalidParameter>(m, "InvalidParameter", PyExc_ValueError);
  py::register_exception<mrisk::UnsupportedOperation>(m, "UnsupportedOperation", PyExc_NotImplementedError);
  auto numerical = py::register_exception<mrisk::NumericalError>(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception<mrisk::NoConvergence>(m, "NoConvergence", numerical.ptr());
  py::register_exception<mrisk::StructuralError>(m, "StructuralError", PyExc_RuntimeError);

  py::class_<mrisk::BaseLoss>(m, "BaseLoss")
      .def_static("huber", &mrisk::BaseLoss::huber)
      .def_static("pseudo_huber", &mrisk::BaseLoss::pseudo_huber)
      .def_static("from_name", &mrisk::BaseLoss::from_name, "name"_a)
      .def_property_readonly("name", [](const mrisk::BaseLoss& b) { return std::string(b.name()); })
      .def_property_readonly("psi_sup", &mrisk::BaseLoss::psi_sup)
      .def_property_readonly("eta", &mrisk::BaseLoss::eta)
      .def("psi", &mrisk::BaseLoss::psi)
      .def("psi_prime", &mrisk::BaseLoss::psi_prime);

  py::class_<mrisk::ScaledLoss>(m, "ScaledLoss")
      .def(py::init<mrisk::BaseLoss, double>(), "base"_a, "lam"_a)
      .def(py::init([](const std::string& name, double lam) {
             return mrisk::ScaledLoss(mrisk::BaseLoss::from_name(name), lam);
           }),
           "name"_a, "lam"_a)
      .def_property_readonly("lam", &mrisk::ScaledLoss::lambda)
      .def("rho", &mrisk::ScaledLoss::rho, "x"_a)
      .def("psi", py::overload_cast<double>(&mrisk::ScaledLoss::psi, py::const_), "x"_a)
      .def("psi_prime", py::overload_cast<double>(&mrisk::ScaledLoss::psi_prime, py::const_), "x"_a)
      .def("prox", &mrisk::ScaledLoss::prox, "kappa"_a, "x"_a)
      .def("objective", &mrisk::ScaledLoss::objective, "r"_a);

  py::class_<mrisk::NoiseModel>(m, "NoiseModel")
      .def_static("parse", [](const std::string& s) { return mrisk::NoiseModel::parse(s); }, "spec"_a)
      .def_property_readonly("spec", [](const mrisk::NoiseModel& w) { return std::string(w.spec()); })
      .def_property_readonly("nodes", &mrisk::NoiseModel::w_nodes)
      .def_property_readonly("weights", &mrisk::NoiseModel::w_weights);

  py::class_<mrisk::Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), "X"_a, "y"_a, "beta_star"_a = py::none())
      .def_readonly("X", &mrisk::Dataset::X)
      .def_readonly("y", &mrisk::Dataset::y)
      .def_readonly("beta_star", &mrisk::Dataset::beta_star)
      .def_property_readonly("n", &mrisk::Dataset::n)
      .def_property_readonly("p", &mrisk::Dataset::p);

  py::class_<mrisk::FitOptions>(m, "FitOptions")
      .def(py::init(&make_options), "kkt_tol"_a = 1e-8, "max_iter"_a = 500)
      .def_readwrite("kkt_tol", &mrisk::FitOptions::kkt_tol)
      .def_readwrite("max_iter", &mrisk::FitOptions::max_iter);

  py::class_<mrisk::FitResult>(m, "FitResult")
      .def_readonly("beta_hat", &mrisk::FitResult::beta_hat)
      .def_readonly("residuals", &mrisk::FitResult::residuals)
      .def_readonly("psi", &mrisk::FitResult::psi_vals)
      .def_readonly("kkt_residual", &mrisk::FitResult::kkt_residual)
      .def_readonly("objective", &mrisk::FitResult::objective)
      .def_readonly("iterations", &mrisk::FitResult::iterations)
      .def_readonly("converged", &mrisk::FitResult::converged);

  py::class_<mrisk::RiskEstimate>(m, "RiskEstimate")
      .def_readonly("r_hat", &mrisk::RiskEstimate::r_hat)
      .def_readonly("psi_sq_norm", &mrisk::RiskEstimate::psi_sq_norm)
      .def_readonly("trace_v", &mrisk::RiskEstimate::trace_v)
      .def_readonly("degenerate", &mrisk::RiskEstimate::degenerate)
      .def_property_readonly("trace_method",
                             [](const mrisk::RiskEstimate& r) { return std::string(mrisk::to_string(r.trace_method)); });

  m.def(
      "fit",
      [](const mrisk::Dataset& d, const mrisk::ScaledLoss& loss, const mrisk::FitOptions& o) {
        py::gil_scoped_release release;
        return mrisk::fit(d, loss, o);
      },
      "data"_a, "loss"_a, "options"_a = mrisk::FitOptions{});
  m.def(
      "fit_ridge",
      [](const mrisk::Dataset& d, const mrisk::ScaledLoss& loss, double mu, const mrisk::FitOptions& o) {
        py::gil_scoped_release release;
        return mrisk::fit_ridge(d, loss, mu, o);
      },
      "data"_a, "loss"_a, "mu"_a, "options"_a = mrisk::FitOptions{});
  m.def("estimate_risk", &mrisk::estimate_risk, "fit"_a, "data"_a, "loss"_a, "options"_a = mrisk::FitOptions{});
  m.def("oracle_risk", &mrisk::oracle_risk, "fit"_a, "data"_a);

  py::class_<mrisk::SystemSolution>(m, "SystemSolution")
      .def_readonly("alpha", &mrisk::SystemSolution::alpha)
      .def_readonly("kappa", &mrisk::SystemSolution::kappa)
      .def_readonly("residual", &mrisk::SystemSolution::residual_norm)
      .def_readonly("iterations", &mrisk::SystemSolution::iterations)
      .def_property_readonly("alpha_sq", &mrisk::SystemSolution::alpha_sq);

  m.def(
      "solve_system",
      [](const mrisk::ScaledLoss& loss, const mrisk::NoiseModel& noise, double gamma, int hermite_order) {
        mrisk::SystemOptions o;
        o.hermite_order = hermite_order;
        return mrisk::solve_system(loss, noise, gamma, std::nullopt, o);
      },
      "loss"_a, "noise"_a, "gamma"_a, "hermite_order"_a = 81);
  m.def(
      "system_residuals",
      [](double alpha, double kappa, const mrisk::ScaledLoss& loss, const mrisk::NoiseModel& noise, double gamma) {
        return mrisk::system_residuals(alpha, kappa, loss, noise, gamma, {});
      },
      "alpha"_a, "kappa"_a, "loss"_a, "noise"_a, "gamma"_a);
  m.def(
      "alpha_curve",
      [](const mrisk::BaseLoss& base, const mrisk::NoiseModel& noise, double gamma, std::vector<double> lambdas) {
        const auto curve = mrisk::alpha_curve(base, noise, gamma, mrisk::LambdaGrid::from_points(std::move(lambdas)));
        py::list out;
        for (const auto& c : curve)
          out.append(py::dict("lam"_a = c.lambda, "alpha_sq"_a = c.alpha_sq, "kappa"_a = c.kappa,
                              "residual"_a = c.residual, "ok"_a = c.ok));
        return out;
      },
      "base"_a, "noise"_a, "gamma"_a, "lambdas"_a);

  m.def(
      "tune",
      [](const mrisk::Dataset& d, const mrisk::BaseLoss& base, std::vector<double> lambdas,
         const mrisk::FitOptions& o, bool parallel) {
        mrisk::TuneOptions t{o, parallel ? mrisk::TuneMode::Parallel : mrisk::TuneMode::WarmStart, 0};
        const auto grid = mrisk::LambdaGrid::from_points(std::move(lambdas));
        mrisk::TuningReport rep;
        {
          py::gil_scoped_release release;
          rep = mrisk::tune(d, base, grid, t);
        }
        py::list rows;
        for (const auto& r : rep.rows)
          rows.append(py::dict("lam"_a = r.lambda, "r_hat"_a = r.r_hat, "trace_v"_a = r.trace_v,
                               "psi_sq_norm"_a = r.psi_sq_norm, "kkt_residual"_a = r.kkt_residual,
                               "degenerate"_a = r.degenerate));
        return py::dict("rows"_a = rows, "selected_lambda"_a = rep.selected_lambda,
                        "selected_index"_a = rep.selected_index,
                        "beta_hat"_a = rep.rows[rep.selected_index].beta_hat);
      },
      "data"_a, "base"_a, "lambdas"_a, "options"_a = mrisk::FitOptions{}, "parallel"_a = false);

  m.def(
      "generate_dataset",
      [](int n, int p, const std::string& noise, const std::string& design, const std::string& beta_star,
         std::uint64_t seed) {
        return mrisk::generate_dataset(n, p, mrisk::DesignSpec::parse(design), mrisk::BetaStarSpec::parse(beta_star),
                                       mrisk::NoiseModel::parse(noise), seed);
      },
      "n"_a, "p"_a, "noise"_a = "t:2", "design"_a = "gaussian", "beta_star"_a = "zero", "seed"_a = 1);
  m.def("read_dataset_csv", &mrisk::read_dataset_csv, "path"_a);
  m.def("write_dataset_csv", &mrisk::write_dataset_csv, "path"_a, "data"_a);

  m.def(
      "run_experiment",
      [](const std::string& toml_text, bool verbose) {
        const mrisk::ExperimentConfig cfg = mrisk::parse_config(toml_text);
        std::ostringstream log;
        {
          py::gil_scoped_release release;
          mrisk::run_experiment(cfg, verbose ? &log : nullptr);
        }
        return log.str();
      },
      "config_toml"_a, "verbose"_a = false,
      "Runs the experiment described by a TOML string and writes its CSV to output_path. Returns the log.");
  m.def("record_columns", &mrisk::record_columns);
}
