// mrisk: command-line front end for fitting, risk estimation, tuning,
// the fixed-point system and simulation experiments.

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mrisk/asymptotics.hpp"
#include "mrisk/errors.hpp"
#include "mrisk/risk.hpp"
#include "mrisk/simlab.hpp"
#include "mrisk/tuner.hpp"

namespace {

using json = nlohmann::json;

constexpr int kUsageError = 1;
constexpr int kNumericalError = 2;

json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

Eigen::VectorXd read_vector(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mrisk::InvalidParameter("cannot open '" + path + "'");
  std::vector<double> vals;
  for (double v; in >> v;) {
    vals.push_back(v);
    if (in.peek() == ',') in.ignore();
  }
  return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

struct GridArgs {
  double lambda_min = 1.0;
  double lambda_max = 10.0;
  int points = 101;

  void add(CLI::App* cmd) {
    cmd->add_option("--lambda-min", lambda_min, "Smallest loss scale")->capture_default_str();
    cmd->add_option("--lambda-max", lambda_max, "Largest loss scale")->capture_default_str();
    cmd->add_option("--lambda-points", points, "Number of log-spaced grid points")->capture_default_str();
  }
};

void write_tuning_csv(std::ostream& os, const mrisk::TuningReport& report) {
  os << "lambda,r_hat,trace_v,psi_sq_norm,kkt_residual,degenerate,selected\n";
  os.precision(17);
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    os << r.lambda << ',' << r.r_hat << ',' << r.trace_v << ',' << r.psi_sq_norm << ',' << r.kkt_residual << ','
       << (r.degenerate ? 1 : 0) << ',' << (i == report.selected_index ? 1 : 0) << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust M-estimation: fits, out-of-sample risk estimates, lambda tuning and simulations"};
  app.require_subcommand(1);

  std::string data_path, loss_name = "huber", noise_spec = "t:2", out_path, beta_path, config_path;
  double lambda = 1.0;
  double gamma = 0.3;
  mrisk::FitOptions fopts;

  auto add_fit_flags = [&](CLI::App* cmd) {
    cmd->add_option("--kkt-tol", fopts.kkt_tol, "KKT tolerance |X^T psi| / n")->capture_default_str();
    cmd->add_option("--max-iter", fopts.max_iter, "Newton iteration cap")->capture_default_str();
  };

  auto* fit_cmd = app.add_subcommand("fit", "Fit the M-estimator and report beta, KKT residual and R_hat");
  fit_cmd->add_option("--data", data_path, "Headerless CSV, y in column 0")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--loss", loss_name, "huber | pseudo_huber")->capture_default_str();
  fit_cmd->add_option("--lambda", lambda, "Loss scale")->required();
  fit_cmd->add_option("--beta-out", out_path, "Write the full coefficient vector here");
  add_fit_flags(fit_cmd);

  std::string trace_mode = "closed";
  int probes = 0;
  double step = 1e-4;
  std::uint64_t seed = 1;
  auto* risk_cmd = app.add_subcommand("risk", "Risk estimate R_hat with its ingredients");
  risk_cmd->add_option("--data", data_path, "Headerless CSV, y in column 0")->required()->check(CLI::ExistingFile);
  risk_cmd->add_option("--loss", loss_name, "huber | pseudo_huber")->capture_default_str();
  risk_cmd->add_option("--lambda", lambda, "Loss scale")->required();
  risk_cmd->add_option("--beta-star", beta_path, "True coefficients (one per line) to also report R");
  risk_cmd->add_option("--trace", trace_mode, "closed | fd (refitting finite differences)")
      ->check(CLI::IsMember({"closed", "fd"}))
      ->capture_default_str();
  risk_cmd->add_option("--probes", probes, "fd probes (0 = coordinate basis)")->capture_default_str();
  risk_cmd->add_option("--step", step, "fd step")->capture_default_str();
  risk_cmd->add_option("--seed", seed, "fd probe seed")->capture_default_str();
  add_fit_flags(risk_cmd);

  GridArgs grid_args;
  auto* tune_cmd = app.add_subcommand("tune", "Select lambda by minimizing R_hat over a log grid");
  tune_cmd->add_option("--data", data_path, "Headerless CSV, y in column 0")->required()->check(CLI::ExistingFile);
  tune_cmd->add_option("--loss", loss_name, "huber | pseudo_huber")->capture_default_str();
  tune_cmd->add_option("--out", out_path, "Write the report CSV here instead of standard output");
  grid_args.add(tune_cmd);
  add_fit_flags(tune_cmd);

  int hermite = 81;
  auto* system_cmd = app.add_subcommand("system", "Solve the fixed-point system for (alpha, kappa)");
  system_cmd->add_option("--loss", loss_name, "huber | pseudo_huber")->capture_default_str();
  system_cmd->add_option("--lambda", lambda, "Loss scale")->required();
  system_cmd->add_option("--noise", noise_spec, "t:DF | gauss:SIGMA | gauss+cauchy | ceil-t:S:DF | scaled-t:S:DF")
      ->capture_default_str();
  system_cmd->add_option("--gamma", gamma, "p / n in (0, 1)")->required();
  system_cmd->add_option("--hermite", hermite, "Gauss-Hermite order")->capture_default_str();

  auto* curve_cmd = app.add_subcommand("curve", "alpha^2(lambda) over a log grid as CSV");
  curve_cmd->add_option("--loss", loss_name, "huber | pseudo_huber")->capture_default_str();
  curve_cmd->add_option("--noise", noise_spec, "Noise spec")->capture_default_str();
  curve_cmd->add_option("--gamma", gamma, "p / n in (0, 1)")->required();
  curve_cmd->add_option("--out", out_path, "Write CSV here instead of standard output");
  grid_args.add(curve_cmd);

  int gen_n = 200, gen_p = 40;
  std::string design = "gaussian", beta_spec = "zero";
  std::uint64_t gen_seed = 1;
  auto* gen_cmd = app.add_subcommand("generate", "Write a synthetic dataset CSV (y in column 0)");
  gen_cmd->add_option("--n", gen_n, "Sample size")->capture_default_str();
  gen_cmd->add_option("--p", gen_p, "Number of features")->capture_default_str();
  gen_cmd->add_option("--noise", noise_spec, "Noise spec")->capture_default_str();
  gen_cmd->add_option("--design", design, "gaussian | rademacher | uniform | t:DF")->capture_default_str();
  gen_cmd->add_option("--beta-star", beta_spec, "zero | random[:NORM]")->capture_default_str();
  gen_cmd->add_option("--seed", gen_seed, "Seed")->capture_default_str();
  gen_cmd->add_option("--out", out_path, "Dataset CSV path")->required();
  gen_cmd->add_option("--beta-out", beta_path, "Also write beta_star, one value per line");

  std::string experiment;
  std::optional<int> sim_n, sim_p, sim_reps, sim_points;
  std::optional<double> sim_lambda, sim_lmin, sim_lmax;
  std::optional<std::uint64_t> sim_seed;
  std::optional<std::string> sim_noise, sim_loss;
  unsigned threads = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a simulation experiment and write its CSV");
  sim_cmd->add_option("--config", config_path, "TOML experiment config")->check(CLI::ExistingFile);
  sim_cmd->add_option("--experiment", experiment,
                      "risk_consistency | adaptive_tuning | universality | gamma_sweep | n_sweep | "
                      "vanishing_smooth | non_smooth_noise");
  sim_cmd->add_option("--n", sim_n, "Sample size");
  sim_cmd->add_option("--p", sim_p, "Number of features");
  sim_cmd->add_option("--reps", sim_reps, "Repetitions");
  sim_cmd->add_option("--seed", sim_seed, "Base seed");
  sim_cmd->add_option("--noise", sim_noise, "Noise spec");
  sim_cmd->add_option("--loss", sim_loss, "huber | pseudo_huber");
  sim_cmd->add_option("--lambda", sim_lambda, "Single loss scale (instead of a grid)");
  sim_cmd->add_option("--lambda-min", sim_lmin, "Grid start");
  sim_cmd->add_option("--lambda-max", sim_lmax, "Grid end");
  sim_cmd->add_option("--lambda-points", sim_points, "Grid size");
  sim_cmd->add_option("--threads", threads, "Worker threads (0 = all cores)");
  sim_cmd->add_option("--out", out_path, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    if (*fit_cmd) {
      const mrisk::Dataset data = mrisk::read_dataset_csv(data_path);
      const mrisk::ScaledLoss loss(mrisk::BaseLoss::from_name(loss_name), lambda);
      const mrisk::FitResult f = mrisk::fit(data, loss, fopts);
      json out{{"n", data.n()},
               {"p", data.p()},
               {"loss", loss_name},
               {"lambda", lambda},
               {"converged", f.converged},
               {"iterations", f.iterations},
               {"kkt_residual", f.kkt_residual},
               {"objective", f.objective},
               {"beta_norm", f.beta_hat.norm()}};
      json head = json::array();
      for (Eigen::Index j = 0; j < std::min<Eigen::Index>(f.beta_hat.size(), 10); ++j) head.push_back(f.beta_hat[j]);
      out["beta_head"] = head;
      if (f.converged) {
        const mrisk::RiskEstimate est = mrisk::estimate_risk(f, data, loss, fopts);
        out["r_hat"] = number(est.r_hat);
        out["trace_v"] = est.trace_v;
        out["degenerate"] = est.degenerate;
      }
      if (!out_path.empty()) {
        std::ofstream bout(out_path);
        bout.precision(17);
        for (Eigen::Index j = 0; j < f.beta_hat.size(); ++j) bout << f.beta_hat[j] << '\n';
      }
      std::cout << out.dump(2) << '\n';
      return f.converged ? 0 : kNumericalError;
    }

    if (*risk_cmd) {
      mrisk::Dataset data = mrisk::read_dataset_csv(data_path);
      if (!beta_path.empty()) data.beta_star = read_vector(beta_path);
      const mrisk::ScaledLoss loss(mrisk::BaseLoss::from_name(loss_name), lambda);
      const mrisk::FitResult f = mrisk::fit(data, loss, fopts);
      if (!f.converged) throw mrisk::NumericalError("fit did not converge");
      mrisk::RiskEstimate est = mrisk::estimate_risk(f, data, loss, fopts);
      if (trace_mode == "fd") {
        const int k = probes > 0 ? probes : static_cast<int>(data.n());
        est.trace_v = mrisk::trace_jacobian_fd_oracle(data, loss, fopts, step, k, seed);
        est.trace_method = k == data.n() ? mrisk::TraceMethod::FiniteDifference : mrisk::TraceMethod::Hutchinson;
        est.degenerate = est.trace_v <= mrisk::trace_floor(data.n());
        est.r_hat = est.degenerate ? std::numeric_limits<double>::infinity()
                                   : static_cast<double>(data.p()) * est.psi_sq_norm / (est.trace_v * est.trace_v);
      }
      json out{{"r_hat", number(est.r_hat)},
               {"psi_sq_norm", est.psi_sq_norm},
               {"trace_v", est.trace_v},
               {"trace_method", std::string(mrisk::to_string(est.trace_method))},
               {"degenerate", est.degenerate},
               {"kkt_residual", f.kkt_residual}};
      if (data.beta_star) out["R"] = mrisk::oracle_risk(f, data);
      std::cout << out.dump(2) << '\n';
      return 0;
    }

    if (*tune_cmd) {
      const mrisk::Dataset data = mrisk::read_dataset_csv(data_path);
      const auto grid = mrisk::make_grid(grid_args.lambda_min, grid_args.lambda_max, grid_args.points);
      const auto report = mrisk::tune(data, mrisk::BaseLoss::from_name(loss_name), grid, {fopts});
      if (out_path.empty()) {
        write_tuning_csv(std::cout, report);
      } else {
        std::ofstream os(out_path);
        if (!os) throw mrisk::InvalidParameter("cannot write '" + out_path + "'");
        write_tuning_csv(os, report);
      }
      std::cout.precision(17);
      std::cout << "selected_lambda " << report.selected_lambda << '\n';
      return 0;
    }

    if (*system_cmd) {
      const mrisk::ScaledLoss loss(mrisk::BaseLoss::from_name(loss_name), lambda);
      const auto noise = mrisk::NoiseModel::parse(noise_spec);
      mrisk::SystemOptions sopts;
      sopts.hermite_order = hermite;
      const auto s = mrisk::solve_system(loss, noise, gamma, std::nullopt, sopts);
      const auto [r1, r2] = mrisk::system_residuals(s.alpha, s.kappa, loss, noise, gamma, sopts);
      json out{{"alpha", s.alpha},           {"kappa", s.kappa},         {"alpha_sq", s.alpha_sq()},
               {"residual", s.residual_norm}, {"r1", r1},                 {"r2", r2},
               {"iterations", s.iterations},  {"hermite_order", hermite}, {"w_points", s.quadrature.w_points},
               {"noise", noise.spec()},       {"gamma", gamma},           {"lambda", lambda}};
      std::cout << out.dump(2) << '\n';
      return 0;
    }

    if (*curve_cmd) {
      const auto grid = mrisk::make_grid(grid_args.lambda_min, grid_args.lambda_max, grid_args.points);
      const auto curve =
          mrisk::alpha_curve(mrisk::BaseLoss::from_name(loss_name), mrisk::NoiseModel::parse(noise_spec), gamma, grid);
      std::ofstream file;
      if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw mrisk::InvalidParameter("cannot write '" + out_path + "'");
      }
      std::ostream& os = out_path.empty() ? std::cout : file;
      os.precision(17);
      os << "lambda,alpha_sq,kappa,residual\n";
      bool all_ok = true;
      for (const auto& pt : curve) {
        os << pt.lambda << ',' << pt.alpha_sq << ',' << pt.kappa << ',' << pt.residual << '\n';
        all_ok = all_ok && pt.ok;
      }
      return all_ok ? 0 : kNumericalError;
    }

    if (*gen_cmd) {
      const auto d = mrisk::generate_dataset(gen_n, gen_p, mrisk::DesignSpec::parse(design),
                                             mrisk::BetaStarSpec::parse(beta_spec), mrisk::NoiseModel::parse(noise_spec),
                                             gen_seed);
      mrisk::write_dataset_csv(out_path, d);
      if (!beta_path.empty()) {
        std::ofstream bout(beta_path);
        bout.precision(17);
        for (double v : *d.beta_star) bout << v << '\n';
      }
      return 0;
    }

    if (*sim_cmd) {
      mrisk::ExperimentConfig cfg;
      if (!config_path.empty()) cfg = mrisk::load_config(config_path);
      if (!experiment.empty()) cfg.experiment = mrisk::parse_experiment(experiment);
      if (sim_n) cfg.n = *sim_n;
      if (sim_p) cfg.p = *sim_p;
      if (sim_reps) cfg.repetitions = *sim_reps;
      if (sim_seed) cfg.seed = *sim_seed;
      if (sim_noise) cfg.noise = *sim_noise;
      if (sim_loss) cfg.loss = *sim_loss;
      if (sim_lambda) cfg.lambda = *sim_lambda;
      if (sim_lmin) cfg.lambda_min = *sim_lmin;
      if (sim_lmax) cfg.lambda_max = *sim_lmax;
      if (sim_points) cfg.lambda_points = *sim_points;
      if (threads) cfg.threads = threads;
      if (!out_path.empty()) cfg.output_path = out_path;
      if (cfg.output_path.empty()) throw mrisk::InvalidParameter("simulate: no output path (--out or output_path)");
      mrisk::run_experiment(cfg, &std::cout);
      std::cout << "wrote " << cfg.output_path << '\n';
      return 0;
    }
  } catch (const mrisk::InvalidParameter& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const mrisk::UnsupportedOperation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericalError;
  }
  return 0;
}
