#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "mrisk/errors.hpp"
#include "mrisk/simlab.hpp"

namespace mrisk {

std::string_view to_string(Experiment e) {
  switch (e) {
    case Experiment::RiskConsistency:
      return "risk_consistency";
    case Experiment::AdaptiveTuning:
      return "adaptive_tuning";
    case Experiment::Universality:
      return "universality";
    case Experiment::GammaSweep:
      return "gamma_sweep";
    case Experiment::NSweep:
      return "n_sweep";
    case Experiment::VanishingSmooth:
      return "vanishing_smooth";
    case Experiment::NonSmoothNoise:
      return "non_smooth_noise";
  }
  return "?";
}

Experiment parse_experiment(std::string_view text) {
  for (auto e : {Experiment::RiskConsistency, Experiment::AdaptiveTuning, Experiment::Universality,
                 Experiment::GammaSweep, Experiment::NSweep, Experiment::VanishingSmooth,
                 Experiment::NonSmoothNoise}) {
    if (text == to_string(e)) return e;
  }
  throw InvalidParameter("unknown experiment '" + std::string(text) + "'");
}

void ExperimentConfig::validate() const {
  if (p < 1 || n <= p) throw InvalidParameter("config: need n > p >= 1");
  if (repetitions < 1) throw InvalidParameter("config: repetitions must be >= 1");
  if (lambda && !(*lambda > 0.0)) throw InvalidParameter("config: lambda must be positive");
  if (!lambda && (!(lambda_min > 0.0) || !(lambda_max > lambda_min) || lambda_points < 2))
    throw InvalidParameter("config: need 0 < lambda_min < lambda_max and lambda_points >= 2");
  fit.validate();
  NoiseModel::parse(noise, QuadratureSettings{.w_points = 1});
  switch (experiment) {
    case Experiment::AdaptiveTuning:
      if (sigmas.empty()) throw InvalidParameter("config: sigmas is empty");
      for (double s : sigmas)
        if (!(s > 0.0)) throw InvalidParameter("config: sigmas must be positive");
      break;
    case Experiment::GammaSweep:
      if (gammas.empty()) throw InvalidParameter("config: gammas is empty");
      for (double g : gammas)
        if (!(g > 0.0 && g < 1.0)) throw InvalidParameter("config: gammas must lie in (0, 1)");
      break;
    case Experiment::NSweep:
      if (ns.empty()) throw InvalidParameter("config: ns is empty");
      if (!(sweep_gamma > 0.0 && sweep_gamma < 1.0)) throw InvalidParameter("config: sweep_gamma must lie in (0, 1)");
      break;
    case Experiment::Universality:
      if (designs.empty()) throw InvalidParameter("config: designs is empty");
      for (const auto& d : designs) DesignSpec::parse(d);
      break;
    case Experiment::VanishingSmooth:
      if (!(fixed_sigma > 0.0)) throw InvalidParameter("config: fixed_sigma must be positive");
      break;
    case Experiment::NonSmoothNoise:
      if (NoiseModel::parse(noise, QuadratureSettings{.w_points = 1}).kind() != NoiseKind::DiscreteCeilT)
        throw InvalidParameter("config: non_smooth_noise needs a ceil-t noise");
      break;
    case Experiment::RiskConsistency:
      break;
  }
}

ExperimentConfig parse_config(std::string_view toml_text) {
  toml::table tbl;
  try {
    tbl = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << "config: " << e.description() << " (line " << e.source().begin.line << ")";
    throw InvalidParameter(os.str());
  }

  static const std::set<std::string> known{
      "experiment", "n",        "p",           "noise",      "design",      "loss",
      "lambda",     "lambda_min", "lambda_max", "lambda_points", "repetitions", "seed",
      "output_path", "beta_star", "with_alpha", "threads",    "sigmas",      "gammas",
      "ns",         "sweep_gamma", "designs",   "fixed_sigma", "fit"};
  for (const auto& [key, value] : tbl) {
    if (!known.count(std::string(key.str())))
      throw InvalidParameter("config: unknown key '" + std::string(key.str()) + "'");
  }

  ExperimentConfig c;
  auto number = [&](std::string_view key, double fallback) {
    const auto node = tbl[key];
    if (!node) return fallback;
    if (auto v = node.value<double>()) return *v;
    throw InvalidParameter("config: '" + std::string(key) + "' must be a number");
  };
  auto integer = [&](std::string_view key, std::int64_t fallback) {
    const auto node = tbl[key];
    if (!node) return fallback;
    if (auto v = node.value<std::int64_t>()) return *v;
    throw InvalidParameter("config: '" + std::string(key) + "' must be an integer");
  };
  auto text = [&](std::string_view key, std::string fallback) {
    const auto node = tbl[key];
    if (!node) return fallback;
    if (auto v = node.value<std::string>()) return *v;
    throw InvalidParameter("config: '" + std::string(key) + "' must be a string");
  };
  auto array = [&]<typename T>(std::string_view key, std::vector<T>& out) {
    const auto node = tbl[key];
    if (!node) return;
    const auto* arr = node.as_array();
    if (!arr) throw InvalidParameter("config: '" + std::string(key) + "' must be an array");
    out.clear();
    for (const auto& el : *arr) {
      auto v = el.template value<T>();
      if (!v) throw InvalidParameter("config: '" + std::string(key) + "' has an element of the wrong type");
      out.push_back(*v);
    }
  };

  c.experiment = parse_experiment(text("experiment", std::string(to_string(c.experiment))));
  c.n = static_cast<int>(integer("n", c.n));
  c.p = static_cast<int>(integer("p", c.p));
  c.noise = text("noise", c.noise);
  c.design = DesignSpec::parse(text("design", c.design.name()));
  c.loss = text("loss", c.loss);
  if (tbl["lambda"]) c.lambda = number("lambda", 1.0);
  c.lambda_min = number("lambda_min", c.lambda_min);
  c.lambda_max = number("lambda_max", c.lambda_max);
  c.lambda_points = static_cast<int>(integer("lambda_points", c.lambda_points));
  c.repetitions = static_cast<int>(integer("repetitions", c.repetitions));
  c.seed = static_cast<std::uint64_t>(integer("seed", static_cast<std::int64_t>(c.seed)));
  c.output_path = text("output_path", c.output_path);
  c.beta_star = text("beta_star", c.beta_star);
  if (tbl["with_alpha"]) {
    auto v = tbl["with_alpha"].value<bool>();
    if (!v) throw InvalidParameter("config: 'with_alpha' must be a boolean");
    c.with_alpha = *v;
  }
  c.threads = static_cast<unsigned>(integer("threads", c.threads));
  array.template operator()<double>("sigmas", c.sigmas);
  array.template operator()<double>("gammas", c.gammas);
  std::vector<std::int64_t> ns;
  array.template operator()<std::int64_t>("ns", ns);
  if (tbl["ns"]) c.ns.assign(ns.begin(), ns.end());
  c.sweep_gamma = number("sweep_gamma", c.sweep_gamma);
  array.template operator()<std::string>("designs", c.designs);
  c.fixed_sigma = number("fixed_sigma", c.fixed_sigma);

  if (const auto* fit = tbl["fit"].as_table()) {
    for (const auto& [key, value] : *fit) {
      const std::string k(key.str());
      if (k == "kkt_tol") {
        c.fit.kkt_tol = value.value<double>().value_or(c.fit.kkt_tol);
      } else if (k == "max_iter") {
        c.fit.max_iter = static_cast<int>(value.value<std::int64_t>().value_or(c.fit.max_iter));
      } else if (k == "damping_floor") {
        c.fit.damping_floor = value.value<double>().value_or(c.fit.damping_floor);
      } else {
        throw InvalidParameter("config: unknown key 'fit." + k + "'");
      }
    }
  }
  BaseLoss::from_name(c.loss);
  BetaStarSpec::parse(c.beta_star);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace mrisk
