#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include "mrisk/asymptotics.hpp"
#include "mrisk/errors.hpp"
#include "mrisk/risk.hpp"
#include "mrisk/simlab.hpp"
#include "mrisk/tuner.hpp"

namespace mrisk {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string label(std::string_view key, double value) {
  std::ostringstream os;
  os << key << '=' << value;
  return os.str();
}

NoiseModel scaled_noise(const NoiseModel& base, double sigma) {
  switch (base.kind()) {
    case NoiseKind::StudentT:
      return NoiseModel::scaled_student_t(sigma, base.df());
    case NoiseKind::ScaledStudentT:
      return NoiseModel::scaled_student_t(sigma * base.scale(), base.df());
    case NoiseKind::Gaussian:
      return NoiseModel::gaussian(sigma * base.scale());
    case NoiseKind::DiscreteCeilT:
      return NoiseModel::discrete_ceil_t(sigma * base.scale(), base.df());
    default:
      throw InvalidParameter("adaptive_tuning: noise '" + base.spec() + "' cannot be rescaled");
  }
}

struct Variant {
  std::string label;
  int n;
  int p;
  DesignSpec design;
  NoiseModel noise;
  std::vector<std::optional<double>> alpha_sq;  // per grid point
};

std::vector<Variant> build_variants(const ExperimentConfig& c) {
  const NoiseModel base = NoiseModel::parse(c.noise);
  std::vector<Variant> out;
  switch (c.experiment) {
    case Experiment::RiskConsistency:
    case Experiment::NonSmoothNoise:
      out.push_back({"noise=" + base.spec(), c.n, c.p, c.design, base, {}});
      break;
    case Experiment::AdaptiveTuning:
      for (double s : c.sigmas) out.push_back({label("sigma", s), c.n, c.p, c.design, scaled_noise(base, s), {}});
      break;
    case Experiment::Universality:
      for (const auto& d : c.designs) {
        const DesignSpec spec = DesignSpec::parse(d);
        out.push_back({"design=" + spec.name(), c.n, c.p, spec, base, {}});
      }
      break;
    case Experiment::GammaSweep:
      for (double g : c.gammas) {
        const int p = std::max(1, static_cast<int>(std::lround(g * c.n)));
        out.push_back({label("gamma", g), c.n, p, c.design, base, {}});
      }
      break;
    case Experiment::NSweep:
      for (int n : c.ns) {
        const int p = std::max(1, static_cast<int>(std::lround(c.sweep_gamma * n)));
        out.push_back({label("n", n), n, p, c.design, base, {}});
      }
      break;
    case Experiment::VanishingSmooth: {
      // eps = delta + sigma z with delta from `noise` and z ~ N(0, 1)
      const double vanishing = std::pow(static_cast<double>(c.n), -0.125);
      out.push_back({"smooth=vanishing", c.n, c.p, c.design,
                     NoiseModel::convolution({base, NoiseModel::gaussian(vanishing)}), {}});
      out.push_back({"smooth=fixed", c.n, c.p, c.design,
                     NoiseModel::convolution({base, NoiseModel::gaussian(c.fixed_sigma)}), {}});
      break;
    }
  }
  for (const auto& v : out) {
    if (v.p < 1 || v.n <= v.p)
      throw InvalidParameter("config: variant " + v.label + " violates n > p >= 1");
  }
  return out;
}

LambdaGrid grid_of(const ExperimentConfig& c) {
  if (c.lambda) return LambdaGrid::from_points({*c.lambda});
  return LambdaGrid::geometric(c.lambda_min, c.lambda_max, c.lambda_points);
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < count; i = next++) fn(i);
  };
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
}

double risk_of(const Eigen::VectorXd& beta_hat, const Dataset& data) {
  return (beta_hat - *data.beta_star).squaredNorm();
}

std::vector<ExperimentRecord> run_unit(const ExperimentConfig& c, const Variant& v, const LambdaGrid& grid,
                                       int rep, std::uint64_t seed) {
  const BaseLoss base = BaseLoss::from_name(c.loss);
  std::vector<ExperimentRecord> rows(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    auto& r = rows[k];
    r.seed = seed;
    r.rep_index = rep;
    r.n = v.n;
    r.p = v.p;
    r.gamma = static_cast<double>(v.p) / v.n;
    r.lambda = grid[k];
    r.variant = v.label;
    if (!v.alpha_sq.empty()) r.alpha_sq = v.alpha_sq[k];
  }

  try {
    const Dataset data = generate_dataset(v.n, v.p, v.design, BetaStarSpec::parse(c.beta_star), v.noise, seed);
    if (!has_full_column_rank(data.X)) throw StructuralError("generated design is rank deficient");
    FitOptions fopts = c.fit;
    fopts.check_rank = false;

    if (c.experiment == Experiment::AdaptiveTuning) {
      const auto t0 = Clock::now();
      const TuningReport report = tune(data, base, grid, TuneOptions{fopts, TuneMode::WarmStart, 1});
      const double per_row = elapsed_ms(t0) / static_cast<double>(grid.size());
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const auto& tr = report.rows[k];
        auto& r = rows[k];
        r.failed = tr.beta_hat.size() != data.p();
        if (r.failed) continue;
        r.R = risk_of(tr.beta_hat, data);
        r.R_hat = tr.r_hat;
        r.trace_v = tr.trace_v;
        r.selected = k == report.selected_index;
        r.wall_time_ms = per_row;
      }
      return rows;
    }

    Eigen::VectorXd warm;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      auto& r = rows[k];
      const auto t0 = Clock::now();
      const ScaledLoss loss(base, grid[k]);
      const FitResult f = fit(data, loss, fopts, warm.size() ? &warm : nullptr);
      if (!f.converged) {
        r.failed = true;
        r.wall_time_ms = elapsed_ms(t0);
        continue;
      }
      const RiskEstimate est = estimate_risk(f, data, loss, fopts);
      r.R = risk_of(f.beta_hat, data);
      r.R_hat = est.r_hat;
      r.trace_v = est.trace_v;
      r.wall_time_ms = elapsed_ms(t0);
      warm = f.beta_hat;
    }
  } catch (const std::exception& e) {
    std::cerr << "warning: " << to_string(c.experiment) << " " << v.label << " rep " << rep
              << " failed: " << e.what() << '\n';
    for (auto& r : rows) r.failed = true;
  }
  return rows;
}

void print_summary(std::ostream& os, const ExperimentConfig& c, const std::vector<ExperimentRecord>& records) {
  os << "# " << to_string(c.experiment) << ", " << c.repetitions << " repetitions\n";
  if (c.experiment == Experiment::AdaptiveTuning) {
    os << std::left << std::setw(16) << "variant" << std::right << std::setw(6) << "count" << std::setw(14)
       << "R(sel)" << std::setw(14) << "min R" << std::setw(14) << "excess" << std::setw(14) << "min alpha^2"
       << '\n';
    for (const auto& row : summarize_tuning(records)) {
      os << std::left << std::setw(16) << row.variant << std::right << std::setw(6) << row.count
         << std::setw(14) << row.median_R_selected << std::setw(14) << row.median_R_min << std::setw(14)
         << row.median_excess << std::setw(14) << row.min_alpha_sq << '\n';
    }
    return;
  }
  os << std::left << std::setw(22) << "variant" << std::right << std::setw(10) << "lambda" << std::setw(6)
     << "count" << std::setw(12) << "med R" << std::setw(12) << "med R_hat" << std::setw(12) << "med relerr"
     << std::setw(12) << "IQR" << '\n';
  for (const auto& row : summarize(records)) {
    os << std::left << std::setw(22) << row.variant << std::right << std::setw(10) << row.lambda
       << std::setw(6) << row.count << std::setw(12) << row.median_R << std::setw(12) << row.median_R_hat
       << std::setw(12) << row.median_rel_err << std::setw(12) << row.iqr_rel_err << '\n';
  }
}

}  // namespace

std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  const LambdaGrid grid = grid_of(config);
  std::vector<Variant> variants = build_variants(config);

  if (config.with_alpha) {
    const BaseLoss base = BaseLoss::from_name(config.loss);
    parallel_for(variants.size(), config.threads, [&](std::size_t i) {
      auto& v = variants[i];
      const double gamma = static_cast<double>(v.p) / v.n;
      for (const auto& pt : alpha_curve(base, v.noise, gamma, grid)) {
        v.alpha_sq.push_back(pt.ok ? std::optional<double>(pt.alpha_sq) : std::nullopt);
      }
    });
  }

  const std::size_t reps = static_cast<std::size_t>(config.repetitions);
  std::vector<std::vector<ExperimentRecord>> results(variants.size() * reps);
  parallel_for(results.size(), config.threads, [&](std::size_t u) {
    const std::size_t vi = u / reps;
    const int rep = static_cast<int>(u % reps);
    const std::uint64_t seed = derive_seed(config.seed, vi + 1, static_cast<std::uint64_t>(rep));
    results[u] = run_unit(config, variants[vi], grid, rep, seed);
  });

  std::vector<ExperimentRecord> records;
  for (auto& chunk : results)
    for (auto& r : chunk) records.push_back(std::move(r));

  if (!config.output_path.empty()) write_records_csv_atomic(config.output_path, records);
  if (log) print_summary(*log, config, records);
  return records;
}

}  // namespace mrisk
