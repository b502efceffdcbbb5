#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "mrisk/noise.hpp"
#include "mrisk/solver.hpp"

namespace mrisk {

/// splitmix64 mix of (seed, a, b): independent stream seeds for
/// repetitions, variants and the design/noise/signal draws within one dataset.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

enum class DesignKind { Gaussian, Rademacher, Uniform, StudentT };

/// Distribution of the i.i.d. design entries, normalized to variance 1.
struct DesignSpec {
  DesignKind kind = DesignKind::Gaussian;
  double df = 4.0;  // StudentT only; needs df > 2

  /// "gaussian", "rademacher", "uniform", "t:DF".
  static DesignSpec parse(std::string_view text);
  std::string name() const;
};

enum class BetaStarKind { Zero, Random, Given };

struct BetaStarSpec {
  BetaStarKind kind = BetaStarKind::Zero;
  double norm = 1.0;        // Random: uniform direction with this length
  Eigen::VectorXd values;   // Given

  /// "zero" or "random[:NORM]".
  static BetaStarSpec parse(std::string_view text);
};

/// y = X beta_star + eps with Sigma = I. Bitwise reproducible from `seed`.
Dataset generate_dataset(int n, int p, const DesignSpec& design, const BetaStarSpec& beta_star,
                         const NoiseModel& noise, std::uint64_t seed);

/// Headerless CSV: y in column 0, features after.
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const Dataset& data);

enum class Experiment {
  RiskConsistency,
  AdaptiveTuning,
  Universality,
  GammaSweep,
  NSweep,
  VanishingSmooth,
  NonSmoothNoise,
};

std::string_view to_string(Experiment e);
Experiment parse_experiment(std::string_view text);

struct ExperimentConfig {
  Experiment experiment = Experiment::RiskConsistency;
  int n = 2000;
  int p = 600;
  std::string noise = "t:2";
  DesignSpec design;
  std::string loss = "huber";
  std::optional<double> lambda;  // single scale; otherwise the grid below
  double lambda_min = 1.0;
  double lambda_max = 10.0;
  int lambda_points = 11;
  int repetitions = 20;
  std::uint64_t seed = 1;
  std::string output_path;
  std::string beta_star = "zero";
  bool with_alpha = false;  // attach alpha^2(lambda) from the fixed-point system
  unsigned threads = 0;     // 0 = hardware concurrency
  FitOptions fit;

  // sweep axes
  std::vector<double> sigmas{1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 2.75, 3.0};  // AdaptiveTuning
  std::vector<double> gammas{0.25, 0.5, 0.8, 0.95};                            // GammaSweep
  std::vector<int> ns{500, 2000};                                              // NSweep
  double sweep_gamma = 0.25;                                                   // NSweep p / n
  std::vector<std::string> designs{"gaussian", "rademacher", "uniform", "t:4"}; // Universality
  double fixed_sigma = 1.0;  // VanishingSmooth reference amplitude

  void validate() const;
};

/// TOML file whose keys mirror ExperimentConfig (see configs/ for examples).
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(std::string_view toml_text);

struct ExperimentRecord {
  std::uint64_t seed = 0;
  int rep_index = 0;
  int n = 0;
  int p = 0;
  double gamma = 0.0;
  double lambda = 0.0;
  double R = 0.0;
  double R_hat = 0.0;
  std::optional<double> alpha_sq;
  double trace_v = 0.0;
  double wall_time_ms = 0.0;
  std::string variant;  // sweep label, e.g. "sigma=2" or "design=rademacher"
  bool selected = false;  // AdaptiveTuning: the row picked by minimal R_hat
  bool failed = false;    // written as nan values
};

/// Column order of the record CSV.
const std::vector<std::string>& record_columns();
void write_records_csv(std::ostream& os, const std::vector<ExperimentRecord>& records,
                       bool include_wall_time = true);
/// Writes to `path` through a temporary file and rename.
void write_records_csv_atomic(const std::string& path, const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> read_records_csv(const std::string& path);

struct SummaryRow {
  std::string variant;
  double lambda = 0.0;
  int count = 0;
  double median_rel_err = 0.0;  // |R_hat / R - 1|
  double iqr_rel_err = 0.0;
  double median_R = 0.0;
  double median_R_hat = 0.0;
};

/// Per (variant, lambda) statistics over repetitions; failed rows are skipped.
std::vector<SummaryRow> summarize(const std::vector<ExperimentRecord>& records);

struct TuningSummaryRow {
  std::string variant;
  int count = 0;
  double median_excess = 0.0;  // R(lambda_hat) / min_grid R - 1
  double median_R_selected = 0.0;
  double median_R_min = 0.0;
  double min_alpha_sq = 0.0;   // nan unless alpha^2 was requested
};

std::vector<TuningSummaryRow> summarize_tuning(const std::vector<ExperimentRecord>& records);

/// Runs every (variant, repetition) unit, concurrently when threads > 1, and
/// returns the records in a scheduling-independent order. Writes the CSV when
/// output_path is set and prints a summary table to `log` when non-null.
std::vector<ExperimentRecord> run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

}  // namespace mrisk
