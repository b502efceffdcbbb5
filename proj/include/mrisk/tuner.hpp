#pragma once

#include <vector>

#include "mrisk/grid.hpp"
#include "mrisk/loss.hpp"
#include "mrisk/risk.hpp"
#include "mrisk/solver.hpp"

namespace mrisk {

struct TuningRow {
  double lambda = 0.0;
  double r_hat = 0.0;
  double trace_v = 0.0;
  double psi_sq_norm = 0.0;
  double kkt_residual = 0.0;
  bool degenerate = false;
  int iterations = 0;
  Eigen::VectorXd beta_hat;  // kept so callers can audit the selected fit
};

struct TuningReport {
  std::vector<TuningRow> rows;
  double selected_lambda = 0.0;
  std::size_t selected_index = 0;
};

enum class TuneMode {
  WarmStart,  // ascending lambda, each fit started from the previous solution
  Parallel,   // independent cold-started rows on worker threads
};

struct TuneOptions {
  FitOptions fit;
  TuneMode mode = TuneMode::WarmStart;
  unsigned threads = 0;  // Parallel mode; 0 = hardware concurrency
};

/// Fits beta_hat(lambda) and R_hat(lambda) at every grid point and selects the
/// smallest non-degenerate R_hat, ties going to the smaller index. Rows whose
/// fit fails are marked degenerate. Throws NumericalError("tuning failed")
/// when no row is usable.
TuningReport tune(const Dataset& data, const BaseLoss& base, const LambdaGrid& grid,
                  const TuneOptions& opts = {});

}  // namespace mrisk
