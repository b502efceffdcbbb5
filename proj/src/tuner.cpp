#include "mrisk/tuner.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <thread>

#include "mrisk/errors.hpp"

namespace mrisk {

namespace {

TuningRow evaluate(const Dataset& data, const BaseLoss& base, double lambda, const FitOptions& fopts,
                   const Eigen::VectorXd* init) {
  TuningRow row;
  row.lambda = lambda;
  row.r_hat = std::numeric_limits<double>::infinity();
  row.degenerate = true;
  const ScaledLoss loss(base, lambda);
  FitResult f;
  try {
    f = fit(data, loss, fopts, init);
  } catch (const NumericalError&) {
    return row;
  }
  row.kkt_residual = f.kkt_residual;
  row.iterations = f.iterations;
  row.psi_sq_norm = f.psi_vals.squaredNorm();
  if (f.converged) {
    const RiskEstimate est = estimate_risk(f, data, loss, fopts);
    row.r_hat = est.r_hat;
    row.trace_v = est.trace_v;
    row.degenerate = est.degenerate;
  }
  row.beta_hat = std::move(f.beta_hat);
  return row;
}

}  // namespace

TuningReport tune(const Dataset& data, const BaseLoss& base, const LambdaGrid& grid,
                  const TuneOptions& opts) {
  data.validate();
  opts.fit.validate();
  if (grid.size() == 0) throw InvalidParameter("tune: empty grid");
  if (opts.fit.check_rank && !has_full_column_rank(data.X))
    throw StructuralError("tune: design matrix is rank deficient");
  FitOptions fopts = opts.fit;
  fopts.check_rank = false;

  TuningReport report;
  report.rows.resize(grid.size());
  if (opts.mode == TuneMode::WarmStart) {
    const Eigen::VectorXd* warm = nullptr;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      report.rows[i] = evaluate(data, base, grid[i], fopts, warm);
      if (report.rows[i].beta_hat.size() == data.p() && report.rows[i].kkt_residual <= fopts.kkt_tol)
        warm = &report.rows[i].beta_hat;
    }
  } else {
    unsigned workers = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(grid.size()));
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i = next++; i < grid.size(); i = next++)
        report.rows[i] = evaluate(data, base, grid[i], fopts, nullptr);
    };
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
    work();
  }

  bool found = false;
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& row = report.rows[i];
    if (row.degenerate) continue;
    if (!found || row.r_hat < report.rows[report.selected_index].r_hat) {
      report.selected_index = i;
      found = true;
    }
  }
  if (!found) throw NumericalError("tune: tuning failed, every grid point is degenerate");
  report.selected_lambda = report.rows[report.selected_index].lambda;
  return report;
}

}  // namespace mrisk
