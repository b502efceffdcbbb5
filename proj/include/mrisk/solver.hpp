#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "mrisk/loss.hpp"

namespace mrisk {

/// Linear-model data. Rows of X are observations.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::optional<Eigen::VectorXd> beta_star;
  std::optional<Eigen::MatrixXd> sigma;  // identity when absent

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }

  /// Shape checks only: n > p >= 1, matching sizes, finite entries.
  /// Throws StructuralError.
  void validate() const;
};

struct FitOptions {
  double kkt_tol = 1e-8;  // on |X^T psi - n mu beta|_2 / n
  int max_iter = 500;
  double damping_floor = 1e-10;
  bool check_rank = true;
  bool record_trace = false;  // fill FitResult::objective_trace

  void validate() const;
};

struct FitResult {
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd residuals;  // y - X beta_hat
  Eigen::VectorXd psi_vals;   // psi_lambda(residuals)
  double kkt_residual = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double ridge_mu = 0.0;
  std::vector<double> objective_trace;  // one entry per accepted iterate
};

/// Unregularized M-estimator argmin_beta sum_i rho_lambda(y_i - x_i^T beta).
///
/// Damped Newton with Levenberg regularization and Armijo backtracking,
/// started from `init` (zero when absent). Stops when
/// |X^T psi|_2 / n <= opts.kkt_tol. A rank-deficient X throws StructuralError;
/// running out of iterations returns the last iterate with converged = false.
FitResult fit(const Dataset& data, const ScaledLoss& loss, const FitOptions& opts = {},
              const Eigen::VectorXd* init = nullptr);

/// Ridge-smoothed variant: argmin (1/n) sum rho_lambda(y_i - x_i^T beta) + mu/2 |beta|^2.
/// Converged fits satisfy |X^T psi - n mu beta|_2 / n <= opts.kkt_tol.
FitResult fit_ridge(const Dataset& data, const ScaledLoss& loss, double mu,
                    const FitOptions& opts = {}, const Eigen::VectorXd* init = nullptr);

/// True when X^T X is numerically nonsingular.
bool has_full_column_rank(const Eigen::MatrixXd& X);

}  // namespace mrisk
