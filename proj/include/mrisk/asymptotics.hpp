#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mrisk/grid.hpp"
#include "mrisk/loss.hpp"
#include "mrisk/noise.hpp"

namespace mrisk {

/// Nodes and weights of the n-point Gauss-Hermite rule for E[f(Z)], Z ~ N(0, 1).
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_hermite(int order);

struct SystemOptions {
  int hermite_order = 81;
  double tol = 1e-8;       // max-norm of (r1, r2)
  int max_iter = 200;
  double fd_step = 1e-6;   // relative step for the Jacobian
};

struct QuadratureInfo {
  int hermite_order = 0;
  Eigen::Index w_points = 0;
  std::uint64_t seed = 0;
};

struct SystemSolution {
  double alpha = 0.0;
  double kappa = 0.0;
  double residual_norm = 0.0;  // max(|r1|, |r2|)
  int iterations = 0;
  QuadratureInfo quadrature;

  double alpha_sq() const { return alpha * alpha; }
};

/// Residuals of the fixed-point system in (alpha, kappa) with
/// x = alpha Z + W and d(x) = x - prox[kappa rho_lambda](x):
///   r1 = E[d(x)^2] - alpha^2 gamma
///   r2 = E[d(x) Z] - alpha gamma
/// by tensor quadrature (Gauss-Hermite in Z) x (noise nodes in W).
std::pair<double, double> system_residuals(double alpha, double kappa, const ScaledLoss& loss,
                                           const NoiseModel& noise, double gamma,
                                           const SystemOptions& opts = {});

/// Damped Newton on (log alpha, log kappa) with a forward-difference
/// Jacobian. The default start is alpha = noise.robust_scale(), kappa = 1.
/// If that start fails, 8 multiplicative perturbations of it are tried before
/// NoConvergence is thrown.
SystemSolution solve_system(const ScaledLoss& loss, const NoiseModel& noise, double gamma,
                            std::optional<std::pair<double, double>> init = std::nullopt,
                            const SystemOptions& opts = {});

struct CurvePoint {
  double lambda = 0.0;
  double alpha_sq = 0.0;
  double kappa = 0.0;
  double residual = 0.0;
  bool ok = false;
};

/// alpha^2(lambda) over the grid in ascending order, each solve warm-started
/// from the last successful one. Failures are recorded (ok = false) and the
/// sweep continues.
std::vector<CurvePoint> alpha_curve(const BaseLoss& base, const NoiseModel& noise, double gamma,
                                    const LambdaGrid& grid, const SystemOptions& opts = {});

}  // namespace mrisk
