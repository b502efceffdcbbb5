#include "mrisk/asymptotics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "mrisk/errors.hpp"

namespace mrisk {

using Eigen::Index;
using Eigen::VectorXd;

std::pair<VectorXd, VectorXd> gauss_hermite(int order) {
  if (order < 1) throw InvalidParameter("gauss_hermite: order must be >= 1");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials
  VectorXd diag = VectorXd::Zero(order);
  VectorXd sub(std::max(order - 1, 0));
  for (int k = 1; k < order; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  VectorXd nodes = eig.eigenvalues();
  VectorXd weights = eig.eigenvectors().row(0).transpose().array().square();
  weights /= weights.sum();
  return {std::move(nodes), std::move(weights)};
}

namespace {

struct Quadrature {
  VectorXd z, wz;
};

std::pair<double, double> residuals_on(const Quadrature& q, double alpha, double kappa,
                                       const ScaledLoss& loss, const NoiseModel& noise, double gamma) {
  const VectorXd& w = noise.w_nodes();
  const VectorXd& ww = noise.w_weights();
  double e_sq = 0.0;
  double e_z = 0.0;
  if (loss.kind() == LossKind::Huber) {
    // d(x) = kappa lambda clamp(x / (lambda (1 + kappa)), -1, 1)
    const double lam = loss.lambda();
    const double inv_c = 1.0 / (lam * (1.0 + kappa));
    for (Index a = 0; a < q.z.size(); ++a) {
      const double za = q.z[a];
      double s_sq = 0.0;
      double s_1 = 0.0;
      for (Index b = 0; b < w.size(); ++b) {
        const double t = std::clamp((alpha * za + w[b]) * inv_c, -1.0, 1.0);
        s_sq += ww[b] * t * t;
        s_1 += ww[b] * t;
      }
      e_sq += q.wz[a] * s_sq;
      e_z += q.wz[a] * s_1 * za;
    }
    const double scale = kappa * lam;
    return {scale * scale * e_sq - alpha * alpha * gamma, scale * e_z - alpha * gamma};
  }
  for (Index a = 0; a < q.z.size(); ++a) {
    const double za = q.z[a];
    double s_sq = 0.0;
    double s_1 = 0.0;
    for (Index b = 0; b < w.size(); ++b) {
      const double d = loss.prox_gap(kappa, alpha * za + w[b]);
      s_sq += ww[b] * d * d;
      s_1 += ww[b] * d;
    }
    e_sq += q.wz[a] * s_sq;
    e_z += q.wz[a] * s_1 * za;
  }
  return {e_sq - alpha * alpha * gamma, e_z - alpha * gamma};
}

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidParameter("gamma must lie in (0, 1)");
}

struct Attempt {
  bool ok = false;
  double alpha = 0.0, kappa = 0.0, residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

Attempt newton(const Quadrature& q, double alpha0, double kappa0, const ScaledLoss& loss,
               const NoiseModel& noise, double gamma, const SystemOptions& opts) {
  Eigen::Vector2d u(std::log(alpha0), std::log(kappa0));
  auto eval = [&](const Eigen::Vector2d& v) {
    const auto [r1, r2] = residuals_on(q, std::exp(v[0]), std::exp(v[1]), loss, noise, gamma);
    return Eigen::Vector2d(r1, r2);
  };
  Eigen::Vector2d r = eval(u);
  Attempt best;
  auto record = [&](int it) {
    const double norm = r.cwiseAbs().maxCoeff();
    if (std::isfinite(norm) && norm < best.residual) {
      best.residual = norm;
      best.alpha = std::exp(u[0]);
      best.kappa = std::exp(u[1]);
      best.iterations = it;
    }
  };
  record(0);
  constexpr double kMaxLogStep = 2.0;
  for (int it = 1; it <= opts.max_iter; ++it) {
    if (best.residual <= opts.tol) break;
    Eigen::Matrix2d jac;
    for (int j = 0; j < 2; ++j) {
      Eigen::Vector2d v = u;
      v[j] += opts.fd_step;
      jac.col(j) = (eval(v) - r) / opts.fd_step;
    }
    Eigen::Vector2d step = jac.fullPivLu().solve(-r);
    if (!step.allFinite()) break;
    const double len = step.cwiseAbs().maxCoeff();
    if (len > kMaxLogStep) step *= kMaxLogStep / len;
    const double norm0 = r.norm();
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 30; ++k, t *= 0.5) {
      const Eigen::Vector2d cand = u + t * step;
      const Eigen::Vector2d rc = eval(cand);
      if (rc.allFinite() && rc.norm() < (1.0 - 1e-4 * t) * norm0) {
        u = cand;
        r = rc;
        moved = true;
        break;
      }
    }
    if (!moved) break;
    record(it);
  }
  best.ok = best.residual <= opts.tol;
  return best;
}

}  // namespace

std::pair<double, double> system_residuals(double alpha, double kappa, const ScaledLoss& loss,
                                           const NoiseModel& noise, double gamma,
                                           const SystemOptions& opts) {
  if (!(alpha > 0.0) || !(kappa > 0.0)) throw InvalidParameter("system: alpha and kappa must be positive");
  check_gamma(gamma);
  auto [z, wz] = gauss_hermite(opts.hermite_order);
  return residuals_on(Quadrature{std::move(z), std::move(wz)}, alpha, kappa, loss, noise, gamma);
}

SystemSolution solve_system(const ScaledLoss& loss, const NoiseModel& noise, double gamma,
                            std::optional<std::pair<double, double>> init, const SystemOptions& opts) {
  check_gamma(gamma);
  if (!(opts.tol > 0.0) || opts.max_iter < 1 || !(opts.fd_step > 0.0))
    throw InvalidParameter("system: invalid solver options");
  auto [z, wz] = gauss_hermite(opts.hermite_order);
  const Quadrature q{std::move(z), std::move(wz)};

  double alpha0 = noise.robust_scale();
  double kappa0 = 1.0;
  if (init) {
    alpha0 = init->first;
    kappa0 = init->second;
    if (!(alpha0 > 0.0) || !(kappa0 > 0.0)) throw InvalidParameter("system: init must be positive");
  }

  static constexpr std::array<std::pair<double, double>, 9> kStarts{{
      {1.0, 1.0}, {2.0, 1.0}, {0.5, 1.0}, {1.0, 4.0}, {1.0, 0.25},
      {4.0, 4.0}, {0.25, 0.25}, {4.0, 0.25}, {0.25, 4.0},
  }};
  double best_residual = std::numeric_limits<double>::infinity();
  for (const auto& [fa, fk] : kStarts) {
    const Attempt a = newton(q, alpha0 * fa, kappa0 * fk, loss, noise, gamma, opts);
    best_residual = std::min(best_residual, a.residual);
    if (a.ok) {
      SystemSolution s;
      s.alpha = a.alpha;
      s.kappa = a.kappa;
      s.residual_norm = a.residual;
      s.iterations = a.iterations;
      s.quadrature = {opts.hermite_order, noise.w_nodes().size(), noise.quadrature().seed};
      return s;
    }
  }
  throw NoConvergence("system: no solution found (best max residual " + std::to_string(best_residual) + ")",
                      best_residual);
}

std::vector<CurvePoint> alpha_curve(const BaseLoss& base, const NoiseModel& noise, double gamma,
                                    const LambdaGrid& grid, const SystemOptions& opts) {
  std::vector<CurvePoint> out;
  out.reserve(grid.size());
  std::optional<std::pair<double, double>> warm;
  for (double lam : grid) {
    CurvePoint pt;
    pt.lambda = lam;
    try {
      const ScaledLoss loss(base, lam);
      SystemSolution s;
      try {
        s = solve_system(loss, noise, gamma, warm, opts);
      } catch (const NoConvergence&) {
        if (!warm) throw;
        s = solve_system(loss, noise, gamma, std::nullopt, opts);
      }
      pt.alpha_sq = s.alpha_sq();
      pt.kappa = s.kappa;
      pt.residual = s.residual_norm;
      pt.ok = true;
      warm = std::make_pair(s.alpha, s.kappa);
    } catch (const NoConvergence& e) {
      pt.residual = e.best_residual();
      pt.alpha_sq = std::numeric_limits<double>::quiet_NaN();
      pt.kappa = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(pt);
  }
  return out;
}

}  // namespace mrisk
