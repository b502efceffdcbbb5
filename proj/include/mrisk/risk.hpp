#pragma once

#include <cstdint>
#include <functional>
#include <string_view>

#include <Eigen/Core>

#include "mrisk/loss.hpp"
#include "mrisk/solver.hpp"

namespace mrisk {

enum class TraceMethod { HuberClosedForm, SmoothClosedForm, FiniteDifference, Hutchinson };

std::string_view to_string(TraceMethod m);

struct TraceResult {
  double trace_v = 0.0;
  TraceMethod method = TraceMethod::HuberClosedForm;
  bool fallback = false;  // closed form was singular; value came from finite differences
};

struct RiskEstimate {
  double r_hat = 0.0;  // +inf when degenerate
  double psi_sq_norm = 0.0;
  double trace_v = 0.0;
  TraceMethod trace_method = TraceMethod::HuberClosedForm;
  bool degenerate = false;
  bool fallback = false;
};

/// tr[V] for V = d psi(y - X beta_hat) / dy.
///
/// Huber with mu = 0: #{i : |r_i| <= lambda} - p. Otherwise the closed form
/// sum_i [d_i - d_i^2 x_i^T (X^T D X + n mu I)^{-1} x_i] with d = psi'(r). When
/// that inner matrix is singular the value is computed by coordinate finite
/// differences and `fallback` is set.
TraceResult trace_jacobian(const FitResult& fit, const Dataset& data, const ScaledLoss& loss,
                           const FitOptions& opts = {});

/// Divergence of `map` at `at` by central differences.
///
/// probes == n uses the coordinate basis (exact trace up to the step);
/// otherwise Rademacher probes z_k and the average of
/// z_k^T [map(at + step z_k) - map(at - step z_k)] / (2 step).
double hutchinson_trace(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& map,
                        const Eigen::VectorXd& at, double step, int probes, std::uint64_t seed);

/// Model-free oracle for tr[V]: refits beta_hat at each perturbed y (warm
/// started from the unperturbed fit) and feeds y -> psi(y - X beta_hat(y))
/// to hutchinson_trace. Throws NumericalError if any refit fails to converge.
double trace_jacobian_fd_oracle(const Dataset& data, const ScaledLoss& loss, const FitOptions& opts,
                                double step, int probes, std::uint64_t seed = 0);

/// Degeneracy threshold for tr[V]: max(1, 1e-6 n).
double trace_floor(Eigen::Index n);

/// R_hat = p |psi|^2 / tr[V]^2. Requires a converged unregularized fit.
RiskEstimate estimate_risk(const FitResult& fit, const Dataset& data, const ScaledLoss& loss,
                           const FitOptions& opts = {});

/// |Sigma^{1/2} (beta_hat - beta_star)|^2. Throws UnsupportedOperation without beta_star.
double oracle_risk(const FitResult& fit, const Dataset& data);

}  // namespace mrisk
