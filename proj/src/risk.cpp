#include "mrisk/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Cholesky>

#include "mrisk/errors.hpp"

namespace mrisk {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(TraceMethod m) {
  switch (m) {
    case TraceMethod::HuberClosedForm:
      return "huber_closed_form";
    case TraceMethod::SmoothClosedForm:
      return "smooth_closed_form";
    case TraceMethod::FiniteDifference:
      return "finite_difference";
    case TraceMethod::Hutchinson:
      return "hutchinson";
  }
  return "unknown";
}

double trace_floor(Index n) { return std::max(1.0, 1e-6 * static_cast<double>(n)); }

double hutchinson_trace(const std::function<VectorXd(const VectorXd&)>& map, const VectorXd& at,
                        double step, int probes, std::uint64_t seed) {
  if (!(step > 0.0)) throw InvalidParameter("hutchinson_trace: step must be positive");
  if (probes < 1) throw InvalidParameter("hutchinson_trace: probes must be >= 1");
  const Index n = at.size();
  const double inv = 1.0 / (2.0 * step);

  if (probes == n) {
    double total = 0.0;
    VectorXd y = at;
    for (Index j = 0; j < n; ++j) {
      y[j] = at[j] + step;
      const double up = map(y)[j];
      y[j] = at[j] - step;
      const double down = map(y)[j];
      y[j] = at[j];
      total += (up - down) * inv;
    }
    return total;
  }

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  VectorXd z(n);
  double total = 0.0;
  for (int k = 0; k < probes; ++k) {
    for (Index i = 0; i < n; ++i) z[i] = coin(rng) ? 1.0 : -1.0;
    const VectorXd diff = map(at + step * z) - map(at - step * z);
    total += z.dot(diff) * inv;
  }
  return total / probes;
}

double trace_jacobian_fd_oracle(const Dataset& data, const ScaledLoss& loss, const FitOptions& opts,
                                double step, int probes, std::uint64_t seed) {
  const FitResult base = fit(data, loss, opts);
  if (!base.converged) throw NumericalError("fd oracle: base fit did not converge");
  FitOptions inner = opts;
  inner.check_rank = false;
  Dataset perturbed{data.X, data.y, std::nullopt, std::nullopt};
  auto map = [&](const VectorXd& y) -> VectorXd {
    perturbed.y = y;
    const FitResult f = (base.ridge_mu > 0.0)
                            ? fit_ridge(perturbed, loss, base.ridge_mu, inner, &base.beta_hat)
                            : fit(perturbed, loss, inner, &base.beta_hat);
    if (!f.converged) throw NumericalError("fd oracle: perturbed refit did not converge");
    return f.psi_vals;
  };
  return hutchinson_trace(map, data.y, step, probes, seed);
}

namespace {

// sum_i d_i - d_i^2 x_i^T (X^T D X + n mu I)^{-1} x_i; nullopt if singular.
std::optional<double> smooth_trace(const MatrixXd& X, const VectorXd& d, double n_mu) {
  const Index p = X.cols();
  MatrixXd inner = MatrixXd::Zero(p, p);
  {
    MatrixXd rows(X.rows(), p);
    for (Index i = 0; i < X.rows(); ++i) rows.row(i) = std::sqrt(std::max(d[i], 0.0)) * X.row(i);
    inner.selfadjointView<Eigen::Lower>().rankUpdate(rows.transpose());
  }
  if (n_mu > 0.0) inner.diagonal().array() += n_mu;
  Eigen::LLT<MatrixXd> llt(inner);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const VectorXd piv = llt.matrixLLT().diagonal().array().square();
  if (piv.minCoeff() <= 1e-12 * piv.maxCoeff()) return std::nullopt;

  // columns of L^{-1} X^T: |L^{-1} x_i|^2 = x_i^T A^{-1} x_i
  MatrixXd solved = X.transpose();
  llt.matrixL().solveInPlace(solved);
  const VectorXd quad = solved.colwise().squaredNorm().transpose();
  return d.sum() - (d.array().square() * quad.array()).sum();
}

}  // namespace

TraceResult trace_jacobian(const FitResult& fit, const Dataset& data, const ScaledLoss& loss,
                           const FitOptions& opts) {
  if (!fit.converged) throw InvalidParameter("trace_jacobian: fit did not converge");
  if (fit.residuals.size() != data.n()) throw InvalidParameter("trace_jacobian: fit/data mismatch");
  const Index p = data.p();

  if (loss.kind() == LossKind::Huber && fit.ridge_mu == 0.0) {
    const double lam = loss.lambda();
    const auto inliers = (fit.residuals.array().abs() <= lam).count();
    return {static_cast<double>(inliers) - static_cast<double>(p), TraceMethod::HuberClosedForm,
            false};
  }

  const double n_mu = static_cast<double>(data.n()) * fit.ridge_mu;
  if (auto t = smooth_trace(data.X, loss.psi_prime(fit.residuals), n_mu)) {
    return {*t, TraceMethod::SmoothClosedForm, false};
  }
  Dataset at{data.X, data.y, std::nullopt, std::nullopt};
  at.y = fit.residuals + data.X * fit.beta_hat;
  FitOptions inner = opts;
  inner.check_rank = false;
  auto map = [&](const VectorXd& y) -> VectorXd {
    at.y = y;
    const FitResult f = (fit.ridge_mu > 0.0) ? fit_ridge(at, loss, fit.ridge_mu, inner, &fit.beta_hat)
                                             : mrisk::fit(at, loss, inner, &fit.beta_hat);
    if (!f.converged) throw NumericalError("trace_jacobian: finite-difference refit failed");
    return f.psi_vals;
  };
  const VectorXd y0 = at.y;
  const double t = hutchinson_trace(map, y0, 1e-6, static_cast<int>(data.n()), 0);
  return {t, TraceMethod::FiniteDifference, true};
}

RiskEstimate estimate_risk(const FitResult& fit, const Dataset& data, const ScaledLoss& loss,
                           const FitOptions& opts) {
  if (fit.ridge_mu != 0.0) throw InvalidParameter("estimate_risk: needs an unregularized fit");
  const TraceResult tr = trace_jacobian(fit, data, loss, opts);
  RiskEstimate est;
  est.psi_sq_norm = fit.psi_vals.squaredNorm();
  est.trace_v = tr.trace_v;
  est.trace_method = tr.method;
  est.fallback = tr.fallback;
  est.degenerate = tr.trace_v <= trace_floor(data.n());
  est.r_hat = est.degenerate ? std::numeric_limits<double>::infinity()
                             : static_cast<double>(data.p()) * est.psi_sq_norm / (tr.trace_v * tr.trace_v);
  return est;
}

double oracle_risk(const FitResult& fit, const Dataset& data) {
  if (!data.beta_star) throw UnsupportedOperation("oracle_risk: dataset has no beta_star");
  const VectorXd h = fit.beta_hat - *data.beta_star;
  if (data.sigma) return h.dot(*data.sigma * h);
  return h.squaredNorm();
}

}  // namespace mrisk
