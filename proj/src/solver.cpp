#include "mrisk/solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "mrisk/errors.hpp"

namespace mrisk {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void Dataset::validate() const {
  if (X.cols() < 1) throw StructuralError("dataset: need at least one feature");
  if (X.rows() <= X.cols())
    throw StructuralError("dataset: need n > p (got n=" + std::to_string(X.rows()) +
                          ", p=" + std::to_string(X.cols()) + ")");
  if (y.size() != X.rows()) throw StructuralError("dataset: y length does not match rows of X");
  if (beta_star && beta_star->size() != X.cols())
    throw StructuralError("dataset: beta_star length does not match columns of X");
  if (sigma && (sigma->rows() != X.cols() || sigma->cols() != X.cols()))
    throw StructuralError("dataset: Sigma must be p x p");
  if (!X.allFinite() || !y.allFinite()) throw StructuralError("dataset: non-finite entries");
}

void FitOptions::validate() const {
  if (!(kkt_tol > 0.0)) throw InvalidParameter("fit: kkt_tol must be positive");
  if (max_iter < 1) throw InvalidParameter("fit: max_iter must be >= 1");
  if (!(damping_floor > 0.0)) throw InvalidParameter("fit: damping_floor must be positive");
}

bool has_full_column_rank(const MatrixXd& X) {
  const Index p = X.cols();
  MatrixXd gram = MatrixXd::Zero(p, p);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  Eigen::LLT<MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) return false;
  const VectorXd pivots = llt.matrixLLT().diagonal().array().square();
  return pivots.minCoeff() > 1e-12 * pivots.maxCoeff();
}

namespace {

// X^T diag(w) X, lower triangle only. Rows with w == 0 are skipped.
MatrixXd weighted_gram(const MatrixXd& X, const VectorXd& w) {
  const Index p = X.cols();
  Index m = 0;
  for (Index i = 0; i < w.size(); ++i) m += w[i] > 0.0;
  MatrixXd rows(m, p);
  for (Index i = 0, k = 0; i < w.size(); ++i) {
    if (w[i] > 0.0) rows.row(k++) = std::sqrt(w[i]) * X.row(i);
  }
  MatrixXd gram = MatrixXd::Zero(p, p);
  if (m > 0) gram.selfadjointView<Eigen::Lower>().rankUpdate(rows.transpose());
  return gram;
}

double op_norm_estimate(const MatrixXd& lower_sym) {
  const Index p = lower_sym.rows();
  VectorXd v = VectorXd::Ones(p) / std::sqrt(static_cast<double>(p));
  double est = 0.0;
  for (int k = 0; k < 20; ++k) {
    VectorXd w = lower_sym.selfadjointView<Eigen::Lower>() * v;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    est = nw;
    v = w / nw;
  }
  return est;
}

struct State {
  VectorXd beta;
  VectorXd r;
  VectorXd psi;
  VectorXd grad;  // -X^T psi + n mu beta
  double kkt = 0.0;
};

void refresh(State& s, const Dataset& data, const ScaledLoss& loss, double n_mu) {
  s.r = data.y;
  s.r.noalias() -= data.X * s.beta;
  s.psi = loss.psi(s.r);
  s.grad.noalias() = -data.X.transpose() * s.psi;
  if (n_mu > 0.0) s.grad += n_mu * s.beta;
  s.kkt = s.grad.norm() / static_cast<double>(data.n());
}

FitResult fit_impl(const Dataset& data, const ScaledLoss& loss, double mu, const FitOptions& opts,
                   const VectorXd* init) {
  data.validate();
  opts.validate();
  if (opts.check_rank && !has_full_column_rank(data.X))
    throw StructuralError("fit: design matrix is rank deficient");

  const Index n = data.n();
  const Index p = data.p();
  const double n_mu = static_cast<double>(n) * mu;

  State s;
  if (init) {
    if (init->size() != p) throw InvalidParameter("fit: initial beta has wrong length");
    s.beta = *init;
  } else {
    s.beta = VectorXd::Zero(p);
  }
  refresh(s, data, loss, n_mu);

  FitResult out;
  out.ridge_mu = mu;
  double objective = loss.objective(s.r) + 0.5 * n_mu * s.beta.squaredNorm();
  if (opts.record_trace) out.objective_trace.push_back(objective);

  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktrack = 40;
  constexpr int kMaxDampingTries = 40;

  double damping = -1.0;
  int it = 0;
  bool stalled = false;
  for (; it < opts.max_iter && s.kkt > opts.kkt_tol; ++it) {
    MatrixXd hess = weighted_gram(data.X, loss.psi_prime(s.r));
    if (damping < 0.0) {
      double scale = op_norm_estimate(hess);
      if (scale == 0.0) scale = data.X.squaredNorm() / static_cast<double>(p);
      damping = std::max(opts.damping_floor, 1e-4 * scale / static_cast<double>(p));
    }
    if (n_mu > 0.0) hess.diagonal().array() += n_mu;

    bool accepted = false;
    for (int attempt = 0; attempt < kMaxDampingTries && !accepted; ++attempt) {
      MatrixXd system = hess;
      system.diagonal().array() += damping;
      Eigen::LLT<MatrixXd> llt(system);
      if (llt.info() != Eigen::Success) {
        damping *= 10.0;
        continue;
      }
      const VectorXd step = llt.solve(-s.grad);
      const double slope = s.grad.dot(step);
      if (!(slope < 0.0)) {
        damping *= 10.0;
        continue;
      }
      const VectorXd x_step = data.X * step;
      double t = 1.0;
      for (int k = 0; k < kMaxBacktrack; ++k, t *= 0.5) {
        double delta = 0.0;
        for (Index i = 0; i < n; ++i) delta += loss.rho_diff(s.r[i] - t * x_step[i], s.r[i]);
        if (n_mu > 0.0) delta += n_mu * (t * s.beta.dot(step) + 0.5 * t * t * step.squaredNorm());
        if (delta <= kArmijo * t * slope) {
          s.beta += t * step;
          objective += delta;
          accepted = true;
          break;
        }
      }
      if (accepted) {
        if (t == 1.0) damping = std::max(opts.damping_floor, 0.1 * damping);
      } else {
        damping *= 10.0;
      }
    }
    if (!accepted) {
      stalled = true;
      break;
    }
    refresh(s, data, loss, n_mu);
    if (opts.record_trace) out.objective_trace.push_back(objective);
  }

  out.iterations = it;
  out.converged = !stalled && s.kkt <= opts.kkt_tol;
  out.kkt_residual = s.kkt;
  out.objective = loss.objective(s.r) + 0.5 * n_mu * s.beta.squaredNorm();
  out.beta_hat = std::move(s.beta);
  out.residuals = std::move(s.r);
  out.psi_vals = std::move(s.psi);
  return out;
}

}  // namespace

FitResult fit(const Dataset& data, const ScaledLoss& loss, const FitOptions& opts,
              const VectorXd* init) {
  return fit_impl(data, loss, 0.0, opts, init);
}

FitResult fit_ridge(const Dataset& data, const ScaledLoss& loss, double mu, const FitOptions& opts,
                    const VectorXd* init) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw InvalidParameter("fit_ridge: mu must be positive");
  return fit_impl(data, loss, mu, opts, init);
}

}  // namespace mrisk
