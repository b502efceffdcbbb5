#include "mrisk/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mrisk/errors.hpp"

namespace mrisk {

namespace {

constexpr int kProxMaxIter = 200;
constexpr double kProxTol = 1e-12;

LossValue huber_eval(double u) {
  const double a = std::abs(u);
  if (a <= 1.0) return {0.5 * u * u, u, 1.0};
  return {a - 0.5, u > 0 ? 1.0 : -1.0, 0.0};
}

LossValue pseudo_huber_eval(double u) {
  const double s = std::sqrt(1.0 + u * u);
  // sqrt(1 + u^2) - 1 without cancellation near 0
  return {u * u / (s + 1.0), u / s, 1.0 / (s * s * s)};
}

}  // namespace

BaseLoss BaseLoss::huber() { return BaseLoss(LossKind::Huber, "huber", 1.0, 1.0); }

BaseLoss BaseLoss::pseudo_huber() {
  // min over u of u^2 / (1 + u^2) + (1 + u^2)^(-3/2), attained at 1 + u^2 = 9/4
  return BaseLoss(LossKind::PseudoHuber, "pseudo_huber", 1.0, 23.0 / 27.0);
}

BaseLoss BaseLoss::custom(std::string name, ScalarFn rho, ScalarFn psi, ScalarFn psi_prime,
                          double psi_sup, double eta) {
  if (!rho || !psi || !psi_prime) throw InvalidParameter("custom loss: missing function");
  if (!(psi_sup > 0.0) || !std::isfinite(psi_sup))
    throw InvalidParameter("custom loss: psi_sup must be positive and finite");
  if (!(eta > 0.0)) throw InvalidParameter("custom loss: eta must be positive");

  // sampled checks on [-50, 50]
  constexpr int kSamples = 20001;
  constexpr double kRange = 50.0;
  const double rho0 = rho(0.0);
  if (std::abs(psi(0.0)) > 1e-12) throw InvalidParameter("custom loss: psi(0) != 0");
  double prev_u = -kRange;
  double prev_psi = psi(prev_u);
  for (int k = 1; k < kSamples; ++k) {
    const double u = -kRange + 2.0 * kRange * k / (kSamples - 1);
    const double v = psi(u);
    if (std::abs(v) > psi_sup * (1.0 + 1e-9))
      throw InvalidParameter("custom loss: |psi| exceeds the declared sup-norm");
    const double slope = (v - prev_psi) / (u - prev_u);
    if (slope < -1e-9) throw InvalidParameter("custom loss: psi is not monotone (rho not convex)");
    if (slope > 1.0 + 1e-6) throw InvalidParameter("custom loss: psi is not 1-Lipschitz");
    if (u != 0.0 && rho(u) <= rho0) throw InvalidParameter("custom loss: 0 is not the unique minimizer");
    prev_u = u;
    prev_psi = v;
  }
  auto fns = std::make_shared<const Fns>(Fns{std::move(rho), std::move(psi), std::move(psi_prime)});
  return BaseLoss(LossKind::Custom, std::move(name), psi_sup, eta, std::move(fns));
}

BaseLoss BaseLoss::from_name(std::string_view name) {
  if (name == "huber") return huber();
  if (name == "pseudo_huber" || name == "pseudo-huber") return pseudo_huber();
  throw InvalidParameter("unknown loss '" + std::string(name) + "' (expected huber or pseudo_huber)");
}

LossValue BaseLoss::eval(double u) const {
  switch (kind_) {
    case LossKind::Huber:
      return huber_eval(u);
    case LossKind::PseudoHuber:
      return pseudo_huber_eval(u);
    case LossKind::Custom:
      break;
  }
  return {fns_->rho(u), fns_->psi(u), fns_->psi_prime(u)};
}

double BaseLoss::psi(double u) const {
  switch (kind_) {
    case LossKind::Huber:
      return std::clamp(u, -1.0, 1.0);
    case LossKind::PseudoHuber:
      return u / std::sqrt(1.0 + u * u);
    case LossKind::Custom:
      break;
  }
  return fns_->psi(u);
}

double BaseLoss::psi_prime(double u) const {
  switch (kind_) {
    case LossKind::Huber:
      return std::abs(u) <= 1.0 ? 1.0 : 0.0;
    case LossKind::PseudoHuber: {
      const double s = std::sqrt(1.0 + u * u);
      return 1.0 / (s * s * s);
    }
    case LossKind::Custom:
      break;
  }
  return fns_->psi_prime(u);
}

ScaledLoss::ScaledLoss(BaseLoss base, double lambda) : base_(std::move(base)), lambda_(lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw InvalidParameter("loss scale lambda must be positive and finite");
}

LossValue ScaledLoss::eval(double x) const {
  if (base_.kind() == LossKind::Huber) {
    // written out directly so that huge lambda stays exact
    const double a = std::abs(x);
    if (a <= lambda_) return {0.5 * x * x, x, 1.0};
    return {lambda_ * a - 0.5 * lambda_ * lambda_, x > 0 ? lambda_ : -lambda_, 0.0};
  }
  const LossValue v = base_.eval(x / lambda_);
  return {lambda_ * lambda_ * v.rho, lambda_ * v.psi, v.psi_prime};
}

double ScaledLoss::psi(double x) const {
  if (base_.kind() == LossKind::Huber) return std::clamp(x, -lambda_, lambda_);
  return lambda_ * base_.psi(x / lambda_);
}

double ScaledLoss::psi_prime(double x) const {
  if (base_.kind() == LossKind::Huber) return std::abs(x) <= lambda_ ? 1.0 : 0.0;
  return base_.psi_prime(x / lambda_);
}

double ScaledLoss::prox_gap(double kappa, double x) const {
  if (!(kappa > 0.0)) throw InvalidParameter("prox: kappa must be positive");
  if (base_.kind() == LossKind::Huber) {
    const double u = x / (lambda_ * (1.0 + kappa));
    return kappa * lambda_ * std::clamp(u, -1.0, 1.0);
  }
  return x - prox(kappa, x);
}

double ScaledLoss::prox(double kappa, double x) const {
  if (!(kappa > 0.0)) throw InvalidParameter("prox: kappa must be positive");
  if (base_.kind() == LossKind::Huber) return x - prox_gap(kappa, x);
  if (x == 0.0) return 0.0;

  // g(u) = u + kappa psi(u) - x is increasing with g' >= 1; the root lies
  // between 0 and x.
  double lo = std::min(0.0, x);
  double hi = std::max(0.0, x);
  const double tol = std::max(kProxTol, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x));
  double u = x / (1.0 + kappa);
  for (int it = 0; it < kProxMaxIter; ++it) {
    const double g = u + kappa * psi(u) - x;
    if (std::abs(g) <= tol) return u;
    if (g > 0.0)
      hi = u;
    else
      lo = u;
    const double dg = 1.0 + kappa * psi_prime(u);
    double next = u - g / dg;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == u || hi - lo <= tol) return next;
    u = next;
  }
  throw NumericalError("prox: scalar Newton iteration did not converge");
}

double ScaledLoss::rho_diff(double a, double b) const {
  switch (base_.kind()) {
    case LossKind::Huber: {
      const bool in_a = std::abs(a) <= lambda_;
      const bool in_b = std::abs(b) <= lambda_;
      if (in_a && in_b) return 0.5 * (a - b) * (a + b);
      if (!in_a && !in_b && (a > 0) == (b > 0)) return (a > 0 ? lambda_ : -lambda_) * (a - b);
      return eval(a).rho - eval(b).rho;
    }
    case LossKind::PseudoHuber: {
      const double sa = std::sqrt(1.0 + (a / lambda_) * (a / lambda_));
      const double sb = std::sqrt(1.0 + (b / lambda_) * (b / lambda_));
      return (a - b) * (a + b) / (sa + sb);
    }
    case LossKind::Custom:
      break;
  }
  return eval(a).rho - eval(b).rho;
}

double ScaledLoss::objective(const Eigen::Ref<const Eigen::VectorXd>& r) const {
  double total = 0.0;
  for (Eigen::Index i = 0; i < r.size(); ++i) total += eval(r[i]).rho;
  return total;
}

Eigen::VectorXd ScaledLoss::psi(const Eigen::Ref<const Eigen::VectorXd>& r) const {
  Eigen::VectorXd out(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) out[i] = psi(r[i]);
  return out;
}

Eigen::VectorXd ScaledLoss::psi_prime(const Eigen::Ref<const Eigen::VectorXd>& r) const {
  Eigen::VectorXd out(r.size());
  for (Eigen::Index i = 0; i < r.size(); ++i) out[i] = psi_prime(r[i]);
  return out;
}

}  // namespace mrisk
