#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace mrisk {

enum class LossKind { Huber, PseudoHuber, Custom };

/// (rho, psi = rho', psi') evaluated at one point.
struct LossValue {
  double rho;
  double psi;
  double psi_prime;
};

/// A base robust loss rho with psi = rho'.
///
/// Every loss carries two declared constants: the sup-norm of psi and the
/// constant eta with psi(x)^2 / |psi|_inf^2 + psi'(x) >= eta almost everywhere.
/// Both built-ins have |psi|_inf = 1; eta is 1 for Huber and 23/27 for
/// pseudo-Huber. Huber's psi' at the kinks
/// |u| = 1 is reported as 1 (the inlier side).
class BaseLoss {
 public:
  using ScalarFn = std::function<double(double)>;

  static BaseLoss huber();
  static BaseLoss pseudo_huber();

  /// User loss from a (rho, psi, psi') triple. The declared constants are
  /// trusted; convexity, the bound on psi and Lipschitz(psi) <= 1 are checked
  /// on a sample grid and violations raise InvalidParameter.
  static BaseLoss custom(std::string name, ScalarFn rho, ScalarFn psi, ScalarFn psi_prime,
                         double psi_sup, double eta);

  /// "huber" or "pseudo_huber" (also accepts "pseudo-huber").
  static BaseLoss from_name(std::string_view name);

  LossKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  double psi_sup() const noexcept { return psi_sup_; }
  double eta() const noexcept { return eta_; }

  LossValue eval(double u) const;
  double psi(double u) const;
  double psi_prime(double u) const;

 private:
  struct Fns {
    ScalarFn rho, psi, psi_prime;
  };

  BaseLoss(LossKind kind, std::string name, double psi_sup, double eta,
           std::shared_ptr<const Fns> fns = nullptr)
      : kind_(kind), name_(std::move(name)), psi_sup_(psi_sup), eta_(eta), fns_(std::move(fns)) {}

  LossKind kind_;
  std::string name_;
  double psi_sup_;
  double eta_;
  std::shared_ptr<const Fns> fns_;
};

/// rho_lambda(x) = lambda^2 rho(x / lambda), psi_lambda(x) = lambda psi(x / lambda).
///
/// Lipschitz(psi_lambda) = 1 for every lambda and |psi_lambda|_inf = lambda |psi|_inf.
class ScaledLoss {
 public:
  ScaledLoss(BaseLoss base, double lambda);

  const BaseLoss& base() const noexcept { return base_; }
  double lambda() const noexcept { return lambda_; }
  LossKind kind() const noexcept { return base_.kind(); }
  double psi_sup() const noexcept { return lambda_ * base_.psi_sup(); }
  double eta() const noexcept { return base_.eta(); }

  LossValue eval(double x) const;
  double rho(double x) const { return eval(x).rho; }
  double psi(double x) const;
  double psi_prime(double x) const;

  /// argmin_u (x - u)^2 / 2 + kappa * rho_lambda(u).
  ///
  /// Huber uses x - prox = kappa lambda clamp(x / (lambda (1 + kappa)), -1, 1).
  /// Other losses run a bracketed Newton iteration on u + kappa psi(u) = x and
  /// throw NumericalError if 200 iterations do not reach |residual| <= 1e-12.
  double prox(double kappa, double x) const;

  /// x - prox(kappa, x), computed without cancellation for Huber.
  double prox_gap(double kappa, double x) const;

  /// rho_lambda(a) - rho_lambda(b), arranged to avoid cancellation for the
  /// built-in losses so that tiny objective decreases stay resolvable.
  double rho_diff(double a, double b) const;

  /// Sum_i rho_lambda(r_i).
  double objective(const Eigen::Ref<const Eigen::VectorXd>& r) const;
  Eigen::VectorXd psi(const Eigen::Ref<const Eigen::VectorXd>& r) const;
  Eigen::VectorXd psi_prime(const Eigen::Ref<const Eigen::VectorXd>& r) const;

 private:
  BaseLoss base_;
  double lambda_;
};

}  // namespace mrisk
