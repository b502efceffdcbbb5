#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace mrisk {

enum class NoiseKind {
  StudentT,           // t(df)
  Gaussian,           // N(0, sigma^2)
  GaussianPlusCauchy, // N(0, 1) + Cauchy(0, 1)
  ScaledStudentT,     // sigma * t(df)
  DiscreteCeilT,      // scale * floor(t(df))
  Convolution,        // sum of independent components
  Atoms,              // user-supplied finite distribution
};

struct QuadratureSettings {
  int w_points = 4001;          // equal-probability cells for continuous W
  std::uint64_t seed = 12345;   // only used when W has no closed-form quantile
  int mc_per_cell = 100;        // Monte Carlo draws per cell in that case
  double atom_tail_mass = 1e-6; // DiscreteCeilT atoms cover 1 - this
};

/// Noise distribution F_eps: a sampler for simulations plus a discrete
/// representation (nodes, weights) of W ~ F_eps for quadrature.
///
/// Continuous W uses the midpoint rule on the quantile function,
/// w_k = Q((k + 1/2) / M) with weight 1/M. Closed-form quantiles are used for
/// t, scaled t and Gaussian; convolutions use empirical quantiles of a seeded
/// Monte Carlo sample. DiscreteCeilT is represented by its atoms.
class NoiseModel {
 public:
  static NoiseModel student_t(double df, const QuadratureSettings& q = {});
  static NoiseModel gaussian(double sigma, const QuadratureSettings& q = {});
  static NoiseModel gaussian_plus_cauchy(const QuadratureSettings& q = {});
  static NoiseModel scaled_student_t(double sigma, double df, const QuadratureSettings& q = {});
  static NoiseModel discrete_ceil_t(double scale, double df, const QuadratureSettings& q = {});
  static NoiseModel convolution(std::vector<NoiseModel> parts, const QuadratureSettings& q = {});
  /// Finite distribution with the given atoms; weights are normalized to sum to one.
  static NoiseModel atoms(Eigen::VectorXd nodes, Eigen::VectorXd weights);

  /// "t:2", "gauss:1.0", "gauss+cauchy", "ceil-t:3:2", "scaled-t:SIGMA:DF".
  static NoiseModel parse(std::string_view spec, const QuadratureSettings& q = {});

  NoiseKind kind() const noexcept { return kind_; }
  const std::string& spec() const noexcept { return spec_; }
  double df() const noexcept { return df_; }
  double scale() const noexcept { return scale_; }
  const std::vector<NoiseModel>& parts() const noexcept { return *parts_; }
  const QuadratureSettings& quadrature() const noexcept { return quad_; }

  const Eigen::VectorXd& w_nodes() const noexcept { return nodes_; }
  const Eigen::VectorXd& w_weights() const noexcept { return weights_; }

  /// Interquartile range divided by 1.349 (the Gaussian-consistent spread).
  double robust_scale() const;

  double sample(std::mt19937_64& rng) const;

 private:
  NoiseModel(NoiseKind kind, std::string spec, double scale, double df, QuadratureSettings q)
      : kind_(kind), spec_(std::move(spec)), scale_(scale), df_(df), quad_(q),
        parts_(std::make_shared<std::vector<NoiseModel>>()) {}

  void build_nodes();
  double inverse_cdf(double u) const;
  void collect_components(std::vector<std::function<double(double)>>& out) const;

  NoiseKind kind_;
  std::string spec_;
  double scale_ = 1.0;
  double df_ = 0.0;
  QuadratureSettings quad_;
  std::shared_ptr<std::vector<NoiseModel>> parts_;
  Eigen::VectorXd nodes_;
  Eigen::VectorXd weights_;
};

}  // namespace mrisk
