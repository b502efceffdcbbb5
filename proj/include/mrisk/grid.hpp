#pragma once

#include <cstddef>
#include <vector>

namespace mrisk {

/// Ordered set of loss scales lambda.
class LambdaGrid {
 public:
  /// lambda_i = lambda_min (lambda_max / lambda_min)^(i / (n_points - 1)),
  /// endpoints exact. Requires 0 < lambda_min < lambda_max and n_points >= 2.
  static LambdaGrid geometric(double lambda_min, double lambda_max, int n_points);

  /// Explicit points: positive and non-decreasing (repeats allowed).
  static LambdaGrid from_points(std::vector<double> points);

  const std::vector<double>& points() const noexcept { return points_; }
  std::size_t size() const noexcept { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  auto begin() const { return points_.begin(); }
  auto end() const { return points_.end(); }

 private:
  explicit LambdaGrid(std::vector<double> pts) : points_(std::move(pts)) {}
  std::vector<double> points_;
};

inline LambdaGrid make_grid(double lambda_min, double lambda_max, int n_points) {
  return LambdaGrid::geometric(lambda_min, lambda_max, n_points);
}

}  // namespace mrisk
