#include "mrisk/grid.hpp"

#include <cmath>

#include "mrisk/errors.hpp"

namespace mrisk {

LambdaGrid LambdaGrid::geometric(double lambda_min, double lambda_max, int n_points) {
  if (!(lambda_min > 0.0) || !(lambda_max > lambda_min) || !std::isfinite(lambda_max))
    throw InvalidParameter("lambda grid: need 0 < lambda_min < lambda_max");
  if (n_points < 2) throw InvalidParameter("lambda grid: need at least 2 points");
  std::vector<double> pts(static_cast<std::size_t>(n_points));
  const double ratio = lambda_max / lambda_min;
  const int last = n_points - 1;
  for (int i = 0; i <= last; ++i) {
    pts[i] = lambda_min * std::pow(ratio, static_cast<double>(i) / last);
  }
  pts.front() = lambda_min;
  pts.back() = lambda_max;
  return LambdaGrid(std::move(pts));
}

LambdaGrid LambdaGrid::from_points(std::vector<double> points) {
  if (points.empty()) throw InvalidParameter("lambda grid: no points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i] > 0.0) || !std::isfinite(points[i]))
      throw InvalidParameter("lambda grid: points must be positive and finite");
    if (i > 0 && points[i] < points[i - 1])
      throw InvalidParameter("lambda grid: points must be non-decreasing");
  }
  return LambdaGrid(std::move(points));
}

}  // namespace mrisk
