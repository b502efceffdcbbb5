#include "mrisk/noise.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "mrisk/errors.hpp"

namespace mrisk {

namespace {

double parse_number(std::string_view text, std::string_view spec) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw InvalidParameter("noise spec '" + std::string(spec) + "': bad number '" + std::string(text) + "'");
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void check_df(double df) {
  if (!(df > 0.0) || !std::isfinite(df)) throw InvalidParameter("noise: degrees of freedom must be positive");
}

void check_settings(const QuadratureSettings& q) {
  if (q.w_points < 1) throw InvalidParameter("noise: w_points must be >= 1");
  if (q.mc_per_cell < 1) throw InvalidParameter("noise: mc_per_cell must be >= 1");
  if (!(q.atom_tail_mass > 0.0 && q.atom_tail_mass < 1.0))
    throw InvalidParameter("noise: atom_tail_mass must lie in (0, 1)");
}

std::string num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

constexpr double kBelowOne = 1.0 - 0x1.0p-53;

double uniform_open(std::mt19937_64& rng) {
  // (0, 1): 53 random bits offset by half a unit
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

NoiseModel NoiseModel::student_t(double df, const QuadratureSettings& q) {
  check_df(df);
  check_settings(q);
  NoiseModel m(NoiseKind::StudentT, "t:" + num(df), 1.0, df, q);
  m.build_nodes();
  return m;
}

NoiseModel NoiseModel::gaussian(double sigma, const QuadratureSettings& q) {
  if (!(sigma > 0.0)) throw InvalidParameter("noise: sigma must be positive");
  check_settings(q);
  NoiseModel m(NoiseKind::Gaussian, "gauss:" + num(sigma), sigma, 0.0, q);
  m.build_nodes();
  return m;
}

NoiseModel NoiseModel::gaussian_plus_cauchy(const QuadratureSettings& q) {
  check_settings(q);
  NoiseModel m(NoiseKind::GaussianPlusCauchy, "gauss+cauchy", 1.0, 0.0, q);
  m.build_nodes();
  return m;
}

NoiseModel NoiseModel::scaled_student_t(double sigma, double df, const QuadratureSettings& q) {
  check_df(df);
  check_settings(q);
  if (!(sigma > 0.0)) throw InvalidParameter("noise: sigma must be positive");
  NoiseModel m(NoiseKind::ScaledStudentT, "scaled-t:" + num(sigma) + ":" + num(df),
               sigma, df, q);
  m.build_nodes();
  return m;
}

NoiseModel NoiseModel::discrete_ceil_t(double scale, double df, const QuadratureSettings& q) {
  check_df(df);
  check_settings(q);
  if (!(scale > 0.0)) throw InvalidParameter("noise: scale must be positive");
  NoiseModel m(NoiseKind::DiscreteCeilT, "ceil-t:" + num(scale) + ":" + num(df),
               scale, df, q);
  m.build_nodes();
  return m;
}

NoiseModel NoiseModel::convolution(std::vector<NoiseModel> parts, const QuadratureSettings& q) {
  if (parts.empty()) throw InvalidParameter("noise: convolution needs at least one component");
  check_settings(q);
  std::string spec = "conv(";
  for (std::size_t i = 0; i < parts.size(); ++i) spec += (i ? "," : "") + parts[i].spec();
  spec += ")";
  NoiseModel m(NoiseKind::Convolution, spec, 1.0, 0.0, q);
  *m.parts_ = std::move(parts);
  m.build_nodes();
  return m;
}

NoiseModel NoiseModel::atoms(Eigen::VectorXd nodes, Eigen::VectorXd weights) {
  if (nodes.size() == 0 || nodes.size() != weights.size())
    throw InvalidParameter("noise: atoms need matching, non-empty nodes and weights");
  if (!nodes.allFinite() || (weights.array() < 0.0).any() || !(weights.sum() > 0.0))
    throw InvalidParameter("noise: atoms need finite nodes and nonnegative weights");
  NoiseModel m(NoiseKind::Atoms, "atoms", 1.0, 0.0, QuadratureSettings{});
  m.nodes_ = std::move(nodes);
  m.weights_ = std::move(weights);
  m.weights_ /= m.weights_.sum();
  return m;
}

NoiseModel NoiseModel::parse(std::string_view spec, const QuadratureSettings& q) {
  if (spec == "gauss+cauchy") return gaussian_plus_cauchy(q);
  const auto fields = split(spec, ':');
  const auto& head = fields.front();
  auto arity = [&](std::size_t k) {
    if (fields.size() != k + 1)
      throw InvalidParameter("noise spec '" + std::string(spec) + "': expected " + std::to_string(k) +
                             " parameter(s)");
  };
  if (head == "t") {
    arity(1);
    return student_t(parse_number(fields[1], spec), q);
  }
  if (head == "gauss") {
    if (fields.size() == 1) return gaussian(1.0, q);
    arity(1);
    return gaussian(parse_number(fields[1], spec), q);
  }
  if (head == "scaled-t") {
    arity(2);
    return scaled_student_t(parse_number(fields[1], spec), parse_number(fields[2], spec), q);
  }
  if (head == "ceil-t") {
    arity(2);
    return discrete_ceil_t(parse_number(fields[1], spec), parse_number(fields[2], spec), q);
  }
  throw InvalidParameter("unknown noise spec '" + std::string(spec) +
                         "' (expected t:DF, gauss:SIGMA, gauss+cauchy, ceil-t:SCALE:DF, scaled-t:SIGMA:DF)");
}

double NoiseModel::inverse_cdf(double u) const {
  switch (kind_) {
    case NoiseKind::StudentT:
    case NoiseKind::ScaledStudentT:
      return scale_ * boost::math::quantile(boost::math::students_t(df_), u);
    case NoiseKind::Gaussian:
      return scale_ * boost::math::quantile(boost::math::normal(), u);
    case NoiseKind::DiscreteCeilT:
      return scale_ * std::floor(boost::math::quantile(boost::math::students_t(df_), u));
    case NoiseKind::Atoms:
      for (Eigen::Index i = 0; i < weights_.size(); ++i) {
        u -= weights_[i];
        if (u <= 0.0) return nodes_[i];
      }
      return nodes_[nodes_.size() - 1];
    case NoiseKind::GaussianPlusCauchy:
    case NoiseKind::Convolution:
      break;
  }
  throw UnsupportedOperation("noise: no closed-form quantile for " + spec_);
}

void NoiseModel::collect_components(std::vector<std::function<double(double)>>& out) const {
  if (kind_ == NoiseKind::GaussianPlusCauchy) {
    out.emplace_back([](double u) { return boost::math::quantile(boost::math::normal(), u); });
    out.emplace_back([](double u) { return std::tan(std::numbers::pi * (u - 0.5)); });
  } else if (kind_ == NoiseKind::Convolution) {
    for (const auto& part : *parts_) part.collect_components(out);
  } else {
    out.emplace_back([this](double u) { return inverse_cdf(u); });
  }
}

double NoiseModel::sample(std::mt19937_64& rng) const {
  switch (kind_) {
    case NoiseKind::GaussianPlusCauchy: {
      const double z = boost::math::quantile(boost::math::normal(), uniform_open(rng));
      const double c = std::tan(std::numbers::pi * (uniform_open(rng) - 0.5));
      return z + c;
    }
    case NoiseKind::Convolution: {
      double total = 0.0;
      for (const auto& part : *parts_) total += part.sample(rng);
      return total;
    }
    default:
      return inverse_cdf(uniform_open(rng));
  }
}

void NoiseModel::build_nodes() {
  const int M = quad_.w_points;
  auto midpoint = [M](int k) { return (k + 0.5) / M; };

  switch (kind_) {
    case NoiseKind::Atoms:
      break;
    case NoiseKind::StudentT:
    case NoiseKind::ScaledStudentT: {
      const boost::math::students_t dist(df_);
      nodes_.resize(M);
      for (int k = 0; k < M; ++k) nodes_[k] = scale_ * boost::math::quantile(dist, midpoint(k));
      weights_ = Eigen::VectorXd::Constant(M, 1.0 / M);
      break;
    }
    case NoiseKind::Gaussian: {
      const boost::math::normal dist;
      nodes_.resize(M);
      for (int k = 0; k < M; ++k) nodes_[k] = scale_ * boost::math::quantile(dist, midpoint(k));
      weights_ = Eigen::VectorXd::Constant(M, 1.0 / M);
      break;
    }
    case NoiseKind::DiscreteCeilT: {
      // atoms scale * k with P(floor(T) = k) = F(k + 1) - F(k)
      const boost::math::students_t dist(df_);
      const double half_tail = 0.5 * quad_.atom_tail_mass;
      const double lo = std::floor(boost::math::quantile(dist, half_tail));
      const double hi = std::floor(boost::math::quantile(boost::math::complement(dist, half_tail)));
      std::vector<double> atoms, probs;
      for (double k = lo; k <= hi; k += 1.0) {
        const double mass = k >= 0.0 ? boost::math::cdf(boost::math::complement(dist, k)) -
                                           boost::math::cdf(boost::math::complement(dist, k + 1.0))
                                     : boost::math::cdf(dist, k + 1.0) - boost::math::cdf(dist, k);
        atoms.push_back(scale_ * k);
        probs.push_back(mass);
      }
      nodes_ = Eigen::Map<Eigen::VectorXd>(atoms.data(), static_cast<Eigen::Index>(atoms.size()));
      weights_ = Eigen::Map<Eigen::VectorXd>(probs.data(), static_cast<Eigen::Index>(probs.size()));
      weights_ /= weights_.sum();
      break;
    }
    case NoiseKind::GaussianPlusCauchy:
    case NoiseKind::Convolution: {
      // Latin hypercube: each component is sampled once per stratum of (0, 1),
      // strata paired across components by independent random permutations.
      std::mt19937_64 rng(quad_.seed);
      const std::size_t total = static_cast<std::size_t>(M) * quad_.mc_per_cell;
      std::vector<std::function<double(double)>> comps;
      collect_components(comps);
      std::vector<double> draws(total, 0.0);
      std::vector<std::size_t> perm(total);
      for (const auto& q : comps) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        for (std::size_t i = 0; i < total; ++i) {
          const double u = (static_cast<double>(perm[i]) + uniform_open(rng)) / static_cast<double>(total);
          draws[i] += q(std::min(u, kBelowOne));
        }
      }
      std::sort(draws.begin(), draws.end());
      nodes_.resize(M);
      for (int k = 0; k < M; ++k) {
        const auto idx = static_cast<std::size_t>(midpoint(k) * static_cast<double>(total));
        nodes_[k] = draws[std::min(idx, total - 1)];
      }
      weights_ = Eigen::VectorXd::Constant(M, 1.0 / M);
      break;
    }
  }
}

double NoiseModel::robust_scale() const {
  std::vector<Eigen::Index> order(nodes_.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return nodes_[a] < nodes_[b]; });
  auto quantile = [&](double level) {
    double cum = 0.0;
    for (auto i : order) {
      cum += weights_[i];
      if (cum >= level) return nodes_[i];
    }
    return nodes_[order.back()];
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  return iqr > 0.0 ? iqr / 1.349 : 1.0;
}

}  // namespace mrisk
