#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "mrisk/errors.hpp"
#include "mrisk/simlab.hpp"

namespace mrisk {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

DesignSpec DesignSpec::parse(std::string_view text) {
  if (text == "gaussian") return {DesignKind::Gaussian, 4.0};
  if (text == "rademacher") return {DesignKind::Rademacher, 4.0};
  if (text == "uniform") return {DesignKind::Uniform, 4.0};
  if (text.substr(0, 2) == "t:") {
    double df = 0.0;
    const auto rest = text.substr(2);
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), df);
    if (ec != std::errc() || ptr != rest.data() + rest.size() || !(df > 2.0))
      throw InvalidParameter("design t:DF needs DF > 2 (finite variance)");
    return {DesignKind::StudentT, df};
  }
  throw InvalidParameter("unknown design '" + std::string(text) +
                         "' (expected gaussian, rademacher, uniform, t:DF)");
}

std::string DesignSpec::name() const {
  switch (kind) {
    case DesignKind::Gaussian:
      return "gaussian";
    case DesignKind::Rademacher:
      return "rademacher";
    case DesignKind::Uniform:
      return "uniform";
    case DesignKind::StudentT: {
      std::ostringstream os;
      os << "t:" << df;
      return os.str();
    }
  }
  return "?";
}

BetaStarSpec BetaStarSpec::parse(std::string_view text) {
  if (text == "zero") return {};
  if (text == "random") return {BetaStarKind::Random, 1.0, {}};
  if (text.substr(0, 7) == "random:") {
    double norm = 0.0;
    const auto rest = text.substr(7);
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), norm);
    if (ec != std::errc() || ptr != rest.data() + rest.size() || !(norm >= 0.0))
      throw InvalidParameter("beta_star random:NORM needs a nonnegative number");
    return {BetaStarKind::Random, norm, {}};
  }
  throw InvalidParameter("unknown beta_star spec '" + std::string(text) + "' (expected zero or random[:NORM])");
}

Dataset generate_dataset(int n, int p, const DesignSpec& design, const BetaStarSpec& beta_star,
                         const NoiseModel& noise, std::uint64_t seed) {
  if (p < 1 || n <= p) throw InvalidParameter("generate_dataset: need n > p >= 1");
  Dataset data;
  data.X.resize(n, p);

  std::mt19937_64 design_rng(derive_seed(seed, 1));
  switch (design.kind) {
    case DesignKind::Gaussian: {
      std::normal_distribution<double> dist(0.0, 1.0);
      for (int j = 0; j < p; ++j)
        for (int i = 0; i < n; ++i) data.X(i, j) = dist(design_rng);
      break;
    }
    case DesignKind::Rademacher: {
      std::bernoulli_distribution coin(0.5);
      for (int j = 0; j < p; ++j)
        for (int i = 0; i < n; ++i) data.X(i, j) = coin(design_rng) ? 1.0 : -1.0;
      break;
    }
    case DesignKind::Uniform: {
      const double half_width = std::sqrt(3.0);
      std::uniform_real_distribution<double> dist(-half_width, half_width);
      for (int j = 0; j < p; ++j)
        for (int i = 0; i < n; ++i) data.X(i, j) = dist(design_rng);
      break;
    }
    case DesignKind::StudentT: {
      if (!(design.df > 2.0)) throw InvalidParameter("design t:DF needs DF > 2");
      std::student_t_distribution<double> dist(design.df);
      const double norm = std::sqrt((design.df - 2.0) / design.df);
      for (int j = 0; j < p; ++j)
        for (int i = 0; i < n; ++i) data.X(i, j) = norm * dist(design_rng);
      break;
    }
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  switch (beta_star.kind) {
    case BetaStarKind::Zero:
      break;
    case BetaStarKind::Random: {
      std::mt19937_64 rng(derive_seed(seed, 3));
      std::normal_distribution<double> dist(0.0, 1.0);
      for (int j = 0; j < p; ++j) beta[j] = dist(rng);
      const double len = beta.norm();
      if (len > 0.0) beta *= beta_star.norm / len;
      break;
    }
    case BetaStarKind::Given:
      if (beta_star.values.size() != p) throw InvalidParameter("generate_dataset: beta_star has wrong length");
      beta = beta_star.values;
      break;
  }

  std::mt19937_64 noise_rng(derive_seed(seed, 2));
  Eigen::VectorXd eps(n);
  for (int i = 0; i < n; ++i) eps[i] = noise.sample(noise_rng);

  data.y = eps;
  if (beta_star.kind != BetaStarKind::Zero) data.y.noalias() += data.X * beta;
  data.beta_star = std::move(beta);
  return data;
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot open dataset '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t width = 0;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (start <= line.size()) {
      auto end = line.find(',', start);
      if (end == std::string::npos) end = line.size();
      std::string_view cell(line.data() + start, end - start);
      while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
      while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size())
        throw InvalidParameter(path + ":" + std::to_string(line_no) + ": not a number: '" + std::string(cell) + "'");
      row.push_back(v);
      start = end + 1;
    }
    if (width == 0) width = row.size();
    if (row.size() != width || width < 2)
      throw InvalidParameter(path + ":" + std::to_string(line_no) + ": inconsistent column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidParameter("dataset '" + path + "' is empty");
  Dataset data;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(width - 1);
  data.X.resize(n, p);
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.y[i] = rows[i][0];
    for (Eigen::Index j = 0; j < p; ++j) data.X(i, j) = rows[i][j + 1];
  }
  return data;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw InvalidParameter("cannot write dataset '" + path + "'");
  char buf[32];
  auto put = [&](double v) { out.write(buf, std::to_chars(buf, buf + sizeof buf, v).ptr - buf); };
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    put(data.y[i]);
    for (Eigen::Index j = 0; j < data.p(); ++j) {
      out << ',';
      put(data.X(i, j));
    }
    out << '\n';
  }
}

}  // namespace mrisk
