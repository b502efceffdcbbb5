#include <algorithm>
#include <numeric>
#include <random>

#include <doctest.h>

#include "mrisk/errors.hpp"
#include "mrisk/solver.hpp"
#include "oracles.hpp"

using mrisk::BaseLoss;
using mrisk::ScaledLoss;

TEST_CASE("noiseless data is recovered exactly") {
  std::mt19937_64 rng(1);
  mrisk::Dataset d;
  d.X = oracle::gaussian_matrix(80, 6, rng);
  Eigen::VectorXd beta(6);
  beta << 1, -2, 0.5, 3, 0, -1;
  d.y = d.X * beta;
  mrisk::FitOptions o;
  o.kkt_tol = 1e-13;
  for (double lam : {0.1, 1.0, 50.0}) {
    const auto f = mrisk::fit(d, ScaledLoss(BaseLoss::huber(), lam), o);
    CHECK(f.converged);
    CHECK((f.beta_hat - beta).norm() <= 1e-10);
    CHECK(f.residuals.cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(f.kkt_residual <= 1e-13);
  }
}

TEST_CASE("huge scale reproduces least squares") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd;
  mrisk::Dataset d;
  d.X = oracle::gaussian_matrix(50, 2, rng);
  d.y.resize(50);
  for (auto& v : d.y) v = nd(rng);
  const Eigen::VectorXd ols = d.X.colPivHouseholderQr().solve(d.y);
  const auto f = mrisk::fit(d, ScaledLoss(BaseLoss::huber(), 1e6));
  CHECK(f.converged);
  CHECK((f.beta_hat - ols).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("heavy-tailed fit meets the kkt tolerance and lowers the objective") {
  const auto d = oracle::t_dataset(200, 50, 2.0, 3);
  for (const auto& base : {BaseLoss::huber(), BaseLoss::pseudo_huber()}) {
    const ScaledLoss loss(base, 1.0);
    mrisk::FitOptions o;
    o.record_trace = true;
    const auto f = mrisk::fit(d, loss, o);
    CHECK(f.converged);
    CHECK(f.kkt_residual <= 1e-8);
    CHECK(oracle::kkt(d, loss, f.beta_hat) <= 1e-8);
    CHECK(f.objective < loss.objective(d.y));
    for (std::size_t k = 1; k < f.objective_trace.size(); ++k)
      CHECK(f.objective_trace[k] <= f.objective_trace[k - 1]);
    for (Eigen::Index i = 0; i < d.n(); ++i) CHECK(f.psi_vals[i] == loss.psi(f.residuals[i]));
  }
}

TEST_CASE("fits are equivariant under row permutations") {
  const auto d = oracle::t_dataset(150, 20, 2.0, 4);
  std::vector<Eigen::Index> perm(d.n());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(5);
  std::shuffle(perm.begin(), perm.end(), rng);
  mrisk::Dataset q;
  q.X.resize(d.n(), d.p());
  q.y.resize(d.n());
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    q.X.row(i) = d.X.row(perm[i]);
    q.y[i] = d.y[perm[i]];
  }
  mrisk::FitOptions o;
  o.kkt_tol = 1e-13;
  for (const auto& base : {BaseLoss::huber(), BaseLoss::pseudo_huber()}) {
    const ScaledLoss loss(base, 1.0);
    const auto a = mrisk::fit(d, loss, o), b = mrisk::fit(q, loss, o);
    CHECK((a.beta_hat - b.beta_hat).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("structural and parameter errors") {
  auto d = oracle::t_dataset(30, 4, 3.0, 6);
  d.X.col(3) = d.X.col(0) * 2.0;
  CHECK_THROWS_AS(mrisk::fit(d, ScaledLoss(BaseLoss::huber(), 1.0)), mrisk::StructuralError);

  auto wide = oracle::t_dataset(10, 10, 3.0, 7);
  CHECK_THROWS_AS(mrisk::fit(wide, ScaledLoss(BaseLoss::huber(), 1.0)), mrisk::StructuralError);

  const auto ok = oracle::t_dataset(30, 4, 3.0, 8);
  mrisk::FitOptions bad;
  bad.kkt_tol = 0.0;
  CHECK_THROWS_AS(mrisk::fit(ok, ScaledLoss(BaseLoss::huber(), 1.0), bad), mrisk::InvalidParameter);
  bad = {};
  bad.max_iter = 0;
  CHECK_THROWS_AS(mrisk::fit(ok, ScaledLoss(BaseLoss::huber(), 1.0), bad), mrisk::InvalidParameter);
  CHECK_THROWS_AS(mrisk::fit_ridge(ok, ScaledLoss(BaseLoss::huber(), 1.0), 0.0), mrisk::InvalidParameter);
}

TEST_CASE("iteration cap returns an unconverged result") {
  const auto d = oracle::t_dataset(200, 40, 2.0, 9);
  mrisk::FitOptions o;
  o.max_iter = 1;
  const auto f = mrisk::fit(d, ScaledLoss(BaseLoss::huber(), 0.5), o);
  CHECK_FALSE(f.converged);
  CHECK(f.iterations == 1);
}

TEST_CASE("ridge fits satisfy their kkt identity") {
  const auto d = oracle::t_dataset(300, 60, 2.0, 10);
  const double mu = std::pow(300.0, -0.25);
  for (const auto& base : {BaseLoss::huber(), BaseLoss::pseudo_huber()}) {
    const ScaledLoss loss(base, 1.5);
    const auto f = mrisk::fit_ridge(d, loss, mu);
    CHECK(f.converged);
    CHECK(f.ridge_mu == mu);
    CHECK(oracle::kkt(d, loss, f.beta_hat, mu) <= 1e-8);
  }
}

TEST_CASE("a dominant ridge penalty shrinks to zero") {
  const auto d = oracle::t_dataset(100, 10, 2.0, 11);
  const auto f = mrisk::fit_ridge(d, ScaledLoss(BaseLoss::huber(), 1.0), 1e8);
  CHECK(f.converged);
  CHECK(f.beta_hat.norm() <= 1e-4);
}

TEST_CASE("ridge on noiseless data keeps the kkt identity") {
  std::mt19937_64 rng(12);
  mrisk::Dataset d;
  d.X = oracle::gaussian_matrix(120, 8, rng);
  d.y = d.X * Eigen::VectorXd::LinSpaced(8, -1.0, 1.0);
  const ScaledLoss loss(BaseLoss::huber(), 1.0);
  const auto f = mrisk::fit_ridge(d, loss, 0.3);
  CHECK(oracle::kkt(d, loss, f.beta_hat, 0.3) <= 1e-8);
  CHECK(f.beta_hat.norm() < Eigen::VectorXd::LinSpaced(8, -1.0, 1.0).norm());
}

TEST_CASE("ridge solution is closer to the origin than the unregularized one") {
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    const auto d = oracle::t_dataset(400, 120, 2.0, seed);
    const ScaledLoss loss(BaseLoss::huber(), 1.0);
    mrisk::FitOptions o;
    o.kkt_tol = 1e-12;
    const auto b = mrisk::fit(d, loss, o).beta_hat;
    const auto bm = mrisk::fit_ridge(d, loss, std::pow(400.0, -0.25), o).beta_hat;
    CHECK((b - bm).squaredNorm() <= b.squaredNorm() - bm.squaredNorm() + 1e-6);
  }
}

TEST_CASE("ridge smoothing approaches the unregularized fit as n grows") {
  const ScaledLoss loss(BaseLoss::huber(), 1.0);
  mrisk::FitOptions o;
  o.kkt_tol = 1e-12;
  std::vector<double> rel[2];
  for (int k = 0; k < 2; ++k) {
    const int n = k == 0 ? 400 : 1600;
    for (std::uint64_t seed : {31u, 32u, 33u}) {
      const auto d = oracle::t_dataset(n, static_cast<Eigen::Index>(0.3 * n), 2.0, seed);
      const double mu = std::pow(n, -0.25);
      const auto f = mrisk::fit(d, loss, o);
      const auto fm = mrisk::fit_ridge(d, loss, mu, o);
      const double gap = (f.beta_hat - fm.beta_hat).norm();
      rel[k].push_back(gap / f.beta_hat.norm());
      const double lhs = (fm.psi_vals - f.psi_vals).squaredNorm() / n;
      CHECK(lhs <= mu * fm.beta_hat.norm() * gap + 1e-8);
    }
    std::sort(rel[k].begin(), rel[k].end());
  }
  MESSAGE("median relative ridge gap n=400: " << rel[0][1] << ", n=1600: " << rel[1][1]);
  CHECK(rel[1][1] < rel[0][1]);
}

TEST_CASE("warm start at the solution returns immediately") {
  const auto d = oracle::t_dataset(200, 30, 2.0, 41);
  const ScaledLoss loss(BaseLoss::pseudo_huber(), 1.0);
  const auto f = mrisk::fit(d, loss);
  const auto g = mrisk::fit(d, loss, {}, &f.beta_hat);
  CHECK(g.iterations == 0);
  CHECK(g.beta_hat == f.beta_hat);
}
