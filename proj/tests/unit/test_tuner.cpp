#include <cmath>

#include <doctest.h>

#include "mrisk/errors.hpp"
#include "mrisk/tuner.hpp"
#include "oracles.hpp"

using mrisk::BaseLoss;
using mrisk::LambdaGrid;

TEST_CASE("geometric grid examples") {
  const auto g = mrisk::make_grid(1.0, 10.0, 101);
  REQUIRE(g.size() == 101);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == doctest::Approx(std::pow(10.0, i / 100.0)).epsilon(1e-14));
  CHECK(g[0] == 1.0);
  CHECK(g[100] == 10.0);

  const auto h = mrisk::make_grid(1.0, 4.0, 3);
  CHECK(h[0] == 1.0);
  CHECK(h[1] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(h[2] == 4.0);

  const auto narrow = mrisk::make_grid(2.0, 2.0000001, 2);
  CHECK(narrow.size() == 2);
  CHECK(narrow[0] == doctest::Approx(2.0));
  CHECK(narrow[1] == doctest::Approx(2.0));
  CHECK(narrow[0] < narrow[1]);
}

TEST_CASE("grid preconditions") {
  CHECK_THROWS_AS(mrisk::make_grid(0.0, 1.0, 5), mrisk::InvalidParameter);
  CHECK_THROWS_AS(mrisk::make_grid(2.0, 1.0, 5), mrisk::InvalidParameter);
  CHECK_THROWS_AS(mrisk::make_grid(1.0, 1.0, 5), mrisk::InvalidParameter);
  CHECK_THROWS_AS(mrisk::make_grid(1.0, 2.0, 1), mrisk::InvalidParameter);
  CHECK_THROWS_AS(LambdaGrid::from_points({}), mrisk::InvalidParameter);
  CHECK_THROWS_AS(LambdaGrid::from_points({2.0, 1.0}), mrisk::InvalidParameter);
  CHECK_THROWS_AS(LambdaGrid::from_points({-1.0}), mrisk::InvalidParameter);
}

TEST_CASE("single-point grid selects that point") {
  const auto d = oracle::t_dataset(200, 40, 2.0, 1);
  const auto rep = mrisk::tune(d, BaseLoss::huber(), LambdaGrid::from_points({1.7}));
  CHECK(rep.selected_lambda == 1.7);
  CHECK(rep.selected_index == 0);
  CHECK(rep.rows.size() == 1);
}

TEST_CASE("selected row minimizes the estimate over non-degenerate rows") {
  const auto d = oracle::t_dataset(300, 60, 2.0, 2);
  const auto rep = mrisk::tune(d, BaseLoss::huber(), mrisk::make_grid(0.5, 8.0, 15));
  const auto& sel = rep.rows[rep.selected_index];
  CHECK_FALSE(sel.degenerate);
  CHECK(rep.selected_lambda == sel.lambda);
  for (const auto& r : rep.rows) {
    if (!r.degenerate) CHECK(sel.r_hat <= r.r_hat);
    CHECK(r.kkt_residual <= 1e-8);
  }
}

TEST_CASE("ties go to the smaller index") {
  const auto d = oracle::t_dataset(300, 60, 2.0, 3);
  const auto base = mrisk::tune(d, BaseLoss::huber(), mrisk::make_grid(0.5, 8.0, 9));
  const double best = base.selected_lambda;
  std::vector<double> pts(base.rows.size());
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = base.rows[i].lambda;
  pts.insert(pts.begin() + static_cast<long>(base.selected_index), best);
  const auto dup = mrisk::tune(d, BaseLoss::huber(), LambdaGrid::from_points(pts));
  CHECK(dup.selected_index == base.selected_index);
  CHECK(dup.rows[dup.selected_index].r_hat == doctest::Approx(dup.rows[dup.selected_index + 1].r_hat).epsilon(1e-9));
}

TEST_CASE("parallel and warm-start modes agree") {
  const auto d = oracle::t_dataset(300, 60, 2.0, 4);
  mrisk::TuneOptions warm, par;
  warm.fit.kkt_tol = par.fit.kkt_tol = 1e-11;
  par.mode = mrisk::TuneMode::Parallel;
  par.threads = 3;
  const auto grid = mrisk::make_grid(0.5, 8.0, 12);
  for (const auto& base : {BaseLoss::huber(), BaseLoss::pseudo_huber()}) {
    const auto a = mrisk::tune(d, base, grid, warm);
    const auto b = mrisk::tune(d, base, grid, par);
    CHECK(a.selected_index == b.selected_index);
    for (std::size_t i = 0; i < a.rows.size(); ++i)
      CHECK(a.rows[i].r_hat == doctest::Approx(b.rows[i].r_hat).epsilon(1e-6));
  }
}

TEST_CASE("refining the grid never raises the selected estimate") {
  const auto d = oracle::t_dataset(300, 60, 2.0, 5);
  const auto coarse = mrisk::tune(d, BaseLoss::huber(), mrisk::make_grid(1.0, 10.0, 6));
  const auto fine = mrisk::tune(d, BaseLoss::huber(), mrisk::make_grid(1.0, 10.0, 11));
  CHECK(fine.rows[fine.selected_index].r_hat <= coarse.rows[coarse.selected_index].r_hat * (1 + 1e-9));
}

TEST_CASE("all-degenerate grid fails") {
  const auto d = oracle::t_dataset(100, 40, 1.0, 6, 50.0);
  CHECK_THROWS_AS(mrisk::tune(d, BaseLoss::huber(), LambdaGrid::from_points({1e-3})), mrisk::NumericalError);
}
