// Acceptance suite: one PASS/FAIL line per criterion.
//
//   mrisk_acceptance            run criteria 1-9
//   mrisk_acceptance --only 4   run a single criterion
//
// Exit status is nonzero if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mrisk/asymptotics.hpp"
#include "mrisk/risk.hpp"
#include "mrisk/simlab.hpp"
#include "mrisk/tuner.hpp"
#include "oracles.hpp"

namespace {

using namespace mrisk;
using Clock = std::chrono::steady_clock;

// Tolerances and budgets, one block per criterion.
constexpr double kProxTol = 1e-7;
constexpr double kProxBudgetS = 5.0;
constexpr double kKktTol = 1e-8;
constexpr double kKktBudgetS = 30.0;
constexpr double kTraceExactTol = 1e-4;
constexpr double kTraceSmoothRel = 5e-3;
constexpr double kTraceBudgetS = 120.0;
constexpr double kRiskRelTol = 0.10;
constexpr double kRiskBudgetS = 600.0;
constexpr double kSystemResidualTol = 1e-8;
constexpr double kOlsTol = 1e-3;
constexpr double kAlphaVsRiskRel = 0.05;
constexpr double kSystemBudgetS = 900.0;
constexpr double kTuningExcess = 0.10;
constexpr double kTuningBudgetS = 1800.0;
constexpr double kHolderFactor = 3.0;
constexpr double kRidgeTraceTol = 0.05;
constexpr double kRidgeBetaRel = 0.05;
constexpr double kVanishingFactor = 2.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Dataset desk_dataset(int n, int p, const std::string& noise, std::uint64_t seed) {
  return generate_dataset(n, p, DesignSpec{}, BetaStarSpec{}, NoiseModel::parse(noise), seed);
}

// Spearman rank correlation without tie correction (inputs are distinct here).
double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

Outcome prox_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> ux(-8.0, 8.0), ulog(-2.0, 2.0);
  std::bernoulli_distribution coin;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const bool huber = coin(rng);
    const double lam = std::exp(ulog(rng)), kappa = std::exp(ulog(rng)), x = ux(rng);
    const ScaledLoss loss(huber ? BaseLoss::huber() : BaseLoss::pseudo_huber(), lam);
    const double ref = oracle::prox_bruteforce(loss.kind(), lam, kappa, x);
    worst = std::max(worst, std::abs(loss.prox(kappa, x) - ref));
  }
  const double t = seconds_since(t0);
  return {worst <= kProxTol && t < kProxBudgetS,
          fmt("1000 cases, max |prox - brute force| = %.2e (tol %.0e), %.2fs (budget %.0fs)", worst, kProxTol, t,
              kProxBudgetS)};
}

Outcome kkt_exactness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> un(50, 500);
  std::uniform_real_distribution<double> ufrac(0.1, 0.5), ulam(0.5, 5.0);
  std::bernoulli_distribution coin;
  const char* noises[] = {"t:2", "gauss:1", "t:1", "gauss+cauchy"};
  int converged = 0, ridge_converged = 0;
  double worst = 0.0, worst_ridge = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int n = un(rng);
    const int p = std::max(1, static_cast<int>(ufrac(rng) * n));
    const auto data = desk_dataset(n, p, noises[i % 4], rng());
    const ScaledLoss loss(coin(rng) ? BaseLoss::huber() : BaseLoss::pseudo_huber(), ulam(rng));
    const auto f = fit(data, loss);
    if (f.converged) {
      ++converged;
      worst = std::max(worst, oracle::kkt(data, loss, f.beta_hat));
    }
    const double mu = std::pow(static_cast<double>(n), -0.25);
    const auto fr = fit_ridge(data, loss, mu);
    if (fr.converged) {
      ++ridge_converged;
      worst_ridge = std::max(worst_ridge, oracle::kkt(data, loss, fr.beta_hat, mu));
    }
  }
  const double t = seconds_since(t0);
  return {converged == 50 && ridge_converged == 50 && worst <= kKktTol && worst_ridge <= kKktTol && t < kKktBudgetS,
          fmt("converged %d/50 plain, %d/50 ridge; max kkt %.2e plain, %.2e ridge (tol %.0e), %.1fs (budget %.0fs)",
              converged, ridge_converged, worst, worst_ridge, kKktTol, t, kKktBudgetS)};
}

Outcome trace_oracle() {
  const auto t0 = Clock::now();
  FitOptions o;
  o.kkt_tol = 1e-13;
  const ScaledLoss huber(BaseLoss::huber(), 1.0);
  int exact = 0, tried = 0, rejected = 0;
  double worst_gap = 0.0;
  for (std::uint64_t seed = 1; tried < 20; ++seed) {
    const int n = 40 + static_cast<int>(seed * 7 % 61), p = n / 4;
    const auto data = desk_dataset(n, p, "t:2", derive_seed(1000, seed));
    const auto f = fit(data, huber, o);
    if (((f.residuals.cwiseAbs().array() - 1.0).abs() < 1e-3).any()) {
      ++rejected;
      continue;
    }
    ++tried;
    const double closed = trace_jacobian(f, data, huber, o).trace_v;
    const double fd = trace_jacobian_fd_oracle(data, huber, o, 1e-6, n);
    worst_gap = std::max(worst_gap, std::abs(fd - closed));
    if (std::abs(fd - closed) <= kTraceExactTol && std::round(fd) == closed) ++exact;
  }
  const ScaledLoss ph(BaseLoss::pseudo_huber(), 1.0);
  double worst_rel = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto data = desk_dataset(60, 10, "t:2", derive_seed(2000, seed));
    const auto f = fit(data, ph, o);
    const double closed = trace_jacobian(f, data, ph, o).trace_v;
    const double fd = trace_jacobian_fd_oracle(data, ph, o, 1e-4, 60);
    worst_rel = std::max(worst_rel, std::abs(closed / fd - 1.0));
  }
  const double t = seconds_since(t0);
  return {exact == 20 && worst_rel <= kTraceSmoothRel && t < kTraceBudgetS,
          fmt("huber exact %d/20 (max |fd - count| %.1e, %d near-kink draws skipped); pseudo-huber max rel %.2e "
              "(tol %.1e); %.1fs (budget %.0fs)",
              exact, worst_gap, rejected, worst_rel, kTraceSmoothRel, t, kTraceBudgetS)};
}

Outcome risk_consistency() {
  const auto t0 = Clock::now();
  const double lambdas[] = {1.0, 2.0, 5.0};
  std::map<double, std::vector<double>> rel;
  for (int s = 0; s < 20; ++s) {
    const auto data = desk_dataset(2000, 600, "t:2", derive_seed(4, s));
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(600);
    for (double lam : lambdas) {
      const ScaledLoss loss(BaseLoss::huber(), lam);
      const auto f = fit(data, loss, {}, &warm);
      warm = f.beta_hat;
      const double r = oracle_risk(f, data);
      const double rh = estimate_risk(f, data, loss).r_hat;
      rel[lam].push_back(std::abs(rh / r - 1.0));
    }
  }
  bool ok = true;
  std::string d;
  for (double lam : lambdas) {
    const double m = median(rel[lam]);
    ok = ok && m <= kRiskRelTol;
    d += fmt("lambda=%g median |R_hat/R-1| = %.4f; ", lam, m);
  }
  const double t = seconds_since(t0);
  ok = ok && t < kRiskBudgetS;
  return {ok, d + fmt("tol %.2f, %.0fs (budget %.0fs)", kRiskRelTol, t, kRiskBudgetS)};
}

Outcome system_solver() {
  const auto t0 = Clock::now();
  double worst_res = 0.0;
  auto track = [&](const SystemSolution& s, const ScaledLoss& loss, const NoiseModel& w, double g) {
    const auto [r1, r2] = system_residuals(s.alpha, s.kappa, loss, w, g);
    worst_res = std::max({worst_res, std::abs(r1), std::abs(r2)});
  };

  const auto gauss = NoiseModel::gaussian(1.0);
  const ScaledLoss square(BaseLoss::huber(), 1e6);
  double worst_ols = 0.0;
  for (double g : {0.25, 0.5}) {
    const auto s = solve_system(square, gauss, g);
    track(s, square, gauss, g);
    worst_ols = std::max(worst_ols, std::abs(s.alpha_sq() - g / (1 - g)));
  }

  const auto t2 = NoiseModel::student_t(2.0);
  const ScaledLoss huber2(BaseLoss::huber(), 2.0);
  const auto s = solve_system(huber2, t2, 0.3);
  track(s, huber2, t2, 0.3);
  for (const auto& pt : alpha_curve(BaseLoss::huber(), t2, 0.3, make_grid(1.0, 10.0, 101))) {
    if (!pt.ok) worst_res = std::max(worst_res, 1.0);
    track(SystemSolution{std::sqrt(pt.alpha_sq), pt.kappa, pt.residual, 0, {}}, ScaledLoss(BaseLoss::huber(), pt.lambda),
          t2, 0.3);
  }

  std::vector<double> risks;
  for (int rep = 0; rep < 20; ++rep) {
    const auto data = desk_dataset(4000, 1200, "t:2", derive_seed(5, rep));
    risks.push_back(oracle_risk(fit(data, huber2), data));
  }
  const double med = median(risks);
  const double rel = std::abs(s.alpha_sq() / med - 1.0);
  const double t = seconds_since(t0);
  const bool ok = worst_res <= kSystemResidualTol && worst_ols <= kOlsTol && rel <= kAlphaVsRiskRel && t < kSystemBudgetS;
  return {ok, fmt("(a) max residual %.1e (tol %.0e); (b) max |alpha^2 - g/(1-g)| = %.2e (tol %.0e); "
                  "(c) alpha^2 = %.4f vs median R = %.4f at n=4000, rel %.4f (tol %.2f); %.0fs (budget %.0fs)",
                  worst_res, kSystemResidualTol, worst_ols, kOlsTol, s.alpha_sq(), med, rel, kAlphaVsRiskRel, t,
                  kSystemBudgetS)};
}

Outcome adaptive_tuning() {
  const auto t0 = Clock::now();
  const auto grid = make_grid(1.0, 10.0, 101);
  bool ok = true;
  std::string d;
  for (double sigma : {1.0, 2.0, 3.0}) {
    std::vector<double> excess;
    const std::string noise = "scaled-t:" + std::to_string(sigma) + ":2";
    for (int rep = 0; rep < 20; ++rep) {
      const auto data = desk_dataset(2000, 600, noise, derive_seed(6, static_cast<std::uint64_t>(sigma), rep));
      const auto report = tune(data, BaseLoss::huber(), grid);
      double rmin = std::numeric_limits<double>::infinity();
      for (const auto& row : report.rows) rmin = std::min(rmin, row.beta_hat.squaredNorm());
      const double rsel = report.rows[report.selected_index].beta_hat.squaredNorm();
      excess.push_back((rsel - rmin) / rmin);
    }
    const double m = median(excess);
    ok = ok && m <= kTuningExcess;
    d += fmt("sigma=%g median excess %.4f; ", sigma, m);
  }
  const double t = seconds_since(t0);
  ok = ok && t < kTuningBudgetS;
  return {ok, d + fmt("tol %.2f, %.0fs (budget %.0fs)", kTuningExcess, t, kTuningBudgetS)};
}

Outcome holder_sanity() {
  const auto curve = alpha_curve(BaseLoss::huber(), NoiseModel::student_t(2.0), 0.3, make_grid(1.0, 10.0, 101));
  std::vector<double> ratios;
  bool all_ok = true;
  for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
    all_ok = all_ok && curve[i].ok && curve[i + 1].ok;
    ratios.push_back(std::abs(curve[i + 1].alpha_sq - curve[i].alpha_sq) /
                     std::sqrt(curve[i + 1].lambda - curve[i].lambda));
  }
  const double med = median(ratios);
  const double mx = *std::max_element(ratios.begin(), ratios.end());
  return {all_ok && mx <= kHolderFactor * med,
          fmt("all points solved: %s; max ratio %.4f, median %.4f, max/median %.2f (bound %.0f)", all_ok ? "yes" : "no",
              mx, med, mx / med, kHolderFactor)};
}

Outcome ridge_continuity() {
  const int n = 2000, p = 600;
  const double mu = std::pow(n, -0.25);
  const ScaledLoss loss(BaseLoss::huber(), 1.0);
  std::vector<double> dtrace, dbeta;
  for (int rep = 0; rep < 10; ++rep) {
    const auto data = desk_dataset(n, p, "t:2", derive_seed(8, rep));
    const auto f = fit(data, loss);
    const auto fm = fit_ridge(data, loss, mu, {}, &f.beta_hat);
    const double tv = trace_jacobian(f, data, loss).trace_v;
    const double tm = trace_jacobian(fm, data, loss).trace_v;
    dtrace.push_back(std::abs(tm - tv) / n);
    dbeta.push_back((fm.beta_hat - f.beta_hat).norm() / f.beta_hat.norm());
  }
  const double mt = median(dtrace), mb = median(dbeta);
  return {mt <= kRidgeTraceTol && mb <= kRidgeBetaRel,
          fmt("mu = n^-1/4 = %.4f, huber lambda=1: median |tr V_mu - tr V|/n = %.4f (tol %.2f); "
              "median |b_mu - b|/|b| = %.4f (tol %.2f)",
              mu, mt, kRidgeTraceTol, mb, kRidgeBetaRel)};
}

Outcome robustness(const std::filesystem::path& outdir) {
  const auto t0 = Clock::now();
  std::filesystem::create_directories(outdir);
  auto run = [&](ExperimentConfig c, const std::string& name) {
    c.output_path = (outdir / (name + ".csv")).string();
    return run_experiment(c);
  };
  auto rel_err_by_variant = [](const std::vector<ExperimentRecord>& recs) {
    std::map<std::string, std::vector<double>> m;
    for (const auto& r : recs)
      m[r.variant].push_back(r.failed ? std::nan("") : std::abs(r.R_hat / r.R - 1.0));
    std::map<std::string, double> med;
    for (auto& [k, v] : m) {
      // failed rows count as infinite error
      for (double& x : v)
        if (std::isnan(x)) x = std::numeric_limits<double>::infinity();
      med[k] = median(v);
    }
    return med;
  };
  bool ok = true;
  std::string d;
  auto all_finite = [&](const std::map<std::string, double>& med, const std::string& tag) {
    bool f = true;
    for (const auto& [k, v] : med) f = f && std::isfinite(v);
    ok = ok && f;
    d += tag + (f ? " finite" : " NON-FINITE") + "; ";
  };

  ExperimentConfig ns;
  ns.experiment = Experiment::NonSmoothNoise;
  ns.noise = "ceil-t:3:2";
  ns.lambda = 2.0;
  ns.repetitions = 10;
  ns.seed = 91;
  const auto m1 = rel_err_by_variant(run(ns, "non_smooth_noise"));
  all_finite(m1, fmt("non-smooth median %.3f", m1.begin()->second));

  ExperimentConfig un;
  un.experiment = Experiment::Universality;
  un.lambda = 2.0;
  un.repetitions = 10;
  un.seed = 92;
  const auto m2 = rel_err_by_variant(run(un, "universality"));
  std::string ud = "universality";
  for (const auto& [k, v] : m2) ud += fmt(" %s:%.3f", k.c_str(), v);
  all_finite(m2, ud);

  ExperimentConfig gs;
  gs.experiment = Experiment::GammaSweep;
  gs.n = 1000;
  gs.p = 250;
  gs.lambda = 2.0;
  gs.repetitions = 10;
  gs.seed = 93;
  const auto m3 = rel_err_by_variant(run(gs, "gamma_sweep"));
  std::vector<double> gam, err;
  std::string gd = "gamma sweep";
  for (double g : gs.gammas) {
    const auto it = std::find_if(m3.begin(), m3.end(), [&](const auto& kv) {
      return std::abs(std::stod(kv.first.substr(kv.first.find('=') + 1)) - g) < 1e-12;
    });
    gam.push_back(g);
    err.push_back(it == m3.end() ? std::nan("") : it->second);
    gd += fmt(" %.2f:%.3f", g, err.back());
  }
  all_finite(m3, gd);
  const double rho = spearman(gam, err);
  ok = ok && rho > 0.0;
  d += fmt("spearman %.2f; ", rho);

  ExperimentConfig vs;
  vs.experiment = Experiment::VanishingSmooth;
  vs.lambda = 2.0;
  vs.repetitions = 10;
  vs.seed = 94;
  const auto m4 = rel_err_by_variant(run(vs, "vanishing_smooth"));
  all_finite(m4, "vanishing smooth");
  const double van = m4.at("smooth=vanishing"), fix = m4.at("smooth=fixed");
  const bool within = van <= kVanishingFactor * fix;
  ok = ok && within;
  d += fmt("vanishing %.3f vs fixed %.3f (bound %.0fx); ", van, fix, kVanishingFactor);

  return {ok, d + fmt("%.0fs", seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria 1-9"};
  int only = 0;
  std::string outdir = "acceptance_out";
  app.add_option("--only", only, "Run a single criterion (1-9)")->check(CLI::Range(1, 9));
  app.add_option("--out", outdir, "Directory for experiment CSVs")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"prox oracle equivalence", prox_oracle},
      {"kkt exactness", kkt_exactness},
      {"trace oracle", trace_oracle},
      {"risk consistency", risk_consistency},
      {"system solver", system_solver},
      {"adaptive tuning near-oracle", adaptive_tuning},
      {"hoelder sanity", holder_sanity},
      {"ridge-smoothing continuity", ridge_continuity},
      {"robustness scenarios", [&] { return robustness(outdir); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %zu %s: %s | %s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
