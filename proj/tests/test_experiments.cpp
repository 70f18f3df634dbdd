#include <cmath>

#include "doctest.h"
#include "swm/errors.hpp"
#include "swm/experiments.hpp"

using namespace swm;

TEST_CASE("log-log slope fit") {
  std::vector<std::pair<double, double>> pts;
  for (double e : {0.25, 0.1, 0.03, 0.01}) pts.emplace_back(e, e * e);
  auto f = fit_loglog_slope(pts);
  CHECK(std::abs(f.slope - 2.0) < 1e-12);
  CHECK(f.r2 == doctest::Approx(1.0));

  pts.clear();
  for (double e : {0.25, 0.1, 0.03}) pts.emplace_back(e, 3.0);
  f = fit_loglog_slope(pts);
  CHECK(std::abs(f.slope) < 1e-12);

  // eps^0.75 with +-5% multiplicative perturbations.
  pts.clear();
  const double noise[] = {0.05, -0.05, 0.03, -0.04};
  const double eps[] = {0.25, 0.0884, 0.03125, 0.011};
  for (int i = 0; i < 4; ++i) pts.emplace_back(eps[i], std::pow(eps[i], 0.75) * (1 + noise[i]));
  f = fit_loglog_slope(pts);
  CHECK(f.slope >= 0.6);
  CHECK(f.slope <= 0.9);
  CHECK(f.ci_low < f.slope);
  CHECK(f.ci_high > f.slope);
  CHECK(f.residuals.size() == 4);

  CHECK_THROWS_AS(fit_loglog_slope({{0.1, 1.0}, {0.2, 2.0}}), ConfigError);
  CHECK_THROWS_AS(fit_loglog_slope({{0.1, 1.0}, {0.2, 0.0}, {0.3, 1.0}}), ConfigError);
}

TEST_CASE("estimate") {
  const std::vector<double> v = {1, 2, 3, 4};
  const auto e = estimate(v);
  CHECK(e.mean == doctest::Approx(2.5));
  CHECK(e.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(e.n == 4);
}

TEST_CASE("parallel map keeps index order") {
  const auto out = parallel_map<int>(50, 4, [](int i) { return i * i; });
  for (int i = 0; i < 50; ++i) CHECK(out[i] == i * i);
  CHECK_THROWS_AS(parallel_map<int>(10, 3,
                                    [](int i) -> int {
                                      if (i == 7) throw NumericalError("seven");
                                      return i;
                                    }),
                  NumericalError);
}

TEST_CASE("plan validation") {
  auto p = default_plan(ExperimentKind::CLT);
  CHECK_NOTHROW(validate_plan(p));
  p.epsilons = {0.1, 0.2, 0.05};
  p.hurst = 1.2;
  p.n_paths = 5;
  try {
    validate_plan(p);
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    const std::string m = e.what();
    CHECK(m.find("strictly decreasing") != std::string::npos);
    CHECK(m.find("[1/2, 1)") != std::string::npos);
    CHECK(m.find("n_paths >= 30") != std::string::npos);
  }
  auto d = default_plan(ExperimentKind::DeterministicLimit);
  d.noise = true;
  CHECK_THROWS_AS(run_deterministic_limit(d), ConfigError);
  auto r = default_plan(ExperimentKind::RateFit);
  r.epsilons = {0.25, 0.1};
  CHECK_THROWS_AS(validate_plan(r), ConfigError);
}

TEST_CASE("grid policy") {
  auto p = default_plan(ExperimentKind::CLT);
  const auto g = plan_grid(p, 2.8128);
  const double eps = p.epsilons.back();
  CHECK(g.half_length() >= 4.8 + p.horizon / std::sqrt(eps) + 2.0 - 1e-12);
  CHECK(g.dt() <= 0.5 * std::sqrt(eps) * g.dx() * (1 + 1e-12));
  CHECK(g.dt() <= 0.1 * eps / 2.8128 * (1 + 1e-12));
  CHECK(g.horizon() == doctest::Approx(p.horizon));
  p.grid.half_length = 5.0;
  CHECK_THROWS_AS(plan_grid(p, 2.8128), ConfigError);
  p.grid.half_length.reset();
  p.grid.dt = 0.1;
  CHECK_THROWS_AS(plan_grid(p, 2.8128), ConfigError);
}

TEST_CASE("coarsened table sums rows") {
  const auto g = GridSpec::make(4.0, 16, 0.01, 8);
  NoiseTable t(3, g);
  const auto c = t.coarsen(2);
  CHECK(c.n_steps() == 4);
  CHECK(c.dt() == 0.02);
  CHECK(c.row(1)[5] == t.row(2)[5] + t.row(3)[5]);
  CHECK_THROWS_AS(t.coarsen(3), ConfigError);
}

TEST_CASE("deterministic experiments") {
  auto p = default_plan(ExperimentKind::LLN);
  p.noise = false;
  p.n_paths = 1;
  p.horizon = 0.2;
  const auto r = run_lln(p);
  CHECK(r.c0 == 0.0);
  CHECK(r.gamma0 == p.gamma);
  CHECK(r.pass_flags.at("error_decreasing").pass);

  auto huge = p;
  huge.eta = 1e3;
  const auto h = run_lln(huge);
  for (const auto& row : h.per_epsilon) CHECK(row.metrics.at("exceeds_eta").mean == 0.0);

  auto d = default_plan(ExperimentKind::DeterministicLimit);
  d.horizon = 0.2;
  const auto dl = run_deterministic_limit(d);
  CHECK(dl.fits.size() == 2);
  CHECK(dl.all_pass());

  // v0 = 0 and the constant map: the wave and heat flows both stay put.
  d.initial = InitialFamily::Constant;
  d.velocity_scale = 0.0;
  d.betas = {0.5};
  const auto flat = run_deterministic_limit(d);
  CHECK(!flat.flags.empty());
  CHECK(!flat.all_pass());
}

TEST_CASE("noise-off CLT is flagged degenerate") {
  auto p = default_plan(ExperimentKind::CLT);
  p.noise = false;
  p.horizon = 0.1;
  const auto r = run_clt(p);
  CHECK(!r.flags.empty());
  CHECK(r.per_epsilon.front().metrics.at("rho_norm").mean == 0.0);
}

TEST_CASE("report is reproducible and serializes") {
  auto p = default_plan(ExperimentKind::RateFit);
  p.n_paths = 30;
  p.horizon = 0.05;
  p.epsilons = {0.25, 0.125, 0.0625};
  p.threads = 2;
  const auto a = run_rate_fit(p);
  p.threads = 1;
  const auto b = run_rate_fit(p);
  CHECK(report_json(a, false) == report_json(b, false));
  CHECK(paths_csv(a) == paths_csv(b));
  const auto js = report_json(a);
  CHECK(js.find("\"runtime_seconds\"") != std::string::npos);
  CHECK(js.find("\"pass_flags\"") != std::string::npos);
  const auto csv = paths_csv(a);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 30 * 3);
}
