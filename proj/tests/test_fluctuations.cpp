#include <cmath>

#include "doctest.h"
#include "swm/errors.hpp"
#include "swm/fluctuations.hpp"
#include "swm/heatflow.hpp"
#include "swm/initial_data.hpp"

using namespace swm;

namespace {

FieldPath heat_path(const Vec3Field& u0, const GridSpec& g, double gamma0) {
  HeatRunConfig cfg(g);
  cfg.gamma0 = gamma0;
  cfg.snapshot_stride = 1;
  return run_heatflow(u0, cfg).snapshots;
}

FieldPath constant_path(const GridSpec& g, std::array<double, 3> p) {
  Vec3Field f(g.n_points());
  for (int j = 0; j < g.n_points(); ++j) f.set(j, p);
  return FieldPath(g.n_steps() + 1, f);
}

double max_abs(const FieldPath& p) {
  double m = 0.0;
  for (const auto& f : p)
    for (int i = 0; i < 3; ++i)
      for (double v : f[i]) m = std::max(m, std::abs(v));
  return m;
}

FieldPath combine(double a, const FieldPath& x, double b, const FieldPath& y) {
  FieldPath out = x;
  for (std::size_t n = 0; n < x.size(); ++n)
    for (int i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < x[n].size(); ++j) out[n][i][j] = a * x[n][i][j] + b * y[n][i][j];
  return out;
}

}  // namespace

TEST_CASE("heat kernel norm") {
  const auto g = GridSpec::make(20.0, 2048, 1.0, 1);
  for (double t : {0.1, 1.0}) {
    const auto G = heat_kernel(g, t);
    CHECK(norm(G, g, NormKind::L2) == doctest::Approx(heat_kernel_l2_norm(t)).epsilon(1e-6));
    CHECK(heat_kernel_l2_norm(t) == doctest::Approx(std::pow(8 * 3.14159265358979323846 * t, -0.25)));
  }
  CHECK_THROWS_AS(heat_kernel_l2_norm(0.0), ConfigError);
}

TEST_CASE("coupling audit") {
  const auto g = GridSpec::make(5.0, 32, 0.01, 10);
  auto a = std::make_shared<const NoiseTable>(1, g);
  auto b = std::make_shared<const NoiseTable>(1, g);
  CHECK_NOTHROW(audit_coupling(a, a));
  CHECK_THROWS_AS(audit_coupling(a, b), CouplingError);
  CHECK_THROWS_AS(audit_coupling(a, nullptr), CouplingError);
  FluctuationInputs in(g);
  in.table = a;
  in.heat_u = constant_path(g, {0, 0, 1});
  in.wave_u = in.heat_u;
  in.wave_v = constant_path(g, {0, 0, 0});
  CHECK_THROWS_AS(solve_z_eps(in), CouplingError);
}

TEST_CASE("constant maps give zero fluctuations") {
  const auto g = GridSpec::make(5.0, 32, 0.01, 20);
  FluctuationInputs in(g);
  in.table = std::make_shared<const NoiseTable>(4, g);
  in.wave_table = in.table;
  in.heat_u = constant_path(g, {0, 0, 1});
  in.wave_u = in.heat_u;
  in.wave_v = constant_path(g, {0, 0, 0});
  in.epsilon = 0.25;
  CHECK(max_abs(solve_z_eps(in)) == 0.0);
  CHECK(max_abs(solve_z_limit(in)) == 0.0);
  CHECK(max_abs(solve_rho(in, RhoVariant::RhoLimit)) == 0.0);
  CHECK(max_abs(solve_rho(in, RhoVariant::RhoEps)) == 0.0);
  CHECK(max_abs(compute_y_eps(in.wave_u, in.heat_u, 0.25, 0.75)) == 0.0);

  // Theta with constant u is the identity shift by xi.
  FieldPath xi = constant_path(g, {0.3, -0.2, 0.1});
  FieldPath v = constant_path(g, {5, 5, 5});
  const auto th = apply_theta(v, xi, in.heat_u, g, 1.0);
  CHECK(path_l2_distance(th, xi, g) == 0.0);
  CHECK(max_abs(apply_theta(constant_path(g, {0, 0, 0}), constant_path(g, {0, 0, 0}), in.heat_u, g, 1.0)) == 0.0);
  const auto lam = solve_lambda(xi, in.heat_u, g, 1.0);
  CHECK(path_l2_distance(lam.value, xi, g) == 0.0);
}

TEST_CASE("y_eps is linear in the gap") {
  const auto g = GridSpec::make(5.0, 32, 0.01, 3);
  const auto u = constant_path(g, {0, 0, 1});
  auto w = u;
  for (auto& f : w) f[0][5] = 0.1;
  auto w2 = u;
  for (auto& f : w2) f[0][5] = 0.2;
  const auto y1 = compute_y_eps(w, u, 0.25, 0.75);
  const auto y2 = compute_y_eps(w2, u, 0.25, 0.75);
  CHECK(y1[2][0][5] == doctest::Approx(0.1 * std::pow(0.25, -0.625)));
  CHECK(y2[2][0][5] == doctest::Approx(2 * y1[2][0][5]));
  CHECK_THROWS_AS(compute_y_eps(w, FieldPath(2, u[0]), 0.25, 0.75), ConfigError);
}

TEST_CASE("single-mode variance of z_eps against the Ornstein-Uhlenbeck law") {
  // u x v = (0, 0, c) constant; each Fourier mode of z_3 is a scalar OU process.
  const double L = 5.0, gamma0 = 1.5, c = 0.8, eps = 0.25;
  const auto g = GridSpec::make(L, 32, 0.005, 200);
  const int k = 2;
  const double xi = g.wavenumber(k);
  const auto amps = smoothed_fractional_amplitudes(0.75, 1.0, MollifierSpec::gaussian(), eps, g);
  const double sigma = c * amps[k] / gamma0;  // noise amplitude of dz per cosine component
  const int paths = 2000;
  double s2 = 0, s4 = 0;
  for (int p = 0; p < paths; ++p) {
    FluctuationInputs in(g);
    in.epsilon = eps;
    in.gamma0 = gamma0;
    in.table = std::make_shared<const NoiseTable>(1000 + p, g);
    in.wave_table = in.table;
    in.heat_u = constant_path(g, {1, 0, 0});
    in.wave_u = in.heat_u;
    in.wave_v = constant_path(g, {0, c, 0});
    const auto z = solve_z_eps(in);
    double a = 0.0;
    for (int j = 0; j < 32; ++j) a += z.back()[2][j] * std::cos(xi * g.x(j));
    a *= 2.0 / 32;
    s2 += a * a;
    s4 += a * a * a * a;
  }
  const double var = s2 / paths;
  const double se = std::sqrt((s4 / paths - var * var) / paths);
  // Exact variance of the semi-implicit recursion, and the continuous OU value.
  const double s = 1.0 / (1.0 + g.dt() * xi * xi / gamma0);
  double vd = 0.0;
  for (int n = 0; n < g.n_steps(); ++n) vd = s * s * (vd + sigma * sigma * g.dt());
  const double T = g.horizon();
  const double vc = (1 - std::exp(-2 * xi * xi * T / gamma0)) * sigma * sigma * gamma0 / (2 * xi * xi);
  MESSAGE("var " << var << " +- " << se << " discrete " << vd << " ou " << vc);
  CHECK(std::abs(var - vd) < 3 * se);
  CHECK(vd == doctest::Approx(vc).epsilon(0.05));
}

TEST_CASE("rho equals Lambda(z) and Lambda is linear") {
  const auto g = GridSpec::make(8.0, 64, 0.01, 60);
  const double gamma0 = 1.0 + 3.6256099082219087 / 2;
  FluctuationInputs in(g);
  in.gamma0 = gamma0;
  in.table = std::make_shared<const NoiseTable>(77, g);
  in.heat_u = heat_path(geodesic_bump(g, 1.5), g, gamma0);
  const auto z = solve_z_limit(in);
  const auto rho = solve_rho(in, RhoVariant::RhoLimit);
  CHECK(path_l2_norm(rho, g) > 0.0);
  for (auto method : {LambdaMethod::Picard, LambdaMethod::Direct}) {
    const auto lam = solve_lambda(z, in.heat_u, g, gamma0, method);
    MESSAGE("iterations " << lam.iterations << " residual " << lam.residual);
    CHECK(path_l2_distance(lam.value, rho, g) <= 1e-6 * path_l2_norm(rho, g));
    CHECK(lam.residual <= 1e-8);
  }
  FluctuationInputs in2 = in;
  in2.table = std::make_shared<const NoiseTable>(78, g);
  const auto z2 = solve_z_limit(in2);
  const auto l1 = solve_lambda(z, in.heat_u, g, gamma0).value;
  const auto l2 = solve_lambda(z2, in.heat_u, g, gamma0).value;
  const auto lc = solve_lambda(combine(2.0, z, -0.5, z2), in.heat_u, g, gamma0).value;
  const auto ref = combine(2.0, l1, -0.5, l2);
  CHECK(path_l2_distance(lc, ref, g) <= 1e-8 * path_l2_norm(ref, g));
}

TEST_CASE("rho without noise is first-order self-convergent") {
  const auto g0 = GridSpec::make(8.0, 64, 1.0, 1);
  const double gamma0 = 1.0, T = 0.4;
  std::vector<Vec3Field> finals;
  for (int n : {40, 80, 160}) {
    const auto g = g0.with_time(T / n, n);
    FluctuationInputs in(g);
    in.gamma0 = gamma0;
    in.epsilon = 0.25;
    in.table = std::make_shared<const NoiseTable>(1, g);
    in.wave_table = in.table;
    in.heat_u = heat_path(geodesic_bump(g, 1.5), g, gamma0);
    in.wave_u = in.heat_u;
    in.wave_u[0] = geodesic_bump(g, 1.4);
    in.wave_v = constant_path(g, {0, 0, 0});
    finals.push_back(solve_rho(in, RhoVariant::RhoEps).back());
  }
  auto dist = [&](const Vec3Field& a, const Vec3Field& b) {
    Vec3Field d(a.size());
    for (int i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < a.size(); ++j) d[i][j] = a[i][j] - b[i][j];
    return norm(d, g0, NormKind::L2);
  };
  const double order = std::log2(dist(finals[0], finals[1]) / dist(finals[1], finals[2]));
  MESSAGE("order " << order);
  CHECK(order >= 0.8);
}

TEST_CASE("rho has zero mean") {
  const auto g = GridSpec::make(8.0, 64, 0.01, 50);
  const double gamma0 = 2.0;
  const auto heat = heat_path(geodesic_bump(g, 1.5), g, gamma0);
  const int paths = 200;
  std::vector<double> s(64, 0.0), s2(64, 0.0);
  for (int p = 0; p < paths; ++p) {
    FluctuationInputs in(g);
    in.gamma0 = gamma0;
    in.table = std::make_shared<const NoiseTable>(500 + p, g);
    in.heat_u = heat;
    const auto rho = solve_rho(in, RhoVariant::RhoLimit);
    for (int j = 0; j < 64; ++j) {
      s[j] += rho.back()[2][j];
      s2[j] += rho.back()[2][j] * rho.back()[2][j];
    }
  }
  for (int j : {24, 28, 32, 36, 40}) {
    const double m = s[j] / paths;
    const double se = std::sqrt((s2[j] / paths - m * m) / paths);
    CHECK(std::abs(m) <= 3 * se);
  }
}
