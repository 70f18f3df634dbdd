#include "swm/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>

#include "swm/errors.hpp"
#include "swm/fluctuations.hpp"
#include "swm/heatflow.hpp"
#include "swm/initial_data.hpp"
#include "swm/noise.hpp"
#include "swm/reference.hpp"
#include "swm/stats.hpp"
#include "swm/wavemap.hpp"

namespace swm {

double closed_form_c0(double hurst, double a_h) { return a_h * std::tgamma(1.0 - hurst); }
double closed_form_c1(double hurst, double a_h) { return a_h * std::tgamma(2.0 - hurst); }

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double l2_diff(const Vec3Field& a, const Vec3Field& b, const GridSpec& g) {
  Vec3Field d(a.size());
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < a.size(); ++j) d[i][j] = a[i][j] - b[i][j];
  return norm(d, g, NormKind::L2);
}

SphereState at_rest(Vec3Field u) {
  SphereState s;
  s.v = Vec3Field(u.size());
  s.u = std::move(u);
  return s;
}

OracleCheck check_moments() {
  OracleCheck r;
  r.name = "moments";
  const auto base = mollify(make_fractional_density(0.75, 1.0), MollifierSpec::gaussian());
  const auto m = moments(base);
  const double c0 = closed_form_c0(0.75, 1.0), c1 = closed_form_c1(0.75, 1.0);
  r.values = {{"c0", m.c0}, {"c0_closed_form", c0}, {"c1", m.c1}, {"c1_closed_form", c1}};
  bool ok = std::abs(m.c0 - c0) <= 1e-4 && std::abs(m.c1 - c1) <= 1e-4;
  double worst = 0.0;
  for (double eps : {0.04, 0.25, 1.0}) {
    const auto me = moments(rescale(base, eps));
    worst = std::max({worst, rel(me.c0, m.c0), rel(eps * me.c1, m.c1)});
  }
  r.values.emplace_back("rescale_worst_rel", worst);
  r.pass = ok && worst <= 1e-6;
  r.detail = "|c0 - Gamma(1/4)|, |c1 - Gamma(5/4)| <= 1e-4; rescaling within 1e-6 relative";
  return r;
}

OracleCheck check_covariance_oracle() {
  OracleCheck r;
  r.name = "covariance";
  const auto g = GridSpec::make(10.0, 128, 0.01, 10000);
  const auto d = mollify(make_fractional_density(0.75, 1.0), MollifierSpec::gaussian());
  const auto cov = check_covariance(d, g, 10000, 99, 10, 2);
  r.values.emplace_back("covariance_max_z", cov.max_z);
  bool ok = cov.pass;
  for (double eps : {0.25, 1.0}) {
    const auto s = check_scaling_identity(MollifierSpec::gaussian(), 0.75, 1.0, eps, g.with_time(0.01, 1), 10000, 17);
    std::ostringstream key;
    key << "scaling_max_z_eps_" << eps;
    r.values.emplace_back(key.str(), s.max_z);
    ok = ok && s.pass;
  }
  r.pass = ok;
  r.detail = "10 lags within 3 standard errors of the lattice target; scaling identity at eps 0.25 and 1";
  return r;
}

OracleCheck check_heat_energy() {
  OracleCheck r;
  r.name = "heat_energy";
  const auto g0 = GridSpec::make(10.0, 512, 1.0, 1);
  const double dx2 = g0.dx() * g0.dx();
  const auto u0 = geodesic_bump(g0, 1.5);
  double drift[2];
  int i = 0;
  for (double dt : {0.25 * dx2, 0.125 * dx2}) {
    const int n = static_cast<int>(std::ceil(1.0 / dt));
    HeatRunConfig cfg(g0.with_time(1.0 / n, n));
    drift[i++] = run_heatflow(u0, cfg).ledger.max_relative_drift();
  }
  const double ratio = drift[0] / drift[1];
  r.values = {{"drift", drift[0]}, {"drift_half_dt", drift[1]}, {"ratio", ratio}};
  r.pass = drift[0] <= 1e-3 && std::abs(ratio - 2.0) <= 0.6;
  r.detail = "drift <= 1e-3 and halving dt divides it by 2 within 30%";
  return r;
}

OracleCheck check_heat_equivariant() {
  OracleCheck r;
  r.name = "heat_equivariant";
  const auto g0 = GridSpec::make(10.0, 256, 1.0, 1);
  const double gamma0 = 1.3;
  const auto th0 = bump_angle(g0, 1.5);
  const int n = static_cast<int>(std::ceil(0.5 / (0.2 * gamma0 * g0.dx() * g0.dx())));
  const auto g = g0.with_time(0.5 / n, n);
  HeatRunConfig cfg(g);
  cfg.gamma0 = gamma0;
  cfg.scheme = HeatScheme::Explicit;
  const auto th = equator_angle(run_heatflow(great_circle(th0), cfg).final_state);
  const double e = reference::relative_l2(th, reference::heat_explicit(th0, g, gamma0, g.dt(), n));
  const double exact = reference::relative_l2(th, reference::heat_exact(th0, g, gamma0, 0.5));
  r.values = {{"rel_l2_vs_scalar_scheme", e}, {"rel_l2_vs_exact", exact}};
  r.pass = e <= 1e-5;
  r.detail = "vector flow of a great circle against forward Euler on the angle, relative L2 <= 1e-5";
  return r;
}

OracleCheck check_wave_equivariant() {
  OracleCheck r;
  r.name = "wave_equivariant";
  const auto g0 = GridSpec::make(8.0, 128, 1e-4, 1);
  const double eps = 0.25, gamma = 1.0;
  const auto th0 = bump_angle(g0, 1.5);
  const auto ref = reference::damped_wave_rk4(th0, ScalarField(128, 0.0), g0, eps, gamma, 1e-3, 500);
  const auto g = g0.with_time(5e-5, 10000);
  WaveRunConfig cfg(g);
  cfg.epsilon = eps;
  cfg.gamma = gamma;
  cfg.record_energy = false;
  const auto run = run_wavemap(at_rest(great_circle(th0)), cfg);
  const double e = reference::relative_l2(equator_angle(run.final_state.u), ref);
  r.values = {{"rel_l2", e}};
  r.pass = e <= 1e-4;
  r.detail = "deterministic wave map of a great circle against RK4 on the damped wave, eps 0.25";
  return r;
}

OracleCheck check_constraints() {
  OracleCheck r;
  r.name = "constraints";
  const auto g = GridSpec::make(8.0, 128, 2e-3, 300);
  const double eps = 0.25;
  WaveRunConfig cfg(g);
  cfg.epsilon = eps;
  cfg.noise = NoiseSource::coupled(std::make_shared<const NoiseTable>(3, g), 0.75, 1.0, MollifierSpec::gaussian(),
                                   eps, g);
  SphereState s = at_rest(geodesic_bump(g, 1.5));
  s.v = normal_velocity_profile(g);
  double sphere = 0, tangency = 0;
  run_wavemap(s, cfg, [&](int, const SphereState& st) {
    const auto d = constraint_defect(st);
    sphere = std::max(sphere, d.sphere);
    tangency = std::max(tangency, d.tangency);
  });
  HeatRunConfig hc(GridSpec::make(10.0, 256, 1e-3, 500));
  double heat_sphere = 0;
  run_heatflow(geodesic_bump(hc.grid, 1.5), hc, [&](int, const Vec3Field& u) {
    heat_sphere = std::max(heat_sphere, constraint_defect(at_rest(u)).sphere);
  });
  r.values = {{"wave_sphere", sphere}, {"wave_tangency", tangency}, {"heat_sphere", heat_sphere}};
  r.pass = sphere <= 1e-12 && tangency <= 1e-10 && heat_sphere <= 1e-12;
  r.detail = "| |u| - 1 | <= 1e-12 and |u . v| <= 1e-10 after every step";
  return r;
}

OracleCheck check_parseval() {
  OracleCheck r;
  r.name = "parseval";
  const auto g = GridSpec::make(3.0, 96, 0.01, 1);
  const auto f = sample(g, [](double x) { return std::exp(-x * x) * (1 + x); });
  const auto h = sample(g, [](double x) { return std::exp(-2 * x * x) * std::cos(x); });
  const double lhs = inner(derivative(f, g, 1), h, g);
  const double rhs = -inner(f, derivative(h, g, 1), g);
  Spectral sp(g);
  std::vector<std::complex<double>> F(g.n_points() / 2 + 1);
  sp.forward(f, F);
  double s = std::norm(F[0]) + std::norm(F.back());
  for (std::size_t m = 1; m + 1 < F.size(); ++m) s += 2 * std::norm(F[m]);
  const double l2 = std::pow(norm(f, g, NormKind::L2), 2);
  const double parseval = rel(g.dx() * s / g.n_points(), l2);
  const double ibp = rel(lhs, rhs);
  r.values = {{"parseval_rel", parseval}, {"ibp_rel", ibp}};
  r.pass = parseval <= 1e-10 && ibp <= 1e-10;
  r.detail = "both identities within 1e-10 relative";
  return r;
}

FieldPath heat_path(const Vec3Field& u0, const GridSpec& g, double gamma0) {
  HeatRunConfig cfg(g);
  cfg.gamma0 = gamma0;
  cfg.snapshot_stride = 1;
  return run_heatflow(u0, cfg).snapshots;
}

FieldPath combine(double a, const FieldPath& x, double b, const FieldPath& y) {
  FieldPath out = x;
  for (std::size_t n = 0; n < x.size(); ++n)
    for (int i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < x[n].size(); ++j) out[n][i][j] = a * x[n][i][j] + b * y[n][i][j];
  return out;
}

OracleCheck check_lambda() {
  OracleCheck r;
  r.name = "lambda";
  const auto g = GridSpec::make(8.0, 64, 0.01, 60);
  const double gamma0 = 1.0 + closed_form_c0(0.75, 1.0) / 2;
  FluctuationInputs in(g);
  in.gamma0 = gamma0;
  in.table = std::make_shared<const NoiseTable>(77, g);
  in.heat_u = heat_path(geodesic_bump(g, 1.5), g, gamma0);
  const auto z = solve_z_limit(in);
  const auto rho = solve_rho(in, RhoVariant::RhoLimit);
  const auto lam = solve_lambda(z, in.heat_u, g, gamma0);
  const double identity = path_l2_distance(lam.value, rho, g) / path_l2_norm(rho, g);

  FluctuationInputs in2 = in;
  in2.table = std::make_shared<const NoiseTable>(78, g);
  const auto z2 = solve_z_limit(in2);
  const auto l2 = solve_lambda(z2, in.heat_u, g, gamma0).value;
  const auto lc = solve_lambda(combine(2.0, z, -0.5, z2), in.heat_u, g, gamma0).value;
  const auto ref = combine(2.0, lam.value, -0.5, l2);
  const double linear = path_l2_distance(lc, ref, g) / path_l2_norm(ref, g);
  r.values = {{"residual", lam.residual}, {"linearity_rel", linear}, {"rho_vs_lambda_z_rel", identity}};
  r.pass = lam.residual <= 1e-8 && linear <= 1e-8 && identity <= 1e-6;
  r.detail = "fixed-point residual and linearity <= 1e-8 relative; rho = Lambda(z) within 1e-6";
  return r;
}

OracleCheck check_prepare_initial() {
  OracleCheck r;
  r.name = "prepare_initial";
  const auto g = GridSpec::make(4.0, 4096, 1.0, 1);
  ScalarField th = sample(g, [](double x) { return 1.2 * std::pow(std::abs(x), 0.55) * std::exp(-x * x); });
  const auto u = great_circle(th);
  const double du = norm(u, g, NormKind::Hdot, 1);
  std::vector<std::pair<double, double>> pts;
  bool bounded = true;
  for (int n : {8, 16, 32, 64}) {
    const double e = l2_diff(u, prepare_initial(u, g, n), g);
    pts.emplace_back(n, e);
    bounded = bounded && e <= du / n;
  }
  const auto fit = fit_loglog_slope(pts);
  r.values = {{"slope", fit.slope}, {"r2", fit.r2}};
  r.pass = bounded && std::abs(fit.slope + 1.0) <= 0.2;
  r.detail = "|u - prepare_initial(u, n)| against n has slope -1 +/- 0.2 and stays below |Du| / n";
  return r;
}

OracleCheck check_heat_kernel() {
  OracleCheck r;
  r.name = "heat_kernel";
  const auto g = GridSpec::make(20.0, 2048, 0.01, 1);
  double worst = 0.0;
  for (double t : {0.1, 1.0}) {
    const double num = norm(heat_kernel(g, t), g, NormKind::L2);
    worst = std::max(worst, rel(num, std::pow(8.0 * std::numbers::pi * t, -0.25)));
  }
  r.values = {{"worst_rel", worst}};
  r.pass = worst <= 1e-6;
  r.detail = "|G_t|_{L2} against (8 pi t)^{-1/4} at t = 0.1, 1";
  return r;
}

const std::map<std::string, std::function<OracleCheck()>>& registry() {
  static const std::map<std::string, std::function<OracleCheck()>> r = {
      {"moments", check_moments},
      {"covariance", check_covariance_oracle},
      {"heat_energy", check_heat_energy},
      {"heat_equivariant", check_heat_equivariant},
      {"wave_equivariant", check_wave_equivariant},
      {"constraints", check_constraints},
      {"parseval", check_parseval},
      {"lambda", check_lambda},
      {"prepare_initial", check_prepare_initial},
      {"heat_kernel", check_heat_kernel},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& oracle_names() {
  static const std::vector<std::string> names = {"moments",     "covariance", "heat_energy",     "heat_equivariant",
                                                 "wave_equivariant", "constraints", "parseval", "lambda",
                                                 "prepare_initial", "heat_kernel"};
  return names;
}

OracleCheck run_oracle(const std::string& name) {
  const auto it = registry().find(name);
  if (it == registry().end()) {
    std::string known;
    for (const auto& n : oracle_names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown oracle '" + name + "' (known: " + known + ")");
  }
  return it->second();
}

}  // namespace swm
