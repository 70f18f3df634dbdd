#include "swm/fluctuations.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "swm/errors.hpp"

namespace swm {

namespace {

double field_sq(const Vec3Field& f) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (double v : f[i]) s += v * v;
  return s;
}

double diff_sq(const Vec3Field& a, const Vec3Field& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < a.size(); ++j) s += (a[i][j] - b[i][j]) * (a[i][j] - b[i][j]);
  return s;
}

void require_path(const FieldPath& p, const GridSpec& g, const char* what) {
  if (static_cast<int>(p.size()) != g.n_steps() + 1) {
    std::ostringstream os;
    os << what << ": path has " << p.size() << " entries, expected n_steps + 1 = " << g.n_steps() + 1;
    throw ConfigError(os.str());
  }
  for (const auto& f : p)
    if (static_cast<int>(f.size()) != g.n_points()) throw ConfigError(std::string(what) + ": field size mismatch");
}

// u x (u^{n+1} - u^n) / dt.
Vec3Field heat_noise_coefficient(const FieldPath& u, int n, double dt) {
  Vec3Field ut(u[n].size());
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < ut.size(); ++j) ut[i][j] = (u[n + 1][i][j] - u[n][i][j]) / dt;
  return cross(u[n], ut);
}

}  // namespace

double path_l2_norm(const FieldPath& p, const GridSpec& grid) {
  if (p.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) s += (n == 0 || n + 1 == p.size() ? 0.5 : 1.0) * field_sq(p[n]);
  if (p.size() == 1) s = 0.0;
  return std::sqrt(s * grid.dx() * grid.dt());
}

double path_l2_distance(const FieldPath& a, const FieldPath& b, const GridSpec& grid) {
  if (a.size() != b.size()) throw ConfigError("path_l2_distance: path lengths differ");
  if (a.size() <= 1) return 0.0;
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += (n == 0 || n + 1 == a.size() ? 0.5 : 1.0) * diff_sq(a[n], b[n]);
  return std::sqrt(s * grid.dx() * grid.dt());
}

Vec3Field cross(const Vec3Field& a, const Vec3Field& b) {
  if (a.size() != b.size()) throw ConfigError("cross: size mismatch");
  Vec3Field out(a.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    out[0][j] = a[1][j] * b[2][j] - a[2][j] * b[1][j];
    out[1][j] = a[2][j] * b[0][j] - a[0][j] * b[2][j];
    out[2][j] = a[0][j] * b[1][j] - a[1][j] * b[0][j];
  }
  return out;
}

LinearHeatStepper::LinearHeatStepper(const GridSpec& grid, double gamma0)
    : grid_(grid),
      gamma0_(gamma0),
      spectral_(grid),
      resolvent_(grid.n_points() / 2 + 1),
      du_(grid.n_points()),
      dr_(grid.n_points()),
      acc_(grid.n_points()),
      g2_(grid.n_points()) {
  if (!(gamma0 > 0.0)) throw ConfigError("linear heat stepper: gamma0 must be positive");
  for (int m = 0; m <= grid.n_points() / 2; ++m) {
    const double k = grid.wavenumber(m);
    resolvent_[m] = 1.0 / (1.0 + grid.dt() * k * k / gamma0);
  }
}

void LinearHeatStepper::finish(Vec3Field& w) {
  for (int i = 0; i < 3; ++i) spectral_.apply_multiplier(acc_[i], resolvent_, w[i]);
}

void LinearHeatStepper::additive(Vec3Field& w, const Vec3Field& f, std::span<const double> dw) {
  const double c = 1.0 / gamma0_;
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < w.size(); ++j) acc_[i][j] = w[i][j] + c * f[i][j] * dw[j];
  finish(w);
}

void LinearHeatStepper::linearized(Vec3Field& w, const Vec3Field& r, const Vec3Field& u, const Vec3Field& x,
                                   const Vec3Field* f, std::span<const double> dw) {
  for (int i = 0; i < 3; ++i) {
    spectral_.derivative(u[i], du_[i], 1);
    spectral_.derivative(r[i], dr_[i], 1);
  }
  const double c = grid_.dt() / gamma0_;
  const double cn = 1.0 / gamma0_;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double g2 = du_[0][j] * du_[0][j] + du_[1][j] * du_[1][j] + du_[2][j] * du_[2][j];
    const double ur = du_[0][j] * dr_[0][j] + du_[1][j] * dr_[1][j] + du_[2][j] * dr_[2][j];
    for (int i = 0; i < 3; ++i) {
      double a = w[i][j] + c * (g2 * r[i][j] + 2.0 * ur * x[i][j]);
      if (f) a += cn * (*f)[i][j] * dw[j];
      acc_[i][j] = a;
    }
  }
  finish(w);
}

void audit_coupling(const std::shared_ptr<const NoiseTable>& a, const std::shared_ptr<const NoiseTable>& b) {
  if (!a || !b) throw CouplingError("coupling audit: a noise table is missing");
  if (a.get() != b.get()) {
    std::ostringstream os;
    os << "coupling audit: processes use different noise tables (seeds " << a->seed() << " and " << b->seed()
       << ")";
    throw CouplingError(os.str());
  }
}

namespace {

void check_inputs(const FluctuationInputs& in, bool need_wave) {
  if (!(in.gamma0 > 0.0)) throw ConfigError("fluctuations: gamma0 must be positive");
  if (!(in.epsilon > 0.0)) throw ConfigError("fluctuations: epsilon must be positive");
  if (!in.table) throw CouplingError("fluctuations: no noise table");
  if (in.table->n_points() != in.grid.n_points() || in.table->n_steps() < in.grid.n_steps())
    throw ConfigError("fluctuations: noise table does not cover the grid");
  require_path(in.heat_u, in.grid, "fluctuations heat path");
  if (need_wave) {
    audit_coupling(in.table, in.wave_table);
    require_path(in.wave_u, in.grid, "fluctuations wave path");
    require_path(in.wave_v, in.grid, "fluctuations wave velocity path");
  }
}

Vec3Field initial_gap(const FluctuationInputs& in) {
  const double s = std::pow(in.epsilon, 0.5 * in.hurst - 1.0);
  Vec3Field z(in.grid.n_points());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < in.grid.n_points(); ++j) z[i][j] = s * (in.wave_u[0][i][j] - in.heat_u[0][i][j]);
  return z;
}

}  // namespace

FieldPath solve_z_eps(const FluctuationInputs& in) {
  check_inputs(in, true);
  const auto& g = in.grid;
  NoiseSynthesizer synth(g, smoothed_fractional_amplitudes(in.hurst, in.a_h, in.mollifier, in.epsilon, g));
  LinearHeatStepper stepper(g, in.gamma0);
  FieldPath out;
  out.reserve(g.n_steps() + 1);
  Vec3Field z = initial_gap(in);
  ScalarField dw(g.n_points());
  out.push_back(z);
  for (int n = 0; n < g.n_steps(); ++n) {
    synth.increment(*in.table, n, dw);
    stepper.additive(z, cross(in.wave_u[n], in.wave_v[n]), dw);
    out.push_back(z);
  }
  return out;
}

FieldPath solve_z_limit(const FluctuationInputs& in) {
  check_inputs(in, false);
  const auto& g = in.grid;
  NoiseSynthesizer synth(g, modal_amplitudes(make_fractional_density(in.hurst, in.a_h), g));
  LinearHeatStepper stepper(g, in.gamma0);
  FieldPath out;
  out.reserve(g.n_steps() + 1);
  Vec3Field z(g.n_points());
  ScalarField dw(g.n_points());
  out.push_back(z);
  for (int n = 0; n < g.n_steps(); ++n) {
    synth.increment(*in.table, n, dw);
    stepper.additive(z, heat_noise_coefficient(in.heat_u, n, g.dt()), dw);
    out.push_back(z);
  }
  return out;
}

FieldPath solve_rho(const FluctuationInputs& in, RhoVariant variant) {
  const bool eps_variant = variant == RhoVariant::RhoEps;
  check_inputs(in, eps_variant);
  const auto& g = in.grid;
  const auto amps = eps_variant ? smoothed_fractional_amplitudes(in.hurst, in.a_h, in.mollifier, in.epsilon, g)
                                : modal_amplitudes(make_fractional_density(in.hurst, in.a_h), g);
  NoiseSynthesizer synth(g, amps);
  LinearHeatStepper stepper(g, in.gamma0);
  FieldPath out;
  out.reserve(g.n_steps() + 1);
  Vec3Field rho = eps_variant ? initial_gap(in) : Vec3Field(g.n_points());
  ScalarField dw(g.n_points());
  out.push_back(rho);
  for (int n = 0; n < g.n_steps(); ++n) {
    synth.increment(*in.table, n, dw);
    const Vec3Field f = eps_variant ? cross(in.wave_u[n], in.wave_v[n]) : heat_noise_coefficient(in.heat_u, n, g.dt());
    const Vec3Field& target = eps_variant ? in.wave_u[n] : in.heat_u[n];
    const Vec3Field r = rho;
    stepper.linearized(rho, r, in.heat_u[n], target, &f, dw);
    out.push_back(rho);
  }
  return out;
}

FieldPath compute_y_eps(const FieldPath& wave_u, const FieldPath& heat_u, double epsilon, double hurst) {
  if (wave_u.size() != heat_u.size()) throw ConfigError("compute_y_eps: path lengths differ");
  if (!(epsilon > 0.0)) throw ConfigError("compute_y_eps: epsilon must be positive");
  const double s = std::pow(epsilon, 0.5 * hurst - 1.0);
  FieldPath y;
  y.reserve(wave_u.size());
  for (std::size_t n = 0; n < wave_u.size(); ++n) {
    if (wave_u[n].size() != heat_u[n].size()) throw ConfigError("compute_y_eps: grid mismatch");
    Vec3Field f(wave_u[n].size());
    for (int i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < f.size(); ++j) f[i][j] = s * (wave_u[n][i][j] - heat_u[n][i][j]);
    y.push_back(std::move(f));
  }
  return y;
}

FieldPath apply_theta(const FieldPath& v, const FieldPath& xi, const FieldPath& heat_u, const GridSpec& grid,
                      double gamma0) {
  require_path(v, grid, "apply_theta v");
  require_path(xi, grid, "apply_theta xi");
  require_path(heat_u, grid, "apply_theta heat path");
  LinearHeatStepper stepper(grid, gamma0);
  FieldPath out;
  out.reserve(v.size());
  Vec3Field w(grid.n_points());
  for (int n = 0; n <= grid.n_steps(); ++n) {
    Vec3Field o = w;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < grid.n_points(); ++j) o[i][j] += xi[n][i][j];
    out.push_back(std::move(o));
    if (n < grid.n_steps()) stepper.linearized(w, v[n], heat_u[n], heat_u[n], nullptr, {});
  }
  return out;
}

namespace {

double weighted_sq(const FieldPath& p, double lambda, double dt) {
  double s = 0.0;
  for (std::size_t n = 0; n < p.size(); ++n) s += std::exp(-2.0 * lambda * n * dt) * field_sq(p[n]);
  return s;
}

double weighted_diff_sq(const FieldPath& a, const FieldPath& b, double lambda, double dt) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += std::exp(-2.0 * lambda * n * dt) * diff_sq(a[n], b[n]);
  return s;
}

}  // namespace

LambdaResult solve_lambda(const FieldPath& xi, const FieldPath& heat_u, const GridSpec& grid, double gamma0,
                          LambdaMethod method, double tol, int max_iterations) {
  require_path(xi, grid, "solve_lambda xi");
  require_path(heat_u, grid, "solve_lambda heat path");
  LambdaResult res;
  if (method == LambdaMethod::Direct) {
    LinearHeatStepper stepper(grid, gamma0);
    Vec3Field w(grid.n_points());
    res.value.reserve(xi.size());
    for (int n = 0; n <= grid.n_steps(); ++n) {
      Vec3Field v = w;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < grid.n_points(); ++j) v[i][j] += xi[n][i][j];
      if (n < grid.n_steps()) stepper.linearized(w, v, heat_u[n], heat_u[n], nullptr, {});
      res.value.push_back(std::move(v));
    }
    res.iterations = 1;
  } else {
    // Weight large enough that Theta contracts: the zeroth-order coefficient is |u_x|^2.
    double gmax = 0.0;
    for (const auto& u : heat_u) {
      const auto d = derivative(u, grid, 1);
      for (int j = 0; j < grid.n_points(); ++j)
        gmax = std::max(gmax, d[0][j] * d[0][j] + d[1][j] * d[1][j] + d[2][j] * d[2][j]);
    }
    res.weight = (1.0 + 3.0 * gmax) / gamma0;
    FieldPath v = xi;
    for (int it = 1; it <= max_iterations; ++it) {
      FieldPath next = apply_theta(v, xi, heat_u, grid, gamma0);
      const double num = std::sqrt(weighted_diff_sq(next, v, res.weight, grid.dt()));
      const double den = std::sqrt(weighted_sq(next, res.weight, grid.dt()));
      v = std::move(next);
      res.iterations = it;
      res.last_increment = den > 0.0 ? num / den : num;
      if (res.last_increment <= tol) break;
      if (it == max_iterations) {
        std::ostringstream os;
        os << "solve_lambda: Picard iteration did not converge in " << max_iterations
           << " iterations (last relative change " << res.last_increment << ")";
        throw NumericalError(os.str());
      }
    }
    res.value = std::move(v);
  }
  const double xn = path_l2_norm(xi, grid);
  const double r = path_l2_distance(apply_theta(res.value, xi, heat_u, grid, gamma0), res.value, grid);
  res.residual = xn > 0.0 ? r / xn : r;
  return res;
}

double heat_kernel_l2_norm(double t) {
  if (!(t > 0.0)) throw ConfigError("heat kernel: t must be positive");
  return std::pow(8.0 * std::numbers::pi * t, -0.25);
}

ScalarField heat_kernel(const GridSpec& grid, double t) {
  if (!(t > 0.0)) throw ConfigError("heat kernel: t must be positive");
  const double c = 1.0 / std::sqrt(4.0 * std::numbers::pi * t);
  return sample(grid, [&](double x) { return c * std::exp(-x * x / (4.0 * t)); });
}

}  // namespace swm
