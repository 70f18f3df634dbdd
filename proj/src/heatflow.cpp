#include "swm/heatflow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "swm/errors.hpp"
#include "swm/wavemap.hpp"

namespace swm {

double explicit_heat_dt_limit(double gamma0, double dx) { return 0.2 * gamma0 * dx * dx; }

HeatFlowSolver::HeatFlowSolver(const HeatRunConfig& cfg)
    : cfg_(cfg),
      spectral_(cfg.grid),
      resolvent_(cfg.grid.n_points() / 2 + 1),
      d1_(cfg.grid.n_points()),
      d2_(cfg.grid.n_points()) {
  if (!(cfg_.gamma0 > 0.0)) throw ConfigError("heatflow: gamma0 must be positive");
  if (cfg_.snapshot_stride <= 0) throw ConfigError("heatflow: snapshot stride must be positive");
  const double dt = cfg_.grid.dt();
  if (cfg_.scheme == HeatScheme::Explicit) {
    const double lim = explicit_heat_dt_limit(cfg_.gamma0, cfg_.grid.dx());
    if (dt > lim * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "heatflow: explicit step dt = " << dt << " exceeds 0.2 gamma0 dx^2 = " << lim;
      throw ConfigError(os.str());
    }
  }
  for (int m = 0; m <= cfg_.grid.n_points() / 2; ++m) {
    const double k = cfg_.grid.wavenumber(m);
    resolvent_[m] = 1.0 / (1.0 + dt * k * k / cfg_.gamma0);
  }
}

double HeatFlowSolver::step(Vec3Field& u) {
  const int n = cfg_.grid.n_points();
  if (static_cast<int>(u.size()) != n) throw ConfigError("heatflow: field size does not match the grid");
  const double c = cfg_.grid.dt() / cfg_.gamma0;
  const bool explicit_scheme = cfg_.scheme == HeatScheme::Explicit;
  for (int i = 0; i < 3; ++i) {
    if (explicit_scheme) spectral_.derivatives(u[i], d1_[i], d2_[i]);
    else spectral_.derivatives(u[i], d1_[i], {});
  }
  double grad_sq = 0.0;
  for (int j = 0; j < n; ++j) {
    const double g2 = d1_[0][j] * d1_[0][j] + d1_[1][j] * d1_[1][j] + d1_[2][j] * d1_[2][j];
    grad_sq += g2;
    for (int i = 0; i < 3; ++i) {
      // d2_ doubles as the pre-normalization field.
      d2_[i][j] = explicit_scheme ? u[i][j] + c * (d2_[i][j] + g2 * u[i][j]) : u[i][j] + c * g2 * u[i][j];
    }
  }
  if (!explicit_scheme)
    for (int i = 0; i < 3; ++i) spectral_.apply_multiplier(d2_[i], resolvent_, u[i]);
  else
    for (int i = 0; i < 3; ++i) u[i] = d2_[i];
  for (int j = 0; j < n; ++j) {
    const double r = std::sqrt(u[0][j] * u[0][j] + u[1][j] * u[1][j] + u[2][j] * u[2][j]);
    if (!(r > 0.0) || !std::isfinite(r)) {
      std::ostringstream os;
      os << "heatflow: degenerate or non-finite field at grid point " << j;
      throw NumericalError(os.str());
    }
    for (int i = 0; i < 3; ++i) u[i][j] /= r;
  }
  return grad_sq * cfg_.grid.dx();
}

Vec3Field step_heatflow(const Vec3Field& u, const HeatRunConfig& cfg) {
  HeatFlowSolver solver(cfg);
  Vec3Field out = u;
  solver.step(out);
  return out;
}

double HeatLedger::max_relative_drift() const {
  if (t.empty()) return 0.0;
  const double ref = total(0);
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i) m = std::max(m, std::abs(total(i) - ref));
  return ref > 0.0 ? m / ref : m;
}

HeatRun run_heatflow(const Vec3Field& u0, const HeatRunConfig& cfg, const HeatObserver& observe) {
  HeatFlowSolver solver(cfg);
  require_on_sphere(u0, "heatflow initial data");
  HeatRun run;
  const auto& g = cfg.grid;
  const double dt = g.dt();
  const double dx = g.dx();
  Vec3Field u = u0;
  Vec3Field prev;
  double diss = 0.0;
  for (int n = 0; n < g.n_steps(); ++n) {
    if (n % cfg.snapshot_stride == 0) {
      run.times.push_back(n * dt);
      run.snapshots.push_back(u);
    }
    prev = u;
    const double e = solver.step(u);
    run.ledger.t.push_back(n * dt);
    run.ledger.e_pot.push_back(e);
    run.ledger.dissipation.push_back(diss);
    double q = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < g.n_points(); ++j) {
        const double d = u[i][j] - prev[i][j];
        q += d * d;
      }
    diss += 2.0 * cfg.gamma0 * dx * q / dt;
    if (observe) observe(n, u);
  }
  const double e_final = std::pow(norm(u, g, NormKind::Hdot, 1), 2);
  run.ledger.t.push_back(g.n_steps() * dt);
  run.ledger.e_pot.push_back(e_final);
  run.ledger.dissipation.push_back(diss);
  run.times.push_back(g.n_steps() * dt);
  run.snapshots.push_back(u);
  run.final_state = std::move(u);
  return run;
}

Vec3Field prepare_initial(const Vec3Field& raw, const GridSpec& grid, int n_mollify) {
  if (n_mollify <= 0) throw ConfigError("prepare_initial: mollification scale must be positive");
  if (static_cast<int>(raw.size()) != grid.n_points()) throw ConfigError("prepare_initial: field size mismatch");
  Spectral sp(grid);
  std::vector<double> mult(grid.n_points() / 2 + 1);
  for (int m = 0; m <= grid.n_points() / 2; ++m) {
    const double z = grid.wavenumber(m) / n_mollify;
    mult[m] = std::exp(-0.5 * z * z);
  }
  Vec3Field out(raw.size());
  for (int i = 0; i < 3; ++i) sp.apply_multiplier(raw[i], mult, out[i]);
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double r = std::sqrt(out[0][j] * out[0][j] + out[1][j] * out[1][j] + out[2][j] * out[2][j]);
    if (!(r >= 0.5)) {
      std::ostringstream os;
      os << "prepare_initial: mollified magnitude " << r << " < 1/2 at x = " << grid.x(static_cast<int>(j))
         << "; projection onto the sphere is undefined";
      throw NumericalError(os.str());
    }
    for (int i = 0; i < 3; ++i) out[i][j] /= r;
  }
  return out;
}

std::vector<RegularityRow> regularity_diagnostics(const HeatRun& run, const GridSpec& grid, int k_max) {
  if (k_max < 1 || k_max > 4) throw ConfigError("regularity_diagnostics: k_max must lie in [1, 4]");
  std::vector<RegularityRow> rows(k_max);
  const auto& s = run.snapshots;
  Spectral sp(grid);
  const double dx = grid.dx();
  auto hdot_sq = [&](const Vec3Field& f, int k) {
    double v = 0.0;
    for (int i = 0; i < 3; ++i) v += sp.hdot_squared(f[i], k, dx);
    return v;
  };
  for (int k = 1; k <= k_max; ++k) {
    auto& r = rows[k - 1];
    r.k = k;
    for (std::size_t i = 0; i < s.size(); ++i) r.sup_hdot_k = std::max(r.sup_hdot_k, std::sqrt(hdot_sq(s[i], k)));
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
      const double h = run.times[i + 1] - run.times[i];
      r.int_hdot_k1_sq += 0.5 * h * (hdot_sq(s[i], k + 1) + hdot_sq(s[i + 1], k + 1));
      Vec3Field ut(s[i].size());
      for (int c = 0; c < 3; ++c)
        for (std::size_t j = 0; j < ut.size(); ++j) ut[c][j] = (s[i + 1][c][j] - s[i][c][j]) / h;
      double hk = 0.0;
      for (int q = 0; q < k; ++q) hk += hdot_sq(ut, q);
      r.int_ut_hkm1_sq += h * hk;
    }
  }
  return rows;
}

UniquenessReport check_uniqueness(const Vec3Field& u0, const HeatRunConfig& cfg, const Vec3Field& delta,
                                  int n_mollify) {
  const auto& g = cfg.grid;
  if (delta.size() != u0.size()) throw ConfigError("check_uniqueness: perturbation size mismatch");
  Vec3Field shifted = u0;
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < u0.size(); ++j) shifted[i][j] += delta[i][j];
  Vec3Field a = prepare_initial(u0, g, n_mollify);
  Vec3Field b = prepare_initial(shifted, g, n_mollify);
  HeatFlowSolver sa(cfg), sb(cfg);
  UniquenessReport rep;
  auto gap = [&](double t) {
    double q = 0.0;
    for (int i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < a.size(); ++j) q += (a[i][j] - b[i][j]) * (a[i][j] - b[i][j]);
    const double d = std::sqrt(q * g.dx());
    rep.times.push_back(t);
    rep.gaps.push_back(d);
    rep.sup_gap = std::max(rep.sup_gap, d);
  };
  gap(0.0);
  for (int n = 0; n < g.n_steps(); ++n) {
    sa.step(a);
    sb.step(b);
    gap((n + 1) * g.dt());
  }
  rep.initial_gap = rep.gaps.front();
  rep.identical = rep.sup_gap == 0.0;
  if (rep.initial_gap > 0.0) {
    rep.constant = rep.sup_gap / rep.initial_gap;
    for (std::size_t i = 1; i < rep.gaps.size(); ++i)
      if (rep.gaps[i] > 0.0) rep.growth_rate = std::max(rep.growth_rate, std::log(rep.gaps[i] / rep.initial_gap) / rep.times[i]);
  }
  return rep;
}

}  // namespace swm
