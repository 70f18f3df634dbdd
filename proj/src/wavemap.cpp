#include "swm/wavemap.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "swm/errors.hpp"

namespace swm {

ConstraintDefect constraint_defect(const SphereState& s) {
  ConstraintDefect d;
  for (std::size_t j = 0; j < s.u.size(); ++j) {
    const double n2 = s.u[0][j] * s.u[0][j] + s.u[1][j] * s.u[1][j] + s.u[2][j] * s.u[2][j];
    const double uv = s.u[0][j] * s.v[0][j] + s.u[1][j] * s.v[1][j] + s.u[2][j] * s.v[2][j];
    d.sphere = std::max(d.sphere, std::abs(std::sqrt(n2) - 1.0));
    d.tangency = std::max(d.tangency, std::abs(uv));
  }
  return d;
}

void require_on_sphere(const Vec3Field& u, const char* what, double tol) {
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double n = std::sqrt(u[0][j] * u[0][j] + u[1][j] * u[1][j] + u[2][j] * u[2][j]);
    if (!(std::abs(n - 1.0) <= tol)) {
      std::ostringstream os;
      os << what << ": |u| = " << n << " at grid point " << j << " (map must take values on the sphere)";
      throw ConfigError(os.str());
    }
  }
}

void require_tangent_state(const SphereState& s, const char* what, double tol) {
  if (s.u.size() != s.v.size()) throw ConfigError(std::string(what) + ": u and v sizes differ");
  require_on_sphere(s.u, what, tol);
  const auto d = constraint_defect(s);
  if (!(d.tangency <= tol)) {
    std::ostringstream os;
    os << what << ": velocity not tangent, max |u.v| = " << d.tangency;
    throw ConfigError(os.str());
  }
}

double WaveRunConfig::damping() const {
  if (noise && calculus == Calculus::Ito) return gamma + 0.5 * noise->c0;
  return gamma;
}

double EnergyLedger::max_relative_drift() const {
  if (t.empty()) return 0.0;
  const double ref = total(0);
  double m = 0.0;
  for (std::size_t i = 0; i < size(); ++i) m = std::max(m, std::abs(total(i) - ref));
  return ref > 0.0 ? m / ref : m;
}

double EnergyLedger::final_relative_drift() const {
  if (t.empty()) return 0.0;
  const double ref = total(0);
  const double d = std::abs(total(size() - 1) - ref);
  return ref > 0.0 ? d / ref : d;
}

namespace {

void validate(const WaveRunConfig& cfg, double damping) {
  const auto& g = cfg.grid;
  if (!(cfg.epsilon > 0.0)) throw ConfigError("wavemap: epsilon must be positive");
  if (!(cfg.gamma > 0.0)) throw ConfigError("wavemap: gamma must be positive");
  if (!(cfg.cfl > 0.0 && cfg.cfl <= 1.0)) throw ConfigError("wavemap: cfl must lie in (0, 1]");
  if (!(cfg.friction_fraction > 0.0)) throw ConfigError("wavemap: friction_fraction must be positive");
  if (cfg.snapshot_stride <= 0) throw ConfigError("wavemap: snapshot stride must be positive");
  const double slack = 1.0 + 1e-12;
  const double cfl_dt = cfg.cfl * std::sqrt(cfg.epsilon) * g.dx();
  if (g.dt() > cfl_dt * slack) {
    std::ostringstream os;
    os << "wavemap: CFL violated, dt = " << g.dt() << " > cfl sqrt(eps) dx = " << cfl_dt;
    throw ConfigError(os.str());
  }
  const double fr_dt = cfg.friction_fraction * cfg.epsilon / damping;
  if (g.dt() > fr_dt * slack) {
    std::ostringstream os;
    os << "wavemap: friction unresolved, dt = " << g.dt() << " > " << cfg.friction_fraction
       << " eps / damping = " << fr_dt;
    throw ConfigError(os.str());
  }
  if (cfg.noise) {
    const auto& n = *cfg.noise;
    if (!n.table) throw ConfigError("wavemap: noise source has no table");
    if (n.table->n_points() != g.n_points() || static_cast<int>(n.amplitudes.size()) != g.n_points() / 2)
      throw ConfigError("wavemap: noise source does not match the grid size");
    if (n.table->n_steps() < g.n_steps()) throw ConfigError("wavemap: noise table shorter than the run");
    if (n.table->dt() != g.dt()) throw ConfigError("wavemap: noise table time step differs from the grid");
  }
}

inline void cross(const double* a, const double* b, double* out) {
  out[0] = a[1] * b[2] - a[2] * b[1];
  out[1] = a[2] * b[0] - a[0] * b[2];
  out[2] = a[0] * b[1] - a[1] * b[0];
}

}  // namespace

WaveMapSolver::WaveMapSolver(const WaveRunConfig& cfg)
    : cfg_(cfg),
      damping_(cfg.damping()),
      spectral_(cfg.grid),
      d1_(cfg.grid.n_points()),
      d2_(cfg.grid.n_points()),
      dw_(cfg.grid.n_points(), 0.0) {
  validate(cfg_, damping_);
  if (cfg_.noise) synth_.emplace(cfg_.grid, cfg_.noise->amplitudes);
}

StepDiagnostics WaveMapSolver::step(SphereState& s, int step) {
  const int n = cfg_.grid.n_points();
  if (static_cast<int>(s.u.size()) != n || static_cast<int>(s.v.size()) != n)
    throw ConfigError("wavemap: state size does not match the grid");
  const double eps = cfg_.epsilon;
  const double dt = cfg_.grid.dt();
  const double dx = cfg_.grid.dx();
  const double gam = damping_;
  for (int i = 0; i < 3; ++i) spectral_.derivatives(s.u[i], d1_[i], d2_[i]);
  if (synth_) synth_->increment(*cfg_.noise->table, step, dw_);
  const double noise_scale = 1.0 / std::sqrt(eps);
  const bool strat = cfg_.calculus == Calculus::Stratonovich;

  StepDiagnostics diag;
  for (int j = 0; j < n; ++j) {
    double u[3] = {s.u[0][j], s.u[1][j], s.u[2][j]};
    double v[3] = {s.v[0][j], s.v[1][j], s.v[2][j]};
    const double g2 = d1_[0][j] * d1_[0][j] + d1_[1][j] * d1_[1][j] + d1_[2][j] * d1_[2][j];
    const double vv = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    diag.grad_sq += g2;
    diag.vel_sq += vv;

    double vs[3];
    for (int i = 0; i < 3; ++i) vs[i] = v[i] + dt * (d2_[i][j] + g2 * u[i] - eps * vv * u[i] - gam * v[i]) / eps;
    const double w = noise_scale * dw_[j];
    if (w != 0.0) {
      double uxv[3];
      cross(u, v, uxv);
      if (strat) {
        // Heun: noise coefficient at the average of v and the Euler predictor.
        double mid[3], uxm[3];
        for (int i = 0; i < 3; ++i) mid[i] = 0.5 * (v[i] + vs[i] + w * uxv[i]);
        cross(u, mid, uxm);
        for (int i = 0; i < 3; ++i) vs[i] += w * uxm[i];
      } else {
        for (int i = 0; i < 3; ++i) vs[i] += w * uxv[i];
      }
    }
    double un[3];
    for (int i = 0; i < 3; ++i) un[i] = u[i] + dt * vs[i];
    const double r = std::sqrt(un[0] * un[0] + un[1] * un[1] + un[2] * un[2]);
    for (int i = 0; i < 3; ++i) un[i] /= r;
    const double p = un[0] * vs[0] + un[1] * vs[1] + un[2] * vs[2];
    for (int i = 0; i < 3; ++i) {
      s.u[i][j] = un[i];
      s.v[i][j] = vs[i] - p * un[i];
    }
    if (!std::isfinite(r) || !std::isfinite(p)) {
      std::ostringstream os;
      os << "wavemap: non-finite state at step " << step << " (t = " << s.t + dt << ", grid point " << j << ")";
      throw NumericalError(os.str());
    }
  }
  s.t += dt;
  diag.grad_sq *= dx;
  diag.vel_sq *= dx;
  return diag;
}

SphereState step_wavemap(const SphereState& state, const WaveRunConfig& cfg, int step) {
  WaveMapSolver solver(cfg);
  SphereState out = state;
  solver.step(out, step);
  return out;
}

StepDiagnostics state_norms(const SphereState& s, const GridSpec& grid) {
  StepDiagnostics d;
  const double h = norm(s.u, grid, NormKind::Hdot, 1);
  const double l = norm(s.v, grid, NormKind::L2);
  d.grad_sq = h * h;
  d.vel_sq = l * l;
  return d;
}

WaveRun run_wavemap(const SphereState& initial, const WaveRunConfig& cfg, const WaveObserver& observe) {
  WaveMapSolver solver(cfg);
  require_tangent_state(initial, "wavemap initial state");
  WaveRun run;
  SphereState s = initial;
  const int steps = cfg.grid.n_steps();
  const double dt = cfg.grid.dt();
  auto& led = run.ledger;
  double prev_vel = 0.0;
  auto record = [&](double t, const StepDiagnostics& d, bool first) {
    if (!cfg.record_energy) return;
    const double diss = first ? 0.0 : led.dissipation.back() + cfg.gamma * dt * (prev_vel + d.vel_sq);
    led.t.push_back(t);
    led.e_pot.push_back(d.grad_sq);
    led.e_kin.push_back(cfg.epsilon * d.vel_sq);
    led.dissipation.push_back(diss);
    prev_vel = d.vel_sq;
  };
  for (int n = 0; n < steps; ++n) {
    if (n % cfg.snapshot_stride == 0) run.snapshots.push_back(s);
    const double t = s.t;
    const auto d = solver.step(s, n);
    record(t, d, n == 0);
    if (observe) observe(n, s);
  }
  if (cfg.record_energy) record(s.t, state_norms(s, cfg.grid), steps == 0);
  run.snapshots.push_back(s);
  run.final_state = s;
  return run;
}

InitialHypothesisReport check_initial_hypotheses(const std::vector<std::pair<double, SphereState>>& family,
                                                 const GridSpec& grid) {
  InitialHypothesisReport rep;
  for (const auto& [eps, st] : family) {
    if (!(eps > 0.0)) throw ConfigError("initial hypotheses: eps must be positive");
    require_tangent_state(st, "initial hypotheses");
    const double se = std::sqrt(eps);
    const double du = norm(st.u, grid, NormKind::Hdot, 1);
    const double v = se * norm(st.v, grid, NormKind::L2);
    const double d2u = norm(st.u, grid, NormKind::Hdot, 2);
    const double v1 = se * norm(st.v, grid, NormKind::H1);
    const double l1 = std::hypot(du, v);
    const double l2 = se * std::hypot(d2u, v1);
    if (!rep.level1.empty()) {
      rep.level1_monotone = rep.level1_monotone && l1 >= rep.level1.back();
      rep.level2_monotone = rep.level2_monotone && l2 >= rep.level2.back();
    }
    rep.epsilons.push_back(eps);
    rep.level1.push_back(l1);
    rep.level2.push_back(l2);
    rep.lambda1 = std::max(rep.lambda1, l1);
    rep.lambda2 = std::max(rep.lambda2, l2);
  }
  return rep;
}

}  // namespace swm
