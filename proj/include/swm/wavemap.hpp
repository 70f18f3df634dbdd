#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "swm/grid.hpp"
#include "swm/noise.hpp"

namespace swm {

/// Position u on the sphere and velocity v = du/dt at time t.
struct SphereState {
  Vec3Field u;
  Vec3Field v;
  double t = 0.0;
};

struct ConstraintDefect {
  double sphere = 0.0;    ///< max_j | |u_j| - 1 |
  double tangency = 0.0;  ///< max_j |u_j . v_j|
};

ConstraintDefect constraint_defect(const SphereState& s);

/// Throws ConfigError naming `what` if some |u_j| differs from 1 by more than tol.
void require_on_sphere(const Vec3Field& u, const char* what, double tol = 1e-10);
/// Also checks tangency of v.
void require_tangent_state(const SphereState& s, const char* what, double tol = 1e-10);

enum class Calculus { Ito, Stratonovich };

struct WaveRunConfig {
  explicit WaveRunConfig(GridSpec g) : grid(g) {}

  GridSpec grid;
  double epsilon = 1.0;
  double gamma = 1.0;
  /// Absent for the deterministic equation.
  std::optional<NoiseSource> noise;
  double cfl = 0.5;
  /// dt must also satisfy dt <= friction_fraction * eps / (damping coefficient).
  double friction_fraction = 0.1;
  bool record_energy = true;
  /// Snapshots at steps divisible by the stride, plus the final state.
  int snapshot_stride = std::numeric_limits<int>::max();
  Calculus calculus = Calculus::Ito;

  /// Damping used in the drift: gamma + c0/2 for Ito with noise, gamma otherwise.
  double damping() const;
};

/// Ledger of E_pot = |du/dx|^2, E_kin = eps |v|^2 and D = 2 gamma int |v|^2 (trapezoid).
struct EnergyLedger {
  std::vector<double> t, e_pot, e_kin, dissipation;

  std::size_t size() const { return t.size(); }
  double total(std::size_t i) const { return e_pot[i] + e_kin[i] + dissipation[i]; }
  /// max_i |total_i - total_0| / total_0 (absolute when total_0 == 0).
  double max_relative_drift() const;
  double final_relative_drift() const;
};

/// Squared norms of the state that one step computes anyway.
struct StepDiagnostics {
  double grad_sq = 0.0;  ///< |du/dx|^2_{L2} before the step
  double vel_sq = 0.0;   ///< |v|^2_{L2} before the step
};

/// One trajectory's integrator: Euler-Maruyama for v, renormalization for u,
/// projection of v onto the new tangent plane.
class WaveMapSolver {
 public:
  /// Validates the configuration (CFL, friction resolution, noise/grid match).
  explicit WaveMapSolver(const WaveRunConfig& cfg);

  /// Advances s in place by one step using noise row `step`.
  StepDiagnostics step(SphereState& s, int step);

  const WaveRunConfig& config() const { return cfg_; }
  double damping() const { return damping_; }

 private:
  WaveRunConfig cfg_;
  double damping_;
  Spectral spectral_;
  std::optional<NoiseSynthesizer> synth_;
  Vec3Field d1_, d2_;
  ScalarField dw_;
};

/// One step from a copy of `state`.
SphereState step_wavemap(const SphereState& state, const WaveRunConfig& cfg, int step);

/// |du/dx|^2_{L2} and |v|^2_{L2} of a state.
StepDiagnostics state_norms(const SphereState& s, const GridSpec& grid);

struct WaveRun {
  std::vector<SphereState> snapshots;
  EnergyLedger ledger;
  SphereState final_state;
};

/// Called after every completed step with the step index just taken and the new state.
using WaveObserver = std::function<void(int, const SphereState&)>;

WaveRun run_wavemap(const SphereState& initial, const WaveRunConfig& cfg, const WaveObserver& observe = {});

struct InitialHypothesisReport {
  std::vector<double> epsilons;
  std::vector<double> level1;  ///< |(u, sqrt(eps) v)|_{Hdot1 x L2}
  std::vector<double> level2;  ///< sqrt(eps) |(u, sqrt(eps) v)|_{Hdot2 x H1}
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  bool level1_monotone = true;  ///< level1 non-decreasing along the list
  bool level2_monotone = true;
};

/// Sup over the supplied family of the two initial-data scalings.
InitialHypothesisReport check_initial_hypotheses(const std::vector<std::pair<double, SphereState>>& family,
                                                 const GridSpec& grid);

}  // namespace swm
