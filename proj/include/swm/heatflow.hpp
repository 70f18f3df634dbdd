#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "swm/grid.hpp"

namespace swm {

enum class HeatScheme { Explicit, SemiImplicit };

struct HeatRunConfig {
  explicit HeatRunConfig(GridSpec g) : grid(g) {}

  GridSpec grid;
  double gamma0 = 1.0;
  HeatScheme scheme = HeatScheme::SemiImplicit;
  int snapshot_stride = std::numeric_limits<int>::max();
};

/// Largest stable explicit step, 0.2 gamma0 dx^2. Spectral second derivatives
/// reach (pi/dx)^2, so forward Euler needs dt < 2 gamma0 dx^2 / pi^2.
double explicit_heat_dt_limit(double gamma0, double dx);

/// Harmonic map heat flow gamma0 u_t = u_xx + |u_x|^2 u, stepped and then renormalized.
class HeatFlowSolver {
 public:
  explicit HeatFlowSolver(const HeatRunConfig& cfg);

  /// Advances u in place; returns |u_x|^2_{L2} of the pre-step field.
  double step(Vec3Field& u);

  const HeatRunConfig& config() const { return cfg_; }

 private:
  HeatRunConfig cfg_;
  Spectral spectral_;
  std::vector<double> resolvent_;
  Vec3Field d1_, d2_;
};

Vec3Field step_heatflow(const Vec3Field& u, const HeatRunConfig& cfg);

/// e_pot = |u_x|^2 and dissipation = 2 gamma0 int |u_t|^2 with u_t the forward
/// difference quotient of consecutive steps.
struct HeatLedger {
  std::vector<double> t, e_pot, dissipation;

  std::size_t size() const { return t.size(); }
  double total(std::size_t i) const { return e_pot[i] + dissipation[i]; }
  double max_relative_drift() const;
};

struct HeatRun {
  std::vector<double> times;
  std::vector<Vec3Field> snapshots;
  HeatLedger ledger;
  Vec3Field final_state;
};

/// Called after each step with the step index taken and the new field.
using HeatObserver = std::function<void(int, const Vec3Field&)>;

HeatRun run_heatflow(const Vec3Field& u0, const HeatRunConfig& cfg, const HeatObserver& observe = {});

/// Convolves each component with n eta(n x) (Gaussian eta, F eta(xi) = exp(-xi^2/2))
/// and projects back onto the sphere. Throws NumericalError where the
/// mollified field has magnitude below 1/2.
Vec3Field prepare_initial(const Vec3Field& raw, const GridSpec& grid, int n_mollify);

struct RegularityRow {
  int k = 0;
  double sup_hdot_k = 0.0;        ///< sup_t |u|_{Hdot^k}
  double int_hdot_k1_sq = 0.0;    ///< int |u|^2_{Hdot^{k+1}} dt
  double int_ut_hkm1_sq = 0.0;    ///< int |u_t|^2_{H^{k-1}} dt
};

/// Table for k = 1 ... k_max (k_max <= 4) computed from the stored snapshots.
std::vector<RegularityRow> regularity_diagnostics(const HeatRun& run, const GridSpec& grid, int k_max);

struct UniquenessReport {
  std::vector<double> times;
  std::vector<double> gaps;  ///< |u1(t) - u2(t)|_{L2}
  double initial_gap = 0.0;
  double sup_gap = 0.0;
  double constant = 0.0;     ///< sup_gap / initial_gap
  double growth_rate = 0.0;  ///< smallest c with gap(t) <= gap(0) exp(c t)
  bool identical = false;
};

/// Runs the flow from prepare_initial(u0) and prepare_initial(u0 + delta) and
/// compares the trajectories.
UniquenessReport check_uniqueness(const Vec3Field& u0, const HeatRunConfig& cfg, const Vec3Field& delta,
                                  int n_mollify);

}  // namespace swm
