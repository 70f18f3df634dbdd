#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swm/grid.hpp"
#include "swm/noise.hpp"
#include "swm/stats.hpp"

namespace swm {

enum class ExperimentKind { LLN, RateFit, VelocityFactor, CLT, DeterministicLimit, EnergyAudit, ItoStratonovich };

std::string to_string(ExperimentKind kind);
/// Accepts the names produced by to_string, case-insensitively. Throws ConfigError.
ExperimentKind experiment_kind_from_string(const std::string& name);

/// Sizing rules shared by every epsilon of a plan. Unset overrides are derived:
///   L  = support + T / sqrt(eps_min) + margin
///   dx = min(dx_max, pi sqrt(eps_min) / resolution)
///   dt = min(cfl sqrt(eps_min) dx, friction_fraction eps_min / damping), then shrunk so T/dt is whole.
/// Overrides that break the first or third rule are rejected.
struct GridPolicy {
  double dx_max = 0.1;
  double resolution = 3.5;
  double cfl = 0.5;
  double friction_fraction = 0.1;
  double margin = 2.0;
  std::optional<double> half_length;
  std::optional<int> n_points;
  std::optional<double> dt;

  bool operator==(const GridPolicy&) const = default;
};

enum class InitialFamily { GeodesicBump, Constant };

std::string to_string(InitialFamily f);
InitialFamily initial_family_from_string(const std::string& name);

struct ExperimentPlan {
  ExperimentKind kind = ExperimentKind::LLN;
  std::vector<double> epsilons = {0.25, 0.0625, 0.0156};  ///< strictly decreasing
  double hurst = 0.75;
  double a_h = 1.0;
  double gamma = 1.0;
  std::string mollifier = "gaussian";
  bool noise = true;  ///< false: c0 = 0, the deterministic equation
  double horizon = 0.5;
  InitialFamily initial = InitialFamily::GeodesicBump;
  double bump_amplitude = 1.5;
  int n_paths = 30;
  std::uint64_t seed = 1;  ///< path p uses seed + p; one table per seed shared by every epsilon
  GridPolicy grid;
  double eta = 0.1;                     ///< LLN exceedance threshold
  std::vector<double> betas = {0.25, 0.5};  ///< DeterministicLimit families
  double velocity_scale = 1.0;          ///< DeterministicLimit: v0 = velocity_scale eps^{beta-1/2} w
  int threads = 0;                      ///< 0: hardware concurrency

  bool operator==(const ExperimentPlan&) const = default;
};

/// The desk-scale configuration used for each experiment kind.
ExperimentPlan default_plan(ExperimentKind kind);

/// Throws ConfigError listing every violated plan invariant.
void validate_plan(const ExperimentPlan& plan);

/// Mass of the noise density a plan drives (0 when noise is off).
double plan_noise_mass(const ExperimentPlan& plan, double eps);

/// Common grid for the plan (damping = gamma0 of the Ito equation). Throws
/// ConfigError before any simulation if a sizing rule is broken.
GridSpec plan_grid(const ExperimentPlan& plan, double damping);

struct EpsilonRow {
  double epsilon = 0.0;
  int n_paths = 0;
  std::map<std::string, Estimate> metrics;
};

struct PathRow {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, double> metrics;
};

struct Decision {
  bool pass = false;
  std::string rule;
  std::string detail;
};

struct FitEntry {
  LogLogFit fit;
  double theoretical_slope = 0.0;
};

struct ExperimentReport {
  ExperimentPlan plan;
  std::optional<GridSpec> grid;
  double c0 = 0.0;
  double gamma0 = 0.0;
  std::vector<EpsilonRow> per_epsilon;
  std::map<std::string, FitEntry> fits;
  std::map<std::string, Decision> pass_flags;
  std::map<std::string, double> scalars;  ///< experiment-level numbers (targets, identities)
  std::vector<std::string> flags;         ///< e.g. "degenerate"
  std::vector<PathRow> paths;
  double runtime_seconds = 0.0;

  bool all_pass() const;
};

/// Runs fn(i) for i in [0, n) on up to `threads` workers and returns the
/// results in index order. The exception of the lowest failing index is rethrown.
template <class R>
std::vector<R> parallel_map(int n, int threads, const std::function<R(int)>& fn);

ExperimentReport run_lln(const ExperimentPlan& plan);
ExperimentReport run_rate_fit(const ExperimentPlan& plan);
ExperimentReport run_velocity_factor(const ExperimentPlan& plan);
ExperimentReport run_clt(const ExperimentPlan& plan);
ExperimentReport run_deterministic_limit(const ExperimentPlan& plan);
/// Stochastic energy identity, checked at the plan's dt and at dt/2 on the same Brownian paths.
ExperimentReport run_energy_audit(const ExperimentPlan& plan);
/// Ito scheme with gamma0 against the Stratonovich scheme with gamma on shared tables.
ExperimentReport run_ito_stratonovich(const ExperimentPlan& plan);

/// Dispatches on plan.kind.
ExperimentReport run_experiment(const ExperimentPlan& plan);

/// {plan, grid, per_epsilon, fits, pass_flags, scalars, flags, runtime_seconds}.
/// Byte-identical for identical plans when runtime is excluded.
std::string report_json(const ExperimentReport& report, bool include_runtime = true);
/// One row per (epsilon, seed) with every per-path metric.
std::string paths_csv(const ExperimentReport& report);

}  // namespace swm

#include "swm/detail/parallel.hpp"
