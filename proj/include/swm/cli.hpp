#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "swm/experiments.hpp"

namespace swm {

/// Everything a run needs. Keys, sections and defaults are listed by config_keys().
struct RunConfig {
  ExperimentPlan plan;
  std::string output_dir = "swm_out";
  int verbosity = 1;

  bool operator==(const RunConfig&) const = default;
};

struct ConfigKey {
  std::string section;
  std::string name;
  bool required = false;
  std::string help;
};

/// The documented key table, in serialization order.
const std::vector<ConfigKey>& config_keys();

/// Parses INI-style text:
///
///   # comment
///   [experiment]
///   kind = rate_fit
///   seed = 7
///
/// experiment.kind and experiment.seed are required; every other key falls back
/// to default_plan(kind). Throws ConfigError listing every problem found:
/// syntax, unknown or repeated keys, bad values, missing required keys, plan
/// invariants and grid sizing rules.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
RunConfig parse_config(const std::filesystem::path& path);

/// Every key written explicitly, doubles with 17 significant digits, so that
/// parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

/// FNV-1a of the serialized config.
std::uint64_t config_hash(const RunConfig& config);

enum ExitCode : int { kExitPass = 0, kExitConfig = 2, kExitNumeric = 3, kExitStatistical = 4 };

/// 0 when every pass flag holds, 4 otherwise.
int exit_code_for(const ExperimentReport& report);

/// Compiler, build type and source revision baked in at configure time.
std::string build_id();

/// Files written by dispatch.
struct RunArtifacts {
  std::filesystem::path report_json, paths_csv, provenance_json;
};

/// Output directory after the SWM_OUTPUT_DIR override.
std::filesystem::path resolve_output_dir(const RunConfig& config);

/// Writes report.json (without runtime, so identical configs give identical
/// bytes), paths.csv and provenance.json (config hash, seeds, build id, runtime).
RunArtifacts write_artifacts(const RunConfig& config, const ExperimentReport& report);

/// Runs the configured experiment and writes its artifacts. Errors map to
/// exit codes: ConfigError 2, NumericalError 3, failed pass flags 4.
int dispatch(const RunConfig& config, std::ostream& log);

}  // namespace swm
