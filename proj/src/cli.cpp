#include "swm/cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "swm/errors.hpp"

#ifndef SWM_BUILD_ID
#define SWM_BUILD_ID "unknown"
#endif

namespace swm {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Shortest %g form that reads back to the same double.
std::string fmt_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("'" + s + "' is not a finite number");
  return v;
}

template <class I>
I to_integer(const std::string& s) {
  I v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("'" + s + "' is not an integer");
  return v;
}

bool to_bool(const std::string& s) {
  const auto l = lower(s);
  if (l == "true" || l == "yes" || l == "on" || l == "1") return true;
  if (l == "false" || l == "no" || l == "off" || l == "0") return false;
  throw ConfigError("'" + s + "' is not a boolean");
}

std::vector<double> to_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item)));
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_double(v[i]);
  return s;
}

template <class T>
std::string fmt_optional(const std::optional<T>& v) {
  if (!v) return "auto";
  if constexpr (std::is_same_v<T, double>) return fmt_double(*v);
  else return std::to_string(*v);
}

struct Binding {
  ConfigKey key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<Binding>& bindings() {
  using C = RunConfig;
  using S = const std::string&;
  static const std::vector<Binding> b = {
      {{"experiment", "kind", true, "lln | rate_fit | velocity_factor | clt | deterministic_limit | energy_audit | ito_stratonovich"},
       [](const C& c) { return to_string(c.plan.kind); },
       [](C& c, S v) { c.plan.kind = experiment_kind_from_string(v); }},
      {{"experiment", "seed", true, "base seed; path p uses seed + p at every epsilon"},
       [](const C& c) { return std::to_string(c.plan.seed); },
       [](C& c, S v) { c.plan.seed = to_integer<std::uint64_t>(v); }},
      {{"experiment", "epsilons", false, "strictly decreasing list in (0, 1]"},
       [](const C& c) { return fmt_list(c.plan.epsilons); },
       [](C& c, S v) { c.plan.epsilons = to_list(v); }},
      {{"experiment", "n_paths", false, "Monte Carlo paths per epsilon (>= 30 for statistical kinds)"},
       [](const C& c) { return std::to_string(c.plan.n_paths); },
       [](C& c, S v) { c.plan.n_paths = to_integer<int>(v); }},
      {{"experiment", "horizon", false, "final time T"},
       [](const C& c) { return fmt_double(c.plan.horizon); },
       [](C& c, S v) { c.plan.horizon = to_double(v); }},
      {{"experiment", "eta", false, "lln exceedance threshold"},
       [](const C& c) { return fmt_double(c.plan.eta); },
       [](C& c, S v) { c.plan.eta = to_double(v); }},
      {{"experiment", "betas", false, "deterministic_limit families, v0 = scale eps^(beta - 1/2) w"},
       [](const C& c) { return fmt_list(c.plan.betas); },
       [](C& c, S v) { c.plan.betas = to_list(v); }},
      {{"experiment", "velocity_scale", false, "deterministic_limit initial velocity scale"},
       [](const C& c) { return fmt_double(c.plan.velocity_scale); },
       [](C& c, S v) { c.plan.velocity_scale = to_double(v); }},
      {{"experiment", "threads", false, "worker threads, 0 = hardware concurrency"},
       [](const C& c) { return std::to_string(c.plan.threads); },
       [](C& c, S v) { c.plan.threads = to_integer<int>(v); }},
      {{"model", "hurst", false, "Hurst index H"},
       [](const C& c) { return fmt_double(c.plan.hurst); },
       [](C& c, S v) { c.plan.hurst = to_double(v); }},
      {{"model", "a_h", false, "fractional density constant a_H"},
       [](const C& c) { return fmt_double(c.plan.a_h); },
       [](C& c, S v) { c.plan.a_h = to_double(v); }},
      {{"model", "gamma", false, "friction gamma"},
       [](const C& c) { return fmt_double(c.plan.gamma); },
       [](C& c, S v) { c.plan.gamma = to_double(v); }},
      {{"model", "mollifier", false, "gaussian | identity"},
       [](const C& c) { return c.plan.mollifier; },
       [](C& c, S v) { c.plan.mollifier = lower(v); }},
      {{"model", "noise", false, "false runs the deterministic equation (c0 = 0)"},
       [](const C& c) { return std::string(c.plan.noise ? "true" : "false"); },
       [](C& c, S v) { c.plan.noise = to_bool(v); }},
      {{"initial", "family", false, "geodesic_bump | constant"},
       [](const C& c) { return to_string(c.plan.initial); },
       [](C& c, S v) { c.plan.initial = initial_family_from_string(v); }},
      {{"initial", "amplitude", false, "geodesic bump angle amplitude"},
       [](const C& c) { return fmt_double(c.plan.bump_amplitude); },
       [](C& c, S v) { c.plan.bump_amplitude = to_double(v); }},
      {{"grid", "dx_max", false, "upper bound on dx"},
       [](const C& c) { return fmt_double(c.plan.grid.dx_max); },
       [](C& c, S v) { c.plan.grid.dx_max = to_double(v); }},
      {{"grid", "resolution", false, "dx <= pi sqrt(eps_min) / resolution"},
       [](const C& c) { return fmt_double(c.plan.grid.resolution); },
       [](C& c, S v) { c.plan.grid.resolution = to_double(v); }},
      {{"grid", "cfl", false, "dt <= cfl sqrt(eps_min) dx"},
       [](const C& c) { return fmt_double(c.plan.grid.cfl); },
       [](C& c, S v) { c.plan.grid.cfl = to_double(v); }},
      {{"grid", "friction_fraction", false, "dt <= friction_fraction eps_min / gamma0"},
       [](const C& c) { return fmt_double(c.plan.grid.friction_fraction); },
       [](C& c, S v) { c.plan.grid.friction_fraction = to_double(v); }},
      {{"grid", "margin", false, "extra half-length beyond support + T / sqrt(eps_min)"},
       [](const C& c) { return fmt_double(c.plan.grid.margin); },
       [](C& c, S v) { c.plan.grid.margin = to_double(v); }},
      {{"grid", "half_length", false, "override L, or auto"},
       [](const C& c) { return fmt_optional(c.plan.grid.half_length); },
       [](C& c, S v) { c.plan.grid.half_length = lower(v) == "auto" ? std::nullopt : std::optional(to_double(v)); }},
      {{"grid", "n_points", false, "override N (even), or auto"},
       [](const C& c) { return fmt_optional(c.plan.grid.n_points); },
       [](C& c, S v) { c.plan.grid.n_points = lower(v) == "auto" ? std::nullopt : std::optional(to_integer<int>(v)); }},
      {{"grid", "dt", false, "override dt, or auto"},
       [](const C& c) { return fmt_optional(c.plan.grid.dt); },
       [](C& c, S v) { c.plan.grid.dt = lower(v) == "auto" ? std::nullopt : std::optional(to_double(v)); }},
      {{"output", "dir", false, "artifact directory (SWM_OUTPUT_DIR overrides)"},
       [](const C& c) { return c.output_dir; },
       [](C& c, S v) {
         if (v.empty()) throw ConfigError("empty directory");
         c.output_dir = v;
       }},
      {{"output", "verbosity", false, "0 quiet, 1 summary, 2 per-epsilon rows"},
       [](const C& c) { return std::to_string(c.verbosity); },
       [](C& c, S v) {
         c.verbosity = to_integer<int>(v);
         if (c.verbosity < 0 || c.verbosity > 2) throw ConfigError("verbosity must be 0, 1 or 2");
       }},
  };
  return b;
}

std::string full_name(const ConfigKey& k) { return k.section + "." + k.name; }

struct Entry {
  std::string value;
  int line = 0;
};

// Splits a multi-line error into items, skipping headers and repeats.
void append_lines(std::vector<std::string>& errs, const std::string& msg) {
  std::stringstream ss(msg);
  std::string line;
  while (std::getline(ss, line)) {
    auto t = trim(line);
    if (t.empty() || t.back() == ':') continue;
    if (t.rfind("- ", 0) == 0) t = t.substr(2);
    if (std::find(errs.begin(), errs.end(), t) == errs.end()) errs.push_back(t);
  }
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& b : bindings()) k.push_back(b.key);
    return k;
  }();
  return keys;
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  std::vector<std::string> errs;
  std::map<std::string, Entry> entries;
  auto where = [&](int line) { return origin + ":" + std::to_string(line) + ": "; };

  std::stringstream ss(text);
  std::string raw, section;
  int line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        errs.push_back(where(line_no) + "malformed section header '" + line + "'");
        continue;
      }
      section = lower(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errs.push_back(where(line_no) + "expected key = value, got '" + line + "'");
      continue;
    }
    const auto key = lower(trim(line.substr(0, eq)));
    const auto name = section.empty() ? key : section + "." + key;
    const bool known = std::any_of(bindings().begin(), bindings().end(),
                                   [&](const Binding& b) { return full_name(b.key) == name; });
    if (!known) {
      errs.push_back(where(line_no) + "unknown key '" + name + "'");
      continue;
    }
    if (auto it = entries.find(name); it != entries.end()) {
      errs.push_back(where(line_no) + "'" + name + "' already set on line " + std::to_string(it->second.line));
      continue;
    }
    entries[name] = {trim(line.substr(eq + 1)), line_no};
  }

  std::vector<std::string> missing;
  for (const auto& b : bindings())
    if (b.key.required && !entries.count(full_name(b.key))) missing.push_back(full_name(b.key));
  if (!missing.empty()) {
    std::string m = origin + ": missing required key" + (missing.size() > 1 ? "s " : " ");
    for (std::size_t i = 0; i < missing.size(); ++i) m += (i ? ", " : "") + missing[i];
    errs.push_back(m);
  }

  // Without a usable kind the values are still checked against a scratch plan.
  RunConfig cfg;
  bool have_kind = false;
  if (auto it = entries.find("experiment.kind"); it != entries.end()) {
    try {
      cfg.plan = default_plan(experiment_kind_from_string(it->second.value));
      have_kind = true;
    } catch (const ConfigError& e) {
      errs.push_back(where(it->second.line) + "experiment.kind: " + e.what());
    }
  }
  for (const auto& b : bindings()) {
    const auto name = full_name(b.key);
    const auto it = entries.find(name);
    if (it == entries.end() || name == "experiment.kind") continue;
    try {
      b.set(cfg, it->second.value);
    } catch (const ConfigError& e) {
      errs.push_back(where(it->second.line) + name + ": " + e.what());
    }
  }

  if (have_kind && errs.empty()) {
    try {
      validate_plan(cfg.plan);
    } catch (const ConfigError& e) {
      append_lines(errs, e.what());
    }
    const auto& eps = cfg.plan.epsilons;
    const bool sizable = !eps.empty() && std::all_of(eps.begin(), eps.end(), [](double e) { return e > 0.0; }) &&
                         cfg.plan.horizon > 0.0 && cfg.plan.gamma > 0.0;
    if (sizable) {
      try {
        const double eps_min = *std::min_element(eps.begin(), eps.end());
        plan_grid(cfg.plan, cfg.plan.gamma + plan_noise_mass(cfg.plan, eps_min) / 2.0);
      } catch (const ConfigError& e) {
        append_lines(errs, e.what());
      }
    }
  }

  if (!errs.empty()) {
    std::string msg = "invalid configuration (" + std::to_string(errs.size()) + " problem" +
                      (errs.size() > 1 ? "s" : "") + "):";
    for (const auto& e : errs) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::string serialize_config(const RunConfig& config) {
  std::string out, section;
  for (const auto& b : bindings()) {
    if (b.key.section != section) {
      section = b.key.section;
      out += (out.empty() ? "[" : "\n[") + section + "]\n";
    }
    out += b.key.name + " = " + b.get(config) + "\n";
  }
  return out;
}

std::uint64_t config_hash(const RunConfig& config) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : serialize_config(config)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

int exit_code_for(const ExperimentReport& report) { return report.all_pass() ? kExitPass : kExitStatistical; }

std::string build_id() { return SWM_BUILD_ID; }

std::filesystem::path resolve_output_dir(const RunConfig& config) {
  if (const char* env = std::getenv("SWM_OUTPUT_DIR"); env && *env) return env;
  return config.output_dir;
}

RunArtifacts write_artifacts(const RunConfig& config, const ExperimentReport& report) {
  const auto dir = resolve_output_dir(config);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
  RunArtifacts a{dir / "report.json", dir / "paths.csv", dir / "provenance.json"};
  auto write = [](const std::filesystem::path& p, const std::string& body) {
    std::ofstream f(p, std::ios::binary);
    f << body;
    if (!f) throw ConfigError("cannot write '" + p.string() + "'");
  };
  write(a.report_json, report_json(report, false) + "\n");
  write(a.paths_csv, paths_csv(report));

  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(config)));
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  nlohmann::ordered_json prov;
  prov["experiment"] = to_string(config.plan.kind);
  prov["config_hash"] = hash;
  prov["build_id"] = build_id();
  prov["seeds"] = {{"first", config.plan.seed},
                   {"count", config.plan.n_paths},
                   {"rule", "path p draws its noise table from seed + p and reuses it at every epsilon"}};
  prov["all_pass"] = report.all_pass();
  prov["exit_code"] = exit_code_for(report);
  prov["runtime_seconds"] = report.runtime_seconds;
  prov["created_utc"] = stamp;
  prov["config"] = serialize_config(config);
  write(a.provenance_json, prov.dump(2) + "\n");
  return a;
}

int dispatch(const RunConfig& config, std::ostream& log) {
  try {
    if (config.verbosity > 0) log << "running " << to_string(config.plan.kind) << " (" << config.plan.n_paths
                                  << " paths, " << config.plan.epsilons.size() << " epsilon values)\n";
    const auto report = run_experiment(config.plan);
    const auto files = write_artifacts(config, report);
    if (config.verbosity > 1) {
      for (const auto& row : report.per_epsilon) {
        log << "  eps " << row.epsilon;
        for (const auto& [k, e] : row.metrics) log << "  " << k << " " << e.mean << " +/- " << e.stderr_;
        log << "\n";
      }
    }
    if (config.verbosity > 0) {
      for (const auto& [name, d] : report.pass_flags)
        log << (d.pass ? "  pass  " : "  FAIL  ") << name << ": " << d.detail << "\n";
      for (const auto& f : report.flags) log << "  flag  " << f << "\n";
      log << "wrote " << files.report_json.string() << "\n";
    }
    return exit_code_for(report);
  } catch (const ConfigError& e) {
    log << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    log << "numerical error: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace swm
