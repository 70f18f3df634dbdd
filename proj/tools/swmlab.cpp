// swmlab: run, validate and inspect stochastic wave map experiments.
//
//   swmlab run configs/rate_fit.ini
//   swmlab validate configs/rate_fit.ini
//   swmlab moments --H 0.75 --mollifier gaussian --gamma 1
//   swmlab oracle heat_energy
//   swmlab keys

#include <cstdio>
#include <iomanip>
#include <iostream>

#include "CLI11.hpp"
#include "swm/cli.hpp"
#include "swm/errors.hpp"
#include "swm/noise.hpp"
#include "swm/oracles.hpp"

using namespace swm;

namespace {

int cmd_moments(double hurst, double a_h, const std::string& mollifier, double gamma) {
  const auto d = mollify(make_fractional_density(hurst, a_h), MollifierSpec::by_name(mollifier));
  const auto m = moments(d);
  std::cout << std::setprecision(12) << "c0 " << m.c0 << "\n"
            << "c1 " << m.c1 << "\n"
            << "gamma0 " << enhanced_friction(gamma, m) << "\n";
  return kExitPass;
}

int cmd_oracle(const std::string& name) {
  const auto names = name == "all" ? oracle_names() : std::vector<std::string>{name};
  bool all = true;
  for (const auto& n : names) {
    const auto r = run_oracle(n);
    all = all && r.pass;
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
    for (const auto& [k, v] : r.values) std::cout << "       " << k << " = " << std::setprecision(10) << v << "\n";
  }
  return all ? kExitPass : kExitStatistical;
}

void print_keys() {
  std::string section;
  for (const auto& k : config_keys()) {
    if (k.section != section) {
      section = k.section;
      std::cout << "[" << section << "]\n";
    }
    std::cout << "  " << std::left << std::setw(18) << k.name << (k.required ? "required  " : "          ") << k.help
              << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic wave map experiments"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "run the experiment a config describes and write its artifacts");
  run->add_option("config", config_path, "config file")->required();

  auto* validate = app.add_subcommand("validate", "check a config and print it with defaults filled in");
  validate->add_option("config", config_path, "config file")->required();

  double hurst = 0.75, a_h = 1.0, gamma = 1.0;
  std::string mollifier = "gaussian";
  auto* mom = app.add_subcommand("moments", "print c0, c1 and gamma0 of the mollified fractional density");
  mom->add_option("--H", hurst, "Hurst index")->required();
  mom->add_option("--mollifier", mollifier, "gaussian | identity")->required();
  mom->add_option("--gamma", gamma, "friction")->capture_default_str();
  mom->add_option("--a-h", a_h, "density constant a_H")->capture_default_str();

  std::string oracle_name;
  auto* orc = app.add_subcommand("oracle", "run a named analytic check (or all)");
  orc->add_option("name", oracle_name, "one of: all, " + [] {
    std::string s;
    for (const auto& n : oracle_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
  }())->required();

  auto* keys = app.add_subcommand("keys", "list every config key");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run) return dispatch(parse_config(config_path), std::cout);
    if (*validate) {
      const auto cfg = parse_config(config_path);
      std::cout << serialize_config(cfg);
      std::fprintf(stdout, "# config hash %016llx\n", static_cast<unsigned long long>(config_hash(cfg)));
      return kExitPass;
    }
    if (*mom) return cmd_moments(hurst, a_h, mollifier, gamma);
    if (*orc) return cmd_oracle(oracle_name);
    if (*keys) {
      print_keys();
      return kExitPass;
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}
