#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "swm/cli.hpp"
#include "swm/errors.hpp"
#include "swm/oracles.hpp"

using namespace swm;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config_text(text, "t.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("minimal config takes the kind's defaults") {
  const auto c = parse_config_text("[experiment]\nkind = rate_fit\nseed = 9\n");
  auto expect = default_plan(ExperimentKind::RateFit);
  expect.seed = 9;
  CHECK(c.plan == expect);
  CHECK(c.output_dir == "swm_out");
  CHECK(c.verbosity == 1);
}

TEST_CASE("config round trip") {
  for (auto kind : {ExperimentKind::LLN, ExperimentKind::RateFit, ExperimentKind::VelocityFactor, ExperimentKind::CLT,
                    ExperimentKind::DeterministicLimit, ExperimentKind::EnergyAudit,
                    ExperimentKind::ItoStratonovich}) {
    RunConfig c;
    c.plan = default_plan(kind);
    c.plan.seed = 123456789012345ull;
    CHECK(parse_config_text(serialize_config(c)) == c);
  }
  RunConfig c;
  c.plan = default_plan(ExperimentKind::LLN);
  c.plan.epsilons = {0.3, 0.1 / 3.0, 0.01};
  c.plan.horizon = 0.1;
  c.plan.gamma = 1.0 / 7.0;
  c.plan.grid.half_length = 30.0 + 1.0 / 3.0;
  c.plan.grid.dt = 1e-4;
  c.output_dir = "some dir/with spaces";
  c.verbosity = 2;
  const auto again = parse_config_text(serialize_config(c));
  CHECK(again == c);
  CHECK(serialize_config(again) == serialize_config(c));
  CHECK(config_hash(again) == config_hash(c));
  c.plan.seed += 1;
  CHECK(config_hash(again) != config_hash(c));
}

TEST_CASE("config errors are reported together") {
  const auto e = error_of("[experiment]\nn_paths = 5\ncolour = blue\n[grid]\ndt = abc\n");
  CHECK(e.find("missing required keys experiment.kind, experiment.seed") != std::string::npos);
  CHECK(e.find("t.ini:3: unknown key 'experiment.colour'") != std::string::npos);
  CHECK(e.find("t.ini:5: grid.dt") != std::string::npos);
  CHECK(e.find("3 problems") != std::string::npos);

  const auto plan = error_of("[experiment]\nkind = lln\nseed = 1\nn_paths = 5\nepsilons = 0.1, 0.2\n[grid]\nhalf_length = 3\n");
  CHECK(plan.find("strictly decreasing") != std::string::npos);
  CHECK(plan.find("n_paths >= 30") != std::string::npos);
  CHECK(plan.find("half_length 3") != std::string::npos);

  CHECK(error_of("[experiment]\nkind = lln\nseed = 1\nseed = 2\n").find("already set on line 3") != std::string::npos);
  CHECK(error_of("[experiment]\nkind = nope\nseed = 1\n").find("experiment.kind") != std::string::npos);
  CHECK(error_of("[experiment\nkind = lln\n").find("malformed section") != std::string::npos);
  CHECK(error_of("[experiment]\nkind = lln\nseed = -1\n").find("not an integer") != std::string::npos);
  CHECK(error_of("kind = lln\n").find("unknown key 'kind'") != std::string::npos);
  CHECK(error_of("[experiment]\nkind = lln\nseed = 1\n[grid]\ndt = 0.5\n").find("dt") != std::string::npos);
  CHECK_THROWS_AS(parse_config("/nonexistent/x.ini"), ConfigError);
}

TEST_CASE("every config key is documented and serialized") {
  RunConfig c;
  c.plan = default_plan(ExperimentKind::LLN);
  const auto text = serialize_config(c);
  for (const auto& k : config_keys()) {
    CHECK(!k.help.empty());
    CHECK(text.find("\n" + k.name + " = ") != std::string::npos);
  }
}

TEST_CASE("exit code follows the pass flags") {
  ExperimentReport r;
  CHECK(exit_code_for(r) == kExitPass);
  r.pass_flags["a"] = {true, "", ""};
  CHECK(exit_code_for(r) == kExitPass);
  r.pass_flags["b"] = {false, "", ""};
  CHECK(exit_code_for(r) == kExitStatistical);
}

TEST_CASE("dispatch writes reproducible artifacts and honours the output override") {
  const auto dir = std::filesystem::temp_directory_path() / "swm_cli_test";
  std::filesystem::remove_all(dir);
  auto c = parse_config_text("[experiment]\nkind = lln\nseed = 4\n[model]\nnoise = false\n[output]\ndir = " +
                             (dir / "a").string() + "\nverbosity = 0\n");
  std::ostringstream log;
  CHECK(dispatch(c, log) == kExitPass);
  const auto first = slurp(dir / "a" / "report.json");
  CHECK(first.find("\"runtime_seconds\"") == std::string::npos);
  CHECK(slurp(dir / "a" / "provenance.json").find(build_id()) != std::string::npos);

  setenv("SWM_OUTPUT_DIR", (dir / "b").string().c_str(), 1);
  CHECK(resolve_output_dir(c) == dir / "b");
  CHECK(dispatch(c, log) == kExitPass);
  unsetenv("SWM_OUTPUT_DIR");
  CHECK(slurp(dir / "b" / "report.json") == first);
  CHECK(slurp(dir / "b" / "paths.csv") == slurp(dir / "a" / "paths.csv"));

  c.plan.grid.half_length = 2.0;
  CHECK(dispatch(c, log) == kExitConfig);
  std::filesystem::remove_all(dir);
}

TEST_CASE("oracle registry") {
  CHECK(oracle_names().size() == 10);
  CHECK_THROWS_AS(run_oracle("nope"), ConfigError);
  for (const char* n : {"moments", "parseval", "heat_kernel"}) {
    const auto r = run_oracle(n);
    CHECK(r.name == n);
    CHECK(r.pass);
  }
  CHECK(closed_form_c0(0.75, 1.0) == doctest::Approx(3.6256099082219083).epsilon(1e-14));
}
