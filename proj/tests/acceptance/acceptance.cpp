// Acceptance gate: one [PASS]/[FAIL] line per criterion, each followed by the
// numbers behind the verdict.
//
// Exit status is 0 once every criterion has been evaluated, whatever the
// verdicts; 1 if a criterion could not be evaluated (exception). With --strict
// any FAIL also gives 1. The verdict lines are mirrored to the file named by
// --out (default acceptance_results.txt in the working directory).

#include <chrono>
#include <cstring>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "swm/experiments.hpp"
#include "swm/oracles.hpp"

using namespace swm;

namespace {

struct Verdict {
  bool pass = false;
  std::vector<std::string> lines;
};

struct Criterion {
  int id;
  std::string title;
  double limit_seconds;
  std::function<Verdict()> run;
};

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

Verdict from_oracles(std::initializer_list<const char*> names) {
  Verdict v{true, {}};
  for (const char* n : names) {
    const auto r = run_oracle(n);
    v.pass = v.pass && r.pass;
    std::string line = std::string(r.pass ? "ok   " : "bad  ") + r.name + ":";
    for (const auto& [k, x] : r.values) line += " " + k + "=" + num(x);
    v.lines.push_back(line);
  }
  return v;
}

Verdict from_report(const ExperimentReport& rep) {
  Verdict v{rep.all_pass(), {}};
  for (const auto& [name, d] : rep.pass_flags)
    v.lines.push_back(std::string(d.pass ? "ok   " : "bad  ") + name + ": " + d.detail);
  for (const auto& f : rep.flags) v.lines.push_back("flag " + f);
  return v;
}

ExperimentReport energy_report;

std::vector<Criterion> criteria() {
  return {
      {1, "noise moments c0, c1 and rescaling", 1.0, [] { return from_oracles({"moments"}); }},
      {2, "homogeneous-field covariance and scaling identity", 30.0, [] { return from_oracles({"covariance"}); }},
      {3, "heat-flow energy identity and first-order drift", 10.0, [] { return from_oracles({"heat_energy"}); }},
      {4, "equivariant reductions of heat flow and wave map", 30.0,
       [] { return from_oracles({"heat_equivariant", "wave_equivariant"}); }},
      {5, "stochastic energy identity, eps 0.25, 200 paths", 600.0,
       [] {
         energy_report = run_energy_audit(default_plan(ExperimentKind::EnergyAudit));
         return from_report(energy_report);
       }},
      {6, "Ito with gamma0 against Stratonovich with gamma", 900.0,
       [] { return from_report(run_ito_stratonovich(default_plan(ExperimentKind::ItoStratonovich))); }},
      {7, "velocity-energy factor and weak pairings, 100 paths", 3600.0,
       [] { return from_report(run_velocity_factor(default_plan(ExperimentKind::VelocityFactor))); }},
      {8, "mean-square rate fit, 4 eps, 50 paths", 7200.0,
       [] {
         const auto rep = run_rate_fit(default_plan(ExperimentKind::RateFit));
         auto v = from_report(rep);
         for (const auto& [name, f] : rep.fits)
           v.lines.push_back("fit  " + name + ": slope " + num(f.fit.slope) + " R^2 " + num(f.fit.r2));
         return v;
       }},
      {9, "coupled fluctuation limit, 50 paths", 7200.0,
       [] {
         const auto rep = run_clt(default_plan(ExperimentKind::CLT));
         auto v = from_report(rep);
         for (const auto& row : rep.per_epsilon) {
           const auto& m = row.metrics.at("y_minus_rho");
           v.lines.push_back("eps  " + num(row.epsilon) + ": E|y - rho| = " + num(m.mean) + " +/- " + num(m.stderr_));
         }
         return v;
       }},
      {10, "deterministic limit slopes, beta 1/4 and 1/2", 600.0,
       [] { return from_report(run_deterministic_limit(default_plan(ExperimentKind::DeterministicLimit))); }},
      {11, "property suites and report reproducibility", 600.0,
       [] {
         auto v = from_oracles({"constraints", "parseval", "lambda", "prepare_initial", "heat_kernel"});
         // Same plan on one worker: the report and per-path CSV must be byte-identical.
         auto plan = default_plan(ExperimentKind::EnergyAudit);
         if (energy_report.per_epsilon.empty()) energy_report = run_energy_audit(plan);
         plan.threads = 1;
         const auto again = run_energy_audit(plan);
         auto strip = [](ExperimentReport r) {
           r.plan.threads = 0;
           return r;
         };
         const bool same = report_json(strip(again), false) == report_json(strip(energy_report), false) &&
                           paths_csv(again) == paths_csv(energy_report);
         v.pass = v.pass && same;
         v.lines.push_back(std::string(same ? "ok   " : "bad  ") +
                           "energy_audit report rerun on 1 thread is byte-identical");
         return v;
       }},
  };
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  std::string out_path = "acceptance_results.txt";
  for (int i = 1; i < argc; ++i) {
    if (!std::strcmp(argv[i], "--strict")) strict = true;
    else if (!std::strcmp(argv[i], "--out") && i + 1 < argc) out_path = argv[++i];
  }
  std::ofstream out(out_path);
  auto emit = [&](const std::string& s) {
    std::cout << s << "\n" << std::flush;
    out << s << "\n" << std::flush;
  };

  int failed = 0, broken = 0;
  for (const auto& c : criteria()) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    std::string error;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      error = e.what();
      ++broken;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = error.empty() && v.pass && in_time;
    if (!pass) ++failed;
    std::ostringstream head;
    head << (pass ? "[PASS] " : "[FAIL] ") << std::setw(2) << c.id << " " << c.title << " (" << std::fixed
         << std::setprecision(1) << secs << " s, limit " << c.limit_seconds << " s)";
    emit(head.str());
    if (!error.empty()) emit("       error: " + error);
    if (!in_time) emit("       over the runtime limit");
    for (const auto& l : v.lines) emit("       " + l);
  }
  emit(std::to_string(11 - failed) + "/11 criteria pass");
  if (broken) return 1;
  return strict && failed ? 1 : 0;
}
