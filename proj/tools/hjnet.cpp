#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "hjnet/scenario.hpp"

namespace {

hjnet::DtRule parse_rule(const std::string& text) {
  if (text == "half_dx") return hjnet::DtRule::half_dx();
  if (text.rfind("power_rule", 0) == 0) {
    hjnet::DtRule rule = hjnet::DtRule::power();
    std::string rest = text.substr(std::string("power_rule").size());
    if (!rest.empty()) {
      if (rest[0] != ':') throw CLI::ValidationError("--dt-rule", "expected power_rule[:C[:p]]");
      rest = rest.substr(1);
      const auto colon = rest.find(':');
      rule.C = std::stod(rest.substr(0, colon));
      if (colon != std::string::npos) rule.p = std::stod(rest.substr(colon + 1));
    }
    return rule;
  }
  throw CLI::ValidationError("--dt-rule", "expected half_dx or power_rule[:C[:p]]");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-Lagrangian solver for Hamilton-Jacobi equations on networks"};
  app.require_subcommand(1);

  CLI::App* run = app.add_subcommand("run", "solve a scenario and write its artifacts");
  std::string scenario_path;
  std::optional<double> dx, horizon;
  std::optional<std::string> dt_rule, out_dir, reference;
  std::optional<std::size_t> ladder;
  bool emit_steps = false, check_invariants = false;
  run->add_option("scenario", scenario_path, "scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--dx", dx, "space step")->check(CLI::PositiveNumber);
  run->add_option("--dt-rule", dt_rule, "half_dx or power_rule[:C[:p]]");
  run->add_option("--T", horizon, "final time")->check(CLI::NonNegativeNumber);
  run->add_option("--out-dir", out_dir, "output directory");
  run->add_flag("--emit-steps", emit_steps, "write every level and the vertex branch log");
  run->add_option("--ladder", ladder, "convergence study with n halving rungs")->check(CLI::Range(3, 20));
  run->add_option("--reference", reference, "exact or fine:<dx>");
  run->add_flag("--check-invariants", check_invariants, "check the discrete stability bounds");

  CLI11_PARSE(app, argc, argv);

  try {
    hjnet::Scenario sc = hjnet::parse_scenario(scenario_path);
    if (dx) sc.run.dx = *dx;
    if (dt_rule) sc.run.dt_rule = parse_rule(*dt_rule);
    if (horizon) sc.horizon = *horizon;
    if (out_dir) sc.out_dir = *out_dir;
    if (emit_steps) sc.diagnostics.step_dump = true;
    if (check_invariants) sc.diagnostics.lipschitz_check = true;
    if (ladder) {
      sc.run.mode = hjnet::RunSpec::Mode::ladder;
      sc.run.rungs = *ladder;
    }
    if (reference) {
      if (*reference == "exact") {
        if (sc.reference.kind != hjnet::ReferenceSpec::Kind::exact_test1)
          throw hjnet::Error(hjnet::ErrorCode::ValidationError,
                             "--reference exact: the scenario has no closed-form reference");
      } else if (reference->rfind("fine:", 0) == 0) {
        sc.reference.kind = hjnet::ReferenceSpec::Kind::fine;
        sc.reference.fine_dx = std::stod(reference->substr(5));
      } else {
        throw hjnet::Error(hjnet::ErrorCode::ValidationError, "--reference: expected exact or fine:<dx>");
      }
    }
    return hjnet::run(sc, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
