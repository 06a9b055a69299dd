#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hjnet/analysis.hpp"
#include "hjnet/hamiltonian.hpp"
#include "hjnet/network.hpp"
#include "hjnet/scheme.hpp"

namespace hjnet {

inline constexpr const char* kScenarioSchema = "hjnet.scenario/1";

struct CostEntry {
  ArcCostSpec spec;
  /// Build L from the convex-envelope modification of H instead of the
  /// closed-form conjugate. Only meaningful for Hamiltonian specs.
  bool modified = false;
};

struct LimiterSpec {
  bool max_admissible = false;
  std::map<std::string, double> values;  // explicit values, or overrides on top of max_admissible
};

struct DatumSpec {
  enum class Kind { zero, constant, expression };
  Kind kind = Kind::zero;
  double constant = 0.0;
  Point gradient = Point::Zero();
  std::vector<PotentialTerm> potential;

  /// g(x) = constant + gradient . x + sum of potential terms.
  InitialDatum evaluator() const;
};

struct ReferenceSpec {
  enum class Kind { none, exact_test1, fine };
  Kind kind = Kind::none;
  double c = 0.0;         // limiter of the exact Test-1 solution
  double fine_dx = 0.0;   // fine-grid reference spacing
};

struct RunSpec {
  enum class Mode { single, ladder };
  Mode mode = Mode::single;
  double dx = 0.05;
  DtRule dt_rule;
  std::size_t rungs = 5;
  std::vector<double> output_times;  // empty: final time only
};

struct Diagnostics {
  bool lipschitz_check = false;
  bool trajectory_dump = false;
  bool step_dump = false;
};

struct Scenario {
  std::string schema = kScenarioSchema;
  std::string name;
  std::vector<Vertex> vertices;
  std::vector<ArcSpec> arcs;
  std::vector<CostEntry> costs;  // arc order
  std::optional<double> beta0;   // empty: "auto"
  LimiterSpec limiters;
  DatumSpec datum;
  double horizon = 1.0;
  RunSpec run;
  ReferenceSpec reference;
  Diagnostics diagnostics;
  std::string out_dir = "out";
};

/// Throws ParseError on malformed JSON and ValidationError on schema or
/// cross-reference problems.
Scenario parse_scenario(const std::filesystem::path& path);
Scenario parse_scenario_text(const std::string& text, const std::string& origin = "<string>");

struct ResolvedScenario {
  Problem problem;
  double threshold = 0.0;  // max(M0 + 1, max |c_x|)
  std::optional<MomentumSelection> momentum;
};

/// Builds the network, cost models and limiters. Does not check admissibility.
ResolvedScenario resolve(const Scenario& scenario);

/// Default control bound for quadratic kinetic costs: 4 sqrt(2 A).
double auto_beta0(double threshold);

/// Runs the scenario and writes its artifacts into scenario.out_dir.
/// Returns the process exit status; diagnostics go to `err`.
int run(const Scenario& scenario, std::ostream& log, std::ostream& err);

}  // namespace hjnet
