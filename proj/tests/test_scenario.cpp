#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hjnet/scenario.hpp"

using namespace hjnet;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(HJNET_SOURCE_DIR) / "scenarios";

const char* kSegment = R"({
  "schema": "hjnet.scenario/1",
  "name": "segment",
  "network": {
    "vertices": [{"id": "a", "x": 0, "y": 0}, {"id": "b", "x": 1, "y": 0}],
    "arcs": [{"id": "ab", "origin": "a", "terminus": "b"}]
  },
  "costs": {"default": {"L": {"family": "quadratic"}}},
  "beta0": 4,
  "limiters": {"a": 0, "b": 0},
  "initial_datum": {"family": "constant", "value": 1.5},
  "T": 0.5,
  "run": {"mode": "single", "dx": 0.1, "dt_rule": "half_dx"}
})";

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hjnet_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_CASE("bundled scenarios parse and resolve") {
  for (const char* name : {"triangle_quadratic", "triangle_potential", "traffic_circle", "traffic_circle_hamiltonian"}) {
    INFO(name);
    const Scenario sc = parse_scenario(kScenarios / (std::string(name) + ".json"));
    CHECK(sc.name == name);
    const ResolvedScenario r = resolve(sc);
    CHECK(r.problem.models.size() == r.problem.network.num_arcs());
    CHECK_NOTHROW(r.problem.validate());
  }
}

TEST_CASE("triangle scenario resolves to the quadratic test") {
  const Scenario sc = parse_scenario(kScenarios / "triangle_quadratic.json");
  const ResolvedScenario r = resolve(sc);
  CHECK(r.threshold == 5.0);
  CHECK(r.problem.models[0].beta0 == auto_beta0(5.0));
  CHECK(auto_beta0(5.0) == 4.0 * std::sqrt(10.0));
  CHECK(r.problem.models[0].is_quadratic());
  for (double c : r.problem.limiters) CHECK(c == -5.0);
}

TEST_CASE("traffic circle scenario uses max-admissible limiters") {
  const ResolvedScenario r = resolve(parse_scenario(kScenarios / "traffic_circle.json"));
  const std::vector<double> expected{2, 1, 0, 0.5, 0, 0.5, 2, 1};
  for (std::size_t v = 0; v < 8; ++v) CHECK(std::abs(r.problem.limiters[v] - expected[v]) <= 1e-6);
}

TEST_CASE("malformed JSON reports its line") {
  try {
    parse_scenario_text("{\n  \"name\": \"x\",\n  oops\n}");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK(code_of([] { parse_scenario("/nonexistent/scenario.json"); }) == ErrorCode::ParseError);
}

TEST_CASE("schema violations are validation errors with a path") {
  const std::string base = kSegment;
  auto message = [](const std::string& text) -> std::string {
    try {
      resolve(parse_scenario_text(text));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ValidationError);
      return e.what();
    }
    FAIL("expected ValidationError");
    return {};
  };
  CHECK(message(replace(base, R"("terminus": "b")", R"("terminus": "zz")")).find("zz") != std::string::npos);
  CHECK(message(replace(base, R"("T": 0.5)", R"("T": -1)")).find("$.T") != std::string::npos);
  CHECK(message(replace(base, R"("schema": "hjnet.scenario/1")", R"("schema": "other/9")")).find("$.schema") != std::string::npos);
  CHECK(message(replace(base, R"("family": "quadratic")", R"("family": "cubic")")).find("family") != std::string::npos);
  CHECK(message(replace(base, R"("a": 0, "b": 0)", R"("a": 0, "q": 0)")).find("q") != std::string::npos);
}

TEST_CASE("a single run writes solution and metadata") {
  const fs::path dir = scratch("single");
  Scenario sc = parse_scenario_text(kSegment);
  sc.out_dir = dir.string();
  std::ostringstream log, err;
  REQUIRE(run(sc, log, err) == 0);
  CHECK(first_line(dir / "solution.csv") == "arc_id,i,s,x1,x2,t,value");
  CHECK(fs::exists(dir / "metadata.json"));
  CHECK_FALSE(fs::exists(dir / "convergence.csv"));

  std::ifstream in(dir / "solution.csv");
  std::string line;
  std::getline(in, line);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(line.substr(line.rfind(',') + 1) == "1.5");
  }
  CHECK(rows == 11);
  fs::remove_all(dir);
}

TEST_CASE("ladder mode writes the convergence table") {
  const fs::path dir = scratch("ladder");
  Scenario sc = parse_scenario(kScenarios / "triangle_quadratic.json");
  sc.run.mode = RunSpec::Mode::ladder;
  sc.run.dx = 0.1;
  sc.run.rungs = 3;
  sc.out_dir = dir.string();
  std::ostringstream log, err;
  REQUIRE(run(sc, log, err) == 0);
  CHECK(first_line(dir / "convergence.csv") == "dx,dt,E_inf,rate_inf,E_1,rate_1,time_s,courant");
  std::ifstream in(dir / "convergence.csv");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
  fs::remove_all(dir);
}

TEST_CASE("diagnostic dumps") {
  const fs::path dir = scratch("dumps");
  Scenario sc = parse_scenario(kScenarios / "traffic_circle.json");
  sc.horizon = 1.0;
  sc.run.dx = 0.1;
  sc.run.output_times = {0.5, 1.0};
  sc.diagnostics.step_dump = true;
  sc.out_dir = dir.string();
  std::ostringstream log, err;
  REQUIRE(run(sc, log, err) == 0);
  CHECK(first_line(dir / "steps.csv") == "arc_id,i,s,x1,x2,n,t,value,alpha_star");
  CHECK(fs::exists(dir / "vertex_branches.jsonl"));
  CHECK(fs::exists(dir / "trajectories.csv"));
  fs::remove_all(dir);
}

TEST_CASE("inadmissible limiters exit with status 2") {
  const fs::path dir = scratch("inadmissible");
  Scenario sc = parse_scenario(kScenarios / "traffic_circle.json");
  sc.limiters.max_admissible = false;
  sc.limiters.values.clear();
  for (int v = 1; v <= 8; ++v) sc.limiters.values["v" + std::to_string(v)] = 0.0;
  sc.limiters.values["v1"] = 2.1;
  sc.limiters.values["v3"] = 0.0;
  sc.out_dir = dir.string();
  std::ostringstream log, err;
  CHECK(run(sc, log, err) == 2);
  CHECK(err.str().find("v1") != std::string::npos);
  CHECK(err.str().find("INADMISSIBLE") != std::string::npos);
  fs::remove_all(dir);
}
