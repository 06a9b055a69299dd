#include "hjnet/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace hjnet {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& path, const std::string& reason) {
  throw Error(ErrorCode::ValidationError, path + ": " + reason);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) invalid(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) invalid(path + "." + key, "missing");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) invalid(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) invalid(path, "expected a finite number");
  return v;
}

double positive(const json& j, const std::string& path) {
  const double v = number(j, path);
  if (!(v > 0.0)) invalid(path, "must be positive");
  return v;
}

std::string text(const json& j, const std::string& path) {
  if (!j.is_string()) invalid(path, "expected a string");
  return j.get<std::string>();
}

bool flag(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) return false;
  if (!it->is_boolean()) invalid(path + "." + key, "expected true or false");
  return it->get<bool>();
}

Point point(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) invalid(path, "expected [x, y]");
  return Point(number(j[0], path + "[0]"), number(j[1], path + "[1]"));
}

std::vector<PotentialTerm> parse_potential(const json& j, const std::string& path) {
  std::vector<PotentialTerm> terms;
  if (!j.is_array()) invalid(path, "expected a list of potential terms");
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string p = path + "[" + std::to_string(k) + "]";
    const json& t = j[k];
    PotentialTerm term;
    term.weight = number(require(t, "weight", p), p + ".weight");
    if (t.contains("center")) {
      term.kind = PotentialTerm::Kind::point;
      term.center = point(t["center"], p + ".center");
    } else if (t.contains("axis")) {
      term.kind = PotentialTerm::Kind::axis;
      const json& axis = t["axis"];
      if (!axis.is_number_integer() || axis.get<int>() < 0 || axis.get<int>() > 1) invalid(p + ".axis", "must be 0 or 1");
      term.axis = axis.get<int>();
      if (t.contains("offset")) term.offset = number(t["offset"], p + ".offset");
    } else {
      invalid(p, "needs either \"center\" or \"axis\"");
    }
    terms.push_back(term);
  }
  return terms;
}

CostEntry parse_cost(const json& j, const std::string& path) {
  CostEntry entry;
  const bool has_L = j.contains("L"), has_H = j.contains("H");
  if (has_L == has_H) invalid(path, "give exactly one of \"L\" or \"H\"");
  const std::string key = has_L ? "L" : "H";
  const std::string p = path + "." + key;
  const json& c = j[key];
  entry.spec.kind = has_L ? CostKind::lagrangian_closed_form : CostKind::hamiltonian_closed_form;
  const std::string family = text(require(c, "family", p), p + ".family");
  if (family == "quadratic") {
    entry.spec.family = CostFamily::quadratic_kinetic_plus_potential;
  } else if (family == "power") {
    entry.spec.family = CostFamily::expression;
    if (c.contains("coefficient")) entry.spec.law.coefficient = positive(c["coefficient"], p + ".coefficient");
    if (c.contains("exponent")) entry.spec.law.exponent = number(c["exponent"], p + ".exponent");
    if (c.contains("drift")) entry.spec.law.drift = number(c["drift"], p + ".drift");
    if (!(entry.spec.law.exponent > 1.0)) invalid(p + ".exponent", "must exceed 1");
  } else {
    invalid(p + ".family", "unknown family \"" + family + "\" (expected quadratic or power)");
  }
  if (c.contains("potential")) entry.spec.potential = parse_potential(c["potential"], p + ".potential");
  entry.modified = flag(c, "modified", p);
  if (entry.modified && has_L) invalid(p + ".modified", "only Hamiltonian costs can be modified");
  return entry;
}

DtRule parse_dt_rule(const json& j, const std::string& path) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "half_dx") return DtRule::half_dx();
    if (s == "power_rule") return DtRule::power();
    invalid(path, "unknown dt rule \"" + s + "\"");
  }
  const std::string kind = text(require(j, "kind", path), path + ".kind");
  if (kind == "half_dx") return DtRule::half_dx();
  if (kind != "power_rule") invalid(path + ".kind", "unknown dt rule \"" + kind + "\"");
  DtRule rule = DtRule::power();
  if (j.contains("C")) rule.C = positive(j["C"], path + ".C");
  if (j.contains("p")) rule.p = positive(j["p"], path + ".p");
  return rule;
}

std::size_t line_of(const std::string& text, std::size_t byte) {
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + std::min(byte, text.size()), '\n'));
}

}  // namespace

InitialDatum DatumSpec::evaluator() const {
  switch (kind) {
    case Kind::zero: return [](const Point&) { return 0.0; };
    case Kind::constant: {
      const double c = constant;
      return [c](const Point&) { return c; };
    }
    case Kind::expression: break;
  }
  const double c = constant;
  const Point grad = gradient;
  const auto terms = potential;
  return [c, grad, terms](const Point& x) { return c + grad.dot(x) + evaluate_potential(terms, x); };
}

Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario_text(buffer.str(), path.string());
}

Scenario parse_scenario_text(const std::string& source, const std::string& origin) {
  json root;
  try {
    root = json::parse(source);
  } catch (const json::parse_error& e) {
    std::ostringstream os;
    os << origin << ":" << line_of(source, e.byte) << ": " << e.what();
    throw Error(ErrorCode::ParseError, os.str());
  }

  Scenario sc;
  sc.schema = text(require(root, "schema", "$"), "$.schema");
  if (sc.schema != kScenarioSchema) invalid("$.schema", "unsupported schema \"" + sc.schema + "\"");
  if (root.contains("name")) sc.name = text(root["name"], "$.name");

  // network
  const json& net = require(root, "network", "$");
  const json& vertices = require(net, "vertices", "$.network");
  if (!vertices.is_array() || vertices.empty()) invalid("$.network.vertices", "expected a nonempty list");
  std::set<std::string> vertex_ids;
  for (std::size_t k = 0; k < vertices.size(); ++k) {
    const std::string p = "$.network.vertices[" + std::to_string(k) + "]";
    Vertex v;
    v.id = text(require(vertices[k], "id", p), p + ".id");
    v.coords = Point(number(require(vertices[k], "x", p), p + ".x"), number(require(vertices[k], "y", p), p + ".y"));
    if (vertices[k].contains("label")) v.label = text(vertices[k]["label"], p + ".label");
    if (!vertex_ids.insert(v.id).second) invalid(p + ".id", "duplicate vertex id \"" + v.id + "\"");
    sc.vertices.push_back(v);
  }
  const json& arcs = require(net, "arcs", "$.network");
  if (!arcs.is_array() || arcs.empty()) invalid("$.network.arcs", "expected a nonempty list");
  std::map<std::string, std::size_t> arc_ids;
  for (std::size_t k = 0; k < arcs.size(); ++k) {
    const std::string p = "$.network.arcs[" + std::to_string(k) + "]";
    ArcSpec a;
    a.id = text(require(arcs[k], "id", p), p + ".id");
    a.origin = text(require(arcs[k], "origin", p), p + ".origin");
    a.terminus = text(require(arcs[k], "terminus", p), p + ".terminus");
    if (!vertex_ids.count(a.origin)) invalid(p + ".origin", "unknown vertex \"" + a.origin + "\"");
    if (!vertex_ids.count(a.terminus)) invalid(p + ".terminus", "unknown vertex \"" + a.terminus + "\"");
    if (arcs[k].contains("points")) {
      const json& pts = arcs[k]["points"];
      if (!pts.is_array()) invalid(p + ".points", "expected a list of [x, y]");
      for (std::size_t i = 0; i < pts.size(); ++i) a.points.push_back(point(pts[i], p + ".points[" + std::to_string(i) + "]"));
    }
    if (arcs[k].contains("length")) a.length = positive(arcs[k]["length"], p + ".length");
    if (!arc_ids.emplace(a.id, k).second) invalid(p + ".id", "duplicate arc id \"" + a.id + "\"");
    sc.arcs.push_back(a);
  }
  try {
    (void)Network::build(sc.vertices, sc.arcs);
  } catch (const Error& e) {
    invalid("$.network", e.what());
  }

  // costs
  const json& costs = require(root, "costs", "$");
  std::optional<CostEntry> fallback;
  if (costs.contains("default")) fallback = parse_cost(costs["default"], "$.costs.default");
  sc.costs.assign(sc.arcs.size(), CostEntry{});
  std::vector<bool> assigned(sc.arcs.size(), false);
  if (costs.contains("arcs")) {
    const json& list = costs["arcs"];
    if (!list.is_array()) invalid("$.costs.arcs", "expected a list");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string p = "$.costs.arcs[" + std::to_string(k) + "]";
      const std::string id = text(require(list[k], "arc", p), p + ".arc");
      auto it = arc_ids.find(id);
      if (it == arc_ids.end()) invalid(p + ".arc", "unknown arc \"" + id + "\"");
      if (assigned[it->second]) invalid(p + ".arc", "arc \"" + id + "\" has two cost entries");
      sc.costs[it->second] = parse_cost(list[k], p);
      assigned[it->second] = true;
    }
  }
  for (std::size_t a = 0; a < sc.arcs.size(); ++a) {
    if (assigned[a]) continue;
    if (!fallback) invalid("$.costs", "no cost for arc \"" + sc.arcs[a].id + "\" and no default");
    sc.costs[a] = *fallback;
  }

  if (root.contains("beta0")) {
    const json& b = root["beta0"];
    if (b.is_string()) {
      if (b.get<std::string>() != "auto") invalid("$.beta0", "expected a number or \"auto\"");
    } else {
      sc.beta0 = positive(b, "$.beta0");
    }
  }

  // limiters
  const json& lim = require(root, "limiters", "$");
  auto read_values = [&](const json& obj, const std::string& p) {
    if (!obj.is_object()) invalid(p, "expected an object vertex id -> value");
    for (const auto& [id, value] : obj.items()) {
      if (!vertex_ids.count(id)) invalid(p + "." + id, "unknown vertex");
      sc.limiters.values[id] = number(value, p + "." + id);
    }
  };
  if (lim.is_string()) {
    if (lim.get<std::string>() != "max_admissible") invalid("$.limiters", "expected \"max_admissible\" or an object");
    sc.limiters.max_admissible = true;
  } else if (lim.is_number()) {
    const double c = number(lim, "$.limiters");
    for (const auto& id : vertex_ids) sc.limiters.values[id] = c;
  } else if (lim.is_object() && lim.contains("mode")) {
    const std::string mode = text(lim["mode"], "$.limiters.mode");
    if (mode != "max_admissible") invalid("$.limiters.mode", "expected \"max_admissible\"");
    sc.limiters.max_admissible = true;
    if (lim.contains("overrides")) read_values(lim["overrides"], "$.limiters.overrides");
  } else {
    read_values(lim, "$.limiters");
    for (const auto& id : vertex_ids)
      if (!sc.limiters.values.count(id)) invalid("$.limiters", "no limiter for vertex \"" + id + "\"");
  }

  // initial datum
  if (root.contains("initial_datum")) {
    const json& g = root["initial_datum"];
    const std::string family = text(require(g, "family", "$.initial_datum"), "$.initial_datum.family");
    if (family == "zero") {
      sc.datum.kind = DatumSpec::Kind::zero;
    } else if (family == "constant") {
      sc.datum.kind = DatumSpec::Kind::constant;
      sc.datum.constant = number(require(g, "value", "$.initial_datum"), "$.initial_datum.value");
    } else if (family == "expression") {
      sc.datum.kind = DatumSpec::Kind::expression;
      if (g.contains("constant")) sc.datum.constant = number(g["constant"], "$.initial_datum.constant");
      if (g.contains("gradient")) sc.datum.gradient = point(g["gradient"], "$.initial_datum.gradient");
      if (g.contains("potential")) sc.datum.potential = parse_potential(g["potential"], "$.initial_datum.potential");
    } else {
      invalid("$.initial_datum.family", "unknown family \"" + family + "\"");
    }
  }

  sc.horizon = number(require(root, "T", "$"), "$.T");
  if (sc.horizon < 0.0) invalid("$.T", "must be nonnegative");

  // run
  if (root.contains("run")) {
    const json& r = root["run"];
    const std::string mode = r.contains("mode") ? text(r["mode"], "$.run.mode") : "single";
    if (mode == "single") sc.run.mode = RunSpec::Mode::single;
    else if (mode == "ladder") sc.run.mode = RunSpec::Mode::ladder;
    else invalid("$.run.mode", "expected single or ladder");
    if (r.contains("dx")) sc.run.dx = positive(r["dx"], "$.run.dx");
    if (r.contains("dt_rule")) sc.run.dt_rule = parse_dt_rule(r["dt_rule"], "$.run.dt_rule");
    if (r.contains("rungs")) {
      if (!r["rungs"].is_number_integer() || r["rungs"].get<int>() < 3) invalid("$.run.rungs", "expected an integer >= 3");
      sc.run.rungs = r["rungs"].get<std::size_t>();
    }
    if (r.contains("output_times")) {
      const json& t = r["output_times"];
      if (!t.is_array()) invalid("$.run.output_times", "expected a list");
      for (std::size_t k = 0; k < t.size(); ++k) {
        const double v = number(t[k], "$.run.output_times[" + std::to_string(k) + "]");
        if (v < 0.0 || v > sc.horizon) invalid("$.run.output_times[" + std::to_string(k) + "]", "outside [0, T]");
        sc.run.output_times.push_back(v);
      }
    }
  }

  if (root.contains("reference")) {
    const json& r = root["reference"];
    const std::string kind = text(require(r, "kind", "$.reference"), "$.reference.kind");
    if (kind == "exact_test1") {
      sc.reference.kind = ReferenceSpec::Kind::exact_test1;
      sc.reference.c = number(require(r, "c", "$.reference"), "$.reference.c");
    } else if (kind == "fine") {
      sc.reference.kind = ReferenceSpec::Kind::fine;
      sc.reference.fine_dx = positive(require(r, "dx", "$.reference"), "$.reference.dx");
    } else if (kind != "none") {
      invalid("$.reference.kind", "expected exact_test1, fine or none");
    }
  }

  if (root.contains("diagnostics")) {
    const json& d = root["diagnostics"];
    sc.diagnostics.lipschitz_check = flag(d, "lipschitz_check", "$.diagnostics");
    sc.diagnostics.trajectory_dump = flag(d, "trajectory_dump", "$.diagnostics");
    sc.diagnostics.step_dump = flag(d, "step_dump", "$.diagnostics");
  }
  if (root.contains("out_dir")) sc.out_dir = text(root["out_dir"], "$.out_dir");
  return sc;
}

// --- Resolution -------------------------------------------------------------------

double auto_beta0(double threshold) { return 4.0 * std::sqrt(2.0 * threshold); }

ResolvedScenario resolve(const Scenario& sc) {
  ResolvedScenario out;
  Problem& p = out.problem;
  p.network = Network::build(sc.vertices, sc.arcs);
  p.g = sc.datum.evaluator();
  p.horizon = sc.horizon;

  const std::size_t n_arcs = p.network.num_arcs();
  std::vector<HamiltonianFn> hamiltonians;
  std::vector<double> critical;
  for (std::size_t a = 0; a < n_arcs; ++a) {
    hamiltonians.push_back(closed_form_hamiltonian(p.network.arc(a), sc.costs[a].spec));
    critical.push_back(arc_critical_value(hamiltonians.back(), p.network.arc(a).length));
  }

  if (sc.limiters.max_admissible) p.limiters = max_admissible_limiters(p.network, critical);
  else p.limiters.assign(p.network.num_vertices(), 0.0);
  for (const auto& [id, value] : sc.limiters.values) p.limiters[p.network.vertex_index(id)] = value;

  const std::size_t samples = 129;
  double max_c = 0.0;
  for (double c : p.limiters) max_c = std::max(max_c, std::abs(c));
  out.threshold = std::max(datum_level(p.network, hamiltonians, p.g, samples) + 1.0, max_c);
  const double beta0 = sc.beta0 ? *sc.beta0 : auto_beta0(out.threshold);

  const bool any_modified =
      std::any_of(sc.costs.begin(), sc.costs.end(), [](const CostEntry& c) { return c.modified; });
  if (any_modified) out.momentum = select_momentum_interval(p.network, hamiltonians, p.g, p.limiters);

  for (std::size_t a = 0; a < n_arcs; ++a) {
    const double lip_g = datum_lipschitz(p.network.arc(a), p.g, samples);
    if (sc.costs[a].modified) {
      ModifyOptions opts;
      if (sc.beta0) opts.beta0 = *sc.beta0;
      p.models.push_back(make_modified_model(p.network, a, sc.costs[a].spec, out.momentum->interval, lip_g, opts));
    } else {
      p.models.push_back(make_closed_form_model(p.network, a, sc.costs[a].spec, beta0, lip_g));
    }
  }
  return out;
}

// --- Run -------------------------------------------------------------------------------

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void write_solution_csv(std::ostream& out, const Problem& problem, const Solution& sol,
                        const std::vector<Eigen::Index>& levels) {
  out << "arc_id,i,s,x1,x2,t,value\n";
  for (Eigen::Index n : levels) {
    const double t = sol.grids.time.node(n);
    for (std::size_t a = 0; a < problem.network.num_arcs(); ++a) {
      const Arc& arc = problem.network.arc(a);
      const ArcGrid& grid = sol.grids.arcs[a];
      for (Eigen::Index i = 0; i <= grid.n_cells; ++i) {
        const double s = grid.node(i);
        const Point x = arc_point(arc, s);
        out << arc.id << ',' << i << ',' << s << ',' << x.x() << ',' << x.y() << ',' << t << ','
            << sol.field.value(a, i, n) << '\n';
      }
    }
  }
}

void write_steps(const std::filesystem::path& dir, const Problem& problem, const Solution& sol) {
  auto csv = open_output(dir / "steps.csv");
  auto log = open_output(dir / "vertex_branches.jsonl");
  csv << "arc_id,i,s,x1,x2,n,t,value,alpha_star\n";
  const Eigen::Index NT = sol.grids.time.n_steps;
  for (Eigen::Index n = 0; n <= NT; ++n) {
    const double t = sol.grids.time.node(n);
    for (std::size_t a = 0; a < problem.network.num_arcs(); ++a) {
      const Arc& arc = problem.network.arc(a);
      const ArcGrid& grid = sol.grids.arcs[a];
      for (Eigen::Index i = 0; i <= grid.n_cells; ++i) {
        const double s = grid.node(i);
        const Point x = arc_point(arc, s);
        csv << arc.id << ',' << i << ',' << s << ',' << x.x() << ',' << x.y() << ',' << n << ',' << t << ','
            << sol.field.value(a, i, n) << ',';
        if (n > 0 && i > 0 && i < grid.n_cells) csv << sol.record(n).interior_control[a](i - 1);
        csv << '\n';
      }
    }
    if (n == 0) continue;
    for (std::size_t v = 0; v < problem.network.num_vertices(); ++v) {
      const VertexRecord& r = sol.record(n).vertex[v];
      json line{{"n", n}, {"t", t}, {"vertex", problem.network.vertex(v).id}};
      if (r.branch == VertexBranch::arc) {
        line["branch"] = "arc";
        line["arc"] = problem.network.arc(*r.arc).id;
        line["alpha_star"] = r.control;
      } else {
        line["branch"] = "flux_limiter";
      }
      log << line.dump() << '\n';
    }
  }
}

json trajectory_dump(const std::filesystem::path& dir, const Problem& problem, const Solution& sol) {
  auto out = open_output(dir / "trajectories.csv");
  out << "vertex,arc_id,k,n,t,s,x1,x2,alpha\n";
  json summary = json::array();
  const Eigen::Index NT = sol.grids.time.n_steps;
  for (std::size_t v = 0; v < problem.network.num_vertices(); ++v) {
    if (NT == 0 || sol.record(NT).vertex[v].branch != VertexBranch::arc) continue;
    const DiscreteTrajectory tr = reconstruct_trajectory(problem, sol, v, NT);
    const TrajectoryCheck check = check_trajectory(problem, sol, tr);
    const Arc& arc = problem.network.arc(tr.arc);
    for (std::size_t k = 0; k < tr.levels.size(); ++k) {
      const Point x = arc_point(arc, tr.positions[k]);
      out << problem.network.vertex(v).id << ',' << arc.id << ',' << k << ',' << tr.levels[k] << ','
          << sol.grids.time.node(tr.levels[k]) << ',' << tr.positions[k] << ',' << x.x() << ',' << x.y() << ',';
      if (k < tr.controls.size()) out << tr.controls[k];
      out << '\n';
    }
    summary.push_back({{"vertex", problem.network.vertex(v).id},
                       {"arc", arc.id},
                       {"end", to_string(tr.end)},
                       {"action", tr.action},
                       {"action_limit", check.action_limit},
                       {"bounds_ok", check.ok()}});
  }
  return summary;
}

json model_table(const Problem& problem) {
  json arcs = json::array();
  for (std::size_t a = 0; a < problem.models.size(); ++a) {
    const ArcModel& m = problem.models[a];
    arcs.push_back({{"arc", problem.network.arc(a).id},
                    {"length", m.length},
                    {"beta0", m.beta0},
                    {"ell0", m.ell0},
                    {"critical_value", m.critical_value}});
  }
  return arcs;
}

json limiter_table(const Problem& problem) {
  json out = json::object();
  for (std::size_t v = 0; v < problem.network.num_vertices(); ++v) out[problem.network.vertex(v).id] = problem.limiters[v];
  return out;
}

json grid_table(const Problem& problem, const Grids& grids) {
  json arcs = json::array();
  for (std::size_t a = 0; a < grids.arcs.size(); ++a)
    arcs.push_back({{"arc", problem.network.arc(a).id},
                    {"n_cells", grids.arcs[a].n_cells},
                    {"spacing", grids.arcs[a].spacing}});
  return {{"dx", grids.pair.dx},
          {"dt", grids.pair.dt},
          {"tau", grids.time.spacing},
          {"n_steps", grids.time.n_steps},
          {"strictly_admissible", grids.pair.strictly_admissible()},
          {"warnings", grids.warnings},
          {"arcs", arcs}};
}

std::optional<double> reference_speed(const Scenario& sc) {
  if (sc.reference.kind == ReferenceSpec::Kind::exact_test1) return std::sqrt(2.0 * std::abs(sc.reference.c));
  return std::nullopt;
}

}  // namespace

int run(const Scenario& sc, std::ostream& log, std::ostream& err) {
  try {
    const ResolvedScenario resolved = resolve(sc);
    const Problem& problem = resolved.problem;
    const AdmissibilityReport admissibility =
        check_flux_limiters(problem.network, problem.critical_values(), problem.limiters);
    if (!admissibility.admissible) {
      err << "inadmissible flux limiters\n" << admissibility.to_string(problem.network);
      return 2;
    }

    const std::filesystem::path dir(sc.out_dir);
    std::filesystem::create_directories(dir);

    json meta{{"scenario", sc.name},
              {"schema", sc.schema},
              {"T", sc.horizon},
              {"threshold", resolved.threshold},
              {"arcs", model_table(problem)},
              {"limiters", limiter_table(problem)},
              {"network_warnings", problem.network.warnings()}};
    if (resolved.momentum)
      meta["momentum_interval"] = {resolved.momentum->interval.lo, resolved.momentum->interval.hi};

    if (sc.run.mode == RunSpec::Mode::ladder) {
      const std::vector<double> ladder = halving_ladder(sc.run.dx, sc.run.rungs);
      ReferenceEvaluator reference;
      switch (sc.reference.kind) {
        case ReferenceSpec::Kind::exact_test1:
          reference = exact_reference_test1(problem.network, sc.reference.c);
          break;
        case ReferenceSpec::Kind::fine:
          reference = reference_from_fine_grid(problem, {sc.reference.fine_dx, sc.run.dt_rule(sc.reference.fine_dx)},
                                               ladder);
          break;
        case ReferenceSpec::Kind::none:
          throw Error(ErrorCode::ValidationError, "$.reference: ladder mode needs a reference");
      }
      StudyOptions opts;
      opts.speed = reference_speed(sc);
      const ConvergenceTable table = convergence_study(problem, reference, ladder, sc.run.dt_rule, opts);
      auto csv = open_output(dir / "convergence.csv");
      write_convergence_csv(csv, table);
      meta["mode"] = "ladder";
      meta["dt_rule"] = sc.run.dt_rule.to_string();
      json rows = json::array();
      for (std::size_t k = 0; k < table.rows.size(); ++k)
        rows.push_back({{"dx", table.rows[k].dx}, {"E_inf", table.rows[k].E_inf}, {"E_1", table.rows[k].E_1},
                        {"time_s", table.rows[k].runtime_seconds}, {"courant", table.rows[k].courant}});
      meta["ladder"] = rows;
      log << "wrote " << (dir / "convergence.csv").string() << '\n';
    } else {
      const StepPair pair{sc.run.dx, sc.run.dt_rule(sc.run.dx)};
      const Grids grids = make_grids(problem.network, problem.horizon, pair);
      for (const auto& w : grids.warnings) err << "warning: " << w << '\n';
      SchemeOptions opts;
      opts.keep_records = sc.diagnostics.step_dump || sc.diagnostics.trajectory_dump || sc.diagnostics.lipschitz_check;
      const Solution sol = solve(problem, grids, opts);
      const Eigen::Index NT = grids.time.n_steps;

      std::vector<Eigen::Index> levels;
      if (sc.run.output_times.empty()) levels.push_back(NT);
      for (double t : sc.run.output_times)
        levels.push_back(NT == 0 ? 0 : static_cast<Eigen::Index>(std::llround(t / grids.time.spacing)));
      auto csv = open_output(dir / "solution.csv");
      write_solution_csv(csv, problem, sol, levels);

      const std::optional<double> speed = reference_speed(sc);
      const double used_speed = speed ? *speed : field_lipschitz(sol.field, NT);
      meta["mode"] = "single";
      meta["dt_rule"] = sc.run.dt_rule.to_string();
      meta["grids"] = grid_table(problem, grids);
      meta["courant"] = used_speed * grids.pair.dt / grids.pair.dx;
      meta["courant_speed"] = used_speed;
      meta["timings"] = {{"solve_seconds", sol.runtime_seconds}};

      if (sc.reference.kind == ReferenceSpec::Kind::exact_test1 && NT > 0) {
        const ErrorReport e = error_norms(sol.field, exact_reference_test1(problem.network, sc.reference.c));
        meta["errors"] = {{"E_inf", e.E_inf}, {"E_1", e.E_1}};
      }
      if (sc.diagnostics.lipschitz_check) {
        const InvariantReport inv = check_invariants(problem, sol);
        meta["invariants"] = {{"ok", inv.ok()},
                              {"worst_lipschitz_ratio", inv.worst_lipschitz_ratio},
                              {"worst_time_ratio", inv.worst_time_ratio},
                              {"messages", inv.messages}};
        if (!inv.ok())
          for (const auto& m : inv.messages) err << "invariant: " << m << '\n';
      }
      if (sc.diagnostics.step_dump) write_steps(dir, problem, sol);
      if (sc.diagnostics.trajectory_dump) meta["trajectories"] = trajectory_dump(dir, problem, sol);
      log << "wrote " << (dir / "solution.csv").string() << '\n';
    }

    auto meta_out = open_output(dir / "metadata.json");
    meta_out << meta.dump(2) << '\n';
    log << "wrote " << (dir / "metadata.json").string() << '\n';
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    if (e.code() == ErrorCode::Inadmissible) return 2;
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace hjnet
