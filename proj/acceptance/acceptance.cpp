// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hjnet/analysis.hpp"
#include "support.hpp"

using namespace hjnet;

namespace {

int g_failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(double x, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

std::string list(const std::vector<double>& v, std::size_t from = 0, int digits = 3) {
  std::string s = "[";
  for (std::size_t k = from; k < v.size(); ++k) s += (k > from ? ", " : "") + fmt(v[k], digits);
  return s + "]";
}

template <typename F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool within_factor(double value, double target, double factor) {
  return value <= factor * target && value >= target / factor;
}

StudyOptions test1_study() {
  StudyOptions opts;
  opts.speed = std::sqrt(10.0);
  return opts;
}

// Test 2 as run in the traffic-circle experiment.
const StepPair kTest2Pair{0.025, 0.5 * std::pow(0.025, 0.8)};

// --- criteria -------------------------------------------------------------------------

void triangle_half_dx() {
  const Problem p = testing::triangle_problem();
  const std::vector<double> ladder{0.1, 0.05, 0.025, 0.0125};
  const std::vector<double> paper_inf{3.37e-2, 1.68e-2, 8.44e-3, 4.22e-3};
  const std::vector<double> paper_1{1.38e-2, 6.58e-3, 3.25e-3, 1.61e-3};
  ConvergenceTable t;
  const double elapsed = seconds([&] {
    t = convergence_study(p, exact_reference_test1(p.network, -5.0), ladder, DtRule::half_dx(), test1_study());
  });
  std::vector<double> e_inf, e_1, q_inf, q_1;
  bool inf_ok = true, one_ok = true;
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    e_inf.push_back(t.rows[k].E_inf);
    e_1.push_back(t.rows[k].E_1);
    q_inf.push_back(t.rows[k].E_inf / paper_inf[k]);
    q_1.push_back(t.rows[k].E_1 / paper_1[k]);
    inf_ok = inf_ok && within_factor(t.rows[k].E_inf, paper_inf[k], 3.0);
    one_ok = one_ok && within_factor(t.rows[k].E_1, paper_1[k], 3.0);
  }
  bool rates_ok = true;
  for (std::size_t k = 1; k < ladder.size(); ++k) rates_ok = rates_ok && t.rate_inf[k] >= 0.8 && t.rate_1[k] >= 0.8;
  const bool time_ok = elapsed < 30.0;
  report(inf_ok && one_ok && rates_ok && time_ok, "triangle-dt-half-dx",
         "E_inf " + list(e_inf) + " (ratio to reference table " + list(q_inf, 0, 2) + ", within x3: " +
             (inf_ok ? "yes" : "no") + "); E_1 " + list(e_1) + " (ratio " + list(q_1, 0, 2) + ", within x3: " +
             (one_ok ? "yes" : "no") + "); rates_inf " + list(t.rate_inf, 1) + ", rates_1 " + list(t.rate_1, 1) +
             " (>= 0.8: " + (rates_ok ? "yes" : "no") + "); " + fmt(elapsed) + " s (< 30 s)");
}

void triangle_power_rule() {
  const Problem p = testing::triangle_problem();
  const std::vector<double> ladder = halving_ladder(0.1, 5);
  ConvergenceTable t;
  const double elapsed = seconds([&] {
    t = convergence_study(p, exact_reference_test1(p.network, -5.0), ladder, DtRule::power(), test1_study());
  });
  bool decreasing = true, inf_ok = true, one_ok = true;
  std::vector<double> e_inf;
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    e_inf.push_back(t.rows[k].E_inf);
    if (k == 0) continue;
    decreasing = decreasing && t.rows[k].E_inf < t.rows[k - 1].E_inf;
    inf_ok = inf_ok && t.rate_inf[k] >= 0.35 && t.rate_inf[k] <= 1.0;
    one_ok = one_ok && t.rate_1[k] >= 0.7 && t.rate_1[k] <= 1.5;
  }
  report(decreasing && inf_ok && one_ok && elapsed < 120.0, "triangle-dt-power-rule",
         "E_inf " + list(e_inf) + " (decreasing: " + (decreasing ? "yes" : "no") + "); rates_inf " +
             list(t.rate_inf, 1) + " in [0.35, 1.0]; rates_1 " + list(t.rate_1, 1) + " in [0.7, 1.5]; " +
             fmt(elapsed) + " s (< 120 s)");
}

void triangle_courant() {
  const Problem p = testing::triangle_problem();
  bool courant_ok = true, stable = true;
  std::vector<double> nus;
  double worst_lip = 0.0;
  for (const DtRule& rule : {DtRule::half_dx(), DtRule::power()}) {
    const auto t = convergence_study(p, exact_reference_test1(p.network, -5.0), halving_ladder(0.1, 4), rule,
                                     test1_study());
    for (const auto& r : t.rows) {
      nus.push_back(r.courant);
      courant_ok = courant_ok && r.courant > 1.0 &&
                   std::abs(r.courant - std::sqrt(10.0) * r.dt / r.dx) <= 1e-12 * r.courant;
    }
    for (double dx : halving_ladder(0.1, 4)) {
      const Solution sol = solve(p, StepPair{dx, rule(dx)});
      const auto inv = check_invariants(p, sol);
      stable = stable && inv.finite && inv.equi_lipschitz;
      worst_lip = std::max(worst_lip, inv.worst_lipschitz_ratio);
    }
  }
  report(courant_ok && stable, "triangle-courant",
         "nu " + list(nus) + " (all > 1: " + (courant_ok ? "yes" : "no") + "); finite and equiLipschitz on all runs: " +
             (stable ? "yes" : "no") + " (worst Lip / ((1 + t) ell0) = " + fmt(worst_lip, 4) + ")");
}

double segment_distance2(Point a, Point b, Point p) {
  const double u = std::clamp((p - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
  return (a + u * (b - a) - p).squaredNorm();
}

void traffic_circle_limiters() {
  const Problem p = testing::traffic_circle_problem();
  const std::vector<double> expected{2, 1, 0, 0.5, 0, 0.5, 2, 1};
  const auto computed = max_admissible_limiters(p.network, p.critical_values());
  std::vector<double> oracle(p.network.num_vertices(), std::numeric_limits<double>::infinity());
  for (const Arc& arc : p.network.arcs()) {
    const double d2 = segment_distance2(p.network.vertex(arc.origin).coords, p.network.vertex(arc.terminus).coords,
                                        Point(1, 1));
    oracle[arc.origin] = std::min(oracle[arc.origin], d2);
    oracle[arc.terminus] = std::min(oracle[arc.terminus], d2);
  }
  double worst = 0.0;
  for (std::size_t v = 0; v < expected.size(); ++v) {
    worst = std::max(worst, std::abs(computed[v] - expected[v]));
    worst = std::max(worst, std::abs(computed[v] - oracle[v]));
  }
  report(worst <= 1e-6 && oracle == expected, "traffic-circle-limiters",
         "computed " + list(computed, 0, 6) + ", segment-distance oracle " + list(oracle, 0, 6) +
             ", max deviation " + fmt(worst));
}

struct PropertyTally {
  std::size_t monotone = 0, constants = 0, interp = 0, slope = 0, single = 0;
};

void property_suite() {
  constexpr int kCases = 1000;
  std::mt19937_64 rng(20240501);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  PropertyTally bad;
  double worst_monotone = 0.0, worst_constant = 0.0;

  for (int k = 0; k < kCases; ++k) {
    const double length = 0.5 + 1.5 * U(rng);
    const Network net = Network::build({{"a", Point(0, 0), {}}, {"b", Point(length, 0), {}}}, {{"ab", "a", "b", {}, {}}});
    ArcCostSpec spec;
    spec.potential.push_back({PotentialTerm::Kind::point, 3.0 * U(rng), Point(length * U(rng), U(rng) - 0.5), 0, 0.0});
    if (U(rng) < 0.5) {
      spec.family = CostFamily::expression;
      spec.law = PowerLaw{0.5 + U(rng), 1.5 + 1.5 * U(rng), U(rng) - 0.5};
    }
    const ArcModel model = make_closed_form_model(net, 0, spec, 1.0 + 5.0 * U(rng), 0.0);
    const double dx = length * (0.02 + 0.2 * U(rng));
    const ArcGrid grid = make_arc_grid(net.arc(0), 0, dx);
    const double tau = dx * (0.2 + 2.0 * U(rng));
    Eigen::VectorXd w1(grid.num_nodes()), bump(grid.num_nodes());
    for (Eigen::Index i = 0; i < w1.size(); ++i) {
      w1(i) = 2.0 * U(rng) - 1.0;
      bump(i) = 0.5 * U(rng);
    }
    const Eigen::VectorXd w2 = w1 + bump;
    const double s = grid.node(static_cast<Eigen::Index>(U(rng) * static_cast<double>(grid.n_cells)));
    const double a = apply_arc_operator(model, grid, w1, s, tau).value;
    const double b = apply_arc_operator(model, grid, w2, s, tau).value;
    worst_monotone = std::max(worst_monotone, a - b);
    if (a > b + 1e-12) ++bad.monotone;

    const double C = 20.0 * U(rng) - 10.0;
    const Eigen::VectorXd shifted = (w1.array() + C).matrix();
    const double d = std::abs(apply_arc_operator(model, grid, shifted, s, tau).value - a - C);
    worst_constant = std::max(worst_constant, d);
    if (d > 1e-12) ++bad.constants;

    const double lip = discrete_lipschitz(grid, w1);
    const double s1 = length * U(rng), s2 = length * U(rng);
    if (std::abs(interpolate(grid, w1, s1) - interpolate(grid, w1, s2)) > lip * std::abs(s1 - s2) * (1.0 + 1e-12) + 1e-15)
      ++bad.interp;
  }

  for (int k = 0; k < kCases; ++k) {
    Problem p = U(rng) < 0.5 ? testing::triangle_problem() : testing::traffic_circle_problem(1.0);
    const auto bounds = max_admissible_limiters(p.network, p.critical_values());
    for (std::size_t v = 0; v < bounds.size(); ++v) p.limiters[v] = bounds[v] - 3.0 * U(rng);
    const double ga = 2.0 * U(rng) - 1.0, gb = 2.0 * U(rng) - 1.0, gk = 3.0 * U(rng);
    p.g = [ga, gb, gk](const Point& x) { return ga * std::sin(gk * x.x()) + gb * x.y(); };
    const double dx = 0.1 + 0.1 * U(rng);
    const Grids grids = make_grids(p.network, 1.0, StepPair{dx, dx * (0.5 + U(rng))});
    SolutionField field(p.network, grids);
    field.push_level(initial_level(p, grids));
    field.push_level(step(p, grids, field, 0, nullptr));
    for (std::size_t v = 0; v < p.network.num_vertices(); ++v)
      if (field.vertex_value(v, 1) > field.vertex_value(v, 0) + p.limiters[v] * grids.time.spacing) ++bad.slope;
    for (std::size_t a = 0; a < p.network.num_arcs(); ++a) {
      const Eigen::VectorXd w = field.arc_values(a, 1);
      const auto [o, t] = field.endpoints()[a];
      if (w(0) != field.vertex_value(o, 1) || w(w.size() - 1) != field.vertex_value(t, 1)) ++bad.single;
    }
  }

  const Problem t1 = testing::triangle_problem();
  const auto inv1 = check_invariants(t1, solve(t1, StepPair{0.025, 0.0125}));
  const Problem t2 = testing::traffic_circle_problem();
  const auto inv2 = check_invariants(t2, solve(t2, kTest2Pair));

  const bool random_ok = bad.monotone == 0 && bad.constants == 0 && bad.interp == 0 && bad.slope == 0 && bad.single == 0;
  const bool lip_ok = inv1.equi_lipschitz && inv2.equi_lipschitz && inv1.single_valued && inv2.single_valued &&
                      inv1.vertex_slope && inv2.vertex_slope;
  report(random_ok && lip_ok, "property-suite",
         std::to_string(kCases) + " cases each; violations: monotone " + std::to_string(bad.monotone) + " (worst " +
             fmt(worst_monotone) + "), constants " + std::to_string(bad.constants) + " (worst " + fmt(worst_constant) +
             "), interpolation Lipschitz " + std::to_string(bad.interp) + ", vertex slope " + std::to_string(bad.slope) +
             ", single-valued " + std::to_string(bad.single) + "; equiLipschitz Test 1 " +
             (inv1.equi_lipschitz ? "ok" : "exceeded") + " (worst ratio " + fmt(inv1.worst_lipschitz_ratio, 5) +
             "), Test 2 " + (inv2.equi_lipschitz ? "ok" : "exceeded") + " (worst ratio " +
             fmt(inv2.worst_lipschitz_ratio, 5) + ", bound 1 + 1e-6)");
}

double arc_consistency(const Problem& p, const StepPair& pair) {
  const Solution sol = solve(p, pair);
  double worst = 0.0;
  for (std::size_t a = 0; a < p.network.num_arcs(); ++a) {
    const Eigen::MatrixXd w = solve_on_arc(p, sol.field, a);
    for (Eigen::Index n = 0; n <= sol.field.num_steps(); ++n)
      worst = std::max(worst, (w.col(n) - sol.field.arc_values(a, n)).cwiseAbs().maxCoeff());
  }
  return worst;
}

void arc_restriction() {
  const double d1 = arc_consistency(testing::triangle_problem(), StepPair{0.05, 0.025});
  const double d2 = arc_consistency(testing::traffic_circle_problem(), kTest2Pair);
  report(d1 <= 1e-12 && d2 <= 1e-12, "arc-restricted-consistency",
         "max deviation Test 1 " + fmt(d1) + ", Test 2 " + fmt(d2) + " (<= 1e-12)");
}

void modification_example() {
  ModifyOptions opts;
  opts.beta0 = 3.0;
  opts.mu0 = 2.0;
  opts.mu_step = 1e-2;
  opts.s_samples = 5;
  const HamiltonianFn H = [](double, double mu) { return 0.5 * mu * mu; };
  const ModifiedPair pair = modify_hamiltonian(H, 1.0, Interval{-1.0, 1.0}, opts);
  auto sym_H = [](double mu) { return std::abs(mu) <= 2.0 ? 0.5 * mu * mu : 2.0 + 3.0 * (std::abs(mu) - 2.0); };
  auto sym_L = [](double l) { return std::abs(l) <= 2.0 ? 0.5 * l * l : 2.0 * std::abs(l) - 2.0; };
  double dev_H = 0.0, dev_L = 0.0;
  for (double s : {0.0, 0.37, 1.0}) {
    for (int i = -500; i <= 500; ++i) dev_H = std::max(dev_H, std::abs(pair.H(s, i * 1e-2) - sym_H(i * 1e-2)));
    for (int i = -300; i <= 300; ++i) dev_L = std::max(dev_L, std::abs(pair.L(s, i * 1e-2).value() - sym_L(i * 1e-2)));
  }
  double clause_i = 0.0;
  for (int i = -100; i <= 100; ++i)
    for (double s : pair.s_samples) clause_i = std::max(clause_i, std::abs(pair.H(s, i * 1e-2) - H(s, i * 1e-2)));
  bool clause_ii = true;
  for (int i = -400; i <= 400; ++i) {
    const double l = i * 1e-2;
    clause_ii = clause_ii && pair.L(0.5, l).is_finite() == (std::abs(l) <= pair.beta0);
  }
  const double ell0 = pair.lipschitz_L();
  double lip = 0.0;
  for (double s : {0.0, 0.5, 1.0})
    for (int i = -300; i < 300; ++i)
      lip = std::max(lip, std::abs(pair.L(s, (i + 1) * 1e-2).value() - pair.L(s, i * 1e-2).value()) / 1e-2);
  const bool clause_iii = lip <= ell0 * (1.0 + 1e-6);
  const bool ok = dev_H <= 1e-3 && dev_L <= 1e-3 && clause_i <= 1e-9 && clause_ii && clause_iii;
  report(ok, "modified-hamiltonian-example",
         "max |H - symbolic| " + fmt(dev_H) + ", max |L - symbolic| " + fmt(dev_L) + " (<= 1e-3); H = input on I to " +
             fmt(clause_i) + "; L finite exactly on [-3, 3]: " + (clause_ii ? "yes" : "no") + "; sampled Lip(L) " +
             fmt(lip, 4) + " <= ell0 " + fmt(ell0, 4) + ": " + (clause_iii ? "yes" : "no"));
}

void trajectories() {
  const Problem p = testing::traffic_circle_problem();
  const Solution sol = solve(p, kTest2Pair);
  std::size_t count = 0, displacement = 0, velocity = 0, action = 0;
  for (Eigen::Index n = 1; n <= sol.field.num_steps(); ++n) {
    for (std::size_t v = 0; v < p.network.num_vertices(); ++v) {
      if (sol.record(n).vertex[v].branch != VertexBranch::arc) continue;
      const auto check = check_trajectory(p, sol, reconstruct_trajectory(p, sol, v, n));
      ++count;
      displacement += check.displacement_violations;
      velocity += check.velocity_violations;
      if (!check.action_bound) ++action;
    }
  }
  report(count > 0 && displacement + velocity + action == 0, "trajectory-bounds",
         std::to_string(count) + " trajectories; displacement violations " + std::to_string(displacement) +
             ", velocity violations " + std::to_string(velocity) + ", action-bound violations " + std::to_string(action));
}

void test2_minima() {
  const Problem p = testing::traffic_circle_problem();
  SchemeOptions opts;
  opts.keep_history = false;
  opts.keep_records = false;
  const Solution sol = solve(p, kTest2Pair, opts);
  const Eigen::Index N = sol.field.num_steps();
  double vmin = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < p.network.num_arcs(); ++a) vmin = std::min(vmin, sol.field.arc_values(a, N).minCoeff());

  // Global minimizers: nodes tied with the minimum up to rounding. Locations are
  // compared up to two grid cells.
  double h = 0.0;
  for (std::size_t a = 0; a < p.network.num_arcs(); ++a) h = std::max(h, sol.grids.arcs[a].spacing);
  const double tol = 1e-9;
  const std::vector<std::pair<std::string, Point>> allowed{
      {"v3", Point(0, 2)}, {"v5", Point(2, 0)}, {"target (1,1)", Point(1, 1)}, {"(0.5,0.5)", Point(0.5, 0.5)}};
  std::vector<bool> hit(allowed.size(), false);
  std::size_t minimizers = 0, stray = 0;
  std::string stray_example;
  for (std::size_t a = 0; a < p.network.num_arcs(); ++a) {
    const Eigen::VectorXd w = sol.field.arc_values(a, N);
    const ArcGrid& g = sol.grids.arcs[a];
    for (Eigen::Index i = 0; i <= g.n_cells; ++i) {
      if (w(i) > vmin + tol) continue;
      ++minimizers;
      const Point x = arc_point(p.network, a, g.node(i));
      bool inside = false;
      for (std::size_t k = 0; k < allowed.size(); ++k) {
        if ((x - allowed[k].second).norm() <= 2.0 * h) {
          inside = true;
          hit[k] = true;
        }
      }
      if (!inside) {
        ++stray;
        stray_example = "(" + fmt(x.x()) + ", " + fmt(x.y()) + ")";
      }
    }
  }
  std::string where;
  for (std::size_t k = 0; k < allowed.size(); ++k)
    if (hit[k]) where += (where.empty() ? "" : ", ") + allowed[k].first;
  report(stray == 0 && minimizers > 0, "traffic-circle-minima",
         "min v = " + fmt(vmin) + "; " + std::to_string(minimizers) + " grid nodes within " + fmt(tol) +
             " of it, located at {" + where + "}" + (stray ? "; outside the allowed set: " + stray_example : ""));
}

void runtime_scaling() {
  const Problem p = testing::triangle_problem();
  SchemeOptions opts;
  opts.keep_history = false;
  opts.keep_records = false;
  opts.threads = 1;
  const std::vector<double> ladder{0.025, 0.0125, 0.00625, 0.003125};
  std::vector<double> times;
  for (double dx : ladder) {
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < 5; ++r) best = std::min(best, solve(p, StepPair{dx, dx / 2.0}, opts).runtime_seconds);
    times.push_back(best);
  }
  std::vector<double> factors;
  bool ok = true;
  for (std::size_t k = 1; k < times.size(); ++k) {
    factors.push_back(times[k] / times[k - 1]);
    ok = ok && factors.back() >= 2.0 && factors.back() <= 6.0;
  }
  report(ok, "runtime-scaling",
         "solve times " + list(times) + " s over dx " + list(ladder) + "; growth per halving " + list(factors, 0, 3) +
             " (expected 4 +- 50%)");
}

}  // namespace

int main() {
  const std::vector<void (*)()> criteria{triangle_half_dx, triangle_power_rule, triangle_courant,
                                         traffic_circle_limiters, property_suite, arc_restriction,
                                         modification_example, trajectories, test2_minima, runtime_scaling};
  for (auto criterion : criteria) {
    try {
      criterion();
    } catch (const std::exception& e) {
      report(false, "criterion-error", e.what());
    }
  }
  std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
