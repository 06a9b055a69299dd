#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "hjnet/analysis.hpp"
#include "support.hpp"

using namespace hjnet;

namespace {

constexpr int kCases = 1000;

struct RandomArcCase {
  Network network;
  ArcModel model;
  ArcGrid grid;
  double tau = 0.0;
};

RandomArcCase random_arc_case(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  RandomArcCase c;
  const double length = 0.5 + 1.5 * U(rng);
  c.network = Network::build({{"a", Point(0, 0), {}}, {"b", Point(length, 0), {}}}, {{"ab", "a", "b", {}, {}}});
  ArcCostSpec spec;
  spec.potential.push_back({PotentialTerm::Kind::point, 3.0 * U(rng), Point(length * U(rng), U(rng) - 0.5), 0, 0.0});
  if (U(rng) < 0.5) {
    spec.family = CostFamily::expression;
    spec.law = PowerLaw{0.5 + U(rng), 1.5 + 1.5 * U(rng), U(rng) - 0.5};
  }
  c.model = make_closed_form_model(c.network, 0, spec, 1.0 + 5.0 * U(rng), 0.0);
  const double dx = length * (0.02 + 0.2 * U(rng));
  c.grid = make_arc_grid(c.network.arc(0), 0, dx);
  c.tau = dx * (0.2 + 2.0 * U(rng));
  return c;
}

Eigen::VectorXd random_values(std::mt19937_64& rng, Eigen::Index n, double scale) {
  std::uniform_real_distribution<double> U(-scale, scale);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = U(rng);
  return w;
}

Problem random_network_problem(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Problem p = U(rng) < 0.5 ? testing::triangle_problem(-5.0, 1.0) : testing::traffic_circle_problem(1.0);
  const auto bounds = max_admissible_limiters(p.network, p.critical_values());
  for (std::size_t v = 0; v < bounds.size(); ++v) p.limiters[v] = bounds[v] - 3.0 * U(rng);
  const double a = 2.0 * U(rng) - 1.0, b = 2.0 * U(rng) - 1.0, k = 3.0 * U(rng);
  p.g = [a, b, k](const Point& x) { return a * std::sin(k * x.x()) + b * x.y(); };
  return p;
}

}  // namespace

TEST_CASE("arc operator is monotone") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < kCases; ++k) {
    const auto c = random_arc_case(rng);
    const Eigen::VectorXd w1 = random_values(rng, c.grid.num_nodes(), 1.0);
    const Eigen::VectorXd w2 = w1 + random_values(rng, c.grid.num_nodes(), 0.5).cwiseAbs();
    const double s = c.grid.node(static_cast<Eigen::Index>(U(rng) * static_cast<double>(c.grid.n_cells + 1)) % (c.grid.n_cells + 1));
    const double a = apply_arc_operator(c.model, c.grid, w1, s, c.tau).value;
    const double b = apply_arc_operator(c.model, c.grid, w2, s, c.tau).value;
    worst = std::max(worst, a - b);
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("arc operator commutes with constants") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < kCases; ++k) {
    const auto c = random_arc_case(rng);
    const Eigen::VectorXd w = random_values(rng, c.grid.num_nodes(), 1.0);
    const double C = 20.0 * U(rng) - 10.0;
    const double s = c.grid.node(static_cast<Eigen::Index>(U(rng) * static_cast<double>(c.grid.n_cells)));
    const double a = apply_arc_operator(c.model, c.grid, w, s, c.tau).value;
    const Eigen::VectorXd shifted = (w.array() + C).matrix();
    const double b = apply_arc_operator(c.model, c.grid, shifted, s, c.tau).value;
    worst = std::max(worst, std::abs(b - a - C));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("interpolation preserves the discrete Lipschitz constant") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::size_t violations = 0;
  for (int k = 0; k < kCases; ++k) {
    const auto c = random_arc_case(rng);
    const Eigen::VectorXd w = random_values(rng, c.grid.num_nodes(), 2.0);
    const double lip = discrete_lipschitz(c.grid, w);
    const double s1 = c.grid.length * U(rng), s2 = c.grid.length * U(rng);
    const double d = std::abs(interpolate(c.grid, w, s1) - interpolate(c.grid, w, s2));
    if (d > lip * std::abs(s1 - s2) * (1.0 + 1e-12) + 1e-15) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("interpolation is linear in the node values") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < kCases; ++k) {
    const auto c = random_arc_case(rng);
    const Eigen::VectorXd w1 = random_values(rng, c.grid.num_nodes(), 1.0);
    const Eigen::VectorXd w2 = random_values(rng, c.grid.num_nodes(), 1.0);
    const double a = 4.0 * U(rng) - 2.0, b = 4.0 * U(rng) - 2.0;
    const double s = c.grid.length * U(rng);
    const Eigen::VectorXd mix = a * w1 + b * w2;
    const double lhs = interpolate(c.grid, mix, s);
    const double rhs = a * interpolate(c.grid, w1, s) + b * interpolate(c.grid, w2, s);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("vertex values never rise faster than the flux limiter allows") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::size_t violations = 0, mismatches = 0;
  for (int k = 0; k < kCases; ++k) {
    const Problem p = random_network_problem(rng);
    const double dx = 0.1 + 0.1 * U(rng);
    const Grids grids = make_grids(p.network, 1.0, StepPair{dx, dx * (0.5 + U(rng))});
    SolutionField field(p.network, grids);
    field.push_level(initial_level(p, grids));
    const double tau = grids.time.spacing;
    field.push_level(step(p, grids, field, 0, nullptr));
    for (std::size_t v = 0; v < p.network.num_vertices(); ++v)
      if (field.vertex_value(v, 1) > field.vertex_value(v, 0) + p.limiters[v] * tau) ++violations;
    for (std::size_t a = 0; a < p.network.num_arcs(); ++a) {
      const Eigen::VectorXd w = field.arc_values(a, 1);
      const auto [o, t] = field.endpoints()[a];
      if (w(0) != field.vertex_value(o, 1) || w(w.size() - 1) != field.vertex_value(t, 1)) ++mismatches;
    }
  }
  CHECK(violations == 0);
  CHECK(mismatches == 0);
}

TEST_CASE("reversal is an involution") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const Network tc = testing::traffic_circle_network();
  std::size_t failures = 0;
  for (int k = 0; k < kCases; ++k) {
    const Arc& arc = tc.arc(static_cast<std::size_t>(U(rng) * 12.0) % 12);
    const double s = arc.length * U(rng);
    const double back = reversed_parameter(arc, reversed_parameter(arc, s));
    if (std::abs(back - s) > std::nextafter(arc.length, 2.0 * arc.length) - arc.length) ++failures;
    const HamiltonianFn H = [](double x, double mu) { return 0.5 * mu * mu + std::sin(x) * mu; };
    const auto RR = reversed_hamiltonian(reversed_hamiltonian(H, arc.length), arc.length);
    const double mu = 10.0 * U(rng) - 5.0;
    if (RR(s, mu) != H(back, mu)) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("full triangle run stays within the equi-Lipschitz bound") {
  const Problem p = testing::triangle_problem();
  const Solution sol = solve(p, StepPair{0.025, 0.0125});
  const auto rep = check_invariants(p, sol);
  CHECK(rep.equi_lipschitz);
  CHECK(rep.vertex_slope);
  CHECK(rep.single_valued);
  CHECK(rep.control_feasible);
  CHECK(rep.finite);
  CHECK(rep.time_regularity);
}
