#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <memory>

#include "hjnet/hamiltonian.hpp"
#include "support.hpp"

using namespace hjnet;
using Catch::Matchers::WithinAbs;

namespace {

HamiltonianFn kinetic() {
  return [](double, double mu) { return 0.5 * mu * mu; };
}

HamiltonianFn traffic_hamiltonian(const Network& net, std::size_t arc) {
  ArcCostSpec spec;
  spec.kind = CostKind::hamiltonian_closed_form;
  spec.potential.push_back({PotentialTerm::Kind::point, 1.0, Point(1, 1), 0, 0.0});
  return closed_form_hamiltonian(net.arc(arc), spec);
}

// Minimum squared distance from segment [a, b] to p.
double segment_distance2(Point a, Point b, Point p) {
  const double u = std::clamp((p - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
  return (a + u * (b - a) - p).squaredNorm();
}

double worked_H(double mu) { return std::abs(mu) <= 2.0 ? 0.5 * mu * mu : 2.0 + 3.0 * (std::abs(mu) - 2.0); }

ExtendedReal worked_L(double l) {
  const double a = std::abs(l);
  if (a <= 2.0) return 0.5 * l * l;
  if (a <= 3.0) return 2.0 * a - 2.0;
  return ExtendedReal::infinity();
}

ModifiedPair worked_pair() {
  ModifyOptions opts;
  opts.beta0 = 3.0;
  opts.mu0 = 2.0;
  opts.mu_step = 1e-2;
  opts.s_samples = 5;
  return modify_hamiltonian(kinetic(), 1.0, Interval{-1.0, 1.0}, opts);
}

}  // namespace

TEST_CASE("closed-form Lagrangian and Hamiltonian are conjugate") {
  const Network net = testing::triangle_network();
  ArcCostSpec spec;
  spec.potential.push_back({PotentialTerm::Kind::point, 5.0, Point(0.5, 0.5), 0, 0.0});
  const auto L = closed_form_lagrangian(net.arc(0), spec);
  const auto H = closed_form_hamiltonian(net.arc(0), spec);
  CHECK_THAT(L(0.5, 2.0), WithinAbs(2.0 + 5.0 * 0.25, 1e-14));
  CHECK_THAT(H(0.5, 2.0), WithinAbs(2.0 - 5.0 * 0.25, 1e-14));

  spec.family = CostFamily::expression;
  spec.law = PowerLaw{2.0, 3.0, 0.5};
  const auto Lp = closed_form_lagrangian(net.arc(0), spec);
  const auto Hp = closed_form_hamiltonian(net.arc(0), spec);
  // Fenchel-Young with equality at mu = dL/dl.
  const double l = 0.7;
  const double mu = 2.0 * l * l + 0.5;
  CHECK_THAT(Lp(0.3, l) + Hp(0.3, mu), WithinAbs(mu * l, 1e-12));
}

TEST_CASE("axis potential terms") {
  std::vector<PotentialTerm> terms{{PotentialTerm::Kind::axis, 10.0, Point::Zero(), 0, 0.0}};
  CHECK(evaluate_potential(terms, Point(0.5, 3.0)) == 2.5);
}

TEST_CASE("critical values") {
  CHECK_THAT(arc_critical_value(kinetic(), 1.0), WithinAbs(0.0, 1e-12));
  const Network tc = testing::traffic_circle_network();
  CHECK_THAT(arc_critical_value(traffic_hamiltonian(tc, 1), tc.arc(1).length), WithinAbs(2.0, 1e-9));
  CHECK_THAT(arc_critical_value(traffic_hamiltonian(tc, 7), tc.arc(7).length), WithinAbs(0.5, 1e-9));
}

TEST_CASE("critical values agree with the closed-form segment distance on every traffic-circle arc") {
  const Network tc = testing::traffic_circle_network();
  for (std::size_t a = 0; a < tc.num_arcs(); ++a) {
    const double oracle = segment_distance2(tc.vertex(tc.arc(a).origin).coords,
                                            tc.vertex(tc.arc(a).terminus).coords, Point(1, 1));
    CHECK_THAT(arc_critical_value(traffic_hamiltonian(tc, a), tc.arc(a).length), WithinAbs(oracle, 1e-9));
  }
}

TEST_CASE("critical value is preserved on the reversed arc") {
  const Network tc = testing::traffic_circle_network();
  const auto H = traffic_hamiltonian(tc, 3);
  const double len = tc.arc(3).length;
  const auto R = reversed_hamiltonian(H, len);
  CHECK_THAT(arc_critical_value(R, len), WithinAbs(arc_critical_value(H, len), 1e-12));
  const auto RR = reversed_hamiltonian(R, len);
  CHECK(RR(0.25, 1.5) == H(0.25, 1.5));
}

TEST_CASE("flux limiter admissibility") {
  const Network tri = testing::triangle_network();
  const std::vector<double> zero(3, 0.0);
  const auto ok = check_flux_limiters(tri, zero, std::vector<double>(3, -5.0));
  CHECK(ok.admissible);
  for (const auto& v : ok.vertices) CHECK(v.bound == 0.0);

  const Network tc = testing::traffic_circle_network();
  std::vector<double> critical;
  for (std::size_t a = 0; a < tc.num_arcs(); ++a)
    critical.push_back(arc_critical_value(traffic_hamiltonian(tc, a), tc.arc(a).length));
  const std::vector<double> expected{2, 1, 0, 0.5, 0, 0.5, 2, 1};
  const auto maxed = max_admissible_limiters(tc, critical);
  for (std::size_t v = 0; v < 8; ++v) CHECK_THAT(maxed[v], WithinAbs(expected[v], 1e-6));
  CHECK(check_flux_limiters(tc, critical, maxed).admissible);

  std::vector<double> bad = maxed;
  bad[0] = 2.1;
  const auto report = check_flux_limiters(tc, critical, bad);
  CHECK_FALSE(report.admissible);
  CHECK_FALSE(report.vertices[0].admissible);
  for (std::size_t v = 1; v < 8; ++v) CHECK(report.vertices[v].admissible);
  CHECK(report.to_string(tc).find("v1") != std::string::npos);
}

TEST_CASE("momentum interval for the triangle test") {
  const Network tri = testing::triangle_network();
  const std::vector<HamiltonianFn> hs(3, kinetic());
  const InitialDatum zero = [](const Point&) { return 0.0; };
  const auto sel = select_momentum_interval(tri, hs, zero, std::vector<double>(3, -5.0));
  CHECK(sel.lip_g == 0.0);
  CHECK(sel.m0 == 0.0);
  CHECK(sel.threshold == 5.0);
  CHECK_THAT(sel.mu_star, WithinAbs(std::sqrt(10.0), 1e-6));
  CHECK(sel.interval.lo <= -std::sqrt(10.0));
  CHECK(sel.interval.hi >= std::sqrt(10.0));

  const auto flat = select_momentum_interval(tri, hs, zero, std::vector<double>(3, 0.0));
  CHECK(flat.threshold == 1.0);
  CHECK_THAT(flat.mu_star, WithinAbs(std::sqrt(2.0), 1e-6));
}

TEST_CASE("momentum interval covers a steep datum") {
  const Network tri = testing::triangle_network();
  const std::vector<HamiltonianFn> hs(3, kinetic());
  const InitialDatum steep = [](const Point& x) { return 2.0 * x.x(); };
  const auto sel = select_momentum_interval(tri, hs, steep, std::vector<double>(3, 0.0));
  CHECK_THAT(sel.lip_g, WithinAbs(2.0, 1e-9));
  CHECK(sel.mu_star >= 2.0);
}

TEST_CASE("momentum interval scan fails for a bounded Hamiltonian") {
  const Network tri = testing::triangle_network();
  const std::vector<HamiltonianFn> hs(3, [](double, double mu) { return std::tanh(mu); });
  const InitialDatum zero = [](const Point&) { return 0.0; };
  try {
    select_momentum_interval(tri, hs, zero, std::vector<double>(3, -5.0));
    FAIL("expected ScanFailed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ScanFailed);
  }
}

TEST_CASE("worked modification example matches the symbolic pair") {
  const ModifiedPair pair = worked_pair();
  CHECK(pair.beta0 == 3.0);
  CHECK(pair.mu0 == 2.0);
  for (double s : {0.0, 0.37, 1.0}) {
    for (double mu = -5.0; mu <= 5.0; mu += 1e-2) CHECK_THAT(pair.H(s, mu), WithinAbs(worked_H(mu), 1e-3));
    for (double l = -3.0; l <= 3.0; l += 1e-2) CHECK_THAT(pair.L(s, l).value(), WithinAbs(worked_L(l).value(), 1e-3));
  }
  CHECK_THAT(pair.L(0.5, 2.0).value(), WithinAbs(2.0, 1e-3));
  CHECK_THAT(pair.L(0.5, 3.0).value(), WithinAbs(4.0, 1e-3));
  CHECK_FALSE(pair.L(0.5, 3.0001).is_finite());
  CHECK_THAT(pair.L(0.5, 2.5).value(), WithinAbs(3.0, 1e-3));
}

TEST_CASE("modified pair satisfies the three lemma clauses") {
  const ModifiedPair pair = worked_pair();
  const auto H = kinetic();
  // (i) H agrees with the input on I at the mu-grid nodes.
  for (int i = -100; i <= 100; ++i) {
    const double mu = i * 1e-2;
    for (double s : pair.s_samples) CHECK_THAT(pair.H(s, mu), WithinAbs(H(s, mu), 1e-9));
  }
  // (ii) L finite exactly on [-beta0, beta0].
  for (double l = -4.0; l <= 4.0; l += 0.01)
    CHECK(pair.L(0.2, l).is_finite() == (std::abs(l) <= pair.beta0));
  // (iii) sampled Lipschitz ratio of L within ell0.
  const double ell0 = pair.lipschitz_L();
  double worst = 0.0;
  for (double s : {0.0, 0.5}) {
    for (double l = -3.0; l + 0.01 <= 3.0; l += 0.01) {
      const double d = std::abs(pair.L(s, l + 0.01).value() - pair.L(s, l).value());
      worst = std::max(worst, d / 0.01);
    }
  }
  CHECK(worst <= ell0 * (1.0 + 1e-6));
}

TEST_CASE("modification derives beta0 and mu0 when not given") {
  const ModifiedPair pair = modify_hamiltonian(kinetic(), 1.0, Interval{-1.0, 1.0});
  // beta = sampled Lipschitz constant of mu^2/2 on [-1.25, 1.25]; beta0 = 1.25 beta.
  CHECK_THAT(pair.beta, WithinAbs(1.25, 2.5e-2));
  CHECK_THAT(pair.beta0, WithinAbs(1.25 * pair.beta, 1e-14));
  CHECK(pair.mu0 > 1.0);
  CHECK_THAT(pair.mu0, WithinAbs(pair.beta0, 1e-4));
  for (double mu = -1.0; mu <= 1.0; mu += 0.1) CHECK_THAT(pair.H(0.3, mu), WithinAbs(0.5 * mu * mu, 1e-3));
}

TEST_CASE("a linear Hamiltonian is not superlinear") {
  const HamiltonianFn linear = [](double, double mu) { return 2.0 * mu; };
  try {
    modify_hamiltonian(linear, 1.0, Interval{-1.0, 1.0});
    FAIL("expected SuperlinearityScanFailed");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SuperlinearityScanFailed);
  }
}

TEST_CASE("a nonconvex slice is rejected") {
  const HamiltonianFn wiggly = [](double, double mu) { return 0.5 * mu * mu + 2.0 * std::cos(3.0 * mu); };
  ModifyOptions opts;
  opts.beta0 = 50.0;
  opts.mu0 = 3.0;
  try {
    modify_hamiltonian(wiggly, 1.0, Interval{-1.0, 1.0}, opts);
    FAIL("expected NonConvexSlice");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonConvexSlice);
  }
}

TEST_CASE("closed-form models clamp L outside the control bound") {
  const Network tri = testing::triangle_network();
  const ArcModel m = make_closed_form_model(tri, 0, ArcCostSpec{}, 3.0, 0.0);
  CHECK(m.L(0.5, 3.0).value() == 4.5);
  CHECK_FALSE(m.L(0.5, 3.0 + 1e-12).is_finite());
  CHECK(m.is_quadratic());
  CHECK_THAT(m.ell0, WithinAbs(1.05 * 3.0, 0.05));
  CHECK_THAT(m.critical_value, WithinAbs(0.0, 1e-12));
}

TEST_CASE("the modified route keeps M0 equal to the original on the selected interval") {
  const Network tc = testing::traffic_circle_network();
  std::vector<HamiltonianFn> original;
  for (std::size_t a = 0; a < tc.num_arcs(); ++a) original.push_back(traffic_hamiltonian(tc, a));
  const InitialDatum g = [](const Point& x) { return 0.3 * x.x() - 0.2 * x.y(); };
  std::vector<double> critical;
  for (std::size_t a = 0; a < tc.num_arcs(); ++a) critical.push_back(arc_critical_value(original[a], tc.arc(a).length));
  const auto limiters = max_admissible_limiters(tc, critical);
  const auto sel = select_momentum_interval(tc, original, g, limiters);

  ArcCostSpec spec;
  spec.kind = CostKind::hamiltonian_closed_form;
  spec.potential.push_back({PotentialTerm::Kind::point, 1.0, Point(1, 1), 0, 0.0});
  std::vector<HamiltonianFn> modified;
  for (std::size_t a = 0; a < tc.num_arcs(); ++a) {
    ModifyOptions opts;
    opts.s_samples = 129;
    const auto pair = std::make_shared<ModifiedPair>(modify_hamiltonian(original[a], tc.arc(a).length, sel.interval, opts));
    modified.push_back([pair](double s, double mu) { return pair->H(s, mu); });
  }
  CHECK_THAT(datum_level(tc, modified, g, 129), WithinAbs(datum_level(tc, original, g, 129), 1e-9));
}
