#pragma once

#include <cmath>
#include <vector>

#include "hjnet/scheme.hpp"

namespace hjnet::testing {

inline Network triangle_network() {
  std::vector<Vertex> v{{"v1", Point(0, 0), {}}, {"v2", Point(1, 0), {}}, {"v3", Point(0.5, 0.5), {}}};
  std::vector<ArcSpec> a{{"g1", "v1", "v2", {}, {}}, {"g2", "v1", "v3", {}, {}}, {"g3", "v2", "v3", {}, {}}};
  return Network::build(v, a);
}

inline Network traffic_circle_network() {
  std::vector<Vertex> v{{"v1", Point(-2, 0), {}}, {"v2", Point(-1, 0), {}}, {"v3", Point(0, 2), {}},
                        {"v4", Point(0, 1), {}},  {"v5", Point(2, 0), {}},  {"v6", Point(1, 0), {}},
                        {"v7", Point(0, -2), {}}, {"v8", Point(0, -1), {}}};
  std::vector<ArcSpec> a{{"g1", "v1", "v2", {}, {}},  {"g2", "v1", "v3", {}, {}},  {"g3", "v1", "v7", {}, {}},
                         {"g4", "v2", "v4", {}, {}},  {"g5", "v2", "v8", {}, {}},  {"g6", "v3", "v4", {}, {}},
                         {"g7", "v3", "v5", {}, {}},  {"g8", "v4", "v6", {}, {}},  {"g9", "v5", "v6", {}, {}},
                         {"g10", "v5", "v7", {}, {}}, {"g11", "v6", "v8", {}, {}}, {"g12", "v7", "v8", {}, {}}};
  return Network::build(v, a);
}

/// Test 1: L = a^2/2 on every arc, c = -5 everywhere, g = 0, T = 1.
inline Problem triangle_problem(double c = -5.0, double horizon = 1.0) {
  Problem p;
  p.network = triangle_network();
  const double beta0 = 4.0 * std::sqrt(2.0 * std::max(1.0, std::abs(c)));
  for (std::size_t a = 0; a < p.network.num_arcs(); ++a)
    p.models.push_back(make_closed_form_model(p.network, a, ArcCostSpec{}, beta0, 0.0));
  p.limiters.assign(p.network.num_vertices(), c);
  p.g = [](const Point&) { return 0.0; };
  p.horizon = horizon;
  return p;
}

/// Traffic circle with L = a^2/2 + |x - (1, 1)|^2 and max-admissible limiters.
inline Problem traffic_circle_problem(double horizon = 5.0) {
  Problem p;
  p.network = traffic_circle_network();
  ArcCostSpec spec;
  spec.potential.push_back({PotentialTerm::Kind::point, 1.0, Point(1, 1), 0, 0.0});
  for (std::size_t a = 0; a < p.network.num_arcs(); ++a)
    p.models.push_back(make_closed_form_model(p.network, a, spec, 8.0, 0.0));
  p.limiters = max_admissible_limiters(p.network, p.critical_values());
  p.g = [](const Point&) { return 0.0; };
  p.horizon = horizon;
  return p;
}

/// Single straight arc of the given length with L = a^2/2.
inline Problem segment_problem(double length, double c = 0.0, double horizon = 1.0, double beta0 = 10.0) {
  Problem p;
  p.network = Network::build({{"a", Point(0, 0), {}}, {"b", Point(length, 0), {}}}, {{"ab", "a", "b", {}, {}}});
  p.models.push_back(make_closed_form_model(p.network, 0, ArcCostSpec{}, beta0, 0.0));
  p.limiters.assign(2, c);
  p.g = [](const Point&) { return 0.0; };
  p.horizon = horizon;
  return p;
}

}  // namespace hjnet::testing
