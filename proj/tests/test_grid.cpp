#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hjnet/grid.hpp"
#include "support.hpp"

using namespace hjnet;
using Catch::Matchers::WithinAbs;

TEST_CASE("unit arc with dx = 0.3 has four uniform cells") {
  Arc arc;
  arc.length = 1.0;
  const ArcGrid g = make_arc_grid(arc, 0, 0.3);
  CHECK(g.n_cells == 4);
  CHECK(g.spacing == 0.25);
  const Eigen::VectorXd s = g.nodes();
  CHECK(s(0) == 0.0);
  CHECK(s(1) == 0.25);
  CHECK(s(2) == 0.5);
  CHECK(s(3) == 0.75);
  CHECK(s(4) == 1.0);
}

TEST_CASE("time grid with exact division") {
  const Network tri = testing::triangle_network();
  const Grids g = make_grids(tri, 1.0, StepPair{0.1, 0.25});
  CHECK(g.time.n_steps == 4);
  CHECK(g.time.spacing == 0.25);
  CHECK(g.time.node(0) == 0.0);
  CHECK(g.time.node(3) == 0.75);
  CHECK(g.time.node(4) == 1.0);
  CHECK(g.warnings.empty());
}

TEST_CASE("dx = 0.1 gives ten cells on a unit arc") {
  CHECK(robust_ceil(1.0 / 0.1) == 10);
  CHECK(robust_ceil(10.000001) == 11);
  CHECK(robust_ceil(std::sqrt(2.0) / 2.0 / 0.05) == 15);
}

TEST_CASE("pairs with dx > dt only warn") {
  const Network tri = testing::triangle_network();
  const Grids g = make_grids(tri, 1.0, StepPair{0.05, 0.025});
  REQUIRE(g.warnings.size() == 1);
  CHECK(g.warnings[0].find("violates dx <= dt") != std::string::npos);
  CHECK_FALSE(g.pair.strictly_admissible());
  CHECK(g.arcs[0].n_cells == 20);
  CHECK(g.time.n_steps == 40);
}

TEST_CASE("hard step bounds") {
  const Network tri = testing::triangle_network();
  auto code = [&](double T, StepPair p) {
    try {
      make_grids(tri, T, p);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code(1.0, {0.75, 0.8}) == ErrorCode::StepTooLarge);
  CHECK(code(1.0, {0.1, 1.0}) == ErrorCode::StepTooLarge);
  const Grids zero = make_grids(tri, 0.0, StepPair{0.1, 0.1});
  CHECK(zero.time.n_steps == 0);
}

TEST_CASE("grid spacing never exceeds dx and nodes end exactly at the length") {
  const Network tc = testing::traffic_circle_network();
  for (double dx : {0.3, 0.1, 0.025, 0.0123}) {
    const Grids g = make_grids(tc, 5.0, StepPair{dx, dx});
    for (const auto& a : g.arcs) {
      CHECK(a.spacing <= dx);
      CHECK(a.node(a.n_cells) == a.length);
    }
  }
}

TEST_CASE("interpolation") {
  Arc arc;
  arc.length = 1.0;
  const ArcGrid g = make_arc_grid(arc, 0, 0.5);
  Eigen::Vector3d tent(0.0, 1.0, 0.0);
  CHECK(interpolate(g, tent, 0.25) == 0.5);
  CHECK(interpolate(g, tent, 0.5) == 1.0);

  const ArcGrid fine = make_arc_grid(arc, 0, 0.1);
  const Eigen::VectorXd id = fine.nodes();
  for (double s : {0.0, 0.05, 0.33, 0.999, 1.0}) CHECK_THAT(interpolate(fine, id, s), WithinAbs(s, 1e-15));
  for (Eigen::Index i = 0; i <= fine.n_cells; ++i) CHECK(interpolate(fine, id, fine.node(i)) == id(i));

  CHECK_THROWS_AS(interpolate(g, tent, 1.5), Error);
  Eigen::Vector2d short_w(0.0, 1.0);
  CHECK_THROWS_AS(interpolate(g, short_w, 0.5), Error);
}

TEST_CASE("a point on an interior node belongs to the left cell") {
  Arc arc;
  arc.length = 1.0;
  const ArcGrid g = make_arc_grid(arc, 0, 0.25);
  CHECK(g.cell_of(0.0) == 0);
  CHECK(g.cell_of(0.25) == 0);
  CHECK(g.cell_of(0.2500001) == 1);
  CHECK(g.cell_of(1.0) == 3);
}
