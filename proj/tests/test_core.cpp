#include <catch2/catch_amalgamated.hpp>

#include "hjnet/core.hpp"
#include "hjnet/golden_section.hpp"

using namespace hjnet;

TEST_CASE("extended reals saturate at infinity") {
  const ExtendedReal inf = ExtendedReal::infinity();
  CHECK_FALSE(inf.is_finite());
  CHECK_FALSE((inf + 1.0).is_finite());
  CHECK_FALSE((0.0 * inf).is_finite());
  CHECK((ExtendedReal(1.0) + 2.0).value() == 3.0);
  CHECK(ExtendedReal(1e300) < inf);
  CHECK(min(inf, ExtendedReal(4.0)).value() == 4.0);
  CHECK(inf.as_double() == std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(inf.value(), Error);
}

TEST_CASE("interval widening keeps the center") {
  const Interval i{-1.0, 3.0};
  const Interval w = i.widened(0.5);
  CHECK(w.center() == 1.0);
  CHECK(w.width() == 6.0);
  CHECK(i.contains(3.0));
  CHECK_FALSE(i.contains(3.0001));
}

TEST_CASE("golden section finds interior and endpoint minima") {
  auto interior = golden_section_minimize([](double x) { return (x - 0.3) * (x - 0.3); }, -1.0, 1.0, 1e-10);
  CHECK(std::abs(interior.x - 0.3) < 1e-8);
  auto left = golden_section_minimize([](double x) { return x; }, 2.0, 5.0, 1e-10);
  CHECK(left.x == 2.0);
  CHECK(left.value == 2.0);
  auto degenerate = golden_section_minimize([](double x) { return x * x; }, 1.5, 1.5, 1e-10);
  CHECK(degenerate.x == 1.5);
}
