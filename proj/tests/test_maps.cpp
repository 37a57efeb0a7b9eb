#include <doctest.h>

#include <cmath>
#include <random>

#include "eqstate/errors.hpp"
#include "eqstate/io.hpp"
#include "eqstate/maps.hpp"

using namespace eqstate;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an eqstate::Error");
  return ErrorKind::InvalidArgument;
}

std::vector<MapSpec> builtins() { return {doubling_map(), lsv_map(0.6), lsv_map(1.5), quadratic_map(-2.0), tent_map(2.0), tent_map(1.7)}; }

}  // namespace

TEST_CASE("eval examples") {
  CHECK(eval(doubling_map(), 0.3) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(eval(lsv_map(1.0), 0.25) == doctest::Approx(0.375).epsilon(1e-15));
  for (double a : {0.3, 1.0, 2.5}) CHECK(eval(lsv_map(a), 0.75) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("eval rejects points outside the space and discontinuities") {
  CHECK(kind_of([] { eval(tent_map(2.0), 1.5); }) == ErrorKind::OutOfDomain);
  const MapSpec jump("jump", {0.0, 1.0}, false,
                     {{{0.0, 0.5}, Formula::affine(1.0, 0.0)}, {{0.5, 1.0}, Formula::affine(1.0, 0.25)}}, {0.5});
  CHECK(kind_of([&] { eval(jump, 0.5); }) == ErrorKind::AtCriticalOrBoundary);
}

TEST_CASE("deriv examples") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20; ++i) CHECK(deriv(doubling_map(), u(rng)) == 2.0);
  CHECK(deriv(lsv_map(1.0), 1e-12) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(deriv(lsv_map(1.0), 0.0) == doctest::Approx(1.0));
  CHECK(abs_deriv(quadratic_map(-2.0), 1.0) == doctest::Approx(2.0));
  CHECK(deriv(tent_map(2.0), 0.7) == -2.0);
  CHECK(kind_of([] { deriv(lsv_map(0.6), 0.5); }) == ErrorKind::AtCriticalOrBoundary);
  CHECK(kind_of([] { deriv(quadratic_map(-2.0), 0.0); }) == ErrorKind::AtCriticalOrBoundary);
}

TEST_CASE("branch_inverse examples") {
  CHECK(branch_inverse(doubling_map(), 0, 0.6) == doctest::Approx(0.3).epsilon(1e-13));
  CHECK(branch_inverse(lsv_map(0.6), 1, 0.0) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(branch_inverse(lsv_map(1.0), 0, 0.375) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(kind_of([] { branch_inverse(doubling_map(), 0, 1.5, 1e-9); }) == ErrorKind::NotInImage);
}

TEST_CASE("orbit examples") {
  const auto o = orbit(doubling_map(), 1.0 / 3.0, 4);
  REQUIRE(o.points.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(o.points[i] == doctest::Approx(i % 2 ? 2.0 / 3.0 : 1.0 / 3.0));
  const auto q = orbit(quadratic_map(-2.0), 0.0, 2);
  REQUIRE(q.points.size() == 3);
  CHECK(q.points[1] == -2.0);
  CHECK(q.points[2] == 2.0);
  const auto z = orbit(lsv_map(0.6), 0.0, 3);
  CHECK(z.points == std::vector<double>{0.0, 0.0, 0.0, 0.0});
  CHECK_FALSE(z.truncated);
}

TEST_CASE("orbit reports truncation at a discontinuity") {
  const MapSpec jump("jump", {0.0, 1.0}, false,
                     {{{0.0, 0.5}, Formula::affine(1.5, 0.0)}, {{0.5, 1.0}, Formula::affine(1.0, -0.25)}}, {0.5});
  const auto o = orbit(jump, 1.0 / 3.0, 5);
  CHECK(o.truncated);
  CHECK(o.points.size() == 2);
}

TEST_CASE("branch_inverse undoes eval on every built-in map") {
  std::mt19937_64 rng(11);
  for (const auto& m : builtins()) {
    std::uniform_real_distribution<double> u(m.space().lo, m.space().hi);
    for (int i = 0; i < 1000; ++i) {
      const double x = u(rng);
      const auto b = m.branch_of(x);
      if (!b) continue;
      const double y = m.branches()[*b].formula.value(x);
      CHECK(std::abs(branch_inverse(m, *b, y) - x) <= 1e-9);
    }
  }
}

TEST_CASE("orientation agrees with the derivative sign and derivatives match finite differences") {
  std::mt19937_64 rng(5);
  for (const auto& m : builtins()) {
    for (const auto& br : m.branches()) {
      std::uniform_real_distribution<double> u(br.domain.lo + 1e-3, br.domain.hi - 1e-3);
      for (int i = 0; i < 100; ++i) {
        const double x = u(rng);
        const double d = br.formula.derivative(x);
        CHECK((d > 0) == (br.orientation == Orientation::increasing));
        const double h = 1e-6;
        const double fd = (br.formula.value(x + h) - br.formula.value(x - h)) / (2 * h);
        CHECK(std::abs(fd - d) <= 1e-6 * std::max(1.0, std::abs(d)));
      }
    }
  }
}

TEST_CASE("LSV circle extension is continuous across the identified endpoint") {
  for (double a : {0.6, 1.5}) {
    const auto m = lsv_map(a);
    CHECK(m.distance(eval(m, 1.0 - 1e-6), eval(m, 1e-9)) <= 1e-4);
  }
}

TEST_CASE("table branches interpolate monotonically and survive a JSON round trip") {
  std::vector<double> xs, ys;
  for (int i = 0; i <= 10; ++i) {
    xs.push_back(i / 10.0);
    ys.push_back(std::pow(i / 10.0, 1.5));
  }
  const MapSpec m("cube", {0.0, 1.0}, false, {{{0.0, 1.0}, Formula::table(xs, ys)}}, {});
  CHECK(eval(m, 0.4) == doctest::Approx(std::pow(0.4, 1.5)).epsilon(1e-2));
  const MapSpec back = map_from_json(map_to_json(m));
  CHECK(eval(back, 0.37) == eval(m, 0.37));
  CHECK(branch_inverse(back, 0, eval(back, 0.37)) == doctest::Approx(0.37).epsilon(1e-10));
  CHECK(kind_of([] { Formula::table({0, 1, 0.5, 2}, {0, 1, 2, 3}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("built-in maps round-trip through JSON") {
  for (const auto& m : builtins()) {
    const MapSpec back = map_from_json(map_to_json(m));
    CHECK(map_to_json(back) == map_to_json(m));
    CHECK(eval(back, 0.123) == eval(m, 0.123));
  }
}

TEST_CASE("iterate builds the l-th iterate") {
  const auto m2 = iterate(doubling_map(), 2);
  CHECK(m2.branches().size() == 4);
  CHECK(eval(m2, 0.3) == doctest::Approx(0.2));
  CHECK(deriv(m2, 0.3) == doctest::Approx(4.0));
  const auto t2 = iterate(tent_map(2.0), 2);
  CHECK(eval(t2, 0.3) == doctest::Approx(eval(tent_map(2.0), eval(tent_map(2.0), 0.3))));
}
