#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "eqstate/errors.hpp"
#include "eqstate/thermo.hpp"
#include "eqstate/zooming.hpp"

using namespace eqstate;

TEST_CASE("contraction values") {
  CHECK(contraction_value(Contraction::exponential(std::log(2.0)), 3, 1.0) == doctest::Approx(0.125));
  CHECK(contraction_value(Contraction::stretched(1.0), 4, 1.0) == doctest::Approx(std::exp(-2.0)));
  CHECK(contraction_value(Contraction::exponential(0.3), 1, 0.0) == 0.0);
  CHECK(contraction_value(Contraction::stretched(0.3), 1, 0.0) == 0.0);
}

TEST_CASE("contraction axioms are checked") {
  CHECK(Contraction::exponential(0.2).check() == "");
  CHECK(Contraction::stretched(1.0).check() == "");
  CHECK(Contraction::table({0.5, 0.25, 0.125, 0.0625}).check(4) == "");
  CHECK(Contraction::table({0.5, 0.1}).check(2) != "");  // a_1 a_1 > a_2
  CHECK(Contraction::table({1.5}).check(1) != "");
}

TEST_CASE("Pliss times on uniformly expanding maps") {
  const auto d = pliss_times(doubling_map(), 0.1234, 200, 0.5 * std::log(2.0));
  CHECK(d.frequency == 1.0);
  CHECK(d.times.size() == 200);
  const auto t = pliss_times(tent_map(2.0), 0.3, 50, std::log(2.0) - 1e-9);
  CHECK(t.frequency == 1.0);
}

TEST_CASE("Pliss times starve near the LSV neutral point") {
  const auto r = pliss_times(lsv_map(3.0), 1e-3, 1000, 0.3);
  CHECK(r.frequency < 0.5);
}

TEST_CASE("Pliss detection is monotone in the rate") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 10; ++k) {
    const double x = u(rng);
    const auto lo = pliss_times(lsv_map(0.8), x, 500, 0.1);
    const auto hi = pliss_times(lsv_map(0.8), x, 500, 0.3);
    CHECK(std::includes(lo.times.begin(), lo.times.end(), hi.times.begin(), hi.times.end()));
  }
}

TEST_CASE("geometric zooming examples") {
  const auto d = zooming_frequency(doubling_map(), 0.377, 100, Contraction::exponential(std::log(2.0)), 0.2);
  CHECK(d.frequency == 1.0);
  const auto empty = zooming_frequency(lsv_map(0.6), 0.377, 100, Contraction::exponential(0.2), 0.0);
  CHECK(empty.times.empty());
  CHECK(empty.frequency == 0.0);
  const double x = uniform01(17, 0);
  const auto l = zooming_frequency(lsv_map(0.6), x, 10000, Contraction::exponential(0.2), 0.1);
  CHECK(l.frequency > 0.0);
  CHECK(l.frequency == static_cast<double>(l.times.size()) / 10000.0);
}

TEST_CASE("geometric zooming times are Pliss times up to distortion") {
  for (const auto& m : {doubling_map(), tent_map(2.0)}) {
    for (double x : {0.1234, 0.377, 0.61}) {
      const double lambda = 0.5;
      const auto z = zooming_frequency(m, x, 300, Contraction::exponential(lambda), 0.1);
      const auto p = pliss_times(m, x, 300, 0.9 * lambda);
      CHECK(std::includes(p.times.begin(), p.times.end(), z.times.begin(), z.times.end()));
    }
  }
}

TEST_CASE("zooming frequency is shift invariant up to O(1/N)") {
  const double x = 0.2718281828;
  const std::size_t N = 2000;
  const auto c = Contraction::exponential(0.5);
  const auto a = zooming_frequency(doubling_map(), x, N, c, 0.05);
  const auto b = zooming_frequency(doubling_map(), eval(doubling_map(), x), N, c, 0.05);
  CHECK(std::abs(a.frequency - b.frequency) <= 2.0 / N + 1e-12);
}

TEST_CASE("zooming for an iterate goes through the iterated map") {
  const auto m2 = iterate(doubling_map(), 2);
  const auto r = zooming_frequency(m2, 0.3, 50, Contraction::exponential(std::log(4.0)), 0.1);
  CHECK(r.frequency == 1.0);
}

TEST_CASE("Lyapunov exponents") {
  CHECK(lyapunov(doubling_map(), 0.1234, 1000) == doctest::Approx(std::log(2.0)));
  CHECK(lyapunov(tent_map(2.0), 0.3, 40) == doctest::Approx(std::log(2.0)));
  CHECK(lyapunov(quadratic_map(-2.0), 0.3, 100000) == doctest::Approx(std::log(2.0)).epsilon(2e-2));
  CHECK_THROWS_AS(lyapunov(tent_map(2.0), 0.25, 10), Error);
  try {
    lyapunov(tent_map(2.0), 0.25, 10);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OrbitTruncated);
  }
}
