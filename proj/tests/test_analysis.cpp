#include <doctest.h>

#include <cmath>
#include <random>

#include "eqstate/analysis.hpp"
#include "eqstate/errors.hpp"

using namespace eqstate;

namespace {
const double kLog2 = std::log(2.0);
}

TEST_CASE("doubling geometric curve is affine") {
  const auto m = doubling_map();
  const auto s = first_return_scheme(m, {0.0, 1.0}, 3);
  const auto c = pressure_curve(m, s, Potential::geometric(1.0), {0.0, 0.5, 1.0, 2.0});
  const double expect[] = {kLog2, 0.5 * kLog2, 0.0, -kLog2};
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(c.points[i].value - expect[i]) <= 1e-12);
  CHECK(phase_transition_scan(c).empty());
  CHECK(convexity_defect(c) >= -1e-9);
}

TEST_CASE("zero potential curve point equals the pressure root") {
  const auto m = lsv_map(0.6);
  const auto s = first_return_scheme(m, {0.5, 1.0}, 100);
  const auto c = pressure_curve(m, s, Potential::geometric(1.0), {0.0});
  CHECK(c.points[0].value == pressure_root(level_counts(s), 1e-12).h);
}

TEST_CASE("constant curve has no kinks") {
  const auto m = doubling_map();
  const auto s = first_return_scheme(m, {0.0, 1.0}, 3);
  const auto c = pressure_curve(m, s, Potential::constant(0.0), linear_grid(0.0, 1.0, 0.1));
  for (const auto& p : c.points) CHECK(p.value == doctest::Approx(kLog2));
  CHECK(phase_transition_scan(c).empty());
}

TEST_CASE("Dirac competitor") {
  for (double t : {0.0, 0.5, 1.0, 3.0}) CHECK(dirac_competitor(lsv_map(1.5), Potential::geometric(1.0), t) == 0.0);
  CHECK(dirac_competitor(lsv_map(1.5), Potential::constant(0.4), 2.0) == doctest::Approx(0.8));
  try {
    dirac_competitor(doubling_map(), Potential::geometric(1.0), 1.0);
    FAIL("expected NoNeutralPoints");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoNeutralPoints);
  }
}

TEST_CASE("LSV phase transition at t = 1") {
  const auto m = lsv_map(1.5);
  const auto s = first_return_scheme(m, {0.5, 1.0}, 1000);
  CurveOptions opt;
  opt.policy = MarkerPolicy::mean_value;
  const auto c = pressure_curve(m, s, Potential::geometric(1.0), linear_grid(0.5, 1.5, 0.01), opt);
  for (const auto& p : c.points) {
    CHECK(p.error.empty());
    if (p.t >= 1.0) CHECK(std::abs(p.value) <= 1e-6);
    if (p.t <= 0.95) CHECK(p.value > 0.0);
  }
  const auto flags = phase_transition_scan(c);
  REQUIRE_FALSE(flags.empty());
  for (double t : flags) CHECK(std::abs(t - 1.0) <= 0.05);
  CHECK_THROWS_AS(phase_transition_scan(PressureCurve{"x", {c.points[0], c.points[1]}, 0, 0}), Error);
}

TEST_CASE("oscillation budget") {
  CHECK(oscillation_budget(analytic_counts("constant_one"), kLog2).value == doctest::Approx(kLog2 / 2));
  const auto two = oscillation_budget(analytic_counts("two_at_one"), kLog2);
  CHECK(std::abs(two.value) <= 1e-12);
  CHECK(two.boundary);
  const double h = std::log(20.0);
  CHECK(oscillation_budget(analytic_counts("gouezel", 1), h).value ==
        doctest::Approx(delta_F(analytic_counts("gouezel", 1), h) / 2));
}

TEST_CASE("Collet-Eckmann diagnostic") {
  const auto cheb = collet_eckmann_diagnostic(-2.0, 50);
  CHECK(cheb.estimate == doctest::Approx(std::log(4.0)));
  CHECK(cheb.estimate > 0.0);
  const auto per = collet_eckmann_diagnostic(-1.0, 50);
  CHECK(per.minus_infinity);
  CHECK(std::isinf(per.estimate));
  CHECK(collet_eckmann_diagnostic(0.2, 200).estimate < 0.0);
  try {
    collet_eckmann_diagnostic(0.3, 200);
    FAIL("expected OrbitEscaped");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OrbitEscaped);
  }
}

TEST_CASE("log-sum inequality examples") {
  const auto a = log_sum_check({0.5, 0.5}, {1, 1});
  CHECK(a.lhs == doctest::Approx(kLog2));
  CHECK(a.rhs == doctest::Approx(kLog2));
  CHECK(a.equality);
  const auto b = log_sum_check({1, 0}, {0.5, 0.5});
  CHECK(b.lhs == doctest::Approx(-kLog2));
  CHECK(std::abs(b.rhs) <= 1e-15);
  CHECK_FALSE(b.equality);
  const auto c = log_sum_check({1.0 / 7, 2.0 / 7, 4.0 / 7}, {1.0 / 7, 2.0 / 7, 4.0 / 7});
  CHECK(c.equality);
  CHECK(std::abs(c.slack) <= 1e-12);
}

TEST_CASE("log-sum equality characterization under perturbation") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> beta(5);
    double sb = 0;
    for (auto& b : beta) sb += (b = u(rng));
    std::vector<double> a(5);
    for (std::size_t i = 0; i < 5; ++i) a[i] = beta[i] / sb;
    CHECK(log_sum_check(a, beta).equality);
    a[0] += 1e-6;
    a[1] -= 1e-6;
    const auto r = log_sum_check(a, beta);
    CHECK_FALSE(r.equality);
    CHECK(r.slack >= -1e-12);
  }
}

TEST_CASE("entropy ratio inequality examples") {
  const auto one = entropy_ratio_check({1.0});
  CHECK(one.lhs == 0.0);
  CHECK(one.rhs == 40.0);
  CHECK(one.holds);
  std::vector<double> geo(30);
  for (std::size_t n = 1; n <= 30; ++n) geo[n - 1] = std::pow(2.0, -static_cast<double>(n));
  const auto g = entropy_ratio_check(geo);
  CHECK(g.lhs == doctest::Approx(2 * kLog2).epsilon(1e-6));
  CHECK(g.holds);
}

TEST_CASE("ratio decay probe") {
  const auto rows = ratio_decay_probe({2, 5, 10, 50, 100}, RatioFamily::geometric);
  CHECK(rows[0].ratio == doctest::Approx(2 * kLog2 / 2));
  for (auto fam : {RatioFamily::geometric, RatioFamily::heavy_tail, RatioFamily::uniform_block}) {
    const auto r = ratio_decay_probe({2, 5, 10, 20, 50, 100}, fam);
    for (std::size_t i = 1; i < r.size(); ++i) CHECK(r[i].ratio <= r[i - 1].ratio);
    CHECK(r.back().ratio < 0.2);
    for (const auto& row : r) CHECK(row.ratio <= row.majorant);
  }
  CHECK(entropy_mean_ratio({1.0, 0.0, 0.0}) == 0.0);
  CHECK(ratio_family_from_string("heavy_tail") == RatioFamily::heavy_tail);
  CHECK_THROWS_AS(ratio_family_from_string("cauchy"), Error);
}

TEST_CASE("oracle suites pass at reduced scale") {
  for (const auto& r : run_oracles(3, 0.02)) {
    INFO(r.name << ": " << r.detail);
    CHECK(r.pass);
  }
}

TEST_CASE("linear grids") {
  const auto g = linear_grid(-1.0, 2.0, 0.1);
  CHECK(g.size() == 31);
  CHECK(g.front() == -1.0);
  CHECK(g.back() == 2.0);
  CHECK(g[10] == 0.0);
  CHECK_THROWS_AS(linear_grid(0, 1, 0), Error);
}
