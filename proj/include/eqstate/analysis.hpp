#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "eqstate/inducing.hpp"
#include "eqstate/maps.hpp"
#include "eqstate/thermo.hpp"

namespace eqstate {

struct CurvePoint {
  double t = 0.0;
  double value = 0.0;            // max(induced, competitor) when a competitor exists
  double induced = 0.0;
  double competitor = 0.0;       // -inf when unused
  double truncation_err = 0.0;
  double variation_err = 0.0;
  double left_slope = 0.0;       // NaN at the first grid point
  double right_slope = 0.0;      // NaN at the last grid point
  std::string error;             // non-empty when the point failed
  double err() const { return truncation_err + variation_err; }
};

struct PressureCurve {
  std::string potential;
  std::vector<CurvePoint> points;  // sorted by t
  std::size_t horizon = 0;
  double tol = 0.0;
};

struct CurveOptions {
  double tol = 1e-12;
  MarkerPolicy policy = MarkerPolicy::midpoint;
  bool use_competitor = true;  // only when the map declares neutral points
};

// t -> P(t phi) for a scheme of `map`. Failures are recorded per point.
PressureCurve pressure_curve(const MapSpec& map, const InducingScheme& s, const Potential& phi,
                             std::vector<double> t_grid, const CurveOptions& opt = {});
// lo, lo + step, ..., up to hi (inclusive within half a step).
std::vector<double> linear_grid(double lo, double hi, double step);

// max over neutral fixed points q of t phi(q).
double dirac_competitor(const MapSpec& map, const Potential& phi, double t);

// Interior grid values where the one-sided slopes differ by more than
// slope_tol plus the truncation error bars converted to slope units.
std::vector<double> phase_transition_scan(const PressureCurve& curve, double slope_tol = 0.1);

// Second divided differences minus the adjacent error bars (>= 0 for convex curves).
double convexity_defect(const PressureCurve& curve);

struct OscillationBudget {
  double value = 0.0;  // delta(F) / 2
  bool boundary = false;
};
OscillationBudget oscillation_budget(const LevelCounts& counts, double h);

struct CEDiagnostic {
  double c = 0.0;
  std::vector<double> exponents;  // (1/n) log|(f^n)'(c)|, n = 1..
  double estimate = 0.0;          // min over the trailing half; heuristic liminf
  bool minus_infinity = false;    // derivative vanished (orbit through 0)
  static constexpr const char* label = "heuristic liminf estimate (not rigorous)";
};
CEDiagnostic collet_eckmann_diagnostic(double c, std::size_t n);

struct LogSumResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool equality = false;
};
LogSumResult log_sum_check(const std::vector<double>& a, const std::vector<double>& beta);

struct EntropyRatioResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};
EntropyRatioResult entropy_ratio_check(const std::vector<double>& a);

// sum H(a_n) / sum n a_n
double entropy_mean_ratio(const std::vector<double>& a);

enum class RatioFamily { geometric, heavy_tail, uniform_block };
RatioFamily ratio_family_from_string(const std::string& name);

struct RatioRow {
  double r = 0.0;
  double ratio = 0.0;     // sup of the ratio over instances with mean >= r
  double majorant = 0.0;  // (9 log r + 40) / r
};
std::vector<RatioRow> ratio_decay_probe(const std::vector<double>& r_grid, RatioFamily family);

struct OracleResult {
  std::string name;
  bool pass = false;
  std::string detail;
};
// Randomized inequality suites; `scale` in (0, 1] shrinks the sample counts.
std::vector<OracleResult> run_oracles(std::uint64_t seed, double scale = 1.0);

}  // namespace eqstate
