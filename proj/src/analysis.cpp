#include "eqstate/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "eqstate/errors.hpp"
#include "eqstate/parallel.hpp"

namespace eqstate {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}  // namespace

std::vector<double> linear_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw Error(ErrorKind::InvalidArgument, "grid needs lo <= hi and step > 0");
  std::vector<double> g;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 0.5));
  for (std::size_t i = 0; i <= n; ++i) {
    double t = lo + static_cast<double>(i) * step;
    // snap to the decimal grid so 0.1-steps print and compare cleanly
    t = std::round(t * 1e12) / 1e12;
    g.push_back(t);
  }
  return g;
}

double dirac_competitor(const MapSpec& map, const Potential& phi, double t) {
  if (map.neutral().empty()) throw Error(ErrorKind::NoNeutralPoints, "map " + map.name() + " declares no neutral points");
  double best = -kInf;
  for (double q : map.neutral()) best = std::max(best, t * phi(map, q));
  return best + 0.0;
}

PressureCurve pressure_curve(const MapSpec& map, const InducingScheme& s, const Potential& phi,
                             std::vector<double> t_grid, const CurveOptions& opt) {
  std::sort(t_grid.begin(), t_grid.end());
  PressureCurve curve;
  curve.potential = phi.name();
  curve.horizon = s.complete_up_to;
  curve.tol = opt.tol;
  curve.points.resize(t_grid.size());

  const InducedPotential base = induced_potential(map, s, phi, opt.policy);
  const LevelCounts counts = level_counts(s);
  const bool competitor = opt.use_competitor && !map.neutral().empty();

  parallel_for(t_grid.size(), [&](std::size_t i) {
    CurvePoint& pt = curve.points[i];
    pt.t = t_grid[i];
    pt.competitor = competitor ? dirac_competitor(map, phi, pt.t) : -kInf;
    try {
      if (pt.t == 0.0) {
        const auto g = gibbs_equilibrium(zero_potential(counts), opt.tol);
        pt.induced = g.p;
        pt.truncation_err = g.truncation_estimate;
      } else {
        const auto ip = scaled(base, pt.t);
        const auto g = gibbs_equilibrium(ip, opt.tol);
        pt.induced = g.p;
        pt.truncation_err = g.truncation_estimate;
        pt.variation_err = ip.variation_bound();
      }
    } catch (const Error& e) {
      pt.error = e.what();
      pt.induced = kNaN;
    }
    if (std::isnan(pt.induced)) {
      pt.value = competitor ? pt.competitor : kNaN;
      pt.truncation_err = pt.variation_err = 0.0;
      return;
    }
    pt.value = pt.induced;
    if (competitor && pt.competitor > pt.induced) {
      pt.value = pt.competitor;
      const double tr = std::max(0.0, pt.induced + pt.truncation_err - pt.competitor);
      const double all = std::max(0.0, pt.induced + pt.truncation_err + pt.variation_err - pt.competitor);
      pt.truncation_err = tr;
      pt.variation_err = all - tr;
    }
  });

  auto& p = curve.points;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i].left_slope = i > 0 ? (p[i].value - p[i - 1].value) / (p[i].t - p[i - 1].t) : kNaN;
    p[i].right_slope = i + 1 < p.size() ? (p[i + 1].value - p[i].value) / (p[i + 1].t - p[i].t) : kNaN;
  }
  return curve;
}

std::vector<double> phase_transition_scan(const PressureCurve& curve, double slope_tol) {
  const auto& p = curve.points;
  if (p.size() < 3) throw Error(ErrorKind::InvalidArgument, "phase transition scan needs at least 3 grid points");
  std::vector<double> flags;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    if (!std::isfinite(p[i].left_slope) || !std::isfinite(p[i].right_slope)) continue;
    const double dl = p[i].t - p[i - 1].t;
    const double dr = p[i + 1].t - p[i].t;
    const double bars = (p[i - 1].truncation_err + p[i].truncation_err) / dl +
                        (p[i].truncation_err + p[i + 1].truncation_err) / dr;
    if (std::abs(p[i].right_slope - p[i].left_slope) > slope_tol + bars) flags.push_back(p[i].t);
  }
  return flags;
}

double convexity_defect(const PressureCurve& curve) {
  const auto& p = curve.points;
  double worst = kInf;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    const double second = p[i].right_slope - p[i].left_slope;
    if (!std::isfinite(second)) continue;
    const double bars = (p[i - 1].err() + p[i].err()) / (p[i].t - p[i - 1].t) +
                        (p[i].err() + p[i + 1].err()) / (p[i + 1].t - p[i].t);
    worst = std::min(worst, second + bars);
  }
  return worst;
}

OscillationBudget oscillation_budget(const LevelCounts& counts, double h) {
  std::size_t levels = 0;
  for (std::size_t n = 1; n <= counts.horizon(); ++n) levels += counts.count(n) > 0.0 ? 1 : 0;
  return {0.5 * delta_F(counts, h), !counts.tail() && levels == 1};
}

CEDiagnostic collet_eckmann_diagnostic(double c, std::size_t n) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "N must be positive");
  CEDiagnostic d;
  d.c = c;
  double x = c;
  double log_sum = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    if (!(std::abs(x) <= 2.0)) {
      throw Error(ErrorKind::OrbitEscaped, fmt::format("critical orbit of c={} leaves [-2,2] at step {}", c, k - 1));
    }
    if (x == 0.0) {
      d.minus_infinity = true;
      d.exponents.push_back(-kInf);
      break;
    }
    log_sum += std::log(std::abs(2.0 * x));
    d.exponents.push_back(log_sum / static_cast<double>(k));
    x = x * x + c;
  }
  if (d.minus_infinity) {
    d.estimate = -kInf;
    return d;
  }
  const std::size_t from = d.exponents.size() / 2;
  d.estimate = *std::min_element(d.exponents.begin() + static_cast<std::ptrdiff_t>(from), d.exponents.end());
  return d;
}

LogSumResult log_sum_check(const std::vector<double>& a, const std::vector<double>& beta) {
  if (a.size() != beta.size() || a.empty()) throw Error(ErrorKind::InvalidArgument, "sequences must have equal length");
  LogSumResult r;
  double total_beta = 0.0;
  for (double b : beta) {
    if (!(b > 0.0)) throw Error(ErrorKind::InvalidArgument, "beta must be positive");
    total_beta += b;
  }
  r.equality = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0.0) throw Error(ErrorKind::InvalidArgument, "a must be nonnegative");
    if (a[i] != 0.0) r.lhs += a[i] * std::log(beta[i] / a[i]);
    if (std::abs(a[i] - beta[i] / total_beta) > 1e-12) r.equality = false;
  }
  r.rhs = std::log(total_beta);
  r.slack = r.rhs - r.lhs;
  return r;
}

EntropyRatioResult entropy_ratio_check(const std::vector<double>& a) {
  EntropyRatioResult r;
  double weighted_log = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    r.lhs += entropy_term(a[i]);
    weighted_log += std::log(static_cast<double>(i + 1)) * a[i];
  }
  r.rhs = 9.0 * weighted_log + 40.0;
  r.holds = r.lhs <= r.rhs + 1e-9;
  return r;
}

double entropy_mean_ratio(const std::vector<double>& a) {
  double h = 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    h += entropy_term(a[i]);
    mean += static_cast<double>(i + 1) * a[i];
  }
  if (!(mean > 0.0)) throw Error(ErrorKind::InvalidArgument, "sequence has zero mass");
  return h / mean;
}

RatioFamily ratio_family_from_string(const std::string& name) {
  if (name == "geometric") return RatioFamily::geometric;
  if (name == "heavy_tail") return RatioFamily::heavy_tail;
  if (name == "uniform_block") return RatioFamily::uniform_block;
  throw Error(ErrorKind::UnknownGenerator, "unknown sequence family: " + name);
}

namespace {

struct Instance {
  double mean = 0.0;
  double ratio = 0.0;
};

// Geometric a_n = (1-q) q^{n-1}: entropy and mean in closed form.
Instance geometric_instance(double q) {
  const double mean = 1.0 / (1.0 - q);
  const double h = -std::log1p(-q) - (q / (1.0 - q)) * std::log(q);
  return {mean, h / mean};
}

std::vector<Instance> family_instances(RatioFamily f, double r_max) {
  std::vector<Instance> out;
  switch (f) {
    case RatioFamily::geometric:
      for (double m = 1.0 + 1e-6; m <= 2.0 * r_max; m *= 1.01) out.push_back(geometric_instance(1.0 - 1.0 / m));
      break;
    case RatioFamily::heavy_tail:
      for (double s : {1.1, 1.25, 1.5, 2.0, 3.0}) {
        for (std::size_t m = 1; m <= (1u << 20); m *= 2) {
          double z = 0.0;
          for (std::size_t n = 1; n <= m; ++n) z += std::pow(static_cast<double>(n), -s);
          double h = 0.0;
          double mean = 0.0;
          for (std::size_t n = 1; n <= m; ++n) {
            const double a = std::pow(static_cast<double>(n), -s) / z;
            h += entropy_term(a);
            mean += static_cast<double>(n) * a;
          }
          out.push_back({mean, h / mean});
          if (mean > 2.0 * r_max) break;
        }
      }
      break;
    case RatioFamily::uniform_block:
      for (std::size_t start = 1; start <= 64; start *= 2) {
        for (std::size_t k = 1; k <= static_cast<std::size_t>(4.0 * r_max) + 2; ++k) {
          const double mean = static_cast<double>(start) + 0.5 * static_cast<double>(k - 1);
          out.push_back({mean, std::log(static_cast<double>(k)) / mean});
        }
      }
      break;
  }
  return out;
}

}  // namespace

std::vector<RatioRow> ratio_decay_probe(const std::vector<double>& r_grid, RatioFamily family) {
  if (r_grid.empty()) return {};
  const double r_max = *std::max_element(r_grid.begin(), r_grid.end());
  const auto inst = family_instances(family, r_max);
  std::vector<RatioRow> rows;
  for (double r : r_grid) {
    RatioRow row{r, 0.0, (9.0 * std::log(r) + 40.0) / r};
    for (const auto& in : inst) {
      if (in.mean >= r) row.ratio = std::max(row.ratio, in.ratio);
    }
    if (family == RatioFamily::geometric && r > 1.0) row.ratio = std::max(row.ratio, geometric_instance(1.0 - 1.0 / r).ratio);
    rows.push_back(row);
  }
  return rows;
}

std::vector<OracleResult> run_oracles(std::uint64_t seed, double scale) {
  scale = std::clamp(scale, 1e-4, 1.0);
  std::vector<OracleResult> out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  {
    const auto pairs = static_cast<std::size_t>(1e5 * scale);
    const auto proportional = std::max<std::size_t>(1, static_cast<std::size_t>(1e3 * scale));
    double worst = kInf;
    std::size_t misclassified = 0;
    for (std::size_t k = 0; k < pairs; ++k) {
      const std::size_t len = 1 + rng() % 20;
      std::vector<double> beta(len);
      for (auto& b : beta) b = 1e-3 + u(rng);
      std::vector<double> a(len);
      const bool make_proportional = k < proportional;
      double sb = 0.0;
      for (double b : beta) sb += b;
      if (make_proportional) {
        for (std::size_t i = 0; i < len; ++i) a[i] = beta[i] / sb;
      } else {
        double sa = 0.0;
        for (auto& x : a) {
          x = u(rng) < 0.2 ? 0.0 : u(rng);
          sa += x;
        }
        if (sa == 0.0) {
          a[0] = 1.0;
          sa = 1.0;
        }
        for (auto& x : a) x /= sa;
        if (len == 1) beta[0] *= 2.0;  // single-entry pairs are always proportional otherwise
      }
      const auto r = log_sum_check(a, beta);
      worst = std::min(worst, r.slack);
      bool expected = make_proportional;
      if (!make_proportional) {
        double s = 0.0;
        for (double b : beta) s += b;
        expected = true;
        for (std::size_t i = 0; i < len; ++i) expected = expected && std::abs(a[i] - beta[i] / s) <= 1e-12;
      }
      if (r.equality != expected || (make_proportional && !r.equality)) ++misclassified;
    }
    out.push_back({"log_sum", worst >= -1e-12 && misclassified == 0,
                   fmt::format("pairs={} min_slack={:.3e} misclassified={}", pairs, worst, misclassified)});
  }

  {
    const auto seqs = static_cast<std::size_t>(1e4 * scale);
    std::size_t fails = 0;
    double worst = kInf;
    for (std::size_t k = 0; k < seqs; ++k) {
      const std::size_t len = 1 + rng() % 10000;
      std::vector<double> a(len);
      double sa = 0.0;
      const double shape = 0.1 + 3.0 * u(rng);
      for (auto& x : a) {
        x = std::pow(u(rng), shape);
        sa += x;
      }
      const double total = u(rng);  // sum a <= 1
      for (auto& x : a) x = x / sa * total;
      const auto r = entropy_ratio_check(a);
      worst = std::min(worst, r.rhs - r.lhs);
      if (!r.holds) ++fails;
    }
    out.push_back({"entropy_ratio", fails == 0, fmt::format("sequences={} min_margin={:.6g} failures={}", seqs, worst, fails)});
  }

  for (auto fam : {RatioFamily::geometric, RatioFamily::heavy_tail, RatioFamily::uniform_block}) {
    const std::vector<double> grid = {2, 5, 10, 20, 50, 100};
    const auto rows = ratio_decay_probe(grid, fam);
    bool ok = rows.back().ratio < 0.2;
    for (std::size_t i = 1; i < rows.size(); ++i) ok = ok && rows[i].ratio <= rows[i - 1].ratio;
    for (const auto& row : rows) ok = ok && row.ratio <= row.majorant;
    static const char* names[] = {"geometric", "heavy_tail", "uniform_block"};
    out.push_back({fmt::format("ratio_decay[{}]", names[static_cast<int>(fam)]), ok,
                   fmt::format("ratio(2)={:.6g} ratio(100)={:.6g}", rows.front().ratio, rows.back().ratio)});
  }
  return out;
}

}  // namespace eqstate
