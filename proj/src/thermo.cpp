#include "eqstate/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <utility>

#include "eqstate/errors.hpp"
#include "eqstate/parallel.hpp"

namespace eqstate {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Pairwise summation over a fixed tree, independent of thread count.
double pairwise_sum(const double* v, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

// log sum_i exp(a_i)
double log_sum_exp(const std::vector<double>& a) {
  double mx = -kInf;
  for (double x : a) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  std::vector<double> t(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) t[i] = std::exp(a[i] - mx);
  return mx + std::log(pairwise_sum(t));
}

// Tail pieces for levels n > H of count(n) = e^{lc + rate n} weighted by e^{-s n}.
struct GeometricTail {
  double mass = 0.0;
  double mean = 0.0;
};

GeometricTail geometric_tail(double lc, double rate, double s, std::size_t H) {
  const double d = rate - s;
  if (d >= 0.0) return {kInf, kInf};
  const double r = std::exp(d);
  const double one_minus_r = -std::expm1(d);
  const double first = std::exp(lc + static_cast<double>(H + 1) * d);
  const double Hd = static_cast<double>(H);
  return {first / one_minus_r, first * ((Hd + 1.0) - Hd * r) / (one_minus_r * one_minus_r)};
}

// log of the pressure series, enumerated part only when `with_tail` is false.
double log_series(const LevelCounts& c, double s, bool with_tail) {
  std::vector<double> terms;
  terms.reserve(c.horizon() + 1);
  for (std::size_t n = 1; n <= c.horizon(); ++n) {
    const double lc = c.log_count(n);
    if (std::isfinite(lc)) terms.push_back(lc - s * static_cast<double>(n));
  }
  if (with_tail && c.tail()) {
    const auto& t = *c.tail();
    const double d = t.rate - s;
    if (d >= 0.0) return kInf;
    terms.push_back(t.log_coeff + static_cast<double>(c.horizon() + 1) * d - std::log(-std::expm1(d)));
  }
  if (terms.empty()) return -kInf;
  return log_sum_exp(terms);
}

// Largest s with g(s) >= 0 for a decreasing g, bisected to adjacent doubles
// or until the bracket is below tol_s.
template <class G>
double bisect_decreasing(G&& g, double lo, double hi) {
  for (int it = 0; it < 4000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) >= 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Root of log_series(s) = 0. Throws NoRoot when the series stays below 1.
double series_root(const LevelCounts& c, bool with_tail) {
  const bool tail = with_tail && c.tail().has_value();
  auto g = [&](double s) { return log_series(c, s, tail); };
  const std::size_t n0 = c.min_level();
  if (n0 == 0) throw Error(ErrorKind::NoRoot, "counts are identically zero");
  double lo;
  if (tail) {
    const double rho = c.tail()->rate;
    double eps = 1.0;
    lo = rho + eps;
    while (g(lo) < 0.0) {
      eps *= 0.5;
      if (eps < 1e-15) {
        throw Error(ErrorKind::NoRoot, "series stays below 1 as s decreases to the growth rate " +
                                           std::to_string(rho) + "; enumeration horizon insufficient");
      }
      lo = rho + eps;
    }
  } else {
    lo = c.log_count(n0) / static_cast<double>(n0) - 1.0;
    double step = 1.0;
    while (g(lo) < 0.0) {
      step *= 2.0;
      lo -= step;
    }
  }
  double hi = lo + 1.0;
  double step = 1.0;
  while (g(hi) >= 0.0) {
    step *= 2.0;
    hi = lo + step;
  }
  return bisect_decreasing(g, lo, hi);
}

struct LevelSums {
  double mean = 0.0;
  double entropy = 0.0;
};

// sum n count(n) e^{-hn} and sum H(count(n) e^{-hn}), tail included.
LevelSums level_sums(const LevelCounts& c, double h) {
  std::vector<double> mean_terms;
  std::vector<double> ent_terms;
  for (std::size_t n = 1; n <= c.horizon(); ++n) {
    const double lc = c.log_count(n);
    if (!std::isfinite(lc)) continue;
    const double lm = lc - h * static_cast<double>(n);
    const double mass = std::exp(lm);
    mean_terms.push_back(static_cast<double>(n) * mass);
    ent_terms.push_back(mass >= 1.0 ? 0.0 : -mass * lm);
  }
  LevelSums out{pairwise_sum(mean_terms), pairwise_sum(ent_terms)};
  if (c.tail()) {
    const auto& t = *c.tail();
    const auto g = geometric_tail(t.log_coeff, t.rate, h, c.horizon());
    if (!std::isfinite(g.mean)) return {kInf, kInf};
    out.mean += g.mean;
    // -sum L_n log L_n with log L_n = lc + n (rate - h)
    out.entropy += -t.log_coeff * g.mass - (t.rate - h) * g.mean;
  }
  return out;
}

}  // namespace

double entropy_term(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw Error(ErrorKind::OutOfRange, "entropy_term needs 0 <= x <= 1");
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log(x);
}

double pressure_series(const LevelCounts& counts, double s) { return std::exp(log_series(counts, s, true)); }

PressureReport pressure_root(const LevelCounts& counts, double tol) {
  PressureReport r;
  r.tol = tol;
  r.counts = counts.label();
  r.horizon = counts.horizon();
  r.tail_rate = counts.growth_rate();
  r.h = series_root(counts, true);
  r.residual = std::abs(pressure_series(counts, r.h) - 1.0);
  if (r.residual > tol) {
    throw Error(ErrorKind::ToleranceFailure, "pressure residual " + std::to_string(r.residual) + " exceeds tol");
  }
  const bool extrapolated = counts.tail() && !counts.tail()->exact;
  r.h_lower = r.h;
  if (extrapolated) {
    try {
      r.h_lower = series_root(counts, false);
    } catch (const Error&) {
      r.h_lower = -kInf;
    }
    const auto& t = *counts.tail();
    r.truncation_error = geometric_tail(t.log_coeff, t.rate, r.h, counts.horizon()).mass;
  }
  const auto sums = level_sums(counts, r.h);
  r.mean_return = sums.mean;
  r.mean_finite = std::isfinite(sums.mean);
  if (r.mean_finite) {
    r.delta_F = sums.entropy / sums.mean;
    std::size_t levels = 0;
    for (std::size_t n = 1; n <= counts.horizon(); ++n) levels += counts.count(n) > 0.0 ? 1 : 0;
    r.delta_at_zero = !counts.tail() && levels == 1;
    r.delta_at_h = std::abs(r.delta_F - r.h) <= 10.0 * tol * std::max(1.0, r.h);
  } else {
    r.delta_F = kInf;
  }
  return r;
}

double MassDistribution::total_mass() const {
  std::vector<double> t(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) t[i] = classes[i].multiplicity * weights[i];
  return pairwise_sum(t) + tail.mass;
}

double MassDistribution::mean_return() const {
  std::vector<double> t(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) {
    t[i] = static_cast<double>(classes[i].return_time) * classes[i].multiplicity * weights[i];
  }
  return pairwise_sum(t) + tail.mean;
}

MassDistribution mme(const LevelCounts& counts, double h) {
  MassDistribution m;
  auto add_level = [&](std::size_t n) {
    const double c = counts.count(n);
    if (c <= 0.0) return;
    m.classes.push_back({n, c, std::nullopt});
    m.weights.push_back(std::exp(-h * static_cast<double>(n)));
  };
  for (std::size_t n = 1; n <= counts.horizon(); ++n) add_level(n);
  if (counts.tail()) {
    const auto& t = *counts.tail();
    if (h <= t.rate) throw Error(ErrorKind::InvalidArgument, "h does not exceed the tail growth rate");
    std::size_t M = counts.horizon();
    const std::size_t cap = counts.horizon() + 10000;
    while (M < cap && geometric_tail(t.log_coeff, t.rate, h, M).mass >= 1e-20) {
      add_level(M + 1);
      ++M;
    }
    const auto g = geometric_tail(t.log_coeff, t.rate, h, M);
    m.tail = {g.mass, g.mean, h * g.mean, M + 1};
  }
  m.residual = std::abs(m.total_mass() - 1.0);
  return m;
}

double bernoulli_entropy(const MassDistribution& m) {
  if (!std::isfinite(m.tail.entropy) || m.tail.entropy < 0.0) {
    throw Error(ErrorKind::DivergentEntropy, "entropy of the omitted levels is not finite");
  }
  std::vector<double> t(m.classes.size());
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    t[i] = m.classes[i].multiplicity * entropy_term(std::min(1.0, m.weights[i]));
  }
  return pairwise_sum(t) + m.tail.entropy;
}

double normalized_entropy(const MassDistribution& m) {
  const double mean = m.mean_return();
  if (!std::isfinite(mean)) throw Error(ErrorKind::InfiniteMeanReturn, "mean return time is infinite");
  return bernoulli_entropy(m) / mean;
}

double delta_F(const LevelCounts& counts, double h) {
  const auto s = level_sums(counts, h);
  if (!std::isfinite(s.mean)) throw Error(ErrorKind::InfiniteMeanReturn, "mean return time is infinite");
  return s.entropy / s.mean;
}

// ---------------------------------------------------------------------------
// Potentials

Potential Potential::constant(double c) {
  Potential p;
  p.kind_ = Kind::constant;
  p.param_ = c;
  p.name_ = "constant";
  p.hoelder_c_ = 0.0;
  p.hoelder_gamma_ = 1.0;
  return p;
}

Potential Potential::geometric(double t) {
  Potential p;
  p.kind_ = Kind::geometric;
  p.param_ = t;
  p.name_ = "geometric";
  p.hoelder_c_ = -1.0;
  p.hoelder_gamma_ = 1.0;
  return p;
}

Potential Potential::branch_constant(std::vector<double> values) {
  Potential p;
  p.kind_ = Kind::branch_constant;
  p.values_ = std::move(values);
  p.name_ = "branch_constant";
  p.hoelder_c_ = 0.0;
  p.hoelder_gamma_ = 1.0;
  return p;
}

Potential Potential::function(std::function<double(double)> fn, std::string name, double hoelder_c,
                              double hoelder_gamma) {
  if (!(hoelder_gamma > 0.0 && hoelder_gamma <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "Hoelder exponent must lie in (0, 1]");
  }
  Potential p;
  p.kind_ = Kind::function;
  p.fn_ = std::move(fn);
  p.name_ = std::move(name);
  p.hoelder_c_ = hoelder_c;
  p.hoelder_gamma_ = hoelder_gamma;
  return p;
}

double Potential::operator()(const MapSpec& map, double x) const {
  switch (kind_) {
    case Kind::constant:
      return param_;
    case Kind::geometric:
      return param_ == 0.0 ? 0.0 : -param_ * std::log(abs_deriv(map, x));
    case Kind::branch_constant: {
      const auto b = map.branch_of(map.reduce(x));
      if (!b) throw Error(ErrorKind::AtCriticalOrBoundary, "branch-constant potential at a branch boundary");
      if (*b >= values_.size()) throw Error(ErrorKind::InvalidArgument, "missing value for a map branch");
      return values_[*b];
    }
    case Kind::function:
      return fn_(x);
  }
  return 0.0;
}

double InducedPotential::variation_bound() const {
  return variation_bound_constant * std::pow(base_diameter, hoelder_gamma);
}

namespace {

// phi-bar along the chain of b starting at x; throws OrbitHitsCritical.
double orbit_sum(const MapSpec& map, const InducedBranch& b, const Potential& phi, double x) {
  double y = x;
  std::vector<double> t;
  t.reserve(b.chain.size());
  for (const auto& st : b.chain) {
    if (map.is_critical(map.reduce(y))) throw Error(ErrorKind::OrbitHitsCritical, "orbit meets the critical set");
    t.push_back(phi(map, y));
    y = map.branches()[st.branch].formula.value(y) - st.shift;
  }
  return pairwise_sum(t);
}

// log|f'| along the chain of b starting at x.
std::vector<double> orbit_log_derivs(const MapSpec& map, const InducedBranch& b, double x) {
  std::vector<double> out;
  out.reserve(b.chain.size());
  double y = x;
  for (const auto& st : b.chain) {
    const auto& f = map.branches()[st.branch].formula;
    out.push_back(std::log(std::abs(f.derivative(y))));
    y = f.value(y) - st.shift;
  }
  return out;
}

// Grid estimate of the Hoelder constant of phi on the branch domains.
double estimate_hoelder(const MapSpec& map, const Potential& phi, double gamma) {
  constexpr std::size_t kGrid = 2001;
  double c = 0.0;
  for (const auto& br : map.branches()) {
    const double lo = br.domain.lo;
    const double len = br.domain.length();
    double prev_x = lo + 0.5 * len / kGrid;
    double prev_v = phi(map, prev_x);
    for (std::size_t k = 1; k < kGrid; ++k) {
      const double x = lo + (static_cast<double>(k) + 0.5) * len / kGrid;
      double v;
      try {
        v = phi(map, x);
      } catch (const Error&) {
        continue;
      }
      if (std::isfinite(v) && std::isfinite(prev_v)) {
        c = std::max(c, std::abs(v - prev_v) / std::pow(x - prev_x, gamma));
      }
      prev_x = x;
      prev_v = v;
    }
  }
  return 1.05 * c;
}

}  // namespace

InducedPotential induced_potential(const MapSpec& map, const InducingScheme& s, const Potential& phi,
                                   MarkerPolicy policy) {
  if (policy == MarkerPolicy::mean_value && phi.kind() != Potential::Kind::geometric) {
    throw Error(ErrorKind::InvalidArgument, "mean-value markers are defined for the geometric potential only");
  }
  const std::size_t nb = s.branches.size();
  InducedPotential out;
  out.horizon = s.complete_up_to;
  out.exhaustive = s.exhaustive;
  out.base_diameter = s.base.length();
  out.classes.resize(nb);
  out.values.assign(nb, 0.0);
  std::vector<char> failed(nb, 0);
  parallel_for(nb, [&](std::size_t i) {
    const auto& b = s.branches[i];
    out.classes[i] = {b.return_time, 1.0, i};
    try {
      if (policy == MarkerPolicy::mean_value) {
        out.values[i] = -phi.parameter() * std::log(s.base.length() / b.cylinder.length());
      } else {
        out.values[i] = orbit_sum(map, b, phi, b.marker);
      }
    } catch (const Error&) {
      failed[i] = 1;
    }
  });
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < nb; ++i) {
    if (failed[i]) bad.push_back(i);
  }
  if (!bad.empty()) {
    std::string list;
    for (std::size_t k = 0; k < std::min<std::size_t>(bad.size(), 10); ++k) {
      list += (k ? ", " : "") + std::to_string(bad[k]) + " (R=" + std::to_string(s.branches[bad[k]].return_time) + ")";
    }
    if (bad.size() > 10) list += ", ...";
    throw Error(ErrorKind::OrbitHitsCritical, "marker orbits meet the critical set on branches " + list);
  }

  out.hoelder_gamma = phi.hoelder_gamma();
  out.hoelder_c = phi.hoelder_c() >= 0.0 ? phi.hoelder_c() : estimate_hoelder(map, phi, out.hoelder_gamma);

  // Contraction a_n: largest 1/|(f^n)'| over the last n steps of any return block.
  std::size_t max_r = 0;
  for (const auto& b : s.branches) max_r = std::max(max_r, b.return_time);
  std::vector<std::vector<double>> per_branch(nb);
  std::vector<double> var(nb, 0.0);
  parallel_for(nb, [&](std::size_t i) {
    const auto& b = s.branches[i];
    const double len = b.cylinder.length();
    const double pts[3] = {b.cylinder.lo + 1e-9 * len, b.marker, b.cylinder.hi - 1e-9 * len};
    std::vector<double> a(b.return_time, 0.0);
    for (double x : pts) {
      const auto ld = orbit_log_derivs(map, b, x);
      double suffix = 0.0;
      for (std::size_t n = 1; n <= ld.size(); ++n) {
        suffix += ld[ld.size() - n];
        a[n - 1] = std::max(a[n - 1], std::exp(-suffix));
      }
    }
    per_branch[i] = std::move(a);
    if (policy == MarkerPolicy::midpoint) {
      try {
        var[i] = std::abs(orbit_sum(map, b, phi, pts[0]) - orbit_sum(map, b, phi, pts[2]));
      } catch (const Error&) {
        var[i] = kInf;
      }
    } else {
      // oscillation of the true phi-bar on P around the assigned value
      try {
        const double l = orbit_sum(map, b, phi, pts[0]);
        const double r = orbit_sum(map, b, phi, pts[2]);
        var[i] = std::max({std::abs(l - r), std::abs(l - out.values[i]), std::abs(r - out.values[i])});
      } catch (const Error&) {
        var[i] = kInf;
      }
    }
  });
  out.contraction.assign(max_r, 0.0);
  for (const auto& a : per_branch) {
    for (std::size_t n = 0; n < a.size(); ++n) out.contraction[n] = std::max(out.contraction[n], a[n]);
  }
  for (double v : var) out.measured_variation = std::max(out.measured_variation, v);
  std::vector<double> terms(out.contraction.size());
  for (std::size_t n = 0; n < terms.size(); ++n) terms[n] = std::pow(out.contraction[n], out.hoelder_gamma);
  out.variation_bound_constant = out.hoelder_c * pairwise_sum(terms);
  return out;
}

InducedPotential zero_potential(const LevelCounts& counts) {
  InducedPotential p;
  p.counts = counts;
  p.horizon = counts.horizon();
  p.exhaustive = counts.finite() || counts.tail()->exact;
  return p;
}

InducedPotential scaled(const InducedPotential& p, double t) {
  InducedPotential q = p;
  for (auto& v : q.values) v *= t;
  q.hoelder_c *= std::abs(t);
  q.variation_bound_constant *= std::abs(t);
  q.measured_variation *= std::abs(t);
  return q;
}

// ---------------------------------------------------------------------------
// Gibbs weights

namespace {

// log sum_i mult_i e^{v_i - p R_i}
double gibbs_log_series(const InducedPotential& phi, double p, std::size_t max_r) {
  std::vector<double> a;
  a.reserve(phi.classes.size());
  for (std::size_t i = 0; i < phi.classes.size(); ++i) {
    const auto& c = phi.classes[i];
    if (c.return_time > max_r) continue;
    a.push_back(std::log(c.multiplicity) + phi.values[i] - p * static_cast<double>(c.return_time));
  }
  if (a.empty()) return -kInf;
  return log_sum_exp(a);
}

double gibbs_root(const InducedPotential& phi, std::size_t max_r) {
  std::size_t i0 = phi.classes.size();
  for (std::size_t i = 0; i < phi.classes.size(); ++i) {
    if (phi.classes[i].return_time <= max_r &&
        (i0 == phi.classes.size() || phi.classes[i].return_time < phi.classes[i0].return_time)) {
      i0 = i;
    }
  }
  if (i0 == phi.classes.size()) return -kInf;
  auto g = [&](double p) { return gibbs_log_series(phi, p, max_r); };
  const auto& c0 = phi.classes[i0];
  double lo = (std::log(c0.multiplicity) + phi.values[i0]) / static_cast<double>(c0.return_time) - 1.0;
  double step = 1.0;
  while (g(lo) < 0.0) {
    step *= 2.0;
    lo -= step;
  }
  double hi = lo + 1.0;
  step = 1.0;
  while (g(hi) >= 0.0) {
    step *= 2.0;
    hi = lo + step;
    if (!std::isfinite(hi) || step > 1e300) {
      throw Error(ErrorKind::NoFiniteRoot, "series diverges below every upper bracket");
    }
  }
  return bisect_decreasing(g, lo, hi);
}

}  // namespace

GibbsResult gibbs_equilibrium(const InducedPotential& phi, double tol) {
  GibbsResult out;
  if (phi.counts) {
    const auto rep = pressure_root(*phi.counts, tol);
    out.p = rep.h;
    out.m = mme(*phi.counts, rep.h);
    out.truncation_estimate = rep.truncation_error;
    return out;
  }
  if (phi.classes.empty()) throw Error(ErrorKind::NoFiniteRoot, "empty alphabet");
  const std::size_t all = std::numeric_limits<std::size_t>::max();
  out.p = gibbs_root(phi, all);
  out.m.classes = phi.classes;
  out.m.weights.resize(phi.classes.size());
  for (std::size_t i = 0; i < phi.classes.size(); ++i) {
    out.m.weights[i] = std::exp(phi.values[i] - out.p * static_cast<double>(phi.classes[i].return_time));
  }
  out.m.residual = std::abs(out.m.total_mass() - 1.0);
  if (out.m.residual > std::max(tol, 1e-12)) {
    throw Error(ErrorKind::ToleranceFailure, "Gibbs normalization residual " + std::to_string(out.m.residual));
  }
  if (!phi.exhaustive && phi.horizon >= 2) {
    const double half = gibbs_root(phi, phi.horizon / 2);
    out.truncation_estimate = std::isfinite(half) ? std::abs(out.p - half) : kInf;
  }
  return out;
}

double truncated_gurevich(const InducedPotential& phi, std::size_t n) {
  if (phi.counts) {
    std::vector<double> table(n, 0.0);
    for (std::size_t k = 1; k <= n; ++k) table[k - 1] = phi.counts->count(k);
    if (std::all_of(table.begin(), table.end(), [](double c) { return c <= 0.0; })) return -kInf;
    return series_root(table_counts(std::move(table), "truncated"), false);
  }
  return gibbs_root(phi, n);
}

double project_integral(const MassDistribution& m, const InducedPotential& phi) {
  if (!std::isfinite(m.tail.mean)) throw Error(ErrorKind::InfiniteMeanReturn, "mean return time is infinite");
  if (phi.counts) return 0.0;
  std::map<std::size_t, std::size_t> by_branch;
  std::map<std::size_t, std::pair<double, double>> by_level;  // sum of values, number of branches
  for (std::size_t i = 0; i < phi.classes.size(); ++i) {
    const auto& c = phi.classes[i];
    if (c.branch) by_branch[*c.branch] = i;
    auto& lv = by_level[c.return_time];
    lv.first += c.multiplicity * phi.values[i];
    lv.second += c.multiplicity;
  }
  std::vector<double> num;
  std::vector<double> den;
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    const auto& c = m.classes[i];
    double v;
    if (c.branch && by_branch.count(*c.branch)) {
      v = phi.values[by_branch[*c.branch]];
    } else {
      const auto it = by_level.find(c.return_time);
      if (it == by_level.end() || it->second.second <= 0.0) continue;
      v = it->second.first / it->second.second;
    }
    const double w = c.multiplicity * m.weights[i];
    num.push_back(w * v);
    den.push_back(w * static_cast<double>(c.return_time));
  }
  const double d = pairwise_sum(den);
  if (!(d > 0.0)) throw Error(ErrorKind::InvalidArgument, "distribution has no mass on the potential's branches");
  return pairwise_sum(num) / d;
}

double project_entropy(const MassDistribution& m) { return normalized_entropy(m); }

// ---------------------------------------------------------------------------
// Sampling

double uniform01(std::uint64_t seed, std::uint64_t counter) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  const std::uint64_t z = mix(mix(seed) + counter * 0xD1B54A32D192ED03ULL);
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

EmpiricalMeasure sample_original_measure(const MapSpec& map, const InducingScheme& s, const MassDistribution& m,
                                         std::size_t n_samples, std::uint64_t seed) {
  if (!std::isfinite(m.mean_return())) throw Error(ErrorKind::InfiniteMeanReturn, "mean return time is infinite");
  std::map<std::size_t, std::vector<std::size_t>> by_level;
  for (std::size_t i = 0; i < s.branches.size(); ++i) by_level[s.branches[i].return_time].push_back(i);

  EmpiricalMeasure e;
  std::vector<std::vector<std::size_t>> choices;
  std::vector<double> cumulative;
  double acc = 0.0;
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    const auto& c = m.classes[i];
    const double w = c.multiplicity * m.weights[i];
    std::vector<std::size_t> cand;
    if (c.branch) {
      if (*c.branch < s.branches.size()) cand.push_back(*c.branch);
    } else if (auto it = by_level.find(c.return_time); it != by_level.end()) {
      cand = it->second;
    }
    if (cand.empty() || !(w > 0.0)) {
      e.dropped_mass += w > 0.0 ? w : 0.0;
      continue;
    }
    if (!c.branch && static_cast<double>(cand.size()) < c.multiplicity) {
      e.dropped_mass += w * (1.0 - static_cast<double>(cand.size()) / c.multiplicity);
    }
    acc += w;
    cumulative.push_back(acc);
    choices.push_back(std::move(cand));
  }
  e.dropped_mass += m.tail.mass;
  if (choices.empty() || n_samples == 0) return e;

  for (std::size_t k = 0; k < n_samples; ++k) {
    const double u = uniform01(seed, 2 * k) * acc;
    std::size_t ci = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                              cumulative.begin());
    ci = std::min(ci, choices.size() - 1);
    const auto& cand = choices[ci];
    std::size_t bi = cand[0];
    if (cand.size() > 1) {
      const auto j = static_cast<std::size_t>(uniform01(seed, 2 * k + 1) * static_cast<double>(cand.size()));
      bi = cand[std::min(j, cand.size() - 1)];
    }
    const auto& b = s.branches[bi];
    e.block_start.push_back(e.points.size());
    double y = b.marker;
    for (std::size_t j = 0; j < b.chain.size(); ++j) {
      e.points.push_back(map.reduce(y));
      e.positions.push_back(j);
      const auto& st = b.chain[j];
      y = map.branches()[st.branch].formula.value(y) - st.shift;
    }
  }
  e.weight = e.points.empty() ? 0.0 : 1.0 / static_cast<double>(e.points.size());
  return e;
}

BirkhoffEstimate birkhoff_average(const MapSpec& map, const EmpiricalMeasure& e, const Potential& phi) {
  const std::size_t nb = e.block_start.size();
  if (nb == 0) throw Error(ErrorKind::InvalidArgument, "empty sample");
  std::vector<double> ys(nb);
  std::vector<double> xs(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t from = e.block_start[b];
    const std::size_t to = b + 1 < nb ? e.block_start[b + 1] : e.points.size();
    std::vector<double> t;
    t.reserve(to - from);
    for (std::size_t i = from; i < to; ++i) t.push_back(phi(map, e.points[i]));
    ys[b] = pairwise_sum(t);
    xs[b] = static_cast<double>(to - from);
  }
  const double sy = pairwise_sum(ys);
  const double sx = pairwise_sum(xs);
  BirkhoffEstimate out;
  out.value = sy / sx;
  if (nb > 1) {
    std::vector<double> d2(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      const double d = ys[b] - out.value * xs[b];
      d2[b] = d * d;
    }
    const double var = pairwise_sum(d2) / static_cast<double>(nb - 1);
    const double mean_x = sx / static_cast<double>(nb);
    out.standard_error = std::sqrt(var / static_cast<double>(nb)) / mean_x;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Tails and the fat perturbation

double TailReport::bound(std::size_t n) const {
  if (!granted) return kInf;
  if (constant == 0.0) return 0.0;
  return constant * std::exp(-0.5 * epsilon * static_cast<double>(n));
}

TailReport tail_analysis(const LevelCounts& counts, double h) {
  TailReport t;
  t.rate = counts.growth_rate();
  if (t.rate == -kInf) {
    t.granted = true;
    t.epsilon = kInf;
    t.constant = 0.0;
    return t;
  }
  t.epsilon = h - t.rate;
  t.granted = t.epsilon > 1e-12;
  if (!t.granted) {
    t.constant = kInf;
    return t;
  }
  // k e^{-eps k} <= (2/(e eps)) e^{-eps k/2}, summed over k > n.
  const double e = t.epsilon;
  t.constant = std::exp(counts.growth_log_coeff()) * 2.0 / (std::exp(1.0) * e * (-std::expm1(-0.5 * e)));
  return t;
}

MassDistribution fat_perturbation(const MassDistribution& m, const LevelCounts& counts, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorKind::InvalidArgument, "gamma must lie in (0, 1)");
  const std::size_t H = counts.horizon();
  std::vector<double> wt;
  for (std::size_t n = 1; n <= H; ++n) {
    if (counts.count(n) > 0.0) wt.push_back(std::ldexp(1.0, -static_cast<int>(n)));
  }
  double W = pairwise_sum(wt);
  if (counts.tail()) W += std::ldexp(1.0, -static_cast<int>(H));
  if (!(W > 0.0)) throw Error(ErrorKind::InvalidArgument, "counts are identically zero");
  auto base_weight = [&](std::size_t n) {
    return std::ldexp(1.0, -static_cast<int>(n)) / (W * counts.count(n));
  };

  MassDistribution out;
  std::map<std::size_t, double> covered;
  std::size_t L = H;
  for (std::size_t i = 0; i < m.classes.size(); ++i) {
    const auto& c = m.classes[i];
    if (counts.count(c.return_time) <= 0.0) {
      throw Error(ErrorKind::InvalidArgument, "distribution has mass on an empty level");
    }
    out.classes.push_back(c);
    out.weights.push_back((1.0 - gamma) * m.weights[i] + gamma * base_weight(c.return_time));
    covered[c.return_time] += c.multiplicity;
    L = std::max(L, c.return_time);
  }
  for (std::size_t n = 1; n <= L; ++n) {
    const double c = counts.count(n);
    if (c <= 0.0) continue;
    const double missing = c - covered[n];
    if (missing > 1e-9 * c) {
      out.classes.push_back({n, missing, std::nullopt});
      out.weights.push_back(gamma * base_weight(n));
    }
  }
  Remainder fresh;
  if (counts.tail()) {
    const auto& t = *counts.tail();
    const double Ld = static_cast<double>(L);
    const double mass0 = std::ldexp(1.0, -static_cast<int>(L)) / W;
    fresh.mass = mass0;
    fresh.mean = (Ld + 2.0) * mass0;
    // sum_{n>L} (2^{-n}/W) (n log 2 + log W + log count(n))
    fresh.entropy = (std::log(2.0) + t.rate) * fresh.mean + (std::log(W) + t.log_coeff) * mass0;
  }
  out.tail.mass = (1.0 - gamma) * m.tail.mass + gamma * fresh.mass;
  out.tail.mean = (1.0 - gamma) * m.tail.mean + gamma * fresh.mean;
  out.tail.entropy = (1.0 - gamma) * m.tail.entropy + gamma * std::max(0.0, fresh.entropy);
  out.tail.from_level = L + 1;
  out.residual = std::abs(out.total_mass() - 1.0);
  return out;
}

}  // namespace eqstate
