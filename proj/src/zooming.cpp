#include "eqstate/zooming.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "eqstate/errors.hpp"

namespace eqstate {

Contraction Contraction::exponential(double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidArgument, "contraction rate must be positive");
  Contraction c;
  c.kind_ = Kind::exponential;
  c.rate_ = lambda;
  return c;
}

Contraction Contraction::stretched(double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorKind::InvalidArgument, "contraction rate must be positive");
  Contraction c;
  c.kind_ = Kind::stretched;
  c.rate_ = lambda;
  return c;
}

Contraction Contraction::table(std::vector<double> a) {
  if (a.empty()) throw Error(ErrorKind::InvalidArgument, "empty contraction table");
  for (double v : a) {
    if (!(v > 0.0)) throw Error(ErrorKind::InvalidArgument, "contraction coefficients must be positive");
  }
  Contraction c;
  c.kind_ = Kind::table;
  c.table_ = std::move(a);
  return c;
}

double Contraction::log_coefficient(std::size_t n) const {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "contraction index starts at 1");
  switch (kind_) {
    case Kind::exponential: return -rate_ * static_cast<double>(n);
    case Kind::stretched: return -rate_ * std::sqrt(static_cast<double>(n));
    case Kind::table:
      if (n > table_.size()) throw Error(ErrorKind::OutOfRange, "contraction table too short");
      return std::log(table_[n - 1]);
  }
  return 0.0;
}

double Contraction::coefficient(std::size_t n) const { return std::exp(log_coefficient(n)); }

std::string Contraction::check(std::size_t horizon) const {
  if (kind_ == Kind::table) horizon = std::min(horizon, table_.size());
  for (std::size_t n = 1; n <= horizon; ++n) {
    if (!(coefficient(n) < 1.0)) return "alpha_" + std::to_string(n) + "(r) >= r";
  }
  for (std::size_t n = 1; n <= horizon; ++n) {
    for (std::size_t m = 1; n + m <= horizon; ++m) {
      if (log_coefficient(n) + log_coefficient(m) > log_coefficient(n + m) + 1e-12) {
        return "alpha_" + std::to_string(n) + " o alpha_" + std::to_string(m) + " exceeds alpha_" +
               std::to_string(n + m);
      }
    }
  }
  // exponential and stretched coefficients are summable for any positive rate;
  // tables are finite.
  return {};
}

std::string Contraction::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::exponential: os << "exponential(lambda=" << rate_ << ")"; break;
    case Kind::stretched: os << "stretched(lambda=" << rate_ << ")"; break;
    case Kind::table: os << "table(" << table_.size() << " terms)"; break;
  }
  return os.str();
}

double contraction_value(const Contraction& c, std::size_t n, double r) {
  if (r < 0.0) throw Error(ErrorKind::InvalidArgument, "radius must be non-negative");
  if (r == 0.0) return 0.0;
  return c.value(n, r);
}

namespace {

// log|f'| along the orbit; stops at the first point where it is undefined.
struct DerivativeTrail {
  std::vector<double> points;    // x_0 .. x_m
  std::vector<double> log_abs;   // log|f'(x_i)| for i < m
  bool truncated = false;
};

DerivativeTrail trail(const MapSpec& map, double x, std::size_t N) {
  DerivativeTrail t;
  t.points.reserve(N + 1);
  t.log_abs.reserve(N);
  t.points.push_back(x);
  for (std::size_t i = 0; i < N; ++i) {
    double d = 0.0;
    double next = 0.0;
    try {
      d = std::abs(deriv(map, x));
      next = eval(map, x);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::AtCriticalOrBoundary && e.kind() != ErrorKind::OutOfDomain) throw;
      t.truncated = true;
      break;
    }
    if (!(d > 0.0) || !std::isfinite(d)) {
      t.truncated = true;
      break;
    }
    t.log_abs.push_back(std::log(d));
    x = next;
    t.points.push_back(x);
  }
  return t;
}

void finish(ZoomingReport& r) {
  r.frequency = r.horizon == 0 ? 0.0 : static_cast<double>(r.times.size()) / static_cast<double>(r.horizon);
}

}  // namespace

ZoomingReport pliss_times(const MapSpec& map, double x, std::size_t N, double lambda) {
  ZoomingReport r;
  r.x = x;
  r.lambda = lambda;
  r.horizon = N;
  r.contraction = "pliss";
  const auto t = trail(map, x, N);
  r.truncated = t.truncated;
  r.defined_steps = t.log_abs.size();
  // E_k = sum_{i<k} (log|f'(x_i)| - lambda); n qualifies iff E_n >= max_{j<n} E_j.
  double e = 0.0;
  double running_max = 0.0;  // E_0
  for (std::size_t n = 1; n <= t.log_abs.size(); ++n) {
    e += t.log_abs[n - 1] - lambda;
    if (e >= running_max - 1e-12 * static_cast<double>(n)) r.times.push_back(n);
    running_max = std::max(running_max, e);
  }
  finish(r);
  return r;
}

namespace {

// Offset from an orbit point, in linear scale while it is resolvable and in
// log scale once it is far below double resolution.
struct Offset {
  double value = 0.0;     // exact regime
  double log_abs = 0.0;   // linear regime
  int sign = 0;
  bool linear = false;

  double log_magnitude() const {
    if (linear) return sign == 0 ? -std::numeric_limits<double>::infinity() : log_abs;
    return value == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(std::abs(value));
  }
};

constexpr double kLinearSwitch = 1e-9;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Index of a neighbouring branch sharing the endpoint `end` of branch b, with
// the wrap-around shift for circle maps.
std::optional<std::pair<std::size_t, double>> neighbour(const MapSpec& map, std::size_t b, bool upper) {
  const auto& brs = map.branches();
  const double end = upper ? brs[b].domain.hi : brs[b].domain.lo;
  if (map.is_critical(end)) return std::nullopt;
  for (std::size_t k = 0; k < brs.size(); ++k) {
    if (k == b) continue;
    if (upper && brs[k].domain.lo == end) return std::pair{k, 0.0};
    if (!upper && brs[k].domain.hi == end) return std::pair{k, 0.0};
  }
  if (map.circle()) {
    const auto& sp = map.space();
    if (upper && end == sp.hi) {
      for (std::size_t k = 0; k < brs.size(); ++k) {
        if (brs[k].domain.lo == sp.lo && !map.is_critical(sp.lo)) return std::pair{k, sp.length()};
      }
    }
    if (!upper && end == sp.lo) {
      for (std::size_t k = 0; k < brs.size(); ++k) {
        if (brs[k].domain.hi == sp.hi && !map.is_critical(sp.hi)) return std::pair{k, -sp.length()};
      }
    }
  }
  return std::nullopt;
}

// Pulls the offset `d` at x_{j+1} back through the branch containing x_j.
// Returns nullopt when the inverse branch is not defined on the whole segment.
std::optional<Offset> pull_back(const MapSpec& map, std::size_t b, double xj, const Offset& d) {
  const auto& br = map.branches()[b];
  if (d.linear || std::abs(d.value) < kLinearSwitch) {
    const double fp = br.formula.derivative(xj);
    Offset out;
    out.linear = true;
    if (d.linear) {
      out.sign = d.sign;
      out.log_abs = d.log_abs;
    } else {
      out.sign = d.value > 0 ? 1 : (d.value < 0 ? -1 : 0);
      out.log_abs = out.sign == 0 ? 0.0 : std::log(std::abs(d.value));
    }
    if (out.sign == 0) return out;
    out.sign *= fp > 0 ? 1 : -1;
    out.log_abs -= std::log(std::abs(fp));
    double room = out.sign > 0 ? br.domain.hi - xj : xj - br.domain.lo;
    if (const auto nb = neighbour(map, b, out.sign > 0)) room += map.branches()[nb->first].domain.length();
    if (out.log_abs >= std::log(room)) return std::nullopt;
    return out;
  }

  // Exact regime: walk across non-critical branch boundaries.
  std::size_t cur = b;
  double lift = 0.0;
  double target = br.formula.value(xj) + d.value;
  for (std::size_t hops = 0; hops <= map.branches().size(); ++hops) {
    const auto& c = map.branches()[cur];
    const Interval img = c.image();
    if (target >= img.lo && target <= img.hi) {
      const double guess = cur == b ? xj + d.value / c.formula.derivative(xj) : c.domain.midpoint();
      double x;
      try {
        x = branch_inverse(map, cur, target, 8.0 * kEps * (1.0 + std::abs(target)), guess);
      } catch (const Error&) {
        x = branch_inverse(map, cur, target, 1e-12, guess);
      }
      Offset out;
      out.value = (x + lift) - xj;
      return out;
    }
    const bool inc = c.orientation == Orientation::increasing;
    const bool upper = (target > img.hi) == inc;
    const auto nb = neighbour(map, cur, upper);
    if (!nb) return std::nullopt;
    const double end = upper ? c.domain.hi : c.domain.lo;
    const auto& n = map.branches()[nb->first];
    const double end_n = upper ? n.domain.lo : n.domain.hi;
    target = target - c.formula.value(end) + n.formula.value(end_n);
    lift += nb->second;
    cur = nb->first;
  }
  return std::nullopt;
}

}  // namespace

ZoomingReport zooming_frequency(const MapSpec& map, double x, std::size_t N, const Contraction& c,
                                double delta) {
  ZoomingReport r;
  r.x = x;
  r.delta = delta;
  r.horizon = N;
  r.contraction = c.describe();
  if (c.kind() != Contraction::Kind::table) r.lambda = c.rate();
  const auto t = trail(map, x, N);
  r.truncated = t.truncated;
  r.defined_steps = t.log_abs.size();
  if (!(delta > 0.0)) {
    finish(r);
    return r;
  }
  const auto& pts = t.points;
  std::vector<std::optional<std::size_t>> branch(pts.size());
  for (std::size_t j = 0; j < pts.size(); ++j) {
    branch[j] = map.branch_of(pts[j]);
    if (branch[j] || map.is_critical(pts[j])) continue;
    // non-critical boundary point: any branch whose closure holds it
    for (std::size_t b = 0; b < map.branches().size(); ++b) {
      if (map.branches()[b].domain.contains_closed(pts[j])) {
        branch[j] = b;
        break;
      }
    }
  }

  const double log_delta = std::log(delta);
  const auto& sp = map.space();
  for (std::size_t n = 1; n <= r.defined_steps; ++n) {
    const double xn = pts[n];
    double lo = -delta;
    double hi = delta;
    if (!map.circle()) {
      lo = std::max(lo, sp.lo - xn);
      hi = std::min(hi, sp.hi - xn);
    }
    Offset sides[2];
    sides[0].value = lo;
    sides[1].value = hi;
    bool ok = true;
    // rounding allowance in log scale, accumulated along the pullback
    double slack[2] = {1e-9, 1e-9};
    for (std::size_t j = n; j-- > 0 && ok;) {
      if (!branch[j]) {
        ok = false;
        break;
      }
      const double bound = c.log_coefficient(n - j) + log_delta;
      for (int k = 0; k < 2; ++k) {
        auto& s = sides[k];
        auto pulled = pull_back(map, *branch[j], pts[j], s);
        if (!pulled) {
          ok = false;
          break;
        }
        slack[k] += pulled->linear ? 1e-13 : 64.0 * kEps * (1.0 + std::abs(pts[j])) / std::abs(pulled->value);
        if (pulled->log_magnitude() > bound + slack[k]) {
          ok = false;
          break;
        }
        s = *pulled;
      }
    }
    if (ok) r.times.push_back(n);
  }
  finish(r);
  return r;
}

double lyapunov(const MapSpec& map, double x, std::size_t N) {
  if (N == 0) throw Error(ErrorKind::InvalidArgument, "N must be positive");
  const auto t = trail(map, x, N);
  if (t.log_abs.size() < N) {
    throw Error(ErrorKind::OrbitTruncated, "orbit undefined after " + std::to_string(t.log_abs.size()) + " steps");
  }
  double s = 0.0;
  for (double v : t.log_abs) s += v;
  return s / static_cast<double>(N);
}

}  // namespace eqstate
