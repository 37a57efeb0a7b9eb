#include "eqstate/maps.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>

// The installed pchip header calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include "eqstate/errors.hpp"

namespace eqstate {

namespace {

constexpr double kAgreeTol = 1e-12;

}  // namespace

class MonotoneTable {
 public:
  MonotoneTable(std::vector<double> xs, std::vector<double> ys)
      : xs_(xs), ys_(ys), interp_(std::move(xs), std::move(ys)) {}

  double value(double x) const { return interp_(x); }
  double derivative(double x) const { return interp_.prime(x); }
  const std::vector<double>& xs() const noexcept { return xs_; }
  const std::vector<double>& ys() const noexcept { return ys_; }

 private:
  std::vector<double> xs_;
  std::vector<double> ys_;
  boost::math::interpolators::pchip<std::vector<double>> interp_;
};

struct Formula::Chain {
  std::vector<Formula> factors;
  std::vector<Interval> domains;
  bool circle = false;

  // Shift by whole turns so that y lands in the closure of `dom`.
  static double align(double y, const Interval& dom) {
    while (y > dom.hi + kAgreeTol) y -= 1.0;
    while (y < dom.lo - kAgreeTol) y += 1.0;
    return y;
  }
};

Formula Formula::affine(double slope, double intercept) {
  Formula f;
  f.kind_ = FormulaKind::affine;
  f.p_[0] = slope;
  f.p_[1] = intercept;
  return f;
}

Formula Formula::lsv_left(double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorKind::InvalidArgument, "lsv alpha must be positive");
  Formula f;
  f.kind_ = FormulaKind::lsv_left;
  f.p_[0] = alpha;
  return f;
}

Formula Formula::lsv_right() {
  Formula f;
  f.kind_ = FormulaKind::lsv_right;
  return f;
}

Formula Formula::quadratic(double c) {
  Formula f;
  f.kind_ = FormulaKind::quadratic;
  f.p_[0] = c;
  return f;
}

Formula Formula::tent_left(double s) {
  Formula f;
  f.kind_ = FormulaKind::tent;
  f.p_[0] = s;
  f.p_[1] = 0.0;
  return f;
}

Formula Formula::tent_right(double s) {
  Formula f;
  f.kind_ = FormulaKind::tent;
  f.p_[0] = s;
  f.p_[1] = 1.0;
  return f;
}

Formula Formula::table(std::vector<double> xs, std::vector<double> ys) {
  if (xs.size() != ys.size() || xs.size() < 4) {
    throw Error(ErrorKind::InvalidArgument, "table branch needs >= 4 (x, y) pairs of equal length");
  }
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw Error(ErrorKind::InvalidArgument, "table x must be strictly increasing");
  }
  const bool inc = ys.back() > ys.front();
  for (std::size_t i = 1; i < ys.size(); ++i) {
    if (inc ? !(ys[i] > ys[i - 1]) : !(ys[i] < ys[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "table y must be strictly monotone");
    }
  }
  Formula f;
  f.kind_ = FormulaKind::table;
  f.table_ = std::make_shared<const MonotoneTable>(std::move(xs), std::move(ys));
  return f;
}

Formula Formula::composite(std::vector<Formula> factors, std::vector<Interval> domains, bool circle) {
  if (factors.empty() || factors.size() != domains.size()) {
    throw Error(ErrorKind::InvalidArgument, "composite needs one domain per factor");
  }
  auto chain = std::make_shared<Chain>();
  chain->factors = std::move(factors);
  chain->domains = std::move(domains);
  chain->circle = circle;
  Formula f;
  f.kind_ = FormulaKind::composite;
  f.chain_ = std::move(chain);
  return f;
}

double Formula::value(double x) const {
  switch (kind_) {
    case FormulaKind::affine: return p_[0] * x + p_[1];
    case FormulaKind::lsv_left: return x * (1.0 + std::pow(2.0 * x, p_[0]));
    case FormulaKind::lsv_right: return 2.0 * x - 1.0;
    case FormulaKind::quadratic: return x * x + p_[0];
    case FormulaKind::tent: return p_[1] == 0.0 ? p_[0] * x : p_[0] * (1.0 - x);
    case FormulaKind::table: return table_->value(x);
    case FormulaKind::composite: {
      double y = x;
      for (std::size_t i = 0; i < chain_->factors.size(); ++i) {
        if (i > 0 && chain_->circle) y = Chain::align(y, chain_->domains[i]);
        y = chain_->factors[i].value(y);
      }
      return y;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double Formula::derivative(double x) const {
  switch (kind_) {
    case FormulaKind::affine: return p_[0];
    case FormulaKind::lsv_left: return 1.0 + (p_[0] + 1.0) * std::pow(2.0 * x, p_[0]);
    case FormulaKind::lsv_right: return 2.0;
    case FormulaKind::quadratic: return 2.0 * x;
    case FormulaKind::tent: return p_[1] == 0.0 ? p_[0] : -p_[0];
    case FormulaKind::table: return table_->derivative(x);
    case FormulaKind::composite: {
      double y = x;
      double d = 1.0;
      for (std::size_t i = 0; i < chain_->factors.size(); ++i) {
        if (i > 0 && chain_->circle) y = Chain::align(y, chain_->domains[i]);
        d *= chain_->factors[i].derivative(y);
        y = chain_->factors[i].value(y);
      }
      return d;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

const std::vector<double>& Formula::table_x() const noexcept {
  static const std::vector<double> empty;
  return table_ ? table_->xs() : empty;
}

const std::vector<double>& Formula::table_y() const noexcept {
  static const std::vector<double> empty;
  return table_ ? table_->ys() : empty;
}

Interval Branch::image() const {
  const double a = formula.value(domain.lo);
  const double b = formula.value(domain.hi);
  return {std::min(a, b), std::max(a, b)};
}

MapSpec::MapSpec(std::string name, Interval space, bool circle, std::vector<Branch> branches,
                 std::vector<double> critical, std::vector<double> neutral)
    : name_(std::move(name)),
      space_(space),
      circle_(circle),
      branches_(std::move(branches)),
      critical_(std::move(critical)),
      neutral_(std::move(neutral)) {
  if (!(space_.hi > space_.lo)) throw Error(ErrorKind::InvalidArgument, "empty phase space");
  if (branches_.empty()) throw Error(ErrorKind::InvalidArgument, "map has no branches");
  std::sort(branches_.begin(), branches_.end(),
            [](const Branch& a, const Branch& b) { return a.domain.lo < b.domain.lo; });
  for (std::size_t i = 0; i < branches_.size(); ++i) {
    auto& br = branches_[i];
    if (!(br.domain.hi > br.domain.lo)) throw Error(ErrorKind::InvalidArgument, "empty branch domain");
    if (br.domain.lo < space_.lo || br.domain.hi > space_.hi) {
      throw Error(ErrorKind::InvalidArgument, "branch domain outside the phase space");
    }
    if (i > 0 && br.domain.lo < branches_[i - 1].domain.hi) {
      throw Error(ErrorKind::InvalidArgument, "branch domains overlap");
    }
    const double d = br.formula.derivative(br.domain.midpoint());
    if (!(d != 0.0) || !std::isfinite(d)) {
      throw Error(ErrorKind::InvalidArgument, "branch is not strictly monotone at its midpoint");
    }
    br.orientation = d > 0.0 ? Orientation::increasing : Orientation::decreasing;
  }
  std::sort(critical_.begin(), critical_.end());
}

std::optional<std::size_t> MapSpec::branch_of(double x) const noexcept {
  auto it = std::upper_bound(branches_.begin(), branches_.end(), x,
                             [](double v, const Branch& b) { return v < b.domain.lo; });
  if (it == branches_.begin()) return std::nullopt;
  --it;
  if (it->domain.contains_open(x)) return static_cast<std::size_t>(it - branches_.begin());
  return std::nullopt;
}

bool MapSpec::is_critical(double x) const noexcept {
  return std::binary_search(critical_.begin(), critical_.end(), x);
}

double MapSpec::reduce(double v) const noexcept {
  if (!circle_) return v;
  const double w = space_.length();
  double r = v - w * std::floor((v - space_.lo) / w);
  if (r >= space_.hi) r = space_.lo;
  return r;
}

double MapSpec::displacement(double a, double b) const noexcept {
  double d = b - a;
  if (circle_) {
    const double w = space_.length();
    d -= w * std::round(d / w);
  }
  return d;
}

double MapSpec::distance(double a, double b) const noexcept { return std::abs(displacement(a, b)); }

MapSpec doubling_map() {
  std::vector<Branch> br{
      {{0.0, 0.5}, Formula::affine(2.0, 0.0)},
      {{0.5, 1.0}, Formula::affine(2.0, -1.0)},
  };
  return MapSpec("doubling", {0.0, 1.0}, true, std::move(br), {});
}

MapSpec lsv_map(double alpha) {
  std::vector<Branch> br{
      {{0.0, 0.5}, Formula::lsv_left(alpha)},
      {{0.5, 1.0}, Formula::lsv_right()},
  };
  return MapSpec("lsv", {0.0, 1.0}, true, std::move(br), {0.5}, {0.0});
}

MapSpec quadratic_map(double c) {
  std::vector<Branch> br{
      {{-2.0, 0.0}, Formula::quadratic(c)},
      {{0.0, 2.0}, Formula::quadratic(c)},
  };
  return MapSpec("quadratic", {-2.0, 2.0}, false, std::move(br), {0.0});
}

MapSpec tent_map(double s) {
  if (!(s > 0.0)) throw Error(ErrorKind::InvalidArgument, "tent slope must be positive");
  std::vector<Branch> br{
      {{0.0, 0.5}, Formula::tent_left(s)},
      {{0.5, 1.0}, Formula::tent_right(s)},
  };
  return MapSpec("tent", {0.0, 1.0}, false, std::move(br), {0.5});
}

std::vector<std::string> builtin_map_names() { return {"doubling", "lsv", "quadratic", "tent"}; }

namespace {

void check_in_space(const MapSpec& map, double x) {
  if (!std::isfinite(x) || x < map.space().lo || x > map.space().hi) {
    throw Error(ErrorKind::OutOfDomain, "point outside the phase space");
  }
}

// One-sided values/derivatives at a boundary point x. `wrap` also collects
// the branch ending at the other end of a circle.
template <typename Fn>
std::vector<double> one_sided(const MapSpec& map, double x, bool wrap, Fn&& fn) {
  std::vector<double> out;
  const auto& sp = map.space();
  for (const auto& b : map.branches()) {
    if (b.domain.lo == x || (wrap && map.circle() && x == sp.hi && b.domain.lo == sp.lo)) {
      out.push_back(fn(b, b.domain.lo));
    }
    if (b.domain.hi == x || (wrap && map.circle() && x == sp.lo && b.domain.hi == sp.hi)) {
      out.push_back(fn(b, b.domain.hi));
    }
  }
  return out;
}

}  // namespace

double eval(const MapSpec& map, double x) {
  check_in_space(map, x);
  if (auto b = map.branch_of(x)) return map.reduce(map.branches()[*b].formula.value(x));
  auto vals = one_sided(map, x, true,
                        [&](const Branch& b, double at) { return map.reduce(b.formula.value(at)); });
  if (vals.empty()) throw Error(ErrorKind::AtCriticalOrBoundary, "point is in no branch closure");
  for (double v : vals) {
    if (map.distance(v, vals.front()) > kAgreeTol) {
      throw Error(ErrorKind::AtCriticalOrBoundary, "map is discontinuous at this point");
    }
  }
  return vals.front();
}

double deriv(const MapSpec& map, double x) {
  check_in_space(map, x);
  if (map.is_critical(x)) throw Error(ErrorKind::AtCriticalOrBoundary, "derivative at a critical point");
  if (auto b = map.branch_of(x)) return map.branches()[*b].formula.derivative(x);
  auto vals = one_sided(map, x, false, [](const Branch& b, double at) { return b.formula.derivative(at); });
  if (vals.empty()) throw Error(ErrorKind::AtCriticalOrBoundary, "point is in no branch closure");
  for (double v : vals) {
    if (std::abs(v - vals.front()) > kAgreeTol) {
      throw Error(ErrorKind::AtCriticalOrBoundary, "one-sided derivatives disagree");
    }
  }
  return vals.front();
}

double abs_deriv(const MapSpec& map, double x) { return std::abs(deriv(map, x)); }

double branch_inverse(const MapSpec& map, std::size_t branch, double y, double tol) {
  return branch_inverse(map, branch, y, tol, std::numeric_limits<double>::quiet_NaN());
}

double branch_inverse(const MapSpec& map, std::size_t branch, double y, double tol, double guess) {
  if (branch >= map.branches().size()) throw Error(ErrorKind::InvalidArgument, "no such branch");
  const Branch& br = map.branches()[branch];
  const Interval img = br.image();
  if (!(y >= img.lo - tol && y <= img.hi + tol)) {
    throw Error(ErrorKind::NotInImage, "value outside the branch image");
  }
  y = std::clamp(y, img.lo, img.hi);
  const bool inc = br.orientation == Orientation::increasing;
  double a = br.domain.lo;
  double b = br.domain.hi;
  if (y == img.lo) return inc ? a : b;
  if (y == img.hi) return inc ? b : a;

  double x = std::isfinite(guess) && guess > a && guess < b ? guess : 0.5 * (a + b);
  for (int it = 0; it < 300; ++it) {
    const double g = br.formula.value(x) - y;
    if (g == 0.0) return x;
    if ((g < 0.0) == inc) {
      a = x;
    } else {
      b = x;
    }
    const double d = br.formula.derivative(x);
    double xn = x - g / d;
    if (!(d != 0.0) || !(xn > a && xn < b)) xn = 0.5 * (a + b);
    const double step = std::abs(xn - x);
    x = xn;
    if (step <= 2.0 * std::numeric_limits<double>::epsilon() * std::abs(x) || b - a <= 0.0 ||
        xn == a || xn == b) {
      break;
    }
  }
  if (!(std::abs(br.formula.value(x) - y) <= tol)) {
    throw Error(ErrorKind::ToleranceFailure, "branch inverse did not reach tolerance");
  }
  return x;
}

Orbit orbit(const MapSpec& map, double x, std::size_t n) {
  Orbit out;
  out.points.reserve(n + 1);
  out.points.push_back(x);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      x = eval(map, x);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::AtCriticalOrBoundary && e.kind() != ErrorKind::OutOfDomain) throw;
      out.truncated = true;
      break;
    }
    out.points.push_back(x);
  }
  return out;
}

namespace {

// Solves fn(x) = target on [lo, hi] for a monotone fn by bisection.
double monotone_solve(const std::function<double(double)>& fn, double lo, double hi, double target) {
  const bool inc = fn(hi) > fn(lo);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if ((fn(mid) < target) == inc) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct Piece {
  Interval domain;
  std::vector<Formula> factors;
  std::vector<Interval> domains;
};

}  // namespace

MapSpec iterate(const MapSpec& map, std::size_t ell) {
  if (ell == 0) throw Error(ErrorKind::InvalidArgument, "iterate order must be >= 1");
  if (ell == 1) return map;
  std::vector<Piece> pieces;
  for (const auto& b : map.branches()) pieces.push_back({b.domain, {b.formula}, {b.domain}});
  for (std::size_t depth = 1; depth < ell; ++depth) {
    std::vector<Piece> next;
    for (const auto& p : pieces) {
      const Formula comp = Formula::composite(p.factors, p.domains, map.circle());
      const double va = comp.value(p.domain.lo);
      const double vb = comp.value(p.domain.hi);
      const double lo = std::min(va, vb);
      const double hi = std::max(va, vb);
      // Split the raw image into whole-turn segments.
      std::vector<std::pair<Interval, double>> segments;
      if (map.circle()) {
        const double w = map.space().length();
        for (double k = std::floor((lo - map.space().lo) / w); map.space().lo + k * w < hi; k += 1.0) {
          const double s0 = std::max(lo, map.space().lo + k * w);
          const double s1 = std::min(hi, map.space().hi + k * w);
          if (s1 > s0) segments.push_back({{s0 - k * w, s1 - k * w}, k * w});
        }
      } else {
        segments.push_back({{lo, hi}, 0.0});
      }
      for (const auto& [seg, shift] : segments) {
        for (const auto& c : map.branches()) {
          const double j0 = std::max(seg.lo, c.domain.lo);
          const double j1 = std::min(seg.hi, c.domain.hi);
          if (!(j1 - j0 > kAgreeTol)) continue;
          auto fn = [&](double x) { return comp.value(x); };
          // targets at the piece's own end values resolve to its endpoints exactly
          auto solve = [&](double target) {
            if (std::abs(target - va) <= kAgreeTol) return p.domain.lo;
            if (std::abs(target - vb) <= kAgreeTol) return p.domain.hi;
            return monotone_solve(fn, p.domain.lo, p.domain.hi, target);
          };
          const double x0 = solve(j0 + shift);
          const double x1 = solve(j1 + shift);
          Piece q{{std::min(x0, x1), std::max(x0, x1)}, p.factors, p.domains};
          q.factors.push_back(c.formula);
          q.domains.push_back(c.domain);
          next.push_back(std::move(q));
        }
      }
    }
    pieces = std::move(next);
  }
  std::vector<Branch> branches;
  std::vector<double> critical;
  for (const auto& p : pieces) {
    branches.push_back({p.domain, Formula::composite(p.factors, p.domains, map.circle())});
    for (double e : {p.domain.lo, p.domain.hi}) {
      double y = e;
      for (std::size_t j = 0; j < ell; ++j) {
        if (map.is_critical(y)) {
          critical.push_back(e);
          break;
        }
        try {
          y = eval(map, y);
        } catch (const Error&) {
          critical.push_back(e);
          break;
        }
      }
    }
  }
  std::sort(critical.begin(), critical.end());
  critical.erase(std::unique(critical.begin(), critical.end()), critical.end());
  return MapSpec(map.name() + "^" + std::to_string(ell), map.space(), map.circle(), std::move(branches),
                 std::move(critical), map.neutral());
}

}  // namespace eqstate
