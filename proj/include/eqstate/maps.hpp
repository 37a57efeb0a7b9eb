#pragma once

// Piecewise monotone maps of an interval or of the circle [0,1)/~.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace eqstate {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const noexcept { return hi - lo; }
  double midpoint() const noexcept { return 0.5 * (lo + hi); }
  bool contains_open(double x) const noexcept { return lo < x && x < hi; }
  bool contains_closed(double x) const noexcept { return lo <= x && x <= hi; }
};

enum class FormulaKind { affine, lsv_left, lsv_right, quadratic, tent, table, composite };

class MonotoneTable;

// A closed-form (or tabulated) branch formula, defined on the closure of the
// branch domain. Values are raw: circle maps reduce them mod 1 afterwards.
class Formula {
 public:
  static Formula affine(double slope, double intercept);
  static Formula lsv_left(double alpha);  // x (1 + (2x)^alpha)
  static Formula lsv_right();             // 2x - 1
  static Formula quadratic(double c);     // x^2 + c
  static Formula tent_left(double s);     // s x
  static Formula tent_right(double s);    // s (1 - x)
  static Formula table(std::vector<double> xs, std::vector<double> ys);
  // f_{n-1} o ... o f_0, with intermediate values shifted by whole turns into
  // the next factor's domain when `circle` is set.
  static Formula composite(std::vector<Formula> factors, std::vector<Interval> domains, bool circle);

  FormulaKind kind() const noexcept { return kind_; }
  double value(double x) const;
  double derivative(double x) const;

  double param(std::size_t i) const noexcept { return p_[i]; }
  const std::vector<double>& table_x() const noexcept;
  const std::vector<double>& table_y() const noexcept;

 private:
  FormulaKind kind_ = FormulaKind::affine;
  double p_[2] = {1.0, 0.0};
  std::shared_ptr<const MonotoneTable> table_;
  struct Chain;
  std::shared_ptr<const Chain> chain_;
};

enum class Orientation { increasing, decreasing };

struct Branch {
  Interval domain;
  Formula formula;
  Orientation orientation = Orientation::increasing;

  // Closure of the raw image f(domain).
  Interval image() const;
};

class MapSpec {
 public:
  MapSpec(std::string name, Interval space, bool circle, std::vector<Branch> branches,
          std::vector<double> critical, std::vector<double> neutral = {});

  const std::string& name() const noexcept { return name_; }
  const Interval& space() const noexcept { return space_; }
  bool circle() const noexcept { return circle_; }
  const std::vector<Branch>& branches() const noexcept { return branches_; }
  const std::vector<double>& critical() const noexcept { return critical_; }
  // Indifferent fixed points (|f'| = 1), used as zero-entropy competitors.
  const std::vector<double>& neutral() const noexcept { return neutral_; }

  // Index of the branch whose open domain contains x.
  std::optional<std::size_t> branch_of(double x) const noexcept;
  bool is_critical(double x) const noexcept;
  // Reduce a raw value into the phase space (mod 1 on the circle).
  double reduce(double v) const noexcept;
  // Signed displacement b - a, taken modulo 1 on the circle.
  double displacement(double a, double b) const noexcept;
  double distance(double a, double b) const noexcept;

 private:
  std::string name_;
  Interval space_;
  bool circle_;
  std::vector<Branch> branches_;
  std::vector<double> critical_;
  std::vector<double> neutral_;
};

// Built-in families.
MapSpec doubling_map();
MapSpec lsv_map(double alpha);
MapSpec quadratic_map(double c);
MapSpec tent_map(double s);

double eval(const MapSpec& map, double x);
// Signed derivative f'(x).
double deriv(const MapSpec& map, double x);
double abs_deriv(const MapSpec& map, double x);

// Solves f_b(x) = y on the closure of branch b (raw coordinates).
double branch_inverse(const MapSpec& map, std::size_t branch, double y, double tol = 1e-13);
// Same, starting Newton from `guess`; falls back to bisection.
double branch_inverse(const MapSpec& map, std::size_t branch, double y, double tol, double guess);

struct Orbit {
  std::vector<double> points;  // x, f(x), ..., up to n+1 points
  bool truncated = false;      // stopped early at a discontinuity
};

Orbit orbit(const MapSpec& map, double x, std::size_t n);

// The l-th iterate f^l, one composite branch per admissible word of length l.
MapSpec iterate(const MapSpec& map, std::size_t ell);

std::vector<std::string> builtin_map_names();

}  // namespace eqstate
