#pragma once

// Hyperbolic (Pliss) times and geometric zooming times along orbits of
// one-dimensional maps.

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "eqstate/maps.hpp"

namespace eqstate {

// A zooming contraction alpha_n(r): either e^{-lambda n} r or a_n r.
class Contraction {
 public:
  static Contraction exponential(double lambda);
  // a_n = e^{-lambda sqrt(n)}
  static Contraction stretched(double lambda);
  // a_n given for n = 1..size; a_n = 0 beyond the table is not allowed, so
  // queries past the end throw.
  static Contraction table(std::vector<double> a);

  enum class Kind { exponential, stretched, table };

  Kind kind() const noexcept { return kind_; }
  double rate() const noexcept { return rate_; }
  const std::vector<double>& coefficients() const noexcept { return table_; }

  double coefficient(std::size_t n) const;
  double log_coefficient(std::size_t n) const;
  double value(std::size_t n, double r) const { return coefficient(n) * r; }

  // Checks a_n < 1, a_n a_m <= a_{n+m} and that sum a_n stays bounded, for
  // n, m <= horizon. Returns a description of the first violation, or "".
  std::string check(std::size_t horizon = 200) const;
  std::string describe() const;

 private:
  Kind kind_ = Kind::exponential;
  double rate_ = 0.0;
  std::vector<double> table_;
};

double contraction_value(const Contraction& c, std::size_t n, double r);

struct ZoomingReport {
  std::vector<std::size_t> times;  // detected n in [1, N], ascending
  double frequency = 0.0;          // |times| / N
  std::size_t horizon = 0;         // N
  std::size_t defined_steps = 0;   // orbit steps actually available
  bool truncated = false;          // orbit hit a critical/singular point
  // echoed parameters
  double x = 0.0;
  double lambda = 0.0;
  double delta = 0.0;
  std::size_t ell = 1;
  std::string contraction;
};

// n is a Pliss time iff sum_{i=j}^{n-1} log|f'(f^i x)| >= lambda (n - j) for
// every 0 <= j < n.
ZoomingReport pliss_times(const MapSpec& map, double x, std::size_t N, double lambda);

// n is an (alpha, delta, 1)-zooming time iff the inverse branch of f^n along
// the orbit of x is defined on the delta-ball around f^n(x), avoids the
// critical set, and pulls it back so that the j-th image stays within
// alpha_{n-j}(delta) of f^j(x) for all 0 <= j < n.
ZoomingReport zooming_frequency(const MapSpec& map, double x, std::size_t N, const Contraction& c,
                                double delta);

// (1/N) sum_{j<N} log|f'(f^j x)|; throws OrbitTruncated.
double lyapunov(const MapSpec& map, double x, std::size_t N);

}  // namespace eqstate
