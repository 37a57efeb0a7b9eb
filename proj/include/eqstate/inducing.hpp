#pragma once

// Full induced Markov maps built as first-return schemes over an interval
// base, and the return-time combinatorics #{R = n} they produce.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "eqstate/maps.hpp"

namespace eqstate {

// One step of an inverse chain: apply branch `branch`, then subtract `shift`
// whole turns (circle maps only).
struct ChainStep {
  std::size_t branch = 0;
  double shift = 0.0;

  friend bool operator==(const ChainStep&, const ChainStep&) = default;
};

struct InducedBranch {
  Interval cylinder;               // P, an open subinterval of the base
  std::size_t return_time = 0;     // R(P)
  double marker = 0.0;             // x_P
  std::vector<ChainStep> chain;    // realizes f^{R(P)} on P, length R(P)
};

struct InducingScheme {
  Interval base;
  std::vector<InducedBranch> branches;  // sorted by left endpoint
  std::size_t complete_up_to = 0;       // every branch with R <= this is present
  bool exhaustive = false;              // nothing is left unreturned after complete_up_to
  double tol = 0.0;
  std::string map_name;
};

// f^{R} on a branch, following its chain (raw value of the last step).
double induced_eval(const MapSpec& map, const InducedBranch& b, double x);
// The pre-image in P of y in the base under f^{R}|_P.
double induced_inverse(const MapSpec& map, const InducingScheme& s, const InducedBranch& b, double y);

// Builds every first-return branch with R <= n_max. Throws NotMarkovCompatible
// when a returning piece fails to cover the base, ToleranceFailure when a
// branch fails endpoint certification.
InducingScheme first_return_scheme(const MapSpec& map, Interval base, std::size_t n_max, double tol = 1e-9);

// count(n) = #{R = n}. Counts are stored as doubles: closed forms overflow
// 64-bit integers quickly.
class LevelCounts {
 public:
  enum class Source { enumerated, constant_one, two_at_one, gouezel, user_table };

  // Explicit table for n = 1..table.size(); beyond it count(n) = coeff e^{rate n}
  // (when a tail is present). `tail_exact` distinguishes closed forms from a
  // certificate extrapolated past an enumeration horizon.
  struct Tail {
    double log_coeff = 0.0;
    double rate = 0.0;
    bool exact = false;
  };

  LevelCounts(Source source, std::vector<double> table, std::optional<Tail> tail, std::string label);

  Source source() const noexcept { return source_; }
  const std::string& label() const noexcept { return label_; }
  const std::vector<double>& table() const noexcept { return table_; }
  std::size_t horizon() const noexcept { return table_.size(); }
  const std::optional<Tail>& tail() const noexcept { return tail_; }
  bool finite() const noexcept { return !tail_.has_value(); }

  double count(std::size_t n) const;
  // log count(n), -inf when the level is empty.
  double log_count(std::size_t n) const;
  // Growth certificate: count(n) <= e^{log_coeff} e^{rate n} for every n.
  double growth_rate() const noexcept { return growth_rate_; }
  double growth_log_coeff() const noexcept { return growth_log_coeff_; }
  // Smallest n with count(n) > 0.
  std::size_t min_level() const;

 private:
  Source source_;
  std::vector<double> table_;
  std::optional<Tail> tail_;
  std::string label_;
  double growth_rate_ = 0.0;
  double growth_log_coeff_ = 0.0;
};

// Enumerated counts of a scheme, with a growth certificate fitted as
// max_n (1/n) log count(n) and, unless the scheme is exhaustive, the same
// certificate extrapolated past complete_up_to.
LevelCounts level_counts(const InducingScheme& s);

// Closed-form generators: "constant_one", "two_at_one", "gouezel" (param q).
LevelCounts analytic_counts(const std::string& kind, double param = 1.0);
// Finite user table n -> count for n = 1..table.size().
LevelCounts table_counts(std::vector<double> table, std::string label = "user_table");

struct RefinedCylinder {
  std::vector<std::size_t> word;  // branch indices into the scheme
  std::size_t return_time = 0;    // R_l, sum of the constituent return times
};

struct CylinderRefinement {
  std::size_t order = 1;
  std::vector<RefinedCylinder> cylinders;  // lexicographic order of words
};

CylinderRefinement refine(const InducingScheme& s, std::size_t ell);
// Number of words of order l with each composite return time (index = time).
std::vector<double> refined_level_counts(const CylinderRefinement& r);
// Geometric cylinder of a word, by chained induced inverses.
Interval cylinder_interval(const MapSpec& map, const InducingScheme& s, const std::vector<std::size_t>& word);

}  // namespace eqstate
