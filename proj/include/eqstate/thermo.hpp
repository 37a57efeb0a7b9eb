#pragma once

// Thermodynamic formalism on full induced Markov maps: the pressure equation
// sum_n #{R=n} e^{-hn} = 1, the measure of maximal entropy, Gibbs weights for
// induced potentials, projection back to the original map (Kac/Abramov), tail
// certificates and the fat-support perturbation.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "eqstate/inducing.hpp"
#include "eqstate/maps.hpp"

namespace eqstate {

// H(x) = x log(1/x), H(0) = 0.
double entropy_term(double x);

struct PressureReport {
  double h = 0.0;                 // root of the pressure equation
  double h_lower = 0.0;           // root of the enumerated part alone
  double mean_return = 0.0;       // sum n count(n) e^{-hn}
  bool mean_finite = true;
  double delta_F = 0.0;           // (1/mean) sum_n H(count(n) e^{-hn})
  bool delta_at_zero = false;     // single-level boundary case
  bool delta_at_h = false;        // delta_F == h (closed upper bound attained)
  double tail_rate = 0.0;         // growth certificate of the counts
  double truncation_error = 0.0;  // bound on the extrapolated (non-exact) tail at h
  double residual = 0.0;          // |series(h) - 1|
  std::size_t horizon = 0;
  double tol = 0.0;
  std::string counts;
};

// Value of sum_n count(n) e^{-s n}, tail included; +inf when it diverges.
double pressure_series(const LevelCounts& counts, double s);
PressureReport pressure_root(const LevelCounts& counts, double tol = 1e-12);

// A group of `multiplicity` branches sharing a return time (and, for a
// distribution, a weight). `branch` pins the class to one scheme branch.
struct BranchClass {
  std::size_t return_time = 0;
  double multiplicity = 1.0;
  std::optional<std::size_t> branch;
};

// Contribution of levels that are not listed as classes.
struct Remainder {
  double mass = 0.0;
  double mean = 0.0;     // sum n * mass
  double entropy = 0.0;  // sum of H over the omitted branches
  std::size_t from_level = 0;
};

struct MassDistribution {
  std::vector<BranchClass> classes;
  std::vector<double> weights;  // weight of each single branch in the class
  Remainder tail;
  double residual = 0.0;        // |total - 1| at construction

  double total_mass() const;
  double mean_return() const;
};

// nu_0(P) = e^{-h R(P)}.
MassDistribution mme(const LevelCounts& counts, double h);
// sum_P H(m(P)); throws DivergentEntropy when the omitted part is infinite.
double bernoulli_entropy(const MassDistribution& m);
// bernoulli_entropy / mean return; throws InfiniteMeanReturn.
double normalized_entropy(const MassDistribution& m);
double delta_F(const LevelCounts& counts, double h);

// A potential phi on the phase space.
class Potential {
 public:
  enum class Kind { constant, geometric, branch_constant, function };

  static Potential constant(double c);
  // -t log|f'|
  static Potential geometric(double t = 1.0);
  // value[b] on the domain of map branch b
  static Potential branch_constant(std::vector<double> values);
  static Potential function(std::function<double(double)> fn, std::string name, double hoelder_c,
                            double hoelder_gamma);

  Kind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  double parameter() const noexcept { return param_; }
  double operator()(const MapSpec& map, double x) const;
  // Hoelder data (C, gamma); C < 0 means "estimate from the map".
  double hoelder_c() const noexcept { return hoelder_c_; }
  double hoelder_gamma() const noexcept { return hoelder_gamma_; }

 private:
  Kind kind_ = Kind::constant;
  double param_ = 0.0;
  std::vector<double> values_;
  std::function<double(double)> fn_;
  std::string name_;
  double hoelder_c_ = -1.0;
  double hoelder_gamma_ = 1.0;
};

enum class MarkerPolicy {
  midpoint,    // phi-bar evaluated at the scheme marker (cylinder midpoint)
  mean_value,  // geometric only: the point where |(f^R)'| equals |B|/|P|
};

struct InducedPotential {
  std::vector<BranchClass> classes;
  std::vector<double> values;             // phi-bar per branch of each class
  double hoelder_c = 0.0;
  double hoelder_gamma = 1.0;
  double variation_bound_constant = 0.0;  // S = C sum_n a_n^gamma
  std::vector<double> contraction;        // a_n, n = 1..
  double base_diameter = 0.0;
  double measured_variation = 0.0;        // max_P |phi-bar| oscillation at cylinder ends
  std::size_t horizon = 0;
  bool exhaustive = true;
  std::optional<LevelCounts> counts;      // set for the zero potential over counts

  // Bound on V_1(phi-bar).
  double variation_bound() const;
};

InducedPotential induced_potential(const MapSpec& map, const InducingScheme& s, const Potential& phi,
                                   MarkerPolicy policy = MarkerPolicy::midpoint);
// phi-bar == 0 over closed-form or enumerated level counts.
InducedPotential zero_potential(const LevelCounts& counts);
// t * phi-bar (same classes); used for one-parameter families.
InducedPotential scaled(const InducedPotential& p, double t);

struct GibbsResult {
  double p = 0.0;                    // P(phi) as seen by the inducing scheme
  MassDistribution m;
  double truncation_estimate = 0.0;  // |p - p over the first half of the horizon|
};

// Solves log sum_P e^{phi-bar(x_P) - p R(P)} = 0; m(P) = e^{phi-bar(x_P) - p R(P)}.
GibbsResult gibbs_equilibrium(const InducedPotential& phi, double tol = 1e-12);
// Root over the finite sub-alphabet {R <= n}; -inf when it is empty.
double truncated_gurevich(const InducedPotential& phi, std::size_t n);

// sum m(P) phi-bar(x_P) / sum m(P) R(P), over the classes listed in m.
double project_integral(const MassDistribution& m, const InducedPotential& phi);
// Abramov: bernoulli_entropy / mean return.
double project_entropy(const MassDistribution& m);

struct EmpiricalMeasure {
  std::vector<double> points;
  std::vector<std::size_t> positions;   // j within the return block
  std::vector<std::size_t> block_start; // index of each sampled block's first point
  double weight = 0.0;                  // uniform weight per point
  double dropped_mass = 0.0;            // mass of m not realizable in the scheme
};

// Counter-based generator: the k-th draw depends only on (seed, k).
double uniform01(std::uint64_t seed, std::uint64_t counter);

EmpiricalMeasure sample_original_measure(const MapSpec& map, const InducingScheme& s, const MassDistribution& m,
                                         std::size_t n_samples, std::uint64_t seed);

struct BirkhoffEstimate {
  double value = 0.0;
  double standard_error = 0.0;
};

// Average of phi over the sample, with a ratio-estimator standard error over blocks.
BirkhoffEstimate birkhoff_average(const MapSpec& map, const EmpiricalMeasure& e, const Potential& phi);

struct TailReport {
  double rate = 0.0;        // growth certificate
  bool granted = false;     // rate < h
  double epsilon = 0.0;     // h - rate
  double constant = 0.0;    // C in sum_{k>n} k count(k) e^{-hk} <= C e^{-eps n / 2}

  double bound(std::size_t n) const;
};

TailReport tail_analysis(const LevelCounts& counts, double h);

MassDistribution fat_perturbation(const MassDistribution& m, const LevelCounts& counts, double gamma);

}  // namespace eqstate
