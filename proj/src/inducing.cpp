#include "eqstate/inducing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>

#include "eqstate/errors.hpp"

namespace eqstate {

double induced_eval(const MapSpec& map, const InducedBranch& b, double x) {
  double y = x;
  for (const auto& st : b.chain) y = map.branches()[st.branch].formula.value(y) - st.shift;
  return y;
}

namespace {

double induced_log_deriv(const MapSpec& map, const InducedBranch& b, double x) {
  double y = x;
  double s = 0.0;
  for (const auto& st : b.chain) {
    const auto& f = map.branches()[st.branch].formula;
    s += std::log(std::abs(f.derivative(y)));
    y = f.value(y) - st.shift;
  }
  return s;
}

double pull_back_chain(const MapSpec& map, const std::vector<ChainStep>& chain, std::size_t upto, double y,
                       double tol) {
  for (std::size_t i = upto; i-- > 0;) y = branch_inverse(map, chain[i].branch, y + chain[i].shift, tol);
  return y;
}

// Splits a raw interval into pieces of the phase space, each tagged with the
// number of whole turns removed.
std::vector<std::pair<Interval, double>> wrap(const MapSpec& map, Interval raw) {
  std::vector<std::pair<Interval, double>> out;
  if (!map.circle()) {
    out.push_back({raw, 0.0});
    return out;
  }
  const auto& sp = map.space();
  const double w = sp.length();
  for (double k = std::floor((raw.lo - sp.lo) / w); sp.lo + k * w < raw.hi; k += 1.0) {
    const double s0 = std::max(raw.lo, sp.lo + k * w);
    const double s1 = std::min(raw.hi, sp.hi + k * w);
    if (s1 > s0) out.push_back({{s0 - k * w, s1 - k * w}, k * w});
  }
  return out;
}

struct Pending {
  Interval image;
  std::vector<ChainStep> chain;
};

// Rolling hash of chain suffixes, used to share pull-backs between branches
// whose chains end the same way.
struct SuffixKey {
  std::uint64_t hash;
  std::size_t length;
  bool operator==(const SuffixKey&) const = default;
};

struct SuffixKeyHash {
  std::size_t operator()(const SuffixKey& k) const noexcept {
    return static_cast<std::size_t>(k.hash ^ (k.length * 0x9e3779b97f4a7c15ULL));
  }
};

std::uint64_t step_hash(const ChainStep& st) {
  std::uint64_t h = static_cast<std::uint64_t>(st.branch) * 0x100000001b3ULL + 0x632be59bd9b4e019ULL;
  h ^= static_cast<std::uint64_t>(static_cast<std::int64_t>(st.shift)) * 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return h;
}

}  // namespace

double induced_inverse(const MapSpec& map, const InducingScheme& s, const InducedBranch& b, double y) {
  return pull_back_chain(map, b.chain, b.chain.size(), y, std::max(s.tol, 1e-12));
}

InducingScheme first_return_scheme(const MapSpec& map, Interval base, std::size_t n_max, double tol) {
  if (!(base.hi > base.lo)) throw Error(ErrorKind::InvalidArgument, "empty base");
  if (base.lo < map.space().lo || base.hi > map.space().hi) {
    throw Error(ErrorKind::InvalidArgument, "base outside the phase space");
  }
  if (n_max == 0) throw Error(ErrorKind::InvalidArgument, "n_max must be >= 1");

  InducingScheme s;
  s.base = base;
  s.tol = tol;
  s.map_name = map.name();

  std::vector<std::vector<ChainStep>> returned;
  std::vector<Pending> frontier{{base, {}}};
  for (std::size_t k = 1; k <= n_max && !frontier.empty(); ++k) {
    std::vector<Pending> next;
    for (const auto& p : frontier) {
      for (std::size_t c = 0; c < map.branches().size(); ++c) {
        const auto& br = map.branches()[c];
        const double j0 = std::max(p.image.lo, br.domain.lo);
        const double j1 = std::min(p.image.hi, br.domain.hi);
        if (!(j1 - j0 > tol)) continue;
        const double v0 = br.formula.value(j0);
        const double v1 = br.formula.value(j1);
        for (const auto& [seg, shift] : wrap(map, {std::min(v0, v1), std::max(v0, v1)})) {
          if (!(seg.length() > tol)) continue;
          auto chain = p.chain;
          chain.push_back({c, shift});
          const double in0 = std::max(seg.lo, base.lo);
          const double in1 = std::min(seg.hi, base.hi);
          if (!(in1 - in0 > tol)) {
            next.push_back({seg, std::move(chain)});
            continue;
          }
          if (seg.lo > base.lo + tol || seg.hi < base.hi - tol) {
            throw Error(ErrorKind::NotMarkovCompatible,
                        "iterate " + std::to_string(k) + " maps a piece onto part of the base only");
          }
          if (seg.lo < base.lo - tol) next.push_back({{seg.lo, base.lo}, chain});
          if (seg.hi > base.hi + tol) next.push_back({{base.hi, seg.hi}, chain});
          returned.push_back(std::move(chain));
        }
      }
    }
    frontier = std::move(next);
  }
  s.complete_up_to = n_max;
  s.exhaustive = frontier.empty();

  // Pull the base back through each chain, sharing common suffixes.
  std::unordered_map<SuffixKey, Interval, SuffixKeyHash> memo;
  const double inv_tol = std::max(tol, 1e-12);
  for (const auto& chain : returned) {
    Interval cur = base;
    std::uint64_t h = 0;
    for (std::size_t len = 1; len <= chain.size(); ++len) {
      const auto& st = chain[chain.size() - len];
      h = h * 0x9e3779b97f4a7c15ULL + step_hash(st);
      const SuffixKey key{h, len};
      if (auto it = memo.find(key); it != memo.end()) {
        cur = it->second;
        continue;
      }
      const double a = branch_inverse(map, st.branch, cur.lo + st.shift, inv_tol);
      const double b = branch_inverse(map, st.branch, cur.hi + st.shift, inv_tol);
      cur = {std::min(a, b), std::max(a, b)};
      memo.emplace(key, cur);
    }
    InducedBranch ib;
    ib.cylinder = cur;
    ib.return_time = chain.size();
    ib.marker = cur.midpoint();
    ib.chain = chain;
    // Endpoint certification, with the allowance scaled by the branch's
    // expansion (endpoint rounding is magnified by |(f^R)'|).
    for (double e : {cur.lo, cur.hi}) {
      const double img = induced_eval(map, ib, e);
      const double gain = std::exp(induced_log_deriv(map, ib, e));
      const double allow = tol + 64.0 * std::numeric_limits<double>::epsilon() * gain;
      if (std::min(std::abs(img - base.lo), std::abs(img - base.hi)) > allow) {
        throw Error(ErrorKind::ToleranceFailure,
                    "branch with R=" + std::to_string(ib.return_time) + " is not full within tolerance");
      }
    }
    s.branches.push_back(std::move(ib));
  }
  std::sort(s.branches.begin(), s.branches.end(),
            [](const InducedBranch& a, const InducedBranch& b) { return a.cylinder.lo < b.cylinder.lo; });
  return s;
}

LevelCounts::LevelCounts(Source source, std::vector<double> table, std::optional<Tail> tail, std::string label)
    : source_(source), table_(std::move(table)), tail_(tail), label_(std::move(label)) {
  for (double c : table_) {
    if (!(c >= 0.0) || c != std::floor(c)) {
      throw Error(ErrorKind::InvalidArgument, "level counts must be non-negative integers");
    }
  }
  if (tail_) {
    growth_rate_ = tail_->rate;
    growth_log_coeff_ = tail_->log_coeff;
    for (std::size_t n = 1; n <= table_.size(); ++n) {
      if (table_[n - 1] > 0.0) {
        growth_log_coeff_ = std::max(growth_log_coeff_, std::log(table_[n - 1]) - growth_rate_ * double(n));
      }
    }
  } else {
    growth_rate_ = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 1; n <= table_.size(); ++n) {
      if (table_[n - 1] > 0.0) growth_rate_ = std::max(growth_rate_, std::log(table_[n - 1]) / double(n));
    }
    growth_log_coeff_ = 0.0;
  }
}

double LevelCounts::count(std::size_t n) const {
  if (n == 0) return 0.0;
  if (n <= table_.size()) return table_[n - 1];
  if (!tail_) return 0.0;
  return std::exp(tail_->log_coeff + tail_->rate * static_cast<double>(n));
}

double LevelCounts::log_count(std::size_t n) const {
  if (n == 0) return -std::numeric_limits<double>::infinity();
  if (n <= table_.size()) {
    return table_[n - 1] > 0.0 ? std::log(table_[n - 1]) : -std::numeric_limits<double>::infinity();
  }
  if (!tail_) return -std::numeric_limits<double>::infinity();
  return tail_->log_coeff + tail_->rate * static_cast<double>(n);
}

std::size_t LevelCounts::min_level() const {
  for (std::size_t n = 1; n <= table_.size(); ++n) {
    if (table_[n - 1] > 0.0) return n;
  }
  if (tail_) return table_.size() + 1;
  return 0;
}

LevelCounts level_counts(const InducingScheme& s) {
  std::vector<double> table(s.complete_up_to, 0.0);
  for (const auto& b : s.branches) {
    if (b.return_time >= 1 && b.return_time <= s.complete_up_to) table[b.return_time - 1] += 1.0;
  }
  std::optional<LevelCounts::Tail> tail;
  if (!s.exhaustive) {
    double rate = 0.0;
    for (std::size_t n = 1; n <= table.size(); ++n) {
      if (table[n - 1] > 0.0) rate = std::max(rate, std::log(table[n - 1]) / double(n));
    }
    tail = LevelCounts::Tail{0.0, rate, false};
  }
  return LevelCounts(LevelCounts::Source::enumerated, std::move(table), tail, "enumerated:" + s.map_name);
}

LevelCounts analytic_counts(const std::string& kind, double param) {
  if (kind == "constant_one") {
    return LevelCounts(LevelCounts::Source::constant_one, {}, LevelCounts::Tail{0.0, 0.0, true}, kind);
  }
  if (kind == "two_at_one") {
    return LevelCounts(LevelCounts::Source::two_at_one, {2.0}, std::nullopt, kind);
  }
  if (kind == "gouezel") {
    if (!(param >= 1.0) || param != std::floor(param)) {
      throw Error(ErrorKind::InvalidArgument, "gouezel q must be an integer >= 1");
    }
    const double log4 = std::log(4.0);
    return LevelCounts(LevelCounts::Source::gouezel, {}, LevelCounts::Tail{param * log4, log4, true},
                       "gouezel(q=" + std::to_string(static_cast<long long>(param)) + ")");
  }
  throw Error(ErrorKind::UnknownGenerator, "unknown level-count generator '" + kind + "'");
}

LevelCounts table_counts(std::vector<double> table, std::string label) {
  return LevelCounts(LevelCounts::Source::user_table, std::move(table), std::nullopt, std::move(label));
}

CylinderRefinement refine(const InducingScheme& s, std::size_t ell) {
  if (ell == 0) throw Error(ErrorKind::InvalidArgument, "refinement order must be >= 1");
  const std::size_t k = s.branches.size();
  double total = 1.0;
  for (std::size_t i = 0; i < ell; ++i) total *= static_cast<double>(k);
  if (total > 5e7) throw Error(ErrorKind::OutOfRange, "refinement has too many cylinders");
  CylinderRefinement r;
  r.order = ell;
  if (k == 0) return r;
  r.cylinders.reserve(static_cast<std::size_t>(total));
  std::vector<std::size_t> word(ell, 0);
  while (true) {
    std::size_t rt = 0;
    for (auto w : word) rt += s.branches[w].return_time;
    r.cylinders.push_back({word, rt});
    std::size_t pos = ell;
    while (pos > 0 && ++word[pos - 1] == k) word[--pos] = 0;
    if (pos == 0) break;
  }
  return r;
}

std::vector<double> refined_level_counts(const CylinderRefinement& r) {
  std::vector<double> out;
  for (const auto& c : r.cylinders) {
    if (out.size() <= c.return_time) out.resize(c.return_time + 1, 0.0);
    out[c.return_time] += 1.0;
  }
  return out;
}

Interval cylinder_interval(const MapSpec& map, const InducingScheme& s, const std::vector<std::size_t>& word) {
  if (word.empty()) return s.base;
  Interval cur = s.branches.at(word.back()).cylinder;
  for (std::size_t i = word.size() - 1; i-- > 0;) {
    const auto& b = s.branches.at(word[i]);
    const double a = induced_inverse(map, s, b, cur.lo);
    const double c = induced_inverse(map, s, b, cur.hi);
    cur = {std::min(a, c), std::max(a, c)};
  }
  return cur;
}

}  // namespace eqstate
