#pragma once

// Combinatorial diagnostics and exhaustive oracles for transmission arrays:
// stage census and Psi, balanced/light interval classification, isolated
// positions, selectivity, blocking activations, waking verification and the
// closed-form time bounds.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wakeup/error.hpp"
#include "wakeup/model.hpp"
#include "wakeup/schedules.hpp"

namespace wakeup {

// ---------------------------------------------------------------------------
// Stage census and Psi

struct StageCensus {
  TimeStep time = 0;
  std::map<std::uint32_t, std::uint64_t> counts;  // stage -> |W_i(time)|, zero entries omitted
  std::uint64_t total_active = 0;                 // |W(time)|
  std::uint64_t exhausted = 0;                    // active stations past their last position

  std::uint64_t at(std::uint32_t stage) const {
    auto it = counts.find(stage);
    return it == counts.end() ? 0 : it->second;
  }

  /// Census of the disjoint union of two station sets at the same time.
  friend StageCensus operator+(StageCensus a, const StageCensus& b) {
    for (const auto& [stage, count] : b.counts) a.counts[stage] += count;
    a.total_active += b.total_active;
    a.exhausted += b.exhausted;
    return a;
  }
};

inline StageCensus stage_census(const ActivationPattern& pattern, const SectionSchedule& schedule,
                                TimeStep time) {
  StageCensus census;
  census.time = time;
  for (const auto& [u, sigma] : pattern.activations()) {
    if (sigma > time) continue;
    ++census.total_active;
    const auto pos = static_cast<std::uint64_t>(time - sigma);
    if (pos >= schedule.length()) {
      ++census.exhausted;
    } else {
      ++census.counts[schedule.stage_of_position(pos)];
    }
  }
  return census;
}

/// ceil(log2 k) for k >= 1.
inline std::uint32_t ceil_log2(std::uint64_t k) {
  if (k < 1) throw InvalidInput("ceil_log2 needs k >= 1");
  return static_cast<std::uint32_t>(std::bit_width(k - 1));
}

/// Psi = sum over stages w = 1..ceil(log2 k_cap) of |W_w| / 2^w.
inline double psi(const StageCensus& census, std::uint64_t k_cap) {
  if (k_cap < 1) throw InvalidInput("psi needs k_cap >= 1");
  const std::uint32_t top = ceil_log2(k_cap);
  double sum = 0.0;
  for (const auto& [stage, count] : census.counts) {
    if (stage >= 1 && stage <= top) {
      sum += std::ldexp(static_cast<double>(count), -static_cast<int>(stage));
    }
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Balanced and light intervals

/// Upper limit on Psi in the light-interval condition: 128 * omega for
/// general arrays, 128 * lg n for arrays over n-many channels.
enum class PsiCeiling { kStage, kLogN };

struct IntervalClass {
  TimeStep t1 = 0;
  TimeStep t2 = 0;
  std::uint32_t omega = 1;
  bool size_ok = false;  // interval has the required number of steps
  bool balanced = false;
  bool light = false;
  std::uint64_t psi_steps = 0;  // steps with 1 <= Psi <= ceiling
  double psi_min = 0.0;
  double psi_max = 0.0;
};

/// phi(i) with phi(i) := 0 for i <= 0.
inline std::uint64_t phi_or_zero(const SectionSchedule& schedule, std::int64_t i) {
  return i <= 0 ? 0 : schedule.phi(static_cast<std::uint32_t>(i));
}

/// Classifies [t1, t2] against the omega-balanced and omega-light conditions.
/// The interval must span phi(omega - 1) steps (one step when omega = 1, where
/// phi(0) = 0); the light condition needs phi(omega - 2) steps with Psi in range.
inline IntervalClass classify_interval(const ActivationPattern& pattern,
                                       const SectionSchedule& schedule, TimeStep t1, TimeStep t2,
                                       std::uint32_t omega, std::uint64_t k_cap,
                                       PsiCeiling ceiling = PsiCeiling::kStage) {
  if (t1 > t2 || t1 < 0) throw InvalidInput("interval needs 0 <= t1 <= t2");
  const std::uint32_t top = ceil_log2(std::max<std::uint64_t>(k_cap, 1));
  if (omega < 1 || omega > top) {
    throw InvalidInput("omega " + std::to_string(omega) + " outside [1, " + std::to_string(top) +
                       "]");
  }
  if (omega > schedule.stage_count()) throw InvalidInput("omega beyond the schedule's stages");

  IntervalClass out;
  out.t1 = t1;
  out.t2 = t2;
  out.omega = omega;
  const std::uint64_t steps = static_cast<std::uint64_t>(t2 - t1) + 1;
  const std::uint64_t required = omega == 1 ? 1 : schedule.phi(omega - 1);
  out.size_ok = steps == required;

  const double lo = std::ldexp(1.0, static_cast<int>(omega));
  const double hi = std::ldexp(1.0, static_cast<int>(omega) + 2);
  const double union_cap = std::ldexp(1.0, static_cast<int>(omega) + 4);
  const double psi_cap = ceiling == PsiCeiling::kStage ? 128.0 * omega
                                                       : 128.0 * lg_n(schedule.n());

  bool every_step_balanced = true;
  bool union_ok = true;
  for (TimeStep j = t1; j <= t2; ++j) {
    const auto census = stage_census(pattern, schedule, j);
    const auto in_omega = static_cast<double>(census.at(omega));
    bool above_empty = census.exhausted == 0;
    std::uint64_t up_to_omega = 0;
    for (const auto& [stage, count] : census.counts) {
      if (stage > omega) above_empty = false;
      if (stage <= omega) up_to_omega += count;
    }
    if (!(lo <= in_omega && in_omega <= hi && above_empty)) every_step_balanced = false;
    if (static_cast<double>(up_to_omega) > union_cap) union_ok = false;

    const double value = psi(census, k_cap);
    if (j == t1) {
      out.psi_min = out.psi_max = value;
    } else {
      out.psi_min = std::min(out.psi_min, value);
      out.psi_max = std::max(out.psi_max, value);
    }
    if (1.0 <= value && value <= psi_cap) ++out.psi_steps;
  }

  out.balanced = out.size_ok && every_step_balanced;
  out.light = out.balanced && union_ok &&
              out.psi_steps >= phi_or_zero(schedule, static_cast<std::int64_t>(omega) - 2);
  return out;
}

// ---------------------------------------------------------------------------
// Isolated positions

struct IsolatedPosition {
  TimeStep time = 0;
  ChannelId channel;
  StationId station;
  friend constexpr auto operator<=>(const IsolatedPosition&, const IsolatedPosition&) = default;
};

namespace detail {

// Calls visit(position) for every isolated position with time <= horizon in
// (time, channel) order; stops as soon as visit returns false.
template <typename Visit>
void for_each_isolated(const TransmissionArray& array, const ActivationPattern& pattern,
                       TimeStep horizon, Visit&& visit) {
  const TimeStep end =
      std::min<TimeStep>(horizon, pattern.last_activation() +
                                      static_cast<TimeStep>(array.length()) - 1);
  std::vector<std::pair<StationId, TimeStep>> active;
  for (TimeStep t = 0; t <= end; ++t) {
    active.clear();
    for (const auto& [u, sigma] : pattern.activations()) {
      if (sigma <= t && static_cast<std::uint64_t>(t - sigma) < array.length()) {
        active.emplace_back(u, sigma);
      }
    }
    for (std::uint32_t beta = 1; beta <= array.b(); ++beta) {
      std::optional<StationId> only;
      int ones = 0;
      for (const auto& [u, sigma] : active) {
        if (array.bit_unchecked(u, ChannelId{beta}, static_cast<std::uint64_t>(t - sigma))) {
          only = u;
          if (++ones > 1) break;
        }
      }
      if (ones == 1 && !visit(IsolatedPosition{t, ChannelId{beta}, *only})) return;
    }
  }
}

}  // namespace detail

/// All (t, beta, v) with t <= horizon where v is the only active station whose
/// bit is 1, sorted by (t, beta).
inline std::vector<IsolatedPosition> scan_isolated(const TransmissionArray& array,
                                                   const ActivationPattern& pattern,
                                                   TimeStep horizon) {
  if (horizon < 0) throw InvalidInput("horizon must be non-negative");
  std::vector<IsolatedPosition> out;
  detail::for_each_isolated(array, pattern, horizon, [&](const IsolatedPosition& p) {
    out.push_back(p);
    return true;
  });
  return out;
}

inline std::optional<IsolatedPosition> first_isolated(const TransmissionArray& array,
                                                      const ActivationPattern& pattern,
                                                      TimeStep horizon) {
  if (horizon < 0) throw InvalidInput("horizon must be non-negative");
  std::optional<IsolatedPosition> out;
  detail::for_each_isolated(array, pattern, horizon, [&](const IsolatedPosition& p) {
    out = p;
    return false;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Queries, selectivity and blocking sets

/// Station set over [1, n] for n <= 32, bit u-1 set iff u is a member.
using StationMask = std::uint32_t;

inline StationMask mask_of(std::span<const std::uint32_t> members) {
  StationMask m = 0;
  for (std::uint32_t u : members) {
    if (u < 1 || u > 32) throw InvalidInput("station outside [1, 32]");
    m |= StationMask{1} << (u - 1);
  }
  return m;
}

inline std::vector<std::uint32_t> members_of(StationMask m) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t u = 1; m != 0; ++u, m >>= 1) {
    if (m & 1U) out.push_back(u);
  }
  return out;
}

/// Sequence of queries Q_1, Q_2, ...; query i assigns each channel beta the
/// set Q_{i,beta} of stations transmitting on it.
class QuerySequence {
 public:
  QuerySequence(std::uint32_t n, std::uint32_t b) : n_(n), b_(b) {
    if (n < 1 || n > 32) throw InvalidInput("query sequences support 1 <= n <= 32");
    if (b < 1) throw InvalidInput("query sequences need b >= 1");
  }

  /// One query per family member, all on channel 1.
  static QuerySequence single_channel(std::uint32_t n,
                                      const std::vector<std::vector<std::uint32_t>>& family) {
    QuerySequence q(n, 1);
    for (const auto& set : family) q.push({mask_of(set)});
    return q;
  }

  /// Queries induced by the first `steps` positions of an array under
  /// simultaneous activation.
  static QuerySequence from_array(const TransmissionArray& array, std::uint64_t steps) {
    QuerySequence q(array.n(), array.b());
    steps = std::min(steps, array.length());
    for (std::uint64_t j = 0; j < steps; ++j) {
      std::vector<StationMask> query(array.b(), 0);
      for (std::uint32_t u = 1; u <= array.n(); ++u) {
        for (std::uint32_t beta = 1; beta <= array.b(); ++beta) {
          if (array.bit_unchecked(StationId{u}, ChannelId{beta}, j)) {
            query[beta - 1] |= StationMask{1} << (u - 1);
          }
        }
      }
      q.push(std::move(query));
    }
    return q;
  }

  void push(std::vector<StationMask> per_channel) {
    if (per_channel.size() != b_) throw InvalidInput("query needs one set per channel");
    const StationMask universe = n_ == 32 ? ~StationMask{0} : (StationMask{1} << n_) - 1;
    for (StationMask m : per_channel) {
      if ((m & ~universe) != 0) throw InvalidInput("query names a station outside [1, n]");
    }
    queries_.push_back(std::move(per_channel));
  }

  /// Explicit array whose position j reproduces query j.
  TransmissionArray to_array(const SectionSchedule& schedule) const {
    if (schedule.n() != n_ || schedule.b() != b_) {
      throw InvalidInput("schedule dimensions differ from the query sequence");
    }
    auto array = TransmissionArray::zeros(schedule, size());
    for (std::uint64_t j = 0; j < size(); ++j) {
      for (std::uint32_t beta = 1; beta <= b_; ++beta) {
        for (std::uint32_t u : members_of(queries_[j][beta - 1])) {
          array.set(StationId{u}, ChannelId{beta}, j, true);
        }
      }
    }
    return array;
  }

  std::uint32_t n() const noexcept { return n_; }
  std::uint32_t b() const noexcept { return b_; }
  std::uint64_t size() const noexcept { return queries_.size(); }
  StationMask at(std::uint64_t step, ChannelId beta) const {
    return queries_.at(step).at(beta.value - 1);
  }

 private:
  std::uint32_t n_;
  std::uint32_t b_;
  std::vector<std::vector<StationMask>> queries_;
};

enum class SubsetMode { kExactlyK, kUpToK };

inline const char* to_string(SubsetMode mode) noexcept {
  return mode == SubsetMode::kExactlyK ? "exactly-k" : "up-to-k";
}

inline constexpr std::uint64_t kDefaultEnumerationBudget = 50'000'000;

namespace detail {

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline std::uint64_t subset_count(std::uint32_t n, std::uint32_t k, SubsetMode mode) {
  if (mode == SubsetMode::kExactlyK) return binomial(n, k);
  std::uint64_t total = 0;
  for (std::uint32_t s = 1; s <= k; ++s) total += binomial(n, s);
  return total;
}

inline void check_budget(std::uint64_t needed, std::uint64_t budget) {
  if (needed > budget) {
    throw BudgetExceeded("enumeration needs " + std::to_string(needed) +
                         " cases, budget is " + std::to_string(budget));
  }
}

// Visits every subset of [1, n] selected by (k, mode) as a mask: sizes in
// increasing order, each size in lexicographic order of the sorted members.
// Stops when visit returns false.
template <typename Visit>
void for_each_subset(std::uint32_t n, std::uint32_t k, SubsetMode mode, Visit&& visit) {
  const std::uint32_t first = mode == SubsetMode::kExactlyK ? k : 1;
  for (std::uint32_t size = first; size <= k && size <= n; ++size) {
    std::vector<std::uint32_t> idx(size);
    for (std::uint32_t i = 0; i < size; ++i) idx[i] = i;
    while (true) {
      StationMask m = 0;
      for (std::uint32_t i : idx) m |= StationMask{1} << i;
      if (!visit(m)) return;
      // advance to the next combination
      std::int64_t pos = static_cast<std::int64_t>(size) - 1;
      while (pos >= 0 && idx[pos] == n - size + static_cast<std::uint32_t>(pos)) --pos;
      if (pos < 0) break;
      ++idx[pos];
      for (auto i = static_cast<std::uint32_t>(pos) + 1; i < size; ++i) idx[i] = idx[i - 1] + 1;
    }
  }
}

}  // namespace detail

struct SelectivityVerdict {
  bool selective = false;
  std::optional<std::vector<std::uint32_t>> witness;  // a set no member hits in exactly one element
  std::uint64_t subsets_checked = 0;
};

/// Exhaustively checks that every k-subset (or every non-empty subset of size
/// at most k) of [n] meets some family member in exactly one element. The
/// returned witness is the first failing subset in enumeration order.
inline SelectivityVerdict check_selective(const std::vector<std::vector<std::uint32_t>>& family,
                                          std::uint32_t n, std::uint32_t k, SubsetMode mode,
                                          std::uint64_t budget = kDefaultEnumerationBudget) {
  if (n < 1 || n > 24) throw InvalidInput("selectivity oracle supports 1 <= n <= 24");
  if (k < 1 || k > n) throw InvalidInput("selectivity needs 1 <= k <= n");
  std::vector<StationMask> members;
  members.reserve(family.size());
  for (const auto& set : family) {
    for (std::uint32_t u : set) {
      if (u < 1 || u > n) throw InvalidInput("family member outside [1, n]");
    }
    members.push_back(mask_of(set));
  }
  detail::check_budget(detail::subset_count(n, k, mode), budget);

  SelectivityVerdict verdict;
  verdict.selective = true;
  detail::for_each_subset(n, k, mode, [&](StationMask a) {
    ++verdict.subsets_checked;
    const bool hit = std::any_of(members.begin(), members.end(),
                                 [a](StationMask m) { return std::popcount(a & m) == 1; });
    if (!hit) {
      verdict.selective = false;
      verdict.witness = members_of(a);
      return false;
    }
    return true;
  });
  return verdict;
}

struct BlockingResult {
  std::optional<std::vector<std::uint32_t>> blocking_set;  // none: no k-set blocks
  std::uint64_t subsets_checked = 0;
};

/// Searches for a k-set X that, activated together at step 0, is never heard
/// during the first t_limit queries: |X & Q_{i,beta}| != 1 for all i < t_limit
/// and all channels. Returns the lexicographically smallest such X.
inline BlockingResult find_blocking_activation(const QuerySequence& queries, std::uint32_t k,
                                               std::uint64_t t_limit,
                                               std::uint64_t budget = kDefaultEnumerationBudget) {
  const std::uint32_t n = queries.n();
  if (n > 24) throw InvalidInput("blocking search supports n <= 24");
  if (k < 1 || k > n) throw InvalidInput("blocking search needs 1 <= k <= n");
  detail::check_budget(detail::binomial(n, k), budget);

  const std::uint64_t steps = std::min(t_limit, queries.size());
  BlockingResult result;
  detail::for_each_subset(n, k, SubsetMode::kExactlyK, [&](StationMask x) {
    ++result.subsets_checked;
    for (std::uint64_t i = 0; i < steps; ++i) {
      for (std::uint32_t beta = 1; beta <= queries.b(); ++beta) {
        if (std::popcount(x & queries.at(i, ChannelId{beta})) == 1) return true;
      }
    }
    result.blocking_set = members_of(x);
    return false;
  });
  return result;
}

// ---------------------------------------------------------------------------
// Waking verification

struct SimultaneousFamily {};

/// Activation offsets in [0, window] (earliest offset 0) for each station of a subset.
struct StaggeredFamily {
  std::uint32_t window = 1;
};

using PatternFamily = std::variant<SimultaneousFamily, StaggeredFamily>;

struct WakingVerdict {
  bool verified = false;
  std::optional<ActivationPattern> counterexample;
  std::uint64_t patterns_checked = 0;
};

/// Checks that every activation pattern in the family has an isolated position
/// at some t <= horizon. Simultaneous families enumerate station subsets
/// (n <= 16); staggered families also enumerate per-station offsets (n <= 8,
/// window <= 3).
inline WakingVerdict verify_waking_small(const TransmissionArray& array, std::uint32_t k,
                                         TimeStep horizon, const PatternFamily& family,
                                         SubsetMode mode = SubsetMode::kUpToK,
                                         std::uint64_t budget = kDefaultEnumerationBudget) {
  const std::uint32_t n = array.n();
  if (k < 1 || k > n) throw InvalidInput("waking verification needs 1 <= k <= n");
  if (horizon < 0) throw InvalidInput("horizon must be non-negative");

  WakingVerdict verdict;
  verdict.verified = true;

  if (std::holds_alternative<SimultaneousFamily>(family)) {
    if (n > 16) throw InvalidInput("simultaneous verification supports n <= 16");
    detail::check_budget(detail::subset_count(n, k, mode), budget);
    detail::for_each_subset(n, k, mode, [&](StationMask x) {
      ++verdict.patterns_checked;
      std::map<StationId, TimeStep> m;
      for (std::uint32_t u : members_of(x)) m[StationId{u}] = 0;
      ActivationPattern pattern(std::move(m));
      if (!first_isolated(array, pattern, horizon)) {
        verdict.verified = false;
        verdict.counterexample = std::move(pattern);
        return false;
      }
      return true;
    });
    return verdict;
  }

  const std::uint32_t window = std::get<StaggeredFamily>(family).window;
  if (n > 8) throw InvalidInput("staggered verification supports n <= 8");
  if (window > 3) throw InvalidInput("staggered verification supports window <= 3");
  const std::uint64_t choices = window + 1;
  std::uint64_t needed = 0;
  for (std::uint32_t s = mode == SubsetMode::kExactlyK ? k : 1; s <= k; ++s) {
    std::uint64_t offsets = 1;
    for (std::uint32_t i = 0; i < s; ++i) offsets *= choices;
    needed += detail::binomial(n, s) * offsets;
  }
  detail::check_budget(needed, budget);

  detail::for_each_subset(n, k, mode, [&](StationMask x) {
    const auto stations = members_of(x);
    std::uint64_t combos = 1;
    for (std::size_t i = 0; i < stations.size(); ++i) combos *= choices;
    for (std::uint64_t code = 0; code < combos; ++code) {
      std::map<StationId, TimeStep> m;
      std::uint64_t rest = code;
      TimeStep earliest = static_cast<TimeStep>(window);
      for (std::uint32_t u : stations) {
        const auto offset = static_cast<TimeStep>(rest % choices);
        rest /= choices;
        m[StationId{u}] = offset;
        earliest = std::min(earliest, offset);
      }
      if (earliest != 0) continue;  // a shifted copy of an anchored pattern
      ++verdict.patterns_checked;
      ActivationPattern pattern(std::move(m));
      if (!first_isolated(array, pattern, horizon)) {
        verdict.verified = false;
        verdict.counterexample = std::move(pattern);
        return false;
      }
    }
    return true;
  });
  return verdict;
}

// ---------------------------------------------------------------------------
// Closed-form bounds

/// (k / 4b) lg(n / k) - (k + 1) / b; no deterministic oblivious protocol wakes
/// every network within this many steps. May be <= 0 (vacuous).
inline double deterministic_lower_bound(std::uint64_t n, std::uint64_t k, std::uint32_t b) {
  if (k < 1 || k > n) throw InvalidInput("lower bound needs 1 <= k <= n");
  if (b < 1) throw InvalidInput("lower bound needs b >= 1");
  const double kd = static_cast<double>(k);
  const double bd = b;
  return kd / (4.0 * bd) * std::log2(static_cast<double>(n) / kd) - (kd + 1.0) / bd;
}

/// Asymptotic upper bounds evaluated with unit constants. These are shape
/// values for comparing configurations, not guarantees.
struct UpperBoundShapes {
  double general = 0.0;                   // k lg n (lg k)^(1/b)
  std::optional<double> modified;         // (k/b) lg n lg(b lg n), only with n-many channels
  std::optional<double> general_jammed;   // general / lg(1/p), only for 0 < p < 1
  std::optional<double> modified_jammed;  // modified / lg(1/p)
};

inline UpperBoundShapes deterministic_upper_bounds(std::uint64_t n, std::uint64_t k,
                                                   std::uint32_t b, double p = 0.0) {
  if (n < 1 || k < 1 || k > n || b < 1) throw InvalidInput("upper bounds need 1 <= k <= n, b >= 1");
  if (!(p >= 0.0 && p < 1.0)) throw InvalidInput("jamming probability must lie in [0, 1)");
  const double kd = static_cast<double>(k);
  const double lgn = std::log2(static_cast<double>(n));
  UpperBoundShapes out;
  out.general = kd * lgn * std::pow(std::log2(kd), 1.0 / b);
  if (n <= 0xffffffffULL && is_n_large(static_cast<std::uint32_t>(n), b)) {
    out.modified = kd / b * lgn * std::log2(b * lgn);
  }
  if (p > 0.0) {
    const double factor = 1.0 / std::log2(1.0 / p);
    out.general_jammed = out.general * factor;
    if (out.modified) out.modified_jammed = *out.modified * factor;
  }
  return out;
}

}  // namespace wakeup
