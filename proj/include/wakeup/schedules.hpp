#pragma once

// Transmission arrays T(u, beta, j) and the section geometry they are built on.
//
// A schedule of length phi(S + 1), S = ceil(lg n), is cut into stages by the
// boundaries gamma_i = phi(i + 1), gamma_0 = 0: local position j is in stage i
// iff gamma_{i-1} <= j < gamma_i. Stage 1 therefore also covers [0, phi(1)).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <variant>
#include <vector>

#include "wakeup/error.hpp"
#include "wakeup/model.hpp"
#include "wakeup/rng.hpp"

namespace wakeup {

enum class ArrayKind : std::uint8_t { kGeneral = 0, kModified = 1 };

inline const char* to_string(ArrayKind kind) noexcept {
  return kind == ArrayKind::kGeneral ? "general" : "modified";
}

/// Positive rational; the scaling constant c is stored this way so array files
/// round-trip exactly.
struct Rational {
  std::uint64_t num = 4;
  std::uint64_t den = 1;

  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }

  /// Nearest rational with denominator dividing 10^6.
  static Rational from_double(double x) {
    if (!(x > 0.0) || !std::isfinite(x) || x > 1e12) {
      throw InvalidInput("scaling constant must be a positive finite number");
    }
    constexpr std::uint64_t kScale = 1'000'000;
    auto num = static_cast<std::uint64_t>(std::llround(x * kScale));
    if (num == 0) throw InvalidInput("scaling constant too small");
    const std::uint64_t g = std::gcd(num, kScale);
    return Rational{num / g, kScale / g};
  }

  friend bool operator==(const Rational&, const Rational&) = default;
};

namespace detail {

// Ceiling that ignores floating noise just above an integer.
inline double ceil_tolerant(double x) { return std::ceil(x - 1e-9); }

}  // namespace detail

/// log2 n clamped to at least 1, so that n = 1 still yields a usable geometry.
inline double lg_n(std::uint32_t n) { return std::max(1.0, std::log2(static_cast<double>(n))); }

/// log2(128 * b * lg n), the channel-group width of modified arrays.
inline double channel_group_width(std::uint32_t n, std::uint32_t b) {
  return std::log2(128.0 * static_cast<double>(b) * lg_n(n));
}

/// True when b > log2(128 b lg n), i.e. there are enough channels for modified arrays.
inline bool is_n_large(std::uint32_t n, std::uint32_t b) {
  return static_cast<double>(b) > channel_group_width(n, b);
}

class SectionSchedule {
 public:
  static SectionSchedule general(std::uint32_t n, std::uint32_t b, Rational c = {}) {
    return SectionSchedule(ArrayKind::kGeneral, n, b, c);
  }

  static SectionSchedule modified(std::uint32_t n, std::uint32_t b, Rational c = {}) {
    return SectionSchedule(ArrayKind::kModified, n, b, c);
  }

  static SectionSchedule make(ArrayKind kind, std::uint32_t n, std::uint32_t b, Rational c = {}) {
    return SectionSchedule(kind, n, b, c);
  }

  ArrayKind kind() const noexcept { return kind_; }
  std::uint32_t n() const noexcept { return n_; }
  std::uint32_t b() const noexcept { return b_; }
  Rational c() const noexcept { return c_; }

  /// Number of stages, ceil(lg n) (at least 1).
  std::uint32_t stage_count() const noexcept { return stage_count_; }

  /// Channel modulus ceil(log2(128 b lg n)); meaningful for modified schedules.
  std::uint32_t channel_modulus() const noexcept { return modulus_; }

  /// phi(i) for 0 <= i <= stage_count() + 1.
  std::uint64_t phi(std::uint32_t i) const {
    if (i >= phi_.size()) {
      throw InvalidInput("phi index " + std::to_string(i) + " outside [0, " +
                         std::to_string(phi_.size() - 1) + "]");
    }
    return phi_[i];
  }

  /// gamma_i = phi(i + 1) for i >= 1, gamma_0 = 0.
  std::uint64_t gamma(std::uint32_t i) const {
    if (i == 0) return 0;
    if (i > stage_count_) {
      throw InvalidInput("gamma index " + std::to_string(i) + " beyond last stage");
    }
    return phi_[i + 1];
  }

  /// Full schedule length phi(stage_count() + 1).
  std::uint64_t length() const noexcept { return phi_.back(); }

  /// The unique stage i with gamma_{i-1} <= j < gamma_i.
  std::uint32_t stage_of_position(std::uint64_t j) const {
    if (j >= length()) {
      throw OutOfSchedule("position " + std::to_string(j) + " beyond schedule length " +
                          std::to_string(length()));
    }
    // gamma_i = phi_[i + 1]; find the first boundary strictly above j.
    auto it = std::upper_bound(phi_.begin() + 2, phi_.end(), j);
    return static_cast<std::uint32_t>(it - (phi_.begin() + 2)) + 1;
  }

  friend bool operator==(const SectionSchedule&, const SectionSchedule&) = default;

 private:
  SectionSchedule(ArrayKind kind, std::uint32_t n, std::uint32_t b, Rational c)
      : kind_(kind), n_(n), b_(b), c_(c) {
    if (n < 1 || b < 1) throw InvalidInput("schedule needs n >= 1 and b >= 1");
    if (c.num == 0 || c.den == 0 || c.value() < 1.0) {
      throw InvalidInput("scaling constant c must be >= 1");
    }
    if (kind == ArrayKind::kModified && !is_n_large(n, b)) {
      throw InvalidInput("modified schedules need b > log2(128 b lg n); b = " + std::to_string(b) +
                         ", n = " + std::to_string(n));
    }
    const double lg = lg_n(n);
    stage_count_ = static_cast<std::uint32_t>(std::max(1.0, detail::ceil_tolerant(std::log2(
                                                                 static_cast<double>(n)))));
    const double width = channel_group_width(n, b);
    modulus_ = static_cast<std::uint32_t>(detail::ceil_tolerant(width));

    phi_.assign(stage_count_ + 2, 0);
    for (std::uint32_t i = 1; i < phi_.size(); ++i) {
      const double two_i = std::ldexp(1.0, static_cast<int>(i));
      const double real =
          kind == ArrayKind::kGeneral
              ? c.value() * two_i * std::pow(static_cast<double>(i), 1.0 / b) * lg
              : c.value() * (two_i / b) * lg * width;
      // Ceiling can merge adjacent boundaries when sections are shorter than
      // one position; keep phi strictly increasing.
      phi_[i] = std::max(static_cast<std::uint64_t>(detail::ceil_tolerant(real)), phi_[i - 1] + 1);
    }
  }

  ArrayKind kind_;
  std::uint32_t n_;
  std::uint32_t b_;
  Rational c_;
  std::uint32_t stage_count_ = 1;
  std::uint32_t modulus_ = 1;
  std::vector<std::uint64_t> phi_;
};

struct BitProbability {
  double value = 0.0;
  bool clamped = false;  // the raw formula exceeded 1
};

namespace detail {

inline void check_stage_and_channel(const SectionSchedule& s, std::uint32_t stage, ChannelId beta) {
  if (stage < 1 || stage > s.stage_count()) {
    throw InvalidInput("stage " + std::to_string(stage) + " outside [1, " +
                       std::to_string(s.stage_count()) + "]");
  }
  if (beta.value < 1 || beta.value > s.b()) {
    throw InvalidInput("channel " + std::to_string(beta.value) + " outside [1, " +
                       std::to_string(s.b()) + "]");
  }
}

}  // namespace detail

/// 2^-i * i^(-beta/b) for regular (general-kind) arrays.
inline double regular_bit_probability(const SectionSchedule& s, std::uint32_t stage,
                                      ChannelId beta) {
  if (s.kind() != ArrayKind::kGeneral) {
    throw InvalidInput("regular bit probability needs a general schedule");
  }
  detail::check_stage_and_channel(s, stage, beta);
  const double i = stage;
  return std::ldexp(1.0, -static_cast<int>(stage)) *
         std::pow(i, -static_cast<double>(beta.value) / static_cast<double>(s.b()));
}

/// b * 2^(-i - beta*) with beta* = beta mod channel_modulus(), clamped to 1.
inline BitProbability modified_bit_probability(const SectionSchedule& s, std::uint32_t stage,
                                               ChannelId beta) {
  if (s.kind() != ArrayKind::kModified) {
    throw InvalidInput("modified bit probability needs a modified schedule");
  }
  detail::check_stage_and_channel(s, stage, beta);
  const std::uint32_t beta_star = beta.value % s.channel_modulus();
  const double raw =
      static_cast<double>(s.b()) * std::ldexp(1.0, -static_cast<int>(stage + beta_star));
  return raw > 1.0 ? BitProbability{1.0, true} : BitProbability{raw, false};
}

inline BitProbability bit_probability(const SectionSchedule& s, std::uint32_t stage,
                                      ChannelId beta) {
  if (s.kind() == ArrayKind::kGeneral) return {regular_bit_probability(s, stage, beta), false};
  return modified_bit_probability(s, stage, beta);
}

/// Transmission array: either explicit bits or bits derived on demand from a seed.
class TransmissionArray {
 public:
  struct Explicit {
    // Bit (u, beta, j) lives at index ((u-1) * b + (beta-1)) * length + j,
    // packed 8 per byte, least significant bit first.
    std::vector<std::uint8_t> bytes;
    friend bool operator==(const Explicit&, const Explicit&) = default;
  };
  struct Lazy {
    std::uint64_t seed = 0;
    friend bool operator==(const Lazy&, const Lazy&) = default;
  };

  /// All-zero explicit array of the given length (at most schedule.length()).
  static TransmissionArray zeros(const SectionSchedule& schedule, std::uint64_t length) {
    if (length > schedule.length()) {
      throw InvalidInput("array length " + std::to_string(length) + " exceeds schedule length " +
                         std::to_string(schedule.length()));
    }
    const std::uint64_t bits = std::uint64_t{schedule.n()} * schedule.b() * length;
    return TransmissionArray(schedule, length, Explicit{std::vector<std::uint8_t>((bits + 7) / 8)});
  }

  /// Randomized array whose bit at (u, beta, j) is a Bernoulli draw with the
  /// stage probability, keyed by (seed, u, beta, j).
  static TransmissionArray sampled(const SectionSchedule& schedule, std::uint64_t seed) {
    return TransmissionArray(schedule, schedule.length(), Lazy{seed});
  }

  /// Explicit array from rows: rows[u-1][beta-1] is a string of '0'/'1' of equal lengths.
  static TransmissionArray from_rows(const SectionSchedule& schedule,
                                     const std::vector<std::vector<std::string>>& rows) {
    if (rows.size() != schedule.n()) throw InvalidInput("need one row group per station");
    std::uint64_t length = 0;
    if (!rows.empty() && !rows.front().empty()) length = rows.front().front().size();
    auto out = zeros(schedule, length);
    for (std::uint32_t u = 1; u <= schedule.n(); ++u) {
      const auto& group = rows[u - 1];
      if (group.size() != schedule.b()) throw InvalidInput("need one row per channel");
      for (std::uint32_t beta = 1; beta <= schedule.b(); ++beta) {
        const auto& row = group[beta - 1];
        if (row.size() != length) throw InvalidInput("rows must have equal length");
        for (std::uint64_t j = 0; j < length; ++j) {
          if (row[j] != '0' && row[j] != '1') throw InvalidInput("rows may hold only 0 and 1");
          out.set(StationId{u}, ChannelId{beta}, j, row[j] == '1');
        }
      }
    }
    return out;
  }

  const SectionSchedule& schedule() const noexcept { return schedule_; }
  ArrayKind kind() const noexcept { return schedule_.kind(); }
  std::uint32_t n() const noexcept { return schedule_.n(); }
  std::uint32_t b() const noexcept { return schedule_.b(); }
  std::uint64_t length() const noexcept { return length_; }
  bool is_lazy() const noexcept { return std::holds_alternative<Lazy>(source_); }

  std::uint64_t seed() const {
    if (!is_lazy()) throw InvalidInput("explicit arrays carry no seed");
    return std::get<Lazy>(source_).seed;
  }

  const std::vector<std::uint8_t>& payload() const {
    if (is_lazy()) throw InvalidInput("lazy arrays carry no payload");
    return std::get<Explicit>(source_).bytes;
  }

  /// Probability table entry used for lazily derived bits at this position.
  BitProbability probability_at(ChannelId beta, std::uint64_t j) const {
    return bit_probability(schedule_, schedule_.stage_of_position(j), beta);
  }

  bool bit(StationId u, ChannelId beta, std::uint64_t j) const {
    check(u, beta);
    if (j >= length_) {
      throw OutOfSchedule("position " + std::to_string(j) + " beyond array length " +
                          std::to_string(length_));
    }
    return bit_unchecked(u, beta, j);
  }

  /// Bit lookup without range checks; callers guarantee valid coordinates.
  bool bit_unchecked(StationId u, ChannelId beta, std::uint64_t j) const {
    if (const auto* lazy = std::get_if<Lazy>(&source_)) {
      const double p = probability_table_[(schedule_.stage_of_position(j) - 1) * b() +
                                          (beta.value - 1)];
      return keyed_bernoulli(p, lazy->seed, {u.value, beta.value, j});
    }
    const std::uint64_t idx = index(u, beta, j);
    return (std::get<Explicit>(source_).bytes[idx >> 3] >> (idx & 7)) & 1U;
  }

  void set(StationId u, ChannelId beta, std::uint64_t j, bool value) {
    check(u, beta);
    if (j >= length_) throw OutOfSchedule("position beyond array length");
    auto* stored = std::get_if<Explicit>(&source_);
    if (stored == nullptr) throw InvalidInput("lazy arrays are immutable");
    const std::uint64_t idx = index(u, beta, j);
    const auto mask = static_cast<std::uint8_t>(1U << (idx & 7));
    if (value) {
      stored->bytes[idx >> 3] |= mask;
    } else {
      stored->bytes[idx >> 3] &= static_cast<std::uint8_t>(~mask);
    }
  }

  /// Explicit copy with identical bits at every position.
  TransmissionArray materialize() const {
    if (!is_lazy()) return *this;
    auto out = zeros(schedule_, length_);
    for (std::uint32_t u = 1; u <= n(); ++u) {
      for (std::uint32_t beta = 1; beta <= b(); ++beta) {
        for (std::uint64_t j = 0; j < length_; ++j) {
          if (bit_unchecked(StationId{u}, ChannelId{beta}, j)) {
            out.set(StationId{u}, ChannelId{beta}, j, true);
          }
        }
      }
    }
    return out;
  }

  /// Reassembles an explicit array from a raw payload (used by the file reader).
  static TransmissionArray from_payload(const SectionSchedule& schedule, std::uint64_t length,
                                        std::vector<std::uint8_t> bytes) {
    auto out = zeros(schedule, length);
    if (bytes.size() != std::get<Explicit>(out.source_).bytes.size()) {
      throw InvalidInput("payload size does not match array dimensions");
    }
    std::get<Explicit>(out.source_).bytes = std::move(bytes);
    return out;
  }

  friend bool operator==(const TransmissionArray& a, const TransmissionArray& b) {
    return a.schedule_ == b.schedule_ && a.length_ == b.length_ && a.source_ == b.source_;
  }

 private:
  TransmissionArray(const SectionSchedule& schedule, std::uint64_t length,
                    std::variant<Explicit, Lazy> source)
      : schedule_(schedule), length_(length), source_(std::move(source)) {
    if (is_lazy()) {
      probability_table_.resize(std::size_t{schedule_.stage_count()} * schedule_.b());
      for (std::uint32_t i = 1; i <= schedule_.stage_count(); ++i) {
        for (std::uint32_t beta = 1; beta <= schedule_.b(); ++beta) {
          probability_table_[(i - 1) * schedule_.b() + (beta - 1)] =
              bit_probability(schedule_, i, ChannelId{beta}).value;
        }
      }
    }
  }

  void check(StationId u, ChannelId beta) const {
    if (u.value < 1 || u.value > n()) throw InvalidInput("station outside array");
    if (beta.value < 1 || beta.value > b()) throw InvalidInput("channel outside array");
  }

  std::uint64_t index(StationId u, ChannelId beta, std::uint64_t j) const noexcept {
    return (std::uint64_t{u.value - 1} * b() + (beta.value - 1)) * length_ + j;
  }

  SectionSchedule schedule_;
  std::uint64_t length_;
  std::variant<Explicit, Lazy> source_;
  std::vector<double> probability_table_;
};

inline TransmissionArray sample_array(const SectionSchedule& schedule, std::uint64_t seed) {
  return TransmissionArray::sampled(schedule, seed);
}

}  // namespace wakeup
