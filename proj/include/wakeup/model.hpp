#pragma once

// Round semantics of a multi-channel single-hop radio network without
// collision detection: a channel delivers a message in a round iff exactly
// one station transmits on it and the channel is not jammed. Every station,
// active or passive, hears every delivered message.

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wakeup/error.hpp"
#include "wakeup/rng.hpp"

namespace wakeup {

/// Global time step, 0 at the first spontaneous activation.
using TimeStep = std::int64_t;

/// Station identifier in [1, n].
struct StationId {
  std::uint32_t value = 1;
  friend constexpr auto operator<=>(StationId, StationId) = default;
};

/// Channel identifier in [1, b].
struct ChannelId {
  std::uint32_t value = 1;
  friend constexpr auto operator<=>(ChannelId, ChannelId) = default;
};

struct NetworkConfig {
  std::uint32_t n = 1;
  std::uint32_t b = 1;
  double jam_prob = 0.0;

  void validate() const {
    if (n < 1) throw InvalidInput("network needs at least one station");
    if (b < 1) throw InvalidInput("network needs at least one channel");
    if (!(jam_prob >= 0.0 && jam_prob < 1.0)) {
      throw InvalidInput("jamming probability must lie in [0, 1)");
    }
  }

  void check(StationId u) const {
    if (u.value < 1 || u.value > n) {
      throw InvalidInput("station id " + std::to_string(u.value) + " outside [1, " +
                         std::to_string(n) + "]");
    }
  }

  void check(ChannelId beta) const {
    if (beta.value < 1 || beta.value > b) {
      throw InvalidInput("channel id " + std::to_string(beta.value) + " outside [1, " +
                         std::to_string(b) + "]");
    }
  }
};

/// Activation times chosen by the adversary. Global time is anchored so that
/// the earliest activation happens at step 0.
class ActivationPattern {
 public:
  ActivationPattern() = default;

  /// Validates: non-empty, all times >= 0, earliest time == 0.
  explicit ActivationPattern(std::map<StationId, TimeStep> activations)
      : activations_(std::move(activations)) {
    if (activations_.empty()) throw InvalidInput("activation pattern is empty");
    TimeStep earliest = activations_.begin()->second;
    for (const auto& [u, sigma] : activations_) {
      if (sigma < 0) throw InvalidInput("activation time must be non-negative");
      earliest = std::min(earliest, sigma);
    }
    if (earliest != 0) throw InvalidInput("earliest activation must be at step 0");
  }

  /// Shifts arbitrary activation times so that the earliest becomes 0.
  static ActivationPattern anchored(std::map<StationId, TimeStep> activations) {
    if (activations.empty()) throw InvalidInput("activation pattern is empty");
    TimeStep earliest = activations.begin()->second;
    for (const auto& entry : activations) earliest = std::min(earliest, entry.second);
    for (auto& entry : activations) entry.second -= earliest;
    return ActivationPattern(std::move(activations));
  }

  /// Every listed station activated at step 0.
  static ActivationPattern simultaneous(std::span<const StationId> stations) {
    std::map<StationId, TimeStep> m;
    for (StationId u : stations) m[u] = 0;
    return ActivationPattern(std::move(m));
  }

  const std::map<StationId, TimeStep>& activations() const noexcept { return activations_; }
  std::size_t size() const noexcept { return activations_.size(); }
  bool empty() const noexcept { return activations_.empty(); }

  std::optional<TimeStep> activation_of(StationId u) const {
    auto it = activations_.find(u);
    if (it == activations_.end()) return std::nullopt;
    return it->second;
  }

  TimeStep last_activation() const noexcept {
    TimeStep latest = 0;
    for (const auto& entry : activations_) latest = std::max(latest, entry.second);
    return latest;
  }

  /// W(t): stations with activation time <= t.
  std::vector<StationId> active_at(TimeStep t) const {
    std::vector<StationId> out;
    for (const auto& [u, sigma] : activations_) {
      if (sigma <= t) out.push_back(u);
    }
    return out;
  }

  void validate_for(const NetworkConfig& net) const {
    for (const auto& entry : activations_) net.check(entry.first);
  }

  friend bool operator==(const ActivationPattern&, const ActivationPattern&) = default;

 private:
  std::map<StationId, TimeStep> activations_;
};

struct TransmissionDecision {
  StationId station;
  ChannelId channel;
  friend constexpr auto operator<=>(const TransmissionDecision&,
                                    const TransmissionDecision&) = default;
};

/// What every station observes on one channel in one round. Silence, collision
/// and jamming all read as "nothing".
class ChannelFeedback {
 public:
  ChannelFeedback() = default;

  static ChannelFeedback heard(StationId source) { return ChannelFeedback(source); }
  static ChannelFeedback nothing() { return ChannelFeedback(); }

  bool is_heard() const noexcept { return source_.has_value(); }
  std::optional<StationId> source() const noexcept { return source_; }

  friend bool operator==(const ChannelFeedback&, const ChannelFeedback&) = default;

 private:
  explicit ChannelFeedback(StationId source) : source_(source) {}
  std::optional<StationId> source_;
};

struct RoundOutcome {
  TimeStep time = 0;
  std::vector<ChannelFeedback> per_channel;  // index beta - 1
  std::vector<ChannelId> jammed_channels;    // sorted

  const ChannelFeedback& on(ChannelId beta) const { return per_channel.at(beta.value - 1); }

  friend bool operator==(const RoundOutcome&, const RoundOutcome&) = default;
};

/// Resolves one round. Repeated (station, channel) pairs count once.
inline RoundOutcome evaluate_round(const NetworkConfig& net,
                                   std::span<const TransmissionDecision> decisions,
                                   std::span<const ChannelId> jammed, TimeStep time = 0) {
  constexpr std::uint32_t kNone = 0;
  constexpr std::uint32_t kCollided = ~std::uint32_t{0};

  // Per channel: kNone, a single transmitter id, or kCollided.
  std::vector<std::uint32_t> sender(net.b, kNone);
  for (const auto& d : decisions) {
    net.check(d.station);
    net.check(d.channel);
    auto& slot = sender[d.channel.value - 1];
    if (slot == kNone) {
      slot = d.station.value;
    } else if (slot != d.station.value) {
      slot = kCollided;
    }
  }

  RoundOutcome out;
  out.time = time;
  std::vector<bool> is_jammed(net.b, false);
  for (ChannelId beta : jammed) {
    net.check(beta);
    if (!is_jammed[beta.value - 1]) out.jammed_channels.push_back(beta);
    is_jammed[beta.value - 1] = true;
  }
  std::sort(out.jammed_channels.begin(), out.jammed_channels.end());

  out.per_channel.reserve(net.b);
  for (std::uint32_t i = 0; i < net.b; ++i) {
    const bool single = sender[i] != kNone && sender[i] != kCollided;
    out.per_channel.push_back(single && !is_jammed[i]
                                  ? ChannelFeedback::heard(StationId{sender[i]})
                                  : ChannelFeedback::nothing());
  }
  return out;
}

/// Jammed channels at `time`. Channel beta is jammed iff the keyed uniform
/// draw at (time, beta) falls below jam_prob, so for a fixed seed the jammed
/// set only grows as jam_prob grows.
inline std::vector<ChannelId> draw_jammed_channels(const NetworkConfig& net, TimeStep time,
                                                   std::uint64_t jam_seed) {
  std::vector<ChannelId> out;
  if (net.jam_prob <= 0.0) return out;
  for (std::uint32_t beta = 1; beta <= net.b; ++beta) {
    if (keyed_bernoulli(net.jam_prob, jam_seed,
                        {static_cast<std::uint64_t>(time), beta})) {
      out.push_back(ChannelId{beta});
    }
  }
  return out;
}

inline bool is_wakeup(const RoundOutcome& outcome) noexcept {
  return std::any_of(outcome.per_channel.begin(), outcome.per_channel.end(),
                     [](const ChannelFeedback& f) { return f.is_heard(); });
}

}  // namespace wakeup
