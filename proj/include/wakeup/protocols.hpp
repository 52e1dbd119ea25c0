#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "wakeup/error.hpp"
#include "wakeup/model.hpp"
#include "wakeup/rng.hpp"
#include "wakeup/schedules.hpp"

namespace wakeup {

/// ceil(2e * k^(1/b) * ln(1/epsilon)): rounds after which Channel-Screening
/// has failed with probability at most epsilon.
inline std::uint64_t screening_round_bound(std::uint32_t k, std::uint32_t b, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidInput("epsilon must lie in (0, 1)");
  if (k < 1 || b < 1) throw InvalidInput("need k >= 1 and b >= 1");
  const double lambda = 2.0 * std::numbers::e * std::pow(static_cast<double>(k), 1.0 / b) *
                        std::log(1.0 / epsilon);
  return static_cast<std::uint64_t>(std::ceil(lambda));
}

struct ScreeningConfig {
  std::uint32_t k = 1;
  std::uint32_t b = 1;
  double epsilon = 0.05;
  std::optional<TimeStep> t_max{};  // unset: 64 * screening_round_bound(k, b, epsilon)

  TimeStep effective_t_max() const {
    if (t_max) return *t_max;
    return static_cast<TimeStep>(64 * screening_round_bound(k, b, epsilon));
  }

  void validate() const {
    if (k < 1) throw InvalidInput("screening needs k >= 1");
    if (b < 1) throw InvalidInput("screening needs b >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidInput("epsilon must lie in (0, 1)");
    if (t_max && *t_max <= 0) throw InvalidInput("t_max must be positive");
  }
};

/// k^(-beta/b), the per-round transmission probability on channel beta.
inline double screening_probability(std::uint32_t k, std::uint32_t b, ChannelId beta) {
  return std::pow(static_cast<double>(k), -static_cast<double>(beta.value) / b);
}

struct TraceRound {
  RoundOutcome outcome;
  std::vector<TransmissionDecision> decisions;  // sorted by (station, channel)
};

struct SimulationResult {
  std::optional<TimeStep> wakeup_time;
  std::optional<std::vector<TraceRound>> trace;  // present when requested
  std::uint64_t rounds_executed = 0;
  std::uint64_t rng_seed = 0;
  bool truncated = false;
};

struct RunOptions {
  bool record_trace = false;
};

/// Decisions of the active stations in one Channel-Screening round. Station
/// u's draw on channel beta at step t is keyed by (protocol seed, u, t, beta),
/// so adding channels or stations never perturbs other draws.
inline std::vector<TransmissionDecision> screening_decisions(const ScreeningConfig& cfg,
                                                             std::span<const StationId> active,
                                                             std::uint64_t seed, TimeStep t) {
  const std::uint64_t stream = substream(seed, StreamTag::kProtocol);
  std::vector<TransmissionDecision> out;
  for (StationId u : active) {
    for (std::uint32_t beta = 1; beta <= cfg.b; ++beta) {
      const double p = screening_probability(cfg.k, cfg.b, ChannelId{beta});
      if (keyed_bernoulli(p, stream, {u.value, static_cast<std::uint64_t>(t), beta})) {
        out.push_back({u, ChannelId{beta}});
      }
    }
  }
  return out;
}

/// One Channel-Screening round at step t for a given active set, with jamming.
inline TraceRound screening_round(const NetworkConfig& net, const ScreeningConfig& cfg,
                                  std::span<const StationId> active, std::uint64_t seed,
                                  TimeStep t) {
  TraceRound round;
  round.decisions = screening_decisions(cfg, active, seed, t);
  const auto jammed = draw_jammed_channels(net, t, substream(seed, StreamTag::kJamming));
  round.outcome = evaluate_round(net, round.decisions, jammed, t);
  return round;
}

namespace detail {

inline bool finish_round(SimulationResult& result, TraceRound round, const RunOptions& opts) {
  ++result.rounds_executed;
  const bool heard = is_wakeup(round.outcome);
  if (heard) result.wakeup_time = round.outcome.time;
  if (opts.record_trace) result.trace->push_back(std::move(round));
  return heard;
}

}  // namespace detail

/// Randomized Channel-Screening: every active station transmits on each
/// channel beta with probability k^(-beta/b) until a message is heard.
inline SimulationResult run_channel_screening(const NetworkConfig& net,
                                              const ActivationPattern& pattern,
                                              const ScreeningConfig& cfg, std::uint64_t seed,
                                              const RunOptions& opts = {}) {
  net.validate();
  cfg.validate();
  if (cfg.b != net.b) throw InvalidInput("screening channel count differs from the network's");
  pattern.validate_for(net);

  SimulationResult result;
  result.rng_seed = seed;
  if (opts.record_trace) result.trace.emplace();

  const TimeStep t_max = cfg.effective_t_max();
  for (TimeStep t = 0; t < t_max; ++t) {
    const auto active = pattern.active_at(t);
    if (detail::finish_round(result, screening_round(net, cfg, active, seed, t), opts)) {
      return result;
    }
  }
  result.truncated = true;
  return result;
}

/// Decisions of the active stations at step t when following `array`:
/// u transmits on beta iff T(u, beta, t - sigma_u) = 1 while t - sigma_u < length.
inline std::vector<TransmissionDecision> array_decisions(const TransmissionArray& array,
                                                         const ActivationPattern& pattern,
                                                         TimeStep t) {
  std::vector<TransmissionDecision> out;
  for (const auto& [u, sigma] : pattern.activations()) {
    if (sigma > t) continue;
    const auto pos = static_cast<std::uint64_t>(t - sigma);
    if (pos >= array.length()) continue;
    for (std::uint32_t beta = 1; beta <= array.b(); ++beta) {
      if (array.bit_unchecked(u, ChannelId{beta}, pos)) out.push_back({u, ChannelId{beta}});
    }
  }
  return out;
}

/// Generic oblivious Wake-Up(T). Stations fall silent once their schedule is
/// exhausted; the run is truncated when every station is silent for good.
inline SimulationResult run_wakeup_array(const NetworkConfig& net, const ActivationPattern& pattern,
                                         const TransmissionArray& array, std::uint64_t seed,
                                         const RunOptions& opts = {}) {
  net.validate();
  if (array.n() != net.n || array.b() != net.b) {
    throw InvalidInput("array dimensions do not match the network");
  }
  pattern.validate_for(net);

  SimulationResult result;
  result.rng_seed = seed;
  if (opts.record_trace) result.trace.emplace();

  const std::uint64_t jam_seed = substream(seed, StreamTag::kJamming);
  const TimeStep end = pattern.last_activation() + static_cast<TimeStep>(array.length());
  for (TimeStep t = 0; t < end; ++t) {
    TraceRound round;
    round.decisions = array_decisions(array, pattern, t);
    const auto jammed = draw_jammed_channels(net, t, jam_seed);
    round.outcome = evaluate_round(net, round.decisions, jammed, t);
    if (detail::finish_round(result, std::move(round), opts)) return result;
  }
  result.truncated = true;
  return result;
}

}  // namespace wakeup
