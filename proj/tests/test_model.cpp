#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "wakeup/model.hpp"

namespace wakeup {
namespace {

std::vector<TransmissionDecision> tx(std::initializer_list<std::pair<std::uint32_t, std::uint32_t>> ds) {
  std::vector<TransmissionDecision> out;
  for (auto [u, beta] : ds) out.push_back({StationId{u}, ChannelId{beta}});
  return out;
}

const NetworkConfig kNet{8, 3, 0.0};

TEST(EvaluateRound, SingletonIsHeard) {
  const auto d = tx({{3, 1}});
  const auto out = evaluate_round(kNet, d, {});
  ASSERT_EQ(out.per_channel.size(), 3u);
  EXPECT_EQ(out.on(ChannelId{1}), ChannelFeedback::heard(StationId{3}));
  EXPECT_FALSE(out.on(ChannelId{2}).is_heard());
  EXPECT_FALSE(out.on(ChannelId{3}).is_heard());
}

TEST(EvaluateRound, CollisionIsNothing) {
  const auto d = tx({{2, 1}, {5, 1}});
  EXPECT_EQ(evaluate_round(kNet, d, {}).on(ChannelId{1}), ChannelFeedback::nothing());
}

TEST(EvaluateRound, JammedSingletonIsNothing) {
  const auto d = tx({{3, 1}});
  const std::vector<ChannelId> jammed{ChannelId{1}};
  const auto out = evaluate_round(kNet, d, jammed);
  EXPECT_FALSE(out.on(ChannelId{1}).is_heard());
  EXPECT_EQ(out.jammed_channels, jammed);
}

TEST(EvaluateRound, ChannelsResolveIndependently) {
  const auto d = tx({{2, 1}, {5, 1}, {7, 2}});
  const auto out = evaluate_round(kNet, d, {});
  EXPECT_FALSE(out.on(ChannelId{1}).is_heard());
  EXPECT_EQ(out.on(ChannelId{2}), ChannelFeedback::heard(StationId{7}));
}

TEST(EvaluateRound, DuplicateDecisionCountsOnce) {
  const auto d = tx({{4, 2}, {4, 2}});
  EXPECT_EQ(evaluate_round(kNet, d, {}).on(ChannelId{2}), ChannelFeedback::heard(StationId{4}));
}

TEST(EvaluateRound, RejectsOutOfRangeIds) {
  EXPECT_THROW(evaluate_round(kNet, tx({{9, 1}}), {}), InvalidInput);
  EXPECT_THROW(evaluate_round(kNet, tx({{0, 1}}), {}), InvalidInput);
  EXPECT_THROW(evaluate_round(kNet, tx({{1, 4}}), {}), InvalidInput);
  const std::vector<ChannelId> bad_jam{ChannelId{4}};
  EXPECT_THROW(evaluate_round(kNet, tx({}), bad_jam), InvalidInput);
}

// Permuting channel labels of the inputs permutes the outputs the same way.
TEST(EvaluateRound, ChannelRelabelingCommutes) {
  const NetworkConfig net{5, 3, 0.0};
  const std::uint32_t perm[3] = {3, 1, 2};  // channel c -> perm[c-1]
  SplitMix64 rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<TransmissionDecision> d, pd;
    std::vector<ChannelId> j, pj;
    for (std::uint32_t u = 1; u <= net.n; ++u) {
      for (std::uint32_t c = 1; c <= net.b; ++c) {
        if (rng.below(3) == 0) {
          d.push_back({StationId{u}, ChannelId{c}});
          pd.push_back({StationId{u}, ChannelId{perm[c - 1]}});
        }
      }
    }
    for (std::uint32_t c = 1; c <= net.b; ++c) {
      if (rng.below(4) == 0) {
        j.push_back(ChannelId{c});
        pj.push_back(ChannelId{perm[c - 1]});
      }
    }
    const auto a = evaluate_round(net, d, j);
    const auto b = evaluate_round(net, pd, pj);
    for (std::uint32_t c = 1; c <= net.b; ++c) {
      EXPECT_EQ(a.on(ChannelId{c}), b.on(ChannelId{perm[c - 1]}));
    }
  }
}

TEST(EvaluateRound, JammingNeverCreatesHeard) {
  const NetworkConfig net{4, 2, 0.0};
  SplitMix64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<TransmissionDecision> d;
    for (std::uint32_t u = 1; u <= net.n; ++u) {
      for (std::uint32_t c = 1; c <= net.b; ++c) {
        if (rng.below(2) == 0) d.push_back({StationId{u}, ChannelId{c}});
      }
    }
    const auto clear = evaluate_round(net, d, {});
    for (std::uint32_t c = 1; c <= net.b; ++c) {
      const std::vector<ChannelId> jam{ChannelId{c}};
      const auto jammed = evaluate_round(net, d, jam);
      for (std::uint32_t x = 1; x <= net.b; ++x) {
        if (!clear.on(ChannelId{x}).is_heard()) {
          EXPECT_FALSE(jammed.on(ChannelId{x}).is_heard());
        }
      }
    }
  }
}

TEST(EvaluateRound, SilenceAndCollisionAreIndistinguishable) {
  const NetworkConfig net{4, 1, 0.0};
  const auto silent = evaluate_round(net, tx({}), {});
  const auto collided = evaluate_round(net, tx({{1, 1}, {2, 1}}), {});
  EXPECT_EQ(silent.per_channel, collided.per_channel);
}

TEST(DrawJammedChannels, ZeroProbabilityNeverJams) {
  const NetworkConfig net{4, 8, 0.0};
  for (TimeStep t = 0; t < 1000; ++t) EXPECT_TRUE(draw_jammed_channels(net, t, 99).empty());
}

TEST(DrawJammedChannels, DeterministicPerSeedAndTime) {
  const NetworkConfig net{4, 8, 0.5};
  for (TimeStep t = 0; t < 100; ++t) {
    EXPECT_EQ(draw_jammed_channels(net, t, 17), draw_jammed_channels(net, t, 17));
  }
}

TEST(DrawJammedChannels, BernoulliFrequency) {
  const NetworkConfig net{4, 4, 0.5};
  constexpr int kDraws = 100000;
  std::vector<int> hits(net.b + 1, 0);
  for (TimeStep t = 0; t < kDraws; ++t) {
    for (ChannelId c : draw_jammed_channels(net, t, 2024)) ++hits[c.value];
  }
  const double sigma = std::sqrt(0.25 / kDraws);
  for (std::uint32_t c = 1; c <= net.b; ++c) {
    EXPECT_NEAR(hits[c] / static_cast<double>(kDraws), 0.5, 3 * sigma) << "channel " << c;
  }
}

TEST(DrawJammedChannels, NestedInProbability) {
  const NetworkConfig low{4, 6, 0.5};
  const NetworkConfig high{4, 6, 0.75};
  for (TimeStep t = 0; t < 2000; ++t) {
    const auto a = draw_jammed_channels(low, t, 3);
    const auto b = draw_jammed_channels(high, t, 3);
    EXPECT_TRUE(std::includes(b.begin(), b.end(), a.begin(), a.end()));
  }
}

TEST(IsWakeup, Cases) {
  const NetworkConfig net{8, 3, 0.0};
  EXPECT_FALSE(is_wakeup(evaluate_round(net, tx({}), {})));
  EXPECT_TRUE(is_wakeup(evaluate_round(net, tx({{7, 2}}), {})));
  const auto two = evaluate_round(net, tx({{1, 1}, {4, 3}}), {});
  EXPECT_TRUE(two.on(ChannelId{1}).is_heard());
  EXPECT_TRUE(two.on(ChannelId{3}).is_heard());
  EXPECT_TRUE(is_wakeup(two));
}

TEST(ActivationPattern, Validation) {
  EXPECT_THROW(ActivationPattern(std::map<StationId, TimeStep>{}), InvalidInput);
  EXPECT_THROW(ActivationPattern({{StationId{1}, 2}, {StationId{2}, 3}}), InvalidInput);
  EXPECT_THROW(ActivationPattern({{StationId{1}, -1}, {StationId{2}, 0}}), InvalidInput);
  const ActivationPattern ok({{StationId{1}, 0}, {StationId{4}, 3}});
  EXPECT_EQ(ok.active_at(2).size(), 1u);
  EXPECT_EQ(ok.active_at(3).size(), 2u);
  EXPECT_THROW(ok.validate_for(NetworkConfig{3, 1, 0.0}), InvalidInput);
}

TEST(ActivationPattern, AnchoringShiftsToZero) {
  const auto p = ActivationPattern::anchored({{StationId{2}, 5}, {StationId{3}, 7}});
  EXPECT_EQ(p.activation_of(StationId{2}), 0);
  EXPECT_EQ(p.activation_of(StationId{3}), 2);
}

TEST(NetworkConfig, Validation) {
  EXPECT_THROW((NetworkConfig{0, 1, 0.0}.validate()), InvalidInput);
  EXPECT_THROW((NetworkConfig{1, 0, 0.0}.validate()), InvalidInput);
  EXPECT_THROW((NetworkConfig{1, 1, 1.0}.validate()), InvalidInput);
  EXPECT_THROW((NetworkConfig{1, 1, -0.1}.validate()), InvalidInput);
  EXPECT_NO_THROW((NetworkConfig{1, 1, 0.99}.validate()));
}

}  // namespace
}  // namespace wakeup
