// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wakeup/wakeup.hpp"

using namespace wakeup;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  std::printf("%s  %2d  %-34s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(),
              secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ActivationPattern simultaneous(std::uint32_t mask) {
  std::map<StationId, TimeStep> m;
  for (std::uint32_t u = 1; mask != 0; ++u, mask >>= 1) {
    if (mask & 1U) m[StationId{u}] = 0;
  }
  return ActivationPattern(std::move(m));
}

// ---------------------------------------------------------------------------

Outcome screening_exceedance() {
  std::string detail;
  bool ok = true;
  for (auto [b, lambda] : {std::pair{1U, 1043.0}, {2U, 131.0}}) {
    ExperimentSpec spec;
    spec.protocol = ProtocolKind::kScreening;
    spec.net = NetworkConfig{64, b, 0.0};
    spec.pattern = SimultaneousK{64};
    spec.trials = 2000;
    spec.base_seed = 1;
    spec.epsilon = 0.05;
    spec.overlays = {"screening"};
    const auto r = run_experiment(spec);
    const auto& e = r.exceedance.front();
    ok = ok && e.bound == lambda && e.rate <= 0.07;
    detail += fmt("b=%u lambda=%.0f rate=%.4f p95=%lld; ", b, e.bound, e.rate,
                  static_cast<long long>(r.quantiles.at("p95").value_or(-1)));
  }
  return {ok, detail + "limit 0.07"};
}

Outcome per_round_class_bound() {
  const NetworkConfig net{64, 2, 0.0};
  ScreeningConfig cfg{64, 2, 0.05};
  std::vector<StationId> active;
  for (std::uint32_t u = 1; u <= 8; ++u) active.push_back(StationId{u});
  constexpr int kRounds = 100000;
  int heard = 0;
  for (TimeStep t = 0; t < kRounds; ++t) {
    heard += screening_round(net, cfg, active, 42, t).outcome.on(ChannelId{1}).is_heard();
  }
  const double q = heard / static_cast<double>(kRounds);
  const double target = 1.0 / (2 * std::numbers::e * 8.0);
  const double floor = target - 3 * std::sqrt(q * (1 - q) / kRounds);
  return {q >= floor, fmt("q=%.5f floor=%.5f (1/(2e*8)=%.5f)", q, floor, target)};
}

Outcome channel_truth_table() {
  const NetworkConfig net{3, 2, 0.0};
  std::vector<TransmissionDecision> all;
  for (std::uint32_t u = 1; u <= 3; ++u)
    for (std::uint32_t c = 1; c <= 2; ++c) all.push_back({StationId{u}, ChannelId{c}});
  std::uint64_t cases = 0, mismatches = 0;
  // Every ordered selection of up to three decisions covers every multiset.
  std::function<void(std::vector<TransmissionDecision>&)> walk = [&](auto& chosen) {
    for (std::uint32_t jam = 0; jam < 4; ++jam) {
      std::vector<ChannelId> jammed;
      for (std::uint32_t c = 1; c <= 2; ++c)
        if (jam & (1U << (c - 1))) jammed.push_back(ChannelId{c});
      const auto out = evaluate_round(net, chosen, jammed);
      for (std::uint32_t c = 1; c <= 2; ++c) {
        std::uint32_t senders = 0;  // bitmask of stations on channel c
        for (const auto& d : chosen)
          if (d.channel.value == c) senders |= 1U << d.station.value;
        const bool heard = std::popcount(senders) == 1 && !(jam & (1U << (c - 1)));
        const auto& fb = out.on(ChannelId{c});
        const bool match = fb.is_heard() == heard &&
                           (!heard || fb.source()->value == static_cast<std::uint32_t>(std::countr_zero(senders)));
        ++cases;
        mismatches += !match;
      }
    }
    if (chosen.size() == 3) return;
    for (const auto& d : all) {
      chosen.push_back(d);
      walk(chosen);
      chosen.pop_back();
    }
  };
  std::vector<TransmissionDecision> chosen;
  walk(chosen);
  return {mismatches == 0, fmt("%llu channel cases, %llu mismatches",
                               static_cast<unsigned long long>(cases),
                               static_cast<unsigned long long>(mismatches))};
}

// Brute force over masks of [n]: is some set of size k missed by every member?
bool brute_selective(const std::vector<std::vector<std::uint32_t>>& f, std::uint32_t n,
                     std::uint32_t k) {
  for (std::uint32_t a = 0; a < (1U << n); ++a) {
    if (std::popcount(a) != static_cast<int>(k)) continue;
    bool hit = false;
    for (const auto& set : f) {
      std::uint32_t m = 0;
      for (auto u : set) m |= 1U << (u - 1);
      hit = hit || std::popcount(a & m) == 1;
    }
    if (!hit) return false;
  }
  return true;
}

Outcome selectivity_oracle() {
  std::vector<std::vector<std::uint32_t>> singletons;
  for (std::uint32_t u = 1; u <= 8; ++u) singletons.push_back({u});
  bool ok = true;
  for (std::uint32_t k = 1; k <= 8; ++k) {
    const bool got = check_selective(singletons, 8, k, SubsetMode::kExactlyK).selective;
    ok = ok && got && brute_selective(singletons, 8, k);
  }
  const std::vector<std::vector<std::uint32_t>> pairs{{1, 2}, {3, 4}, {5, 6}, {7, 8}};
  const auto v = check_selective(pairs, 8, 2, SubsetMode::kExactlyK);
  bool witness_ok = !v.selective && v.witness && v.witness->size() == 2;
  if (witness_ok) {
    const std::uint32_t w = (1U << ((*v.witness)[0] - 1)) | (1U << ((*v.witness)[1] - 1));
    for (const auto& set : pairs) {
      std::uint32_t m = 0;
      for (auto u : set) m |= 1U << (u - 1);
      witness_ok = witness_ok && std::popcount(w & m) != 1;
    }
  }
  ok = ok && witness_ok && !brute_selective(pairs, 8, 2);
  std::string w = "none";
  if (v.witness) w = fmt("{%u,%u}", (*v.witness)[0], (*v.witness)[1]);
  return {ok, "singletons selective for k=1..8; pairs witness " + w};
}

Outcome oracle_consistency() {
  SplitMix64 rng(2024);
  int agree = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::uint32_t>(rng.below(8) + 1);
    const auto b = static_cast<std::uint32_t>(rng.below(2) + 1);
    const std::uint64_t len = rng.below(16) + 1;
    auto a = TransmissionArray::zeros(SectionSchedule::general(n, b), len);
    for (std::uint32_t u = 1; u <= n; ++u)
      for (std::uint32_t c = 1; c <= b; ++c)
        for (std::uint64_t j = 0; j < len; ++j)
          if (rng.below(2)) a.set(StationId{u}, ChannelId{c}, j, true);
    auto mask = static_cast<std::uint32_t>(rng.below((1ULL << n) - 1) + 1);
    const auto p = simultaneous(mask);
    const auto h = static_cast<TimeStep>(rng.below(len + 2));
    const auto r = run_wakeup_array(NetworkConfig{n, b, 0.0}, p, a, 0);
    const bool woke = r.wakeup_time && *r.wakeup_time <= h;
    agree += woke == !scan_isolated(a, p, h).empty();
  }
  return {agree == 200, fmt("%d/200 instances agree", agree)};
}

// Samples arrays with seeds 1, 2, ... until every (stage, channel) cell has
// at least 10^4 draws, then compares each cell to its expected frequency.
Outcome bit_cells(const SectionSchedule& s, std::uint32_t max_stage,
                  const std::function<double(std::uint32_t, std::uint32_t)>& expected,
                  std::string& detail) {
  const std::uint32_t b = s.b();
  std::vector<std::uint64_t> ones(max_stage * b, 0), draws(max_stage * b, 0);
  const std::uint64_t end = s.gamma(max_stage);
  std::uint64_t seed = 0;
  while (*std::min_element(draws.begin(), draws.end()) < 10000) {
    const auto a = TransmissionArray::sampled(s, ++seed);
    for (std::uint32_t u = 1; u <= s.n(); ++u) {
      for (std::uint64_t j = 0; j < end; ++j) {
        const std::uint32_t i = s.stage_of_position(j);
        for (std::uint32_t c = 1; c <= b; ++c) {
          const std::size_t cell = (i - 1) * b + (c - 1);
          ++draws[cell];
          ones[cell] += a.bit(StationId{u}, ChannelId{c}, j);
        }
      }
    }
  }
  bool ok = true;
  double worst = 0.0;
  for (std::uint32_t i = 1; i <= max_stage; ++i) {
    for (std::uint32_t c = 1; c <= b; ++c) {
      const std::size_t cell = (i - 1) * b + (c - 1);
      const double p = expected(i, c);
      const double freq = static_cast<double>(ones[cell]) / static_cast<double>(draws[cell]);
      const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(draws[cell]));
      const double z = sigma > 0 ? std::abs(freq - p) / sigma : (freq == p ? 0.0 : 1e9);
      worst = std::max(worst, z);
      ok = ok && z <= 3.0;
    }
  }
  detail += fmt("%u cells from %llu arrays, max |z|=%.2f; ", max_stage * b,
                static_cast<unsigned long long>(seed), worst);
  return {ok, ""};
}

Outcome bit_distribution() {
  std::string detail = "regular ";
  const auto regular = SectionSchedule::general(64, 2, Rational{4, 1});
  const auto r = bit_cells(regular, 4, [](std::uint32_t i, std::uint32_t beta) {
    return std::pow(2.0, -static_cast<double>(i)) * std::pow(i, -static_cast<double>(beta) / 2.0);
  }, detail);
  detail += "modified ";
  const auto modified = SectionSchedule::modified(16, 16, Rational{4, 1});
  // log2(128 * 16 * lg 16) = 13
  const auto m = bit_cells(modified, modified.stage_count(), [](std::uint32_t i, std::uint32_t beta) {
    return std::min(1.0, 16.0 * std::pow(2.0, -static_cast<double>(i + beta % 13)));
  }, detail);
  return {r.pass && m.pass, detail};
}

std::optional<TransmissionArray> verified_array;

Outcome generate_and_verify_arrays() {
  GenerateParams params;
  params.kind = ArrayKind::kGeneral;
  params.n = 16;
  params.b = 2;
  params.c = Rational{4, 1};
  const auto g = generate_and_verify(params, 4, 50, 7);
  if (g.array) verified_array = g.array;
  return {!g.exhausted(),
          fmt("horizon=%lld passes=%llu/%llu fraction=%.2f first=%llu",
              static_cast<long long>(g.horizon), static_cast<unsigned long long>(g.passes),
              static_cast<unsigned long long>(g.attempts), g.pass_fraction(),
              static_cast<unsigned long long>(g.first_pass.value_or(0)))};
}

Outcome jamming_robustness() {
  if (!verified_array) return {false, "no verified array from generate-and-verify"};
  const std::string path = (std::filesystem::temp_directory_path() / "wakeup_accept.arr").string();
  save_array(*verified_array, path);
  ExperimentSpec spec;
  spec.protocol = ProtocolKind::kArrayGeneral;
  spec.net = NetworkConfig{16, 2, 0.0};
  spec.pattern = SimultaneousK{4};
  spec.trials = 1000;
  spec.base_seed = 11;
  spec.array.file = path;
  const auto sweep = jamming_sweep(spec, {0.0, 0.5, 0.75});
  std::filesystem::remove(path);

  const auto base95 = sweep.baseline.quantiles.at("p95");
  if (!base95) return {false, "no p=0 trial woke up"};
  const TimeStep limit = 4 * *base95;
  std::uint64_t within = 0;
  for (const auto& t : sweep.rows[1].report.trials) within += t.wakeup_time && *t.wakeup_time <= limit;
  const double frac = static_cast<double>(within) / 1000.0;

  std::vector<TimeStep> p95;
  bool monotone = true;
  for (const auto& row : sweep.rows) {
    const auto q = row.report.quantiles.at("p95");
    // A missing p95 means over 5% of trials never woke: treat as +infinity.
    p95.push_back(q.value_or(std::numeric_limits<TimeStep>::max()));
    if (p95.size() > 1) monotone = monotone && p95[p95.size() - 2] <= p95.back();
  }
  return {frac >= 0.95 && monotone,
          fmt("p95 at p=0,0.5,0.75: %lld,%lld,%lld; within 4*p95 at p=0.5: %.3f",
              static_cast<long long>(p95[0]), static_cast<long long>(p95[1]),
              static_cast<long long>(p95[2]), frac)};
}

Outcome bound_calculators() {
  const double lower = deterministic_lower_bound(1 << 20, 16, 1);
  const auto lambda = screening_round_bound(16, 4, std::exp(-1.0));
  const bool suppressed = !deterministic_upper_bounds(1 << 20, 16, 2).modified;
  const bool present = deterministic_upper_bounds(16, 16, 16).modified.has_value();
  return {lower == 47.0 && lambda == 11 && suppressed && present,
          fmt("lower=%.2f lambda=%lld modified shape: b=2,n=2^20 %s; b=16,n=16 %s", lower,
              static_cast<long long>(lambda), suppressed ? "suppressed" : "present",
              present ? "present" : "suppressed")};
}

std::string read_all(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome bench_determinism() {
  const auto dir = std::filesystem::temp_directory_path() / "wakeup_accept_bench";
  std::filesystem::create_directories(dir);
  std::vector<ExperimentSpec> specs(2);
  specs[0].protocol = ProtocolKind::kScreening;
  specs[0].net = NetworkConfig{256, 2, 0.25};
  specs[0].pattern = Staggered{40, 16};
  specs[0].overlays = {"screening", "lower"};
  specs[1].protocol = ProtocolKind::kArrayGeneral;
  specs[1].net = NetworkConfig{64, 2, 0.5};
  specs[1].pattern = Staggered{30, 8};
  specs[1].array.seed = 3;
  specs[1].overlays = {"general"};
  bool ok = true;
  std::uint64_t bytes = 0;
  for (auto& spec : specs) {
    spec.trials = 500;
    spec.base_seed = 99;
    std::vector<std::string> runs;
    for (unsigned threads : {1U, 4U}) {
      spec.threads = threads;
      spec.csv_path = (dir / "run.csv").string();
      spec.json_path = (dir / "run.json").string();
      run_experiment(spec);
      runs.push_back(read_all(*spec.csv_path) + '\0' + read_all(*spec.json_path));
    }
    ok = ok && runs[0] == runs[1] && runs[0].size() > 1;
    bytes += runs[0].size();
  }
  std::filesystem::remove_all(dir);
  return {ok, fmt("2 specs x 2 runs, %llu bytes compared", static_cast<unsigned long long>(bytes))};
}

Outcome blocking_search() {
  std::vector<std::vector<std::uint32_t>> everyone(6, {1, 2, 3, 4, 5, 6}), robin;
  for (std::uint32_t u = 1; u <= 6; ++u) robin.push_back({u});
  const auto a = find_blocking_activation(QuerySequence::single_channel(6, everyone), 2, 6);
  const auto r = find_blocking_activation(QuerySequence::single_channel(6, robin), 2, 6);
  std::string w = "none";
  if (a.blocking_set) w = fmt("{%u,%u}", (*a.blocking_set)[0], (*a.blocking_set)[1]);
  return {a.blocking_set.has_value() && !r.blocking_set.has_value(),
          "always-transmit witness " + w + "; round-robin " +
              (r.blocking_set ? "found a set" : "none exists")};
}

}  // namespace

int main() {
  report(1, "screening explicit bound", screening_exceedance);
  report(2, "per-round class bound", per_round_class_bound);
  report(3, "channel truth table", channel_truth_table);
  report(4, "selectivity oracle", selectivity_oracle);
  report(5, "scan/simulation consistency", oracle_consistency);
  report(6, "bit distribution", bit_distribution);
  report(7, "generate and verify", generate_and_verify_arrays);
  report(8, "jamming robustness", jamming_robustness);
  report(9, "bound calculators", bound_calculators);
  report(10, "bench determinism", bench_determinism);
  report(11, "blocking-set search", blocking_search);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
