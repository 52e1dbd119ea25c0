#pragma once

// Monte Carlo experiment orchestration: per-trial seed derivation, pattern
// generation, batch execution, statistics and CSV/JSON reporting.
//
// Seeding: trial i of an experiment with base seed s runs with seed
// mix64(s + (i + 1) * 0x9e3779b97f4a7c15), a bijection of the odd-stride
// counter, so trial seeds are pairwise distinct. Each trial seed is split
// into tagged sub-streams for the activation pattern, the protocol's coin
// flips and the jamming draws; changing the jamming probability never changes
// the pattern or the protocol draws.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "wakeup/analysis.hpp"
#include "wakeup/array_io.hpp"
#include "wakeup/error.hpp"
#include "wakeup/model.hpp"
#include "wakeup/protocols.hpp"
#include "wakeup/rng.hpp"
#include "wakeup/schedules.hpp"

namespace wakeup {

using Json = nlohmann::ordered_json;

inline std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t index) noexcept {
  return mix64(base_seed + (index + 1) * 0x9e3779b97f4a7c15ULL);
}

enum class ProtocolKind { kScreening, kArrayGeneral, kArrayModified };

inline const char* to_string(ProtocolKind p) noexcept {
  switch (p) {
    case ProtocolKind::kScreening: return "screening";
    case ProtocolKind::kArrayGeneral: return "array-general";
    case ProtocolKind::kArrayModified: return "array-modified";
  }
  return "?";
}

/// k stations chosen uniformly at random, all activated at step 0.
struct SimultaneousK {
  std::uint32_t k = 1;
};

/// k random stations with activation offsets uniform in [0, window], anchored at 0.
struct Staggered {
  std::uint32_t window = 0;
  std::uint32_t k = 1;
};

struct ExplicitPattern {
  ActivationPattern pattern;
};

using PatternGenerator = std::variant<SimultaneousK, Staggered, ExplicitPattern>;

inline std::uint32_t pattern_size(const PatternGenerator& gen) {
  if (const auto* s = std::get_if<SimultaneousK>(&gen)) return s->k;
  if (const auto* s = std::get_if<Staggered>(&gen)) return s->k;
  return static_cast<std::uint32_t>(std::get<ExplicitPattern>(gen).pattern.size());
}

inline ActivationPattern generate_pattern(const PatternGenerator& gen, std::uint32_t n,
                                          std::uint64_t seed) {
  if (const auto* e = std::get_if<ExplicitPattern>(&gen)) return e->pattern;

  const std::uint32_t k = pattern_size(gen);
  if (k < 1 || k > n) throw InvalidInput("pattern size must lie in [1, n]");
  SplitMix64 rng(substream(seed, StreamTag::kPattern));
  // Partial Fisher-Yates over station ids.
  std::vector<std::uint32_t> ids(n);
  for (std::uint32_t i = 0; i < n; ++i) ids[i] = i + 1;
  for (std::uint32_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::uint32_t>(rng.below(n - i));
    std::swap(ids[i], ids[j]);
  }
  std::map<StationId, TimeStep> m;
  const std::uint32_t window = std::holds_alternative<Staggered>(gen)
                                   ? std::get<Staggered>(gen).window
                                   : 0;
  for (std::uint32_t i = 0; i < k; ++i) {
    m[StationId{ids[i]}] = static_cast<TimeStep>(window == 0 ? 0 : rng.below(window + 1ULL));
  }
  return ActivationPattern::anchored(std::move(m));
}

/// Where an array experiment takes its transmission array from.
struct ArraySource {
  Rational c{4, 1};
  std::optional<std::uint64_t> seed;  // sample with this seed
  std::optional<std::string> file;    // or load from an array file
};

struct ExperimentSpec {
  ProtocolKind protocol = ProtocolKind::kScreening;
  NetworkConfig net;
  PatternGenerator pattern = SimultaneousK{1};
  std::uint64_t trials = 1;
  std::uint64_t base_seed = 0;
  std::optional<TimeStep> t_max;
  // Channel-Screening parameters; k defaults to the pattern size.
  std::optional<std::uint32_t> screening_k;
  double epsilon = 0.05;
  ArraySource array;
  // Overlay bound names: "screening", "lower", "general", "modified".
  std::vector<std::string> overlays;
  std::optional<std::string> csv_path;
  std::optional<std::string> json_path;
  unsigned threads = 0;  // 0: hardware concurrency; results do not depend on it

  void validate() const {
    net.validate();
    if (trials < 1) throw InvalidInput("an experiment needs at least one trial");
    if (pattern_size(pattern) < 1 || pattern_size(pattern) > net.n) {
      throw InvalidInput("pattern size must lie in [1, n]");
    }
    if (const auto* e = std::get_if<ExplicitPattern>(&pattern)) e->pattern.validate_for(net);
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidInput("epsilon must lie in (0, 1)");
    if (t_max && *t_max <= 0) throw InvalidInput("t_max must be positive");
    for (const auto& o : overlays) {
      if (o != "screening" && o != "lower" && o != "general" && o != "modified") {
        throw InvalidInput("unknown overlay '" + o + "'");
      }
    }
  }

  std::uint32_t k() const { return screening_k.value_or(pattern_size(pattern)); }
};

struct TrialRecord {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  std::optional<TimeStep> wakeup_time;
  bool truncated = false;
  std::uint64_t rounds = 0;
};

struct Exceedance {
  std::string overlay;
  double bound = 0.0;
  double rate = 0.0;  // fraction of all trials with wakeup_time >= bound or truncated
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<TrialRecord> trials;
  std::map<std::string, std::optional<TimeStep>> quantiles;  // "p50", "p90", "p95", "p99"
  std::vector<Exceedance> exceedance;
  std::uint64_t completed = 0;
  std::uint64_t truncations = 0;
  double wall_clock_seconds = 0.0;  // not part of the written outputs
};

/// Nearest-rank quantile of sorted values: the ceil(q * N)-th smallest.
inline std::optional<TimeStep> nearest_rank(const std::vector<TimeStep>& sorted, double q) {
  if (sorted.empty()) return std::nullopt;
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(sorted.size())));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

inline double overlay_value(const ExperimentSpec& spec, const std::string& name) {
  const std::uint32_t k = spec.k();
  if (name == "screening") return static_cast<double>(screening_round_bound(k, spec.net.b, spec.epsilon));
  if (name == "lower") return deterministic_lower_bound(spec.net.n, k, spec.net.b);
  const auto shapes = deterministic_upper_bounds(spec.net.n, k, spec.net.b, spec.net.jam_prob);
  if (name == "general") return shapes.general_jammed.value_or(shapes.general);
  if (name == "modified") {
    if (!shapes.modified) throw InvalidInput("modified overlay needs b > log2(128 b lg n)");
    return shapes.modified_jammed.value_or(*shapes.modified);
  }
  throw InvalidInput("unknown overlay '" + name + "'");
}

/// Resolves the transmission array of an array experiment.
inline TransmissionArray experiment_array(const ExperimentSpec& spec) {
  const ArrayKind kind = spec.protocol == ProtocolKind::kArrayModified ? ArrayKind::kModified
                                                                      : ArrayKind::kGeneral;
  if (spec.array.file) {
    auto array = load_array(*spec.array.file);
    if (array.kind() != kind) throw InvalidInput("array file kind does not match the protocol");
    return array;
  }
  const auto schedule = SectionSchedule::make(kind, spec.net.n, spec.net.b, spec.array.c);
  return sample_array(schedule, spec.array.seed.value_or(
                                    substream(spec.base_seed, StreamTag::kArray)));
}

inline TrialRecord run_trial(const ExperimentSpec& spec, const TransmissionArray* array,
                             std::uint64_t index) {
  TrialRecord rec;
  rec.trial = index;
  rec.seed = trial_seed(spec.base_seed, index);
  const auto pattern = generate_pattern(spec.pattern, spec.net.n, rec.seed);
  SimulationResult result;
  if (spec.protocol == ProtocolKind::kScreening) {
    ScreeningConfig cfg{spec.k(), spec.net.b, spec.epsilon, spec.t_max};
    result = run_channel_screening(spec.net, pattern, cfg, rec.seed);
  } else {
    result = run_wakeup_array(spec.net, pattern, *array, rec.seed);
  }
  rec.wakeup_time = result.wakeup_time;
  rec.truncated = result.truncated;
  rec.rounds = result.rounds_executed;
  return rec;
}

inline Json to_json(const ExperimentSpec& spec);
inline std::string to_csv(const ExperimentReport& report);
inline Json to_json(const ExperimentReport& report);

namespace detail {

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace detail

/// Aggregates trial records into quantiles and exceedance rates.
inline void summarize(ExperimentReport& report) {
  std::vector<TimeStep> times;
  report.completed = 0;
  report.truncations = 0;
  for (const auto& t : report.trials) {
    if (t.wakeup_time) {
      times.push_back(*t.wakeup_time);
      ++report.completed;
    } else {
      ++report.truncations;
    }
  }
  std::sort(times.begin(), times.end());
  report.quantiles.clear();
  for (const auto& [name, q] : {std::pair{"p50", 0.50}, {"p90", 0.90}, {"p95", 0.95}, {"p99", 0.99}}) {
    report.quantiles[name] = nearest_rank(times, q);
  }
  report.exceedance.clear();
  for (const auto& name : report.spec.overlays) {
    const double bound = overlay_value(report.spec, name);
    std::uint64_t over = 0;
    for (const auto& t : report.trials) {
      if (!t.wakeup_time || static_cast<double>(*t.wakeup_time) >= bound) ++over;
    }
    report.exceedance.push_back(
        {name, bound, static_cast<double>(over) / static_cast<double>(report.trials.size())});
  }
}

inline ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();

  std::optional<TransmissionArray> array;
  if (spec.protocol != ProtocolKind::kScreening) {
    array = experiment_array(spec);
    if (array->n() != spec.net.n || array->b() != spec.net.b) {
      throw InvalidInput("array dimensions do not match the network");
    }
  }

  ExperimentReport report;
  report.spec = spec;
  report.trials.resize(spec.trials);

  unsigned workers = spec.threads != 0 ? spec.threads : std::thread::hardware_concurrency();
  workers = static_cast<unsigned>(std::clamp<std::uint64_t>(workers, 1, spec.trials));
  const TransmissionArray* array_ptr = array ? &*array : nullptr;
  if (workers == 1) {
    for (std::uint64_t i = 0; i < spec.trials; ++i) report.trials[i] = run_trial(spec, array_ptr, i);
  } else {
    // Trials are keyed by index, so the interleaving does not affect results.
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::uint64_t i = w; i < spec.trials; i += workers) {
            report.trials[i] = run_trial(spec, array_ptr, i);
          }
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  summarize(report);
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (spec.csv_path) detail::write_text(*spec.csv_path, to_csv(report));
  if (spec.json_path) detail::write_text(*spec.json_path, to_json(report).dump(2) + "\n");
  return report;
}

// ---------------------------------------------------------------------------
// Jamming sweep

struct SweepRow {
  double jam_prob = 0.0;
  ExperimentReport report;
  std::optional<double> p95_ratio;  // p95 at jam_prob over p95 at 0
};

struct SweepResult {
  ExperimentReport baseline;  // jam_prob = 0
  std::vector<SweepRow> rows;
};

/// Runs `spec` once per jamming probability with identical trial seeds, so
/// patterns and protocol draws are paired across rows. Output paths in the
/// spec are ignored; use write_sweep.
inline SweepResult jamming_sweep(ExperimentSpec spec, const std::vector<double>& probabilities) {
  for (double p : probabilities) {
    if (!(p >= 0.0 && p < 1.0)) throw InvalidInput("jamming probabilities must lie in [0, 1)");
  }
  spec.csv_path.reset();
  spec.json_path.reset();

  SweepResult out;
  auto at = [&](double p) {
    ExperimentSpec s = spec;
    s.net.jam_prob = p;
    return run_experiment(s);
  };
  out.baseline = at(0.0);
  const auto base95 = out.baseline.quantiles.at("p95");
  for (double p : probabilities) {
    SweepRow row;
    row.jam_prob = p;
    row.report = p == 0.0 ? out.baseline : at(p);
    const auto p95 = row.report.quantiles.at("p95");
    if (p95 && base95 && *base95 > 0) {
      row.p95_ratio = static_cast<double>(*p95) / static_cast<double>(*base95);
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generate and verify

struct GenerateParams {
  ArrayKind kind = ArrayKind::kGeneral;
  std::uint32_t n = 1;
  std::uint32_t b = 1;
  Rational c{4, 1};
};

struct GenerateResult {
  std::optional<TransmissionArray> array;      // first verified array
  std::optional<std::uint64_t> array_seed;     // its seed
  std::optional<std::uint64_t> first_pass;     // 1-based attempt index
  std::uint64_t attempts = 0;
  std::uint64_t passes = 0;
  std::optional<ActivationPattern> last_counterexample;
  TimeStep horizon = 0;

  bool exhausted() const noexcept { return !array.has_value(); }
  double pass_fraction() const noexcept {
    return attempts == 0 ? 0.0 : static_cast<double>(passes) / static_cast<double>(attempts);
  }
};

/// Seed of attempt `attempt` (0-based) in a generate-and-verify run.
inline std::uint64_t attempt_seed(std::uint64_t seed, std::uint64_t attempt) noexcept {
  return keyed_hash(seed, {static_cast<std::uint64_t>(StreamTag::kArray), attempt});
}

/// gamma_{ceil(log2 k) + 1}, capped at the last stage.
inline TimeStep default_horizon(const SectionSchedule& schedule, std::uint32_t k) {
  const std::uint32_t stage = std::min(ceil_log2(k) + 1, schedule.stage_count());
  return static_cast<TimeStep>(schedule.gamma(stage));
}

/// Samples `attempts` arrays with derived seeds and verifies each against every
/// activation pattern of the family; reports the first verified array and the
/// pass fraction over all attempts.
inline GenerateResult generate_and_verify(const GenerateParams& params, std::uint32_t k,
                                          std::uint64_t attempts, std::uint64_t seed,
                                          std::optional<TimeStep> horizon = std::nullopt,
                                          const PatternFamily& family = SimultaneousFamily{},
                                          std::uint64_t budget = kDefaultEnumerationBudget) {
  const auto schedule = SectionSchedule::make(params.kind, params.n, params.b, params.c);
  GenerateResult out;
  out.horizon = horizon.value_or(default_horizon(schedule, k));
  for (std::uint64_t a = 0; a < attempts; ++a) {
    const std::uint64_t s = attempt_seed(seed, a);
    auto array = sample_array(schedule, s);
    auto verdict = verify_waking_small(array, k, out.horizon, family, SubsetMode::kUpToK, budget);
    ++out.attempts;
    if (verdict.verified) {
      ++out.passes;
      if (!out.array) {
        out.array = std::move(array);
        out.array_seed = s;
        out.first_pass = a + 1;
      }
    } else {
      out.last_counterexample = std::move(verdict.counterexample);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

inline Json to_json(const ActivationPattern& pattern) {
  Json arr = Json::array();
  for (const auto& [u, sigma] : pattern.activations()) arr.push_back({u.value, sigma});
  return arr;
}

inline Json to_json(const ExperimentSpec& spec) {
  Json j;
  j["protocol"] = to_string(spec.protocol);
  j["n"] = spec.net.n;
  j["b"] = spec.net.b;
  j["jam_prob"] = spec.net.jam_prob;
  Json pat;
  if (const auto* s = std::get_if<SimultaneousK>(&spec.pattern)) {
    pat = {{"type", "simultaneous"}, {"k", s->k}};
  } else if (const auto* s = std::get_if<Staggered>(&spec.pattern)) {
    pat = {{"type", "staggered"}, {"k", s->k}, {"window", s->window}};
  } else {
    pat = {{"type", "explicit"},
           {"activations", to_json(std::get<ExplicitPattern>(spec.pattern).pattern)}};
  }
  j["pattern"] = pat;
  j["trials"] = spec.trials;
  j["base_seed"] = spec.base_seed;
  j["t_max"] = spec.t_max ? Json(*spec.t_max) : Json(nullptr);
  if (spec.protocol == ProtocolKind::kScreening) {
    j["screening"] = {{"k", spec.k()}, {"epsilon", spec.epsilon}};
  } else {
    Json a;
    a["c"] = {spec.array.c.num, spec.array.c.den};
    if (spec.array.file) a["file"] = *spec.array.file;
    if (spec.array.seed) a["seed"] = *spec.array.seed;
    j["array"] = a;
  }
  j["overlays"] = spec.overlays;
  return j;
}

inline std::string to_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "trial,seed,wakeup_time,truncated,rounds\n";
  for (const auto& t : report.trials) {
    out << t.trial << ',' << t.seed << ',';
    if (t.wakeup_time) out << *t.wakeup_time;
    out << ',' << (t.truncated ? 1 : 0) << ',' << t.rounds << '\n';
  }
  return out.str();
}

inline Json to_json(const ExperimentReport& report) {
  Json j;
  j["spec"] = to_json(report.spec);
  j["trials"] = report.trials.size();
  j["completed"] = report.completed;
  j["truncated"] = report.truncations;
  Json q;
  for (const auto& [name, value] : report.quantiles) q[name] = value ? Json(*value) : Json(nullptr);
  j["quantiles"] = q;
  Json ex = Json::array();
  for (const auto& e : report.exceedance) {
    ex.push_back({{"overlay", e.overlay}, {"bound", e.bound}, {"rate", e.rate}});
  }
  j["exceedance"] = ex;
  return j;
}

inline Json to_json(const SweepResult& sweep) {
  Json rows = Json::array();
  for (const auto& row : sweep.rows) {
    Json r = to_json(row.report);
    r["jam_prob"] = row.jam_prob;
    r["p95_ratio"] = row.p95_ratio ? Json(*row.p95_ratio) : Json(nullptr);
    rows.push_back(r);
  }
  return {{"baseline_p95", sweep.baseline.quantiles.at("p95")
                               ? Json(*sweep.baseline.quantiles.at("p95"))
                               : Json(nullptr)},
          {"rows", rows}};
}

inline Json to_json(const SelectivityVerdict& v, std::uint32_t n, std::uint32_t k, SubsetMode mode) {
  return {{"check", "selective"}, {"n", n}, {"k", k}, {"mode", to_string(mode)},
          {"selective", v.selective},
          {"witness", v.witness ? Json(*v.witness) : Json(nullptr)},
          {"subsets_checked", v.subsets_checked}};
}

inline Json to_json(const BlockingResult& r, std::uint32_t n, std::uint32_t k, std::uint64_t t_limit) {
  return {{"check", "blocking"}, {"n", n}, {"k", k}, {"t_limit", t_limit},
          {"blocking_set", r.blocking_set ? Json(*r.blocking_set) : Json(nullptr)},
          {"subsets_checked", r.subsets_checked}};
}

inline Json to_json(const WakingVerdict& v, std::uint32_t k, TimeStep horizon) {
  return {{"check", "waking"}, {"k", k}, {"horizon", horizon}, {"verified", v.verified},
          {"counterexample", v.counterexample ? to_json(*v.counterexample) : Json(nullptr)},
          {"patterns_checked", v.patterns_checked}};
}

// ---------------------------------------------------------------------------
// Config files

namespace detail {

inline Rational parse_rational(const Json& v) {
  if (v.is_array() && v.size() == 2) {
    return Rational{v.at(0).get<std::uint64_t>(), v.at(1).get<std::uint64_t>()};
  }
  return Rational::from_double(v.get<double>());
}

}  // namespace detail

/// Parses an experiment config (JSON document mirroring ExperimentSpec).
/// Any structural problem is reported as a ConfigError.
inline ExperimentSpec parse_experiment_spec(const Json& j) {
  try {
    ExperimentSpec spec;
    const std::string protocol = j.at("protocol").get<std::string>();
    if (protocol == "screening") {
      spec.protocol = ProtocolKind::kScreening;
    } else if (protocol == "array-general") {
      spec.protocol = ProtocolKind::kArrayGeneral;
    } else if (protocol == "array-modified") {
      spec.protocol = ProtocolKind::kArrayModified;
    } else {
      throw ConfigError("unknown protocol '" + protocol + "'");
    }
    spec.net.n = j.at("n").get<std::uint32_t>();
    spec.net.b = j.at("b").get<std::uint32_t>();
    spec.net.jam_prob = j.value("jam_prob", 0.0);

    const Json& pat = j.at("pattern");
    const std::string type = pat.at("type").get<std::string>();
    if (type == "simultaneous") {
      spec.pattern = SimultaneousK{pat.at("k").get<std::uint32_t>()};
    } else if (type == "staggered") {
      spec.pattern = Staggered{pat.at("window").get<std::uint32_t>(), pat.at("k").get<std::uint32_t>()};
    } else if (type == "explicit") {
      std::map<StationId, TimeStep> m;
      for (const auto& entry : pat.at("activations")) {
        m[StationId{entry.at(0).get<std::uint32_t>()}] = entry.at(1).get<TimeStep>();
      }
      spec.pattern = ExplicitPattern{ActivationPattern(std::move(m))};
    } else {
      throw ConfigError("unknown pattern type '" + type + "'");
    }

    spec.trials = j.value("trials", std::uint64_t{1});
    spec.base_seed = j.value("base_seed", std::uint64_t{0});
    if (j.contains("t_max") && !j.at("t_max").is_null()) spec.t_max = j.at("t_max").get<TimeStep>();
    if (j.contains("screening")) {
      const Json& s = j.at("screening");
      if (s.contains("k")) spec.screening_k = s.at("k").get<std::uint32_t>();
      spec.epsilon = s.value("epsilon", spec.epsilon);
    }
    if (j.contains("array")) {
      const Json& a = j.at("array");
      if (a.contains("c")) spec.array.c = detail::parse_rational(a.at("c"));
      if (a.contains("seed")) spec.array.seed = a.at("seed").get<std::uint64_t>();
      if (a.contains("file")) spec.array.file = a.at("file").get<std::string>();
    }
    if (j.contains("overlays")) spec.overlays = j.at("overlays").get<std::vector<std::string>>();
    if (j.contains("output")) {
      const Json& o = j.at("output");
      if (o.contains("csv")) spec.csv_path = o.at("csv").get<std::string>();
      if (o.contains("json")) spec.json_path = o.at("json").get<std::string>();
    }
    spec.threads = j.value("threads", 0U);
    spec.validate();
    return spec;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid experiment config: ") + e.what());
  }
}

inline Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  try {
    return Json::parse(in);
  } catch (const std::exception& e) {
    throw ConfigError("malformed config file " + path + ": " + e.what());
  }
}

}  // namespace wakeup
