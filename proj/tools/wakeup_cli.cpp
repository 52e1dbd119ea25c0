// wakeup: command-line front end for the wake-up simulator and oracles.
//
//   wakeup simulate  ...   run one protocol instance
//   wakeup gen-array ...   sample (and optionally verify) an array, save it
//   wakeup verify    ...   selectivity / waking / blocking-set oracles
//   wakeup bench     ...   Monte Carlo batch or jamming sweep from a config
//   wakeup bounds    ...   closed-form bounds
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage error, 3 config error,
// 4 invalid input or file format, 5 enumeration budget exceeded.

#include <cstdint>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wakeup/wakeup.hpp"

namespace {

using namespace wakeup;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kConfig = 3,
  kBadInput = 4,
  kBudget = 5,
};

std::string format_number(double v) {
  std::ostringstream out;
  out << std::setprecision(10) << v;
  return out.str();
}

std::string format_set(const std::vector<std::uint32_t>& s) {
  std::string out = "{";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "}";
}

std::string format_pattern(const ActivationPattern& p) {
  std::string out;
  for (const auto& [u, sigma] : p.activations()) {
    if (!out.empty()) out += " ";
    out += std::to_string(u.value) + "@" + std::to_string(sigma);
  }
  return out;
}

void error_record(const char* kind, const std::string& message) {
  Json j{{"error", kind}, {"message", message}};
  std::cerr << j.dump() << "\n";
}

ArrayKind parse_kind(const std::string& s) {
  if (s == "general") return ArrayKind::kGeneral;
  if (s == "modified") return ArrayKind::kModified;
  throw InvalidInput("unknown array kind '" + s + "'");
}

SubsetMode parse_mode(const std::string& s) {
  if (s == "exactly") return SubsetMode::kExactlyK;
  if (s == "up-to") return SubsetMode::kUpToK;
  throw InvalidInput("unknown subset mode '" + s + "'");
}

std::vector<std::vector<std::uint32_t>> named_family(const std::string& name, std::uint32_t n) {
  std::vector<std::vector<std::uint32_t>> family;
  if (name == "singletons") {
    for (std::uint32_t u = 1; u <= n; ++u) family.push_back({u});
  } else if (name == "pairs") {
    for (std::uint32_t u = 1; u + 1 <= n; u += 2) family.push_back({u, u + 1});
    if (n % 2 == 1) family.push_back({n});
  } else if (name == "all") {
    std::vector<std::uint32_t> everyone;
    for (std::uint32_t u = 1; u <= n; ++u) everyone.push_back(u);
    family.push_back(everyone);
  } else if (name.rfind("file:", 0) == 0) {
    const Json j = load_json_file(name.substr(5));
    try {
      family = j.get<std::vector<std::vector<std::uint32_t>>>();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("family file must be a list of station lists: ") + e.what());
    }
  } else {
    throw InvalidInput("unknown family '" + name + "'");
  }
  return family;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string protocol = "screening";
  std::uint32_t n = 16;
  std::uint32_t b = 1;
  double p = 0.0;
  std::uint32_t k = 1;
  std::uint32_t window = 0;
  std::uint64_t seed = 1;
  double epsilon = 0.05;
  std::optional<TimeStep> t_max;
  double c = 4.0;
  std::optional<std::string> array_file;
  std::optional<std::uint64_t> array_seed;
  bool trace = false;
};

int run_simulate(const SimulateArgs& a) {
  NetworkConfig net{a.n, a.b, a.p};
  net.validate();
  const PatternGenerator gen =
      a.window == 0 ? PatternGenerator{SimultaneousK{a.k}} : PatternGenerator{Staggered{a.window, a.k}};
  const auto pattern = generate_pattern(gen, a.n, a.seed);
  RunOptions opts{a.trace};

  SimulationResult result;
  if (a.protocol == "screening") {
    result = run_channel_screening(net, pattern, ScreeningConfig{a.k, a.b, a.epsilon, a.t_max},
                                   a.seed, opts);
  } else if (a.protocol == "array-general" || a.protocol == "array-modified") {
    const ArrayKind kind = a.protocol == "array-general" ? ArrayKind::kGeneral : ArrayKind::kModified;
    const auto array =
        a.array_file ? load_array(*a.array_file)
                     : sample_array(SectionSchedule::make(kind, a.n, a.b, Rational::from_double(a.c)),
                                    a.array_seed.value_or(a.seed));
    result = run_wakeup_array(net, pattern, array, a.seed, opts);
  } else {
    throw InvalidInput("unknown protocol '" + a.protocol + "'");
  }

  std::cout << "pattern: " << format_pattern(pattern) << "\n";
  if (result.trace) {
    for (const auto& round : *result.trace) {
      std::cout << "t=" << round.outcome.time << " tx=" << round.decisions.size();
      for (std::size_t i = 0; i < round.outcome.per_channel.size(); ++i) {
        const auto& f = round.outcome.per_channel[i];
        std::cout << " ch" << i + 1 << "=" << (f.is_heard() ? std::to_string(f.source()->value) : "-");
      }
      if (!round.outcome.jammed_channels.empty()) std::cout << " jammed=" << round.outcome.jammed_channels.size();
      std::cout << "\n";
    }
  }
  std::cout << "wakeup_time: "
            << (result.wakeup_time ? std::to_string(*result.wakeup_time) : std::string("none")) << "\n"
            << "rounds: " << result.rounds_executed << "\n"
            << "truncated: " << (result.truncated ? "true" : "false") << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct GenArrayArgs {
  std::string kind = "general";
  std::uint32_t n = 16;
  std::uint32_t b = 1;
  double c = 4.0;
  std::uint64_t seed = 1;
  std::string out;
  bool materialize = false;
  std::optional<std::uint32_t> verify_k;
  std::uint64_t attempts = 50;
  std::optional<TimeStep> horizon;
};

int run_gen_array(const GenArrayArgs& a) {
  const ArrayKind kind = parse_kind(a.kind);
  const Rational c = Rational::from_double(a.c);
  std::optional<TransmissionArray> array;
  if (a.verify_k) {
    auto result = generate_and_verify(GenerateParams{kind, a.n, a.b, c}, *a.verify_k, a.attempts,
                                      a.seed, a.horizon);
    std::cout << "attempts: " << result.attempts << "\n"
              << "passes: " << result.passes << "\n"
              << "pass_fraction: " << format_number(result.pass_fraction()) << "\n"
              << "horizon: " << result.horizon << "\n";
    if (result.exhausted()) {
      std::cout << "exhausted: no array verified";
      if (result.last_counterexample) {
        std::cout << "; last counterexample " << format_pattern(*result.last_counterexample);
      }
      std::cout << "\n";
      return kFailure;
    }
    std::cout << "first_pass: " << *result.first_pass << "\n"
              << "array_seed: " << *result.array_seed << "\n";
    array = std::move(result.array);
  } else {
    array = sample_array(SectionSchedule::make(kind, a.n, a.b, c), a.seed);
  }
  if (a.materialize) array = array->materialize();
  save_array(*array, a.out);
  std::cout << "kind: " << to_string(array->kind()) << "\n"
            << "length: " << array->length() << "\n"
            << "saved: " << a.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string family = "singletons";
  std::uint32_t n = 4;
  std::uint32_t k = 1;
  std::string mode = "exactly";
  std::uint64_t budget = kDefaultEnumerationBudget;
  std::string array_file;
  std::optional<TimeStep> horizon;
  std::uint32_t window = 0;
  std::string schedule = "all";
  std::uint64_t t_limit = 0;
  bool json = false;
};

int run_verify_selective(const VerifyArgs& a) {
  const auto family = named_family(a.family, a.n);
  const SubsetMode mode = parse_mode(a.mode);
  const auto v = check_selective(family, a.n, a.k, mode, a.budget);
  if (a.json) {
    std::cout << to_json(v, a.n, a.k, mode).dump() << "\n";
  } else if (v.selective) {
    std::cout << "selective\n";
  } else {
    std::cout << "not selective, witness " << format_set(*v.witness) << "\n";
  }
  return kOk;
}

int run_verify_waking(const VerifyArgs& a) {
  const auto array = load_array(a.array_file);
  const TimeStep horizon = a.horizon.value_or(default_horizon(array.schedule(), a.k));
  const PatternFamily family =
      a.window == 0 ? PatternFamily{SimultaneousFamily{}} : PatternFamily{StaggeredFamily{a.window}};
  const auto v = verify_waking_small(array, a.k, horizon, family, parse_mode(a.mode), a.budget);
  if (a.json) {
    std::cout << to_json(v, a.k, horizon).dump() << "\n";
  } else if (v.verified) {
    std::cout << "verified (" << v.patterns_checked << " patterns, horizon " << horizon << ")\n";
  } else {
    std::cout << "counterexample " << format_pattern(*v.counterexample) << "\n";
  }
  return kOk;
}

int run_verify_blocking(const VerifyArgs& a) {
  std::optional<QuerySequence> queries;
  if (a.schedule == "all") {
    std::vector<std::uint32_t> everyone;
    for (std::uint32_t u = 1; u <= a.n; ++u) everyone.push_back(u);
    const std::uint64_t steps = a.t_limit == 0 ? a.n : a.t_limit;
    queries = QuerySequence::single_channel(
        a.n, std::vector<std::vector<std::uint32_t>>(steps, everyone));
  } else if (a.schedule == "round-robin") {
    queries = QuerySequence::single_channel(a.n, named_family("singletons", a.n));
  } else if (a.schedule.rfind("array:", 0) == 0) {
    const auto array = load_array(a.schedule.substr(6));
    queries = QuerySequence::from_array(array, a.t_limit);
  } else {
    throw InvalidInput("unknown schedule '" + a.schedule + "'");
  }
  const std::uint64_t t_limit = a.t_limit == 0 ? queries->size() : a.t_limit;
  const auto r = find_blocking_activation(*queries, a.k, t_limit, a.budget);
  if (a.json) {
    std::cout << to_json(r, queries->n(), a.k, t_limit).dump() << "\n";
  } else if (r.blocking_set) {
    std::cout << "blocking set " << format_set(*r.blocking_set) << "\n";
  } else {
    std::cout << "none exists\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int run_bench(const std::string& config_path, std::vector<double> sweep) {
  const Json config = load_json_file(config_path);
  const ExperimentSpec spec = parse_experiment_spec(config);
  if (sweep.empty() && config.contains("sweep")) {
    try {
      sweep = config.at("sweep").get<std::vector<double>>();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("sweep must be a list of probabilities: ") + e.what());
    }
  }

  if (sweep.empty()) {
    const auto report = run_experiment(spec);
    std::cout << to_json(report).dump(2) << "\n";
    std::cerr << "wall_clock_seconds: " << report.wall_clock_seconds << "\n";
    return kOk;
  }

  const auto result = jamming_sweep(spec, sweep);
  const Json summary = to_json(result);
  if (spec.json_path) {
    std::ofstream out(*spec.json_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + *spec.json_path + " for writing");
    out << summary.dump(2) << "\n";
  }
  if (spec.csv_path) {
    std::ofstream out(*spec.csv_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + *spec.csv_path + " for writing");
    out << "jam_prob,trial,seed,wakeup_time,truncated,rounds\n";
    for (const auto& row : result.rows) {
      for (const auto& t : row.report.trials) {
        out << format_number(row.jam_prob) << ',' << t.trial << ',' << t.seed << ',';
        if (t.wakeup_time) out << *t.wakeup_time;
        out << ',' << (t.truncated ? 1 : 0) << ',' << t.rounds << '\n';
      }
    }
  }
  std::cout << summary.dump(2) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct BoundsArgs {
  std::uint64_t n = 0;
  std::uint64_t k = 0;
  std::uint32_t b = 1;
  double p = 0.0;
  double epsilon = 0.05;
};

int run_bounds(const BoundsArgs& a) {
  const double lower = deterministic_lower_bound(a.n, a.k, a.b);
  std::cout << "lower bound: " << format_number(lower);
  if (lower <= 0.0) std::cout << " (bound vacuous)";
  std::cout << "\n";
  if (a.k <= 0xffffffffULL) {
    std::cout << "screening rounds (epsilon " << format_number(a.epsilon)
              << "): " << screening_round_bound(static_cast<std::uint32_t>(a.k), a.b, a.epsilon)
              << "\n";
  }
  const auto shapes = deterministic_upper_bounds(a.n, a.k, a.b, a.p);
  std::cout << "general shape: " << format_number(shapes.general) << "\n";
  std::cout << "modified shape: "
            << (shapes.modified ? format_number(*shapes.modified)
                                : std::string("suppressed (b <= log2(128 b lg n))"))
            << "\n";
  std::cout << "general jammed shape: "
            << (shapes.general_jammed ? format_number(*shapes.general_jammed) : std::string("n/a (p = 0)"))
            << "\n";
  std::cout << "modified jammed shape: "
            << (shapes.modified_jammed ? format_number(*shapes.modified_jammed) : std::string("n/a"))
            << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wake-up protocols on multi-channel single-hop radio networks"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run one protocol instance");
  simulate->add_option("--protocol", sim.protocol, "screening | array-general | array-modified")
      ->capture_default_str();
  simulate->add_option("--n", sim.n, "Stations")->capture_default_str();
  simulate->add_option("--b", sim.b, "Channels")->capture_default_str();
  simulate->add_option("--p", sim.p, "Jamming probability")->capture_default_str();
  simulate->add_option("--k", sim.k, "Stations to activate (and screening k)")->capture_default_str();
  simulate->add_option("--window", sim.window, "Stagger activations within [0, window]");
  simulate->add_option("--seed", sim.seed, "Seed")->capture_default_str();
  simulate->add_option("--epsilon", sim.epsilon, "Screening failure target")->capture_default_str();
  simulate->add_option("--t-max", sim.t_max, "Screening round cap");
  simulate->add_option("--c", sim.c, "Section scaling constant")->capture_default_str();
  simulate->add_option("--array", sim.array_file, "Array file");
  simulate->add_option("--array-seed", sim.array_seed, "Seed for a sampled array");
  simulate->add_flag("--trace", sim.trace, "Print every round");

  GenArrayArgs gen;
  auto* gen_array = app.add_subcommand("gen-array", "Sample an array and save it");
  gen_array->add_option("--kind", gen.kind, "general | modified")->capture_default_str();
  gen_array->add_option("--n", gen.n, "Stations")->capture_default_str();
  gen_array->add_option("--b", gen.b, "Channels")->capture_default_str();
  gen_array->add_option("--c", gen.c, "Section scaling constant")->capture_default_str();
  gen_array->add_option("--seed", gen.seed, "Seed")->capture_default_str();
  gen_array->add_option("--out", gen.out, "Output file")->required();
  gen_array->add_flag("--explicit", gen.materialize, "Store every bit instead of the seed");
  gen_array->add_option("--verify-k", gen.verify_k, "Generate and verify for up to k simultaneous stations");
  gen_array->add_option("--attempts", gen.attempts, "Arrays to try")->capture_default_str();
  gen_array->add_option("--horizon", gen.horizon, "Verification horizon");

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify", "Run an exhaustive oracle");
  verify->require_subcommand(1);
  auto* selective = verify->add_subcommand("selective", "(n,k)-selectivity of a set family");
  selective->add_option("--family", ver.family, "singletons | pairs | all | file:PATH")->capture_default_str();
  selective->add_option("--n", ver.n, "Ground set size")->required();
  selective->add_option("--k", ver.k, "Subset size")->required();
  selective->add_option("--mode", ver.mode, "exactly | up-to")->capture_default_str();
  selective->add_option("--budget", ver.budget, "Enumeration budget");
  selective->add_flag("--json", ver.json, "Structured output");
  auto* waking = verify->add_subcommand("waking", "Waking property of an array file");
  waking->add_option("--array", ver.array_file, "Array file")->required();
  waking->add_option("--k", ver.k, "Activation bound")->required();
  waking->add_option("--horizon", ver.horizon, "Horizon (default gamma_{ceil(log k)+1})");
  waking->add_option("--window", ver.window, "Staggered window (0: simultaneous)");
  waking->add_option("--mode", ver.mode, "exactly | up-to")->default_val("up-to");
  waking->add_option("--budget", ver.budget, "Enumeration budget");
  waking->add_flag("--json", ver.json, "Structured output");
  auto* blocking = verify->add_subcommand("blocking", "Search for a blocking activation");
  blocking->add_option("--schedule", ver.schedule, "all | round-robin | array:PATH")->capture_default_str();
  blocking->add_option("--n", ver.n, "Stations")->capture_default_str();
  blocking->add_option("--k", ver.k, "Set size")->required();
  blocking->add_option("--t-limit", ver.t_limit, "Steps to consider (0: whole schedule)");
  blocking->add_option("--budget", ver.budget, "Enumeration budget");
  blocking->add_flag("--json", ver.json, "Structured output");

  std::string config_path;
  std::vector<double> sweep;
  auto* bench = app.add_subcommand("bench", "Run an experiment config");
  bench->add_option("--config", config_path, "Experiment config (JSON)")->required();
  bench->add_option("--sweep", sweep, "Jamming probabilities")->delimiter(',');

  BoundsArgs bnd;
  auto* bounds = app.add_subcommand("bounds", "Print closed-form bounds");
  bounds->add_option("--n", bnd.n, "Stations")->required();
  bounds->add_option("--k", bnd.k, "Activation bound")->required();
  bounds->add_option("--b", bnd.b, "Channels")->capture_default_str();
  bounds->add_option("--p", bnd.p, "Jamming probability")->capture_default_str();
  bounds->add_option("--epsilon", bnd.epsilon, "Screening failure target")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    error_record("usage", e.what());
    return kUsage;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*gen_array) return run_gen_array(gen);
    if (*selective) return run_verify_selective(ver);
    if (*waking) return run_verify_waking(ver);
    if (*blocking) return run_verify_blocking(ver);
    if (*bench) return run_bench(config_path, sweep);
    if (*bounds) return run_bounds(bnd);
  } catch (const ConfigError& e) {
    error_record("config", e.what());
    return kConfig;
  } catch (const BudgetExceeded& e) {
    error_record("budget", e.what());
    return kBudget;
  } catch (const FormatError& e) {
    error_record("format", e.what());
    return kBadInput;
  } catch (const InvalidInput& e) {
    error_record("invalid-input", e.what());
    return kBadInput;
  } catch (const OutOfSchedule& e) {
    error_record("invalid-input", e.what());
    return kBadInput;
  } catch (const std::exception& e) {
    error_record("runtime", e.what());
    return kFailure;
  }
  return kUsage;
}
