#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "rme/explore/explorer.hpp"
#include "rme/harness/campaign.hpp"
#include "rme/harness/workload.hpp"

namespace {

using nlohmann::json;
using namespace rme;

constexpr int kExitClean = 0;
constexpr int kExitViolations = 1;
constexpr int kExitConfig = 2;

struct Campaign {
  std::string mode = "stress";
  std::vector<int> ns{2};
  std::vector<std::uint64_t> seeds{1};
  ScheduleConfig schedule;
  std::uint64_t patience = 20000;
  std::string out;
  std::string trace_out;
  RmrModel model = RmrModel::kBoth;
  std::optional<Variant> variant;
  Mutation mutation = Mutation::kNone;
  std::uint64_t passages = 2;
  std::uint32_t crash_budget = 1;
  std::uint64_t max_states = 5'000'000;
  std::uint64_t rounds = 50;
  unsigned jobs = 1;
  bool gzip = false;
  bool keep_traces = false;   // write every stress trace, not only counterexamples

  Variant effective_variant() const {
    if (variant) return *variant;
    return model == RmrModel::kCc ? Variant::kCc : Variant::kDsm;
  }
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  try {
    if (const auto dots = text.find(".."); dots != std::string::npos) {
      const auto lo = std::stoull(text.substr(0, dots));
      const auto hi = std::stoull(text.substr(dots + 2));
      if (hi < lo || hi - lo > 10'000'000) throw ConfigError(fmt::format("bad seed range '{}'", text));
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      std::stringstream in(text);
      for (std::string part; std::getline(in, part, ',');) seeds.push_back(std::stoull(part));
    }
  } catch (const std::logic_error&) {
    throw ConfigError(fmt::format("bad seed list '{}'", text));
  }
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  return seeds;
}

std::vector<int> parse_ns(const std::string& text) {
  std::vector<int> ns;
  std::stringstream in(text);
  try {
    for (std::string part; std::getline(in, part, ',');) ns.push_back(std::stoi(part));
  } catch (const std::logic_error&) {
    throw ConfigError(fmt::format("bad process count '{}'", text));
  }
  if (ns.empty()) throw ConfigError("--n needs a value");
  for (int n : ns) {
    if (n < 1 || n > kMaxProcesses) throw ConfigError(fmt::format("n = {} outside 1..{}", n, kMaxProcesses));
  }
  return ns;
}

template <typename E>
E parse_named(const std::string& text, const char* what) {
  if (auto v = parse_enum<E>(text)) return *v;
  throw ConfigError(fmt::format("unknown {} '{}'", what, text));
}

RmrModel parse_model(const std::string& text) {
  if (text == "cc") return RmrModel::kCc;
  if (text == "dsm") return RmrModel::kDsm;
  if (text == "both") return RmrModel::kBoth;
  throw ConfigError(fmt::format("unknown RMR model '{}'", text));
}

/// Config file keys mirror the long flag names; schedule keys are those of
/// ScheduleConfig.
void apply_config_file(const std::string& path, Campaign& c) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open {}", path));
  std::stringstream buf;
  buf << in.rdbuf();
  c.schedule = schedule_from_json(buf.str());
  c.ns = {c.schedule.n};
  c.seeds = {c.schedule.seed};
  try {
    const json j = json::parse(buf.str());
    if (j.contains("mode")) c.mode = j.at("mode").get<std::string>();
    if (j.contains("seeds")) {
      const auto& s = j.at("seeds");
      c.seeds = s.is_string() ? parse_seeds(s.get<std::string>()) : s.get<std::vector<std::uint64_t>>();
    }
    if (j.contains("patience")) c.patience = j.at("patience").get<std::uint64_t>();
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("trace_out")) c.trace_out = j.at("trace_out").get<std::string>();
    if (j.contains("keep_traces")) c.keep_traces = j.at("keep_traces").get<bool>();
    if (j.contains("rmr_model")) c.model = parse_model(j.at("rmr_model").get<std::string>());
    if (j.contains("variant")) c.variant = parse_named<Variant>(j.at("variant").get<std::string>(), "variant");
    if (j.contains("mutation")) c.mutation = parse_named<Mutation>(j.at("mutation").get<std::string>(), "mutation");
    if (j.contains("passages")) c.passages = j.at("passages").get<std::uint64_t>();
    if (j.contains("crash_budget")) c.crash_budget = j.at("crash_budget").get<std::uint32_t>();
    if (j.contains("max_states")) c.max_states = j.at("max_states").get<std::uint64_t>();
    if (j.contains("jobs")) c.jobs = j.at("jobs").get<unsigned>();
    if (j.contains("gzip")) c.gzip = j.at("gzip").get<bool>();
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ConfigError(fmt::format("cannot write {}", path));
    }
  }
  void line(const json& j) {
    auto& out = file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout;
    out << j.dump() << '\n';
  }

 private:
  std::ofstream file_;
};

std::string trace_path(const Campaign& c, const std::string& stem) {
  std::filesystem::path dir = c.trace_out;
  if (dir.empty()) dir = c.out.empty() ? std::filesystem::path{"."} : std::filesystem::path{c.out}.parent_path();
  if (dir.empty()) dir = ".";
  std::filesystem::create_directories(dir);
  return (dir / (stem + (c.gzip ? ".ndjson.gz" : ".ndjson"))).string();
}

json violations_json(const ViolationList& v) { return json::parse(to_json(v)); }

RunSpec stress_spec(const Campaign& c, int n, std::uint64_t seed, bool keep_trace) {
  RunSpec spec;
  spec.workload.n = n;
  spec.workload.variant = c.effective_variant();
  spec.workload.mutation = c.mutation;
  spec.schedule = c.schedule;
  spec.schedule.n = n;
  spec.schedule.seed = seed;
  spec.patience = c.patience;
  spec.keep_trace = keep_trace;
  return spec;
}

/// Runs `work(k)` for k in [0, count) on up to `jobs` threads; results are
/// consumed in index order.
template <typename R, typename F, typename G>
void parallel_ordered(std::size_t count, unsigned jobs, F work, G consume) {
  std::vector<std::optional<R>> results(count);
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      std::size_t k;
      {
        std::lock_guard lock(mu);
        if (next >= count || failure) return;
        k = next++;
      }
      try {
        R r = work(k);
        std::lock_guard lock(mu);
        results[k] = std::move(r);
      } catch (...) {
        std::lock_guard lock(mu);
        failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (unsigned t = 1; t < std::max(1u, jobs); ++t) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  for (std::size_t k = 0; k < count; ++k) consume(k, *results[k]);
}

struct SeedOutcome {
  RunReport report;
  std::optional<bool> replay_agrees;
};

// Round-trips the trace through its exported form and audits it again; the
// findings and statistics must match the live run.
bool replay_agrees(const RunReport& r, std::uint64_t patience) {
  Trace reloaded;
  for (const auto& e : r.trace) reloaded.push_back(from_ndjson_line(to_ndjson_line(e)));
  const auto replayed = replay_trace(reloaded, patience);
  return json::parse(replayed.stats.to_json()) == json::parse(r.stats.to_json()) &&
         violations_json(replayed.violations) == violations_json(r.violations);
}

int run_stress(const Campaign& c, Output& out, bool replay_check) {
  bool dirty = false;
  for (int n : c.ns) {
    StatsReport merged;
    std::uint64_t pool_swaps = 0;
    std::uint64_t dirty_seeds = 0;
    parallel_ordered<SeedOutcome>(
        c.seeds.size(), c.jobs,
        [&](std::size_t k) {
          SeedOutcome o{run_workload(stress_spec(c, n, c.seeds[k], replay_check || c.keep_traces)), std::nullopt};
          if (replay_check) o.replay_agrees = replay_agrees(o.report, c.patience);
          if (o.report.clean() && !c.keep_traces) o.report.trace = Trace{};
          return o;
        },
        [&](std::size_t k, SeedOutcome& o) {
          auto& r = o.report;
          const auto seed = c.seeds[k];
          json line = {{"mode", c.mode},         {"n", n},
                       {"seed", seed},           {"events", r.result.events},
                       {"crashes", r.result.crashes}, {"completed", r.result.completed},
                       {"pool_swaps", r.pool_swap_checks}, {"violations", violations_json(r.violations)}};
          bool bad = !r.clean();
          if (o.replay_agrees) {
            line["replay_agrees"] = *o.replay_agrees;
            bad = bad || !*o.replay_agrees;
          }
          if (bad) {
            ++dirty_seeds;
            if (r.trace.empty()) r = run_workload(stress_spec(c, n, seed, true));
            const auto path = trace_path(c, fmt::format("counterexample-n{}-seed{}", n, seed));
            save_trace(r.trace, path, c.gzip);
            r.trace = Trace{};
            line["counterexample"] = path;
            if (!r.clean()) {
              spdlog::warn("n={} seed={}: {} violation(s), first: {} ({})", n, seed, r.violations.size(),
                           name_of(r.violations.front().kind), r.violations.front().detail);
            } else {
              spdlog::warn("n={} seed={}: replay disagrees with the live run", n, seed);
            }
          } else if (c.keep_traces) {
            const auto path = trace_path(c, fmt::format("trace-n{}-seed{}", n, seed));
            save_trace(r.trace, path, c.gzip);
            r.trace = Trace{};
            line["trace"] = path;
          }
          pool_swaps += r.pool_swap_checks;
          merged.merge(r.stats);
          out.line(line);
        });
    dirty = dirty || dirty_seeds > 0;
    json summary = {{"mode", c.mode},
                    {"summary", true},
                    {"n", n},
                    {"seeds", c.seeds.size()},
                    {"variant", std::string{name_of(c.effective_variant())}},
                    {"dirty_seeds", dirty_seeds},
                    {"pool_swaps", pool_swaps},
                    {"stats", json::parse(merged.to_json(c.model))}};
    out.line(summary);
    spdlog::info("n={}: {} seeds, {} with violations", n, c.seeds.size(), dirty_seeds);
  }
  return dirty ? kExitViolations : kExitClean;
}

int run_explore(const Campaign& c, Output& out) {
  bool dirty = false;
  for (int n : c.ns) {
    WorkloadConfig w;
    w.n = n;
    w.variant = c.effective_variant();
    w.mutation = c.mutation;
    w.max_passages = c.passages;
    w.deterministic = true;
    if (c.passages == 0) throw ConfigError("explore needs --passages >= 1");
    const auto wl = build_workload(w);
    ExploreBounds bounds;
    bounds.crash_budget = c.crash_budget;
    bounds.max_states = c.max_states;
    const auto report = explore(wl.system, bounds);
    json line = json::parse(to_json(report));
    line["mode"] = "explore";
    line["n"] = n;
    line["passages"] = c.passages;
    line["crash_budget"] = c.crash_budget;
    json files = json::array();
    for (const auto& cx : report.counterexamples) {
      const auto path = trace_path(c, fmt::format("counterexample-explore-n{}-{}", n, name_of(cx.violation.kind)));
      save_trace(cx.trace, path, c.gzip);
      files.push_back(path);
    }
    line["counterexample_files"] = files;
    out.line(line);
    if (report.truncated) spdlog::warn("n={}: state space truncated at {} states", n, report.states);
    dirty = dirty || report.violation_count() > 0;
  }
  return dirty ? kExitViolations : kExitClean;
}

/// Per-operation and per-passage RMR maxima for every n, from the process
/// loop and from a broadcast-only stress run where wakeup chains form.
int run_bench(const Campaign& c, Output& out) {
  bool dirty = false;
  std::map<std::string, std::map<int, json>> per_n;
  for (int n : c.ns) {
    StatsReport merged;
    for (auto seed : c.seeds) {
      auto r = run_workload(stress_spec(c, n, seed, false));
      dirty = dirty || !r.clean();
      merged.merge(r.stats);
      auto sys = build_broadcast_stress({n, c.effective_variant(), c.mutation, c.rounds, 3});
      Machine m(sys, seed);
      StatsCollector stats(n);
      m.add_sink(&stats);
      auto sched = c.schedule;
      sched.n = n;
      sched.seed = seed;
      run(m, sched);
      dirty = dirty || !m.audit().clean();
      merged.merge(stats.report());
    }
    json stats = json::parse(merged.to_json(c.model));
    out.line({{"mode", "bench"}, {"n", n}, {"variant", std::string{name_of(c.effective_variant())}}, {"stats", stats}});
    for (auto& [op, v] : stats["max_op_rmr"].items()) per_n[op][n] = v;
    per_n["passage"][n] = stats["max_passage_reclaim_rmr"];
  }
  json constant = json::object();
  for (auto& [what, by_n] : per_n) {
    json entry = json::object();
    for (const char* model : {"cc", "dsm"}) {
      std::set<std::uint64_t> values;
      json by = json::object();
      for (auto& [n, v] : by_n) {
        if (!v.contains(model)) continue;
        values.insert(v[model].get<std::uint64_t>());
        by[std::to_string(n)] = v[model];
      }
      if (by.empty()) continue;
      entry[model] = {{"by_n", by}, {"constant", values.size() == 1}};
    }
    constant[what] = entry;
  }
  out.line({{"mode", "bench"}, {"summary", true}, {"max_rmr", constant}});
  return dirty ? kExitViolations : kExitClean;
}

int replay_file(const std::string& file, std::uint64_t patience, Output& out) {
  const Trace trace = load_trace(file);
  const auto r = replay_trace(trace, patience);
  json rmr = json::object();
  for (std::size_t p = 1; p < r.rmr.cc.size(); ++p) {
    rmr[std::to_string(p)] = {{"cc", r.rmr.cc[p]}, {"dsm", r.rmr.dsm[p]}};
  }
  out.line({{"mode", "replay"},
            {"file", file},
            {"events", r.events},
            {"violations", violations_json(r.violations)},
            {"rmr", rmr},
            {"stats", json::parse(r.stats.to_json())}});
  return r.violations.empty() ? kExitClean : kExitViolations;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("rmesim");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("RME_RECLAIM_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Crash-injecting simulator for recoverable memory reclamation"};
  app.require_subcommand(1);

  Campaign c;
  std::string mode, n_text, seeds_text, model_text, variant_text, mutation_text, config_path;
  double crash_prob = 0.0;
  std::uint64_t events = 0;
  auto* run_cmd = app.add_subcommand("run", "Run a campaign");
  run_cmd->add_option("--mode", mode, "stress | explore | bench | audit-replay")
      ->check(CLI::IsMember({"stress", "explore", "bench", "audit-replay"}));
  auto* n_opt = run_cmd->add_option("--n", n_text, "Process count, or a comma list");
  auto* seeds_opt = run_cmd->add_option("--seeds", seeds_text, "Seed list (1,2,3) or range (1..100)");
  auto* crash_opt = run_cmd->add_option("--crash-prob", crash_prob, "Crash probability per eligible step");
  auto* events_opt = run_cmd->add_option("--events", events, "Event budget per run");
  auto* patience_opt = run_cmd->add_option("--patience", c.patience, "Starvation patience in events");
  auto* out_opt = run_cmd->add_option("--out", c.out, "Report file (default stdout)");
  auto* model_opt = run_cmd->add_option("--rmr-model", model_text, "cc | dsm | both");
  run_cmd->add_option("--config", config_path, "JSON campaign / schedule config; flags win");
  auto* passages_opt = run_cmd->add_option("--passages", c.passages, "Passages per process (explore)");
  auto* budget_opt = run_cmd->add_option("--crash-budget", c.crash_budget, "Crashes per path (explore)");
  auto* states_opt = run_cmd->add_option("--max-states", c.max_states, "State limit (explore)");
  auto* variant_opt = run_cmd->add_option("--variant", variant_text, "Broadcast variant: dsm | cc");
  auto* mutation_opt = run_cmd->add_option("--mutation", mutation_text, "Fault injection for self-tests");
  auto* jobs_opt = run_cmd->add_option("--jobs", c.jobs, "Worker threads");
  auto* gzip_opt = run_cmd->add_flag("--gzip", c.gzip, "Compress written traces");
  auto* trace_opt = run_cmd->add_option("--trace-out", c.trace_out, "Directory for written traces");
  auto* keep_opt = run_cmd->add_flag("--keep-traces", c.keep_traces, "Write every stress trace, clean ones included");

  std::string replay_path;
  std::uint64_t replay_patience = 20000;
  std::string replay_out;
  auto* replay_cmd = app.add_subcommand("replay", "Re-audit a stored trace");
  replay_cmd->add_option("trace", replay_path, "Trace file")->required();
  replay_cmd->add_option("--patience", replay_patience, "Starvation patience in events");
  replay_cmd->add_option("--out", replay_out, "Report file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (replay_cmd->parsed()) {
      Output out(replay_out);
      return replay_file(replay_path, replay_patience, out);
    }
    // Defaults, then the config file, then explicit flags.
    c.schedule.max_events = 100000;
    if (!config_path.empty()) {
      const Campaign flags = c;
      apply_config_file(config_path, c);
      if (patience_opt->count()) c.patience = flags.patience;
      if (out_opt->count()) c.out = flags.out;
      if (passages_opt->count()) c.passages = flags.passages;
      if (budget_opt->count()) c.crash_budget = flags.crash_budget;
      if (states_opt->count()) c.max_states = flags.max_states;
      if (jobs_opt->count()) c.jobs = flags.jobs;
      if (gzip_opt->count()) c.gzip = flags.gzip;
      if (keep_opt->count()) c.keep_traces = flags.keep_traces;
      if (trace_opt->count()) c.trace_out = flags.trace_out;
    }
    if (!mode.empty()) c.mode = mode;
    if (n_opt->count()) c.ns = parse_ns(n_text);
    if (seeds_opt->count()) c.seeds = parse_seeds(seeds_text);
    if (crash_opt->count()) {
      c.schedule.crash.mode = crash_prob > 0 ? CrashMode::kRandom : CrashMode::kNone;
      c.schedule.crash.probability = crash_prob;
    }
    if (events_opt->count()) c.schedule.max_events = events;
    if (model_opt->count()) c.model = parse_model(model_text);
    if (variant_opt->count()) c.variant = parse_named<Variant>(variant_text, "variant");
    if (mutation_opt->count()) c.mutation = parse_named<Mutation>(mutation_text, "mutation");
    for (int n : c.ns) {
      auto s = c.schedule;
      s.n = n;
      validate(s);
    }
    if (c.patience == 0) throw ConfigError("patience must be positive");
    if (c.jobs == 0) throw ConfigError("jobs must be positive");

    Output out(c.out);
    spdlog::info("mode {} on {} seed(s)", c.mode, c.seeds.size());
    if (c.mode == "stress") return run_stress(c, out, false);
    if (c.mode == "audit-replay") return run_stress(c, out, true);
    if (c.mode == "explore") return run_explore(c, out);
    if (c.mode == "bench") return run_bench(c, out);
    throw ConfigError(fmt::format("unknown mode '{}'", c.mode));
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitConfig;
  }
}
