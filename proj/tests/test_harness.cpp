#include <doctest.h>

#include <json.hpp>

#include "rme/explore/explorer.hpp"
#include "rme/harness/campaign.hpp"
#include "support.hpp"

using namespace rme;
using namespace rme::test;

namespace {

RunSpec spec(int n, std::uint64_t seed, double crash_prob, std::uint64_t events) {
  RunSpec s;
  s.workload.n = n;
  s.schedule.n = n;
  s.schedule.seed = seed;
  s.schedule.max_events = events;
  if (crash_prob > 0) {
    s.schedule.crash.mode = CrashMode::kRandom;
    s.schedule.crash.probability = crash_prob;
  }
  return s;
}

Directory header(const Trace& t) {
  std::size_t len = 0;
  return Directory::from_header(t, len);
}

Event segment(std::uint64_t seq, Pid p, EventKind kind, Segment s) {
  Event e;
  e.seq = seq;
  e.pid = p;
  e.kind = kind;
  e.arg[0] = static_cast<Word>(s);
  return e;
}

std::size_t count(const ViolationList& v, ViolationKind kind) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](const auto& x) { return x.kind == kind; }));
}

std::vector<Pid> cs_entries(const Trace& t) {
  std::vector<Pid> out;
  for (const auto& e : t) {
    if (e.kind == EventKind::kSegmentEnter && static_cast<Segment>(e.arg[0]) == Segment::kCs) out.push_back(e.pid);
  }
  return out;
}

}  // namespace

TEST_CASE("n=1, no crashes, 10 passages") {
  auto s = spec(1, 1, 0, 1'000'000);
  s.workload.max_passages = 10;
  s.keep_trace = true;
  const auto r = run_workload(s);
  CHECK(r.result.completed);
  CHECK(r.clean());
  CHECK(cs_entries(r.trace).size() == 10);
  CHECK(r.stats.procs.at(0).passages == 10);
  CHECK(r.stats.procs.at(0).crashes == 0);
}

TEST_CASE("n=4 with crashes keeps mutual exclusion and safe reclamation") {
  for (std::uint64_t seed : {1, 2, 3}) {
    CAPTURE(seed);
    auto s = spec(4, seed, 0.01, 100'000);
    s.keep_trace = true;
    const auto r = run_workload(s);
    CHECK(r.result.events >= 100'000);
    CHECK(r.result.crashes > 0);
    CHECK(r.clean());
    CHECK(count(check_me(r.trace), ViolationKind::kMutualExclusion) == 0);
    CHECK(r.pool_swap_checks > 0);
    for (const auto& p : r.stats.procs) CHECK(p.passages > 0);
  }
}

TEST_CASE("a process that crashes in CS is the next to enter CS") {
  auto s = spec(3, 5, 0, 20'000);
  s.schedule.crash.mode = CrashMode::kTargeted;
  s.schedule.crash.sites = {{2, "passage@13", 2}};
  s.keep_trace = true;
  const auto r = run_workload(s);
  CHECK(r.clean());
  CHECK(r.result.crashes == 1);
  bool crashed = false;
  bool checked = false;
  Pid in_cs = 0;
  for (const auto& e : r.trace) {
    if (e.kind == EventKind::kSegmentEnter && static_cast<Segment>(e.arg[0]) == Segment::kCs) {
      if (crashed && !checked) {
        CHECK(e.pid == 2);
        checked = true;
      }
      in_cs = e.pid;
    } else if (e.kind == EventKind::kCrash) {
      CHECK(e.pid == 2);
      CHECK(in_cs == 2);
      crashed = true;
    } else if (e.kind == EventKind::kSegmentExit && static_cast<Segment>(e.arg[0]) == Segment::kCs) {
      in_cs = 0;
    }
  }
  CHECK(checked);
}

TEST_CASE("every Exit clears the publication slot before retire") {
  auto s = spec(3, 9, 0.005, 50'000);
  s.keep_trace = true;
  const auto r = run_workload(s);
  REQUIRE(r.clean());
  const auto dir = header(r.trace);
  std::vector<bool> in_exit(4, false), cleared(4, false);
  std::size_t retires = 0;
  for (const auto& e : r.trace) {
    if (e.pid == kHarness) continue;
    const bool exit_seg = static_cast<Segment>(e.arg[0]) == Segment::kExit;
    if (e.kind == EventKind::kSegmentEnter && exit_seg) {
      in_exit[e.pid] = true;
      cleared[e.pid] = false;
    } else if ((e.kind == EventKind::kSegmentExit && exit_seg) || e.kind == EventKind::kCrash) {
      in_exit[e.pid] = false;
    } else if (in_exit[e.pid] && e.kind == EventKind::kWrite && dir.cell(e.cell).role == CellRole::kSlot &&
               e.new_value == 0) {
      cleared[e.pid] = true;
    } else if (in_exit[e.pid] && e.is_annotation(Tag::kCall) && e.arg[0] == static_cast<Word>(OpName::kRetire)) {
      CHECK(cleared[e.pid]);
      ++retires;
    }
  }
  CHECK(retires > 100);
}

TEST_CASE("check_me") {
  SUBCASE("serialized intervals") {
    Trace t;
    std::uint64_t seq = 0;
    for (Pid p : {1, 2, 1, 3}) {
      t.on_event(segment(++seq, p, EventKind::kSegmentEnter, Segment::kCs));
      t.on_event(segment(++seq, p, EventKind::kSegmentExit, Segment::kCs));
    }
    CHECK(check_me(t).empty());
  }
  SUBCASE("forged overlap") {
    Trace t;
    t.on_event(segment(1, 1, EventKind::kSegmentEnter, Segment::kCs));
    t.on_event(segment(2, 2, EventKind::kSegmentEnter, Segment::kCs));
    t.on_event(segment(3, 2, EventKind::kSegmentExit, Segment::kCs));
    t.on_event(segment(4, 1, EventKind::kSegmentExit, Segment::kCs));
    const auto v = check_me(t);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == ViolationKind::kMutualExclusion);
    CHECK(v[0].seq == 2);
  }
  SUBCASE("a crash ends the interval") {
    Trace t;
    t.on_event(segment(1, 1, EventKind::kSegmentEnter, Segment::kCs));
    Event c;
    c.seq = 2;
    c.pid = 1;
    c.kind = EventKind::kCrash;
    t.on_event(c);
    t.on_event(segment(3, 2, EventKind::kSegmentEnter, Segment::kCs));
    CHECK(check_me(t).empty());
  }
  SUBCASE("every explored path at n=2") {
    const auto w = build_workload(WorkloadConfig{.n = 2, .max_passages = 1, .deterministic = true});
    ExploreBounds b;
    std::uint64_t terminals = 0;
    b.on_terminal = [&](const Machine& m) {
      ++terminals;
      CHECK(m.audit().clean());
    };
    const auto report = explore(w.system, b);
    CHECK(report.violations.count("mutual-exclusion") == 0);
    CHECK(report.clean());
    CHECK(terminals > 0);
  }
}

TEST_CASE("liveness") {
  SUBCASE("crash-free n=2 run has no stalls") {
    auto s = spec(2, 4, 0, 50'000);
    s.keep_trace = true;
    const auto r = run_workload(s);
    CHECK(r.clean());
    const auto cfg = liveness_config(header(r.trace).config, s.patience);
    CHECK(check_liveness(r.trace, cfg).empty());
  }
  SUBCASE("Exit and Recover stay within their step budgets") {
    for (int n : {2, 5}) {
      auto s = spec(n, 7, 0.01, 60'000);
      s.keep_trace = true;
      const auto r = run_workload(s);
      CHECK(r.clean());
      const auto cfg = liveness_config(header(r.trace).config, s.patience);
      // Independent count of own memory and persist steps per segment.
      std::vector<std::uint64_t> steps(static_cast<std::size_t>(n) + 1, 0);
      std::vector<int> seg(static_cast<std::size_t>(n) + 1, -1);
      std::uint64_t worst_exit = 0;
      std::uint64_t worst_recover = 0;
      std::size_t exits = 0;
      for (const auto& e : r.trace) {
        if (e.pid == kHarness) continue;
        const auto s_of = static_cast<Segment>(e.arg[0]);
        if (e.kind == EventKind::kSegmentEnter && (s_of == Segment::kExit || s_of == Segment::kRecover)) {
          seg[e.pid] = static_cast<int>(s_of);
          steps[e.pid] = 0;
        } else if (e.kind == EventKind::kSegmentExit && seg[e.pid] == static_cast<int>(s_of)) {
          if (s_of == Segment::kExit) {
            worst_exit = std::max(worst_exit, steps[e.pid]);
            ++exits;
          } else {
            worst_recover = std::max(worst_recover, steps[e.pid]);
          }
          seg[e.pid] = -1;
        } else if (e.kind == EventKind::kCrash) {
          seg[e.pid] = -1;
        } else if (seg[e.pid] >= 0 && (is_memory_op(e.kind) || e.kind == EventKind::kPersist)) {
          ++steps[e.pid];
        }
      }
      CAPTURE(n);
      CHECK(exits > 0);
      CHECK(worst_exit <= cfg.exit_budget);
      CHECK(worst_recover <= cfg.recover_budget);
      CHECK(check_liveness(r.trace, cfg).empty());
    }
  }
  SUBCASE("a tightened exit budget is enforced") {
    auto s = spec(2, 4, 0, 5'000);
    s.keep_trace = true;
    const auto r = run_workload(s);
    auto cfg = liveness_config(header(r.trace).config, s.patience);
    cfg.exit_budget = 1;
    CHECK(count(check_liveness(r.trace, cfg), ViolationKind::kStepBudget) > 0);
  }
  SUBCASE("a lock that is never released stalls the others") {
    auto s = spec(2, 3, 0, 20'000);
    s.workload.mutation = Mutation::kNeverReleaseLock;
    s.patience = 2'000;
    const auto r = run_workload(s);
    CHECK(count(r.violations, ViolationKind::kStarvation) >= 1);
  }
}

TEST_CASE("stats report as JSON") {
  auto s = spec(3, 2, 0.01, 20'000);
  const auto r = run_workload(s);
  const auto j = nlohmann::json::parse(r.stats.to_json());
  CHECK(j["n"] == 3);
  REQUIRE(j["processes"].size() == 3);
  for (const auto& p : j["processes"]) {
    CHECK(p.contains("passages"));
    CHECK(p.contains("crashes"));
    CHECK(p.contains("pool_swaps"));
    for (const char* cat : {"lock", "reclaim", "bcast", "work"}) {
      CHECK(p["rmr"][cat].contains("cc"));
      CHECK(p["rmr"][cat].contains("dsm"));
    }
  }
  for (const char* op : {"new_node", "retire", "bset", "bread"}) CHECK(j["max_op_rmr"].contains(op));
  CHECK(j["violations"] == 0);
  CHECK(j["passages_measured"].get<std::uint64_t>() > 0);
  const auto dsm_only = nlohmann::json::parse(r.stats.to_json(RmrModel::kDsm));
  CHECK_FALSE(dsm_only["max_passage_reclaim_rmr"].contains("cc"));
  CHECK(dsm_only["max_passage_reclaim_rmr"].contains("dsm"));
}
