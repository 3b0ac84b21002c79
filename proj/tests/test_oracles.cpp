#include <doctest.h>

#include <map>
#include <set>
#include <sstream>

#include "rme/harness/campaign.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace rme;
using namespace rme::test;

namespace {

/// Worst completed call per operation; a crash abandons every open call.
std::map<std::string, RmrPair> worst_calls(const Trace& t) {
  std::map<Pid, std::vector<std::pair<Word, RmrPair>>> open;
  std::map<std::string, RmrPair> worst;
  for (const auto& e : t) {
    if (e.pid == kHarness) continue;
    auto& stack = open[e.pid];
    if (e.kind == EventKind::kCrash) {
      stack.clear();
    } else if (is_memory_op(e.kind)) {
      for (auto& [op, cost] : stack) {
        cost.cc += e.cc_rmr;
        cost.dsm += e.dsm_rmr;
      }
    } else if (e.is_annotation(Tag::kCall)) {
      stack.push_back({e.arg[0], {}});
    } else if (e.is_annotation(Tag::kReturn)) {
      REQUIRE_FALSE(stack.empty());
      REQUIRE(stack.back().first == e.arg[0]);
      auto& w = worst[std::string{name_of(static_cast<OpName>(e.arg[0]))}];
      w.cc = std::max(w.cc, stack.back().second.cc);
      w.dsm = std::max(w.dsm, stack.back().second.dsm);
      stack.pop_back();
    }
  }
  return worst;
}

struct Sample {
  int n;
  Variant variant;
  std::uint64_t seed;
};

std::vector<Sample> samples() {
  std::vector<Sample> out;
  std::uint64_t seed = 100;
  for (int n : {2, 3, 4, 6, 8}) {
    for (Variant v : {Variant::kDsm, Variant::kCc}) {
      out.push_back({n, v, ++seed});
      out.push_back({n, v, ++seed});
    }
  }
  return out;
}

RunReport run_sample(const Sample& s, std::uint64_t events = 30'000) {
  RunSpec spec;
  spec.workload.n = s.n;
  spec.workload.variant = s.variant;
  spec.schedule.n = s.n;
  spec.schedule.seed = s.seed;
  spec.schedule.max_events = events;
  spec.schedule.crash.mode = CrashMode::kRandom;
  spec.schedule.crash.probability = 0.01;
  spec.keep_trace = true;
  return run_workload(spec);
}

}  // namespace

TEST_CASE("charges agree with the reference cost model on 20 traces") {
  const auto all = samples();
  REQUIRE(all.size() == 20);
  for (const auto& s : all) {
    CAPTURE(s.n);
    CAPTURE(s.seed);
    const auto r = run_sample(s);
    CHECK(r.clean());
    const auto ref = recount(r.trace);
    CHECK(ref.accesses > 1000);
    CHECK(ref.mismatches == 0);
    const auto replay = replay_trace(r.trace, 20000);
    CHECK(replay.rmr.cc == ref.cc);
    CHECK(replay.rmr.dsm == ref.dsm);
    for (std::size_t p = 1; p < ref.cc.size(); ++p) {
      std::uint64_t cc = 0, dsm = 0;
      for (const auto& c : r.stats.procs[p - 1].rmr) {
        cc += c.cc;
        dsm += c.dsm;
      }
      CHECK(cc == ref.cc[p]);
      CHECK(dsm == ref.dsm[p]);
    }
    const auto worst = worst_calls(r.trace);
    for (const auto& [op, w] : worst) {
      CAPTURE(op);
      REQUIRE(r.stats.max_op.count(op) == 1);
      CHECK(r.stats.max_op.at(op).cc == w.cc);
      CHECK(r.stats.max_op.at(op).dsm == w.dsm);
    }
    CHECK(worst.size() == r.stats.max_op.size());
  }
}

TEST_CASE("reference cost model on hand-built access patterns") {
  // p1 and p2 share a central cell and each own a local one.
  Rig r(build_script(ScriptConfig{.n = 2, .scripts = {{{OpName::kBRead, 0, 0}, {OpName::kBRead, 0, 0}}, {}}}));
  r.finish_all();
  const auto ref = recount(r.trace);
  CHECK(ref.mismatches == 0);
  // count[0] is homed at the writer: two local DSM reads, one CC miss.
  CHECK(ref.dsm[1] == 0);
  CHECK(ref.cc[1] == 1);
}

TEST_CASE("replay of a stored trace reproduces the live run") {
  const auto r = run_sample({3, Variant::kDsm, 77}, 40'000);
  std::stringstream ss;
  write_ndjson(r.trace, ss);
  Trace loaded;
  std::string line;
  while (std::getline(ss, line)) loaded.push_back(from_ndjson_line(line));
  const auto replay = replay_trace(loaded, 20000);
  CHECK(replay.violations.empty());
  CHECK(replay.events == r.trace.size());
  CHECK(replay.stats.to_json() == r.stats.to_json());
}

TEST_CASE("replay rejects traces memory could not have produced") {
  const auto r = run_sample({2, Variant::kDsm, 5}, 5'000);
  SUBCASE("altered value") {
    Trace t = r.trace;
    for (auto& e : t.events()) {
      if (e.kind == EventKind::kRead && e.new_value == 0 && e.seq > 100) {
        e.new_value = 41;
        e.old_value = 41;
        break;
      }
    }
    CHECK_THROWS_AS(replay_trace(t, 20000), ConfigError);
  }
  SUBCASE("gap in seq") {
    Trace t = r.trace;
    t.events().erase(t.events().begin() + static_cast<std::ptrdiff_t>(t.size() / 2));
    CHECK_THROWS_AS(replay_trace(t, 20000), ConfigError);
  }
  SUBCASE("altered charge") {
    Trace t = r.trace;
    for (auto& e : t.events()) {
      if (is_memory_op(e.kind)) {
        e.dsm_rmr ^= 1;
        break;
      }
    }
    // Charges are recomputed, never trusted.
    const auto replay = replay_trace(t, 20000);
    CHECK(replay.rmr.dsm == recount(r.trace).dsm);
  }
}
