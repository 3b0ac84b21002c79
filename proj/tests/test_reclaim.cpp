#include <doctest.h>

#include <set>

#include "rme/explore/explorer.hpp"
#include "rme/reclaim/reclaimer.hpp"
#include "support.hpp"

using namespace rme;
using namespace rme::test;

namespace {

constexpr ScriptOp kNew{OpName::kNewNode, 0, 0};
constexpr ScriptOp kRet{OpName::kRetire, 0, 0};

std::shared_ptr<System> script(std::vector<std::vector<ScriptOp>> s) {
  ScriptConfig c;
  c.n = static_cast<int>(s.size());
  c.with_reclaimer = true;
  c.scripts = std::move(s);
  return build_script(c);
}

std::vector<ScriptOp> passages(int k) {
  std::vector<ScriptOp> out;
  for (int i = 0; i < k; ++i) {
    out.push_back(kNew);
    out.push_back(kRet);
  }
  return out;
}

Word var(const Machine& m, Pid p, VarKind kind, std::uint32_t idx = 0) {
  return m.process(p).vars[raw(m.system().var_slot(kind, idx))];
}

Word start_of(const Machine& m, Pid p) { return m.memory().value(m.system().directory().reclaim_of(p)->start); }

Word finish_of(const Machine& m, Pid p) {
  const auto& dir = m.system().directory();
  return m.memory().value(dir.broadcast(dir.reclaim_of(p)->finish).count);
}

std::vector<NodeId> returned_nodes(const Rig& r, Pid p) {
  std::vector<NodeId> out;
  for (const auto& e : r.annotations(Tag::kReturn, p)) {
    if (e.arg[0] == static_cast<Word>(OpName::kNewNode)) out.push_back(static_cast<NodeId>(e.arg[1]));
  }
  return out;
}

std::vector<Word> step_indices(const Rig& r, Pid p) {
  std::vector<Word> out;
  for (const auto& e : r.annotations(Tag::kCall, p)) {
    if (e.arg[0] == static_cast<Word>(OpName::kStep)) out.push_back(e.arg[1]);
  }
  return out;
}

Event access(Pid p, NodeId node, std::uint64_t seq) {
  Event e;
  e.seq = seq;
  e.pid = p;
  e.kind = EventKind::kAnnotation;
  e.tag = Tag::kAccess;
  e.arg[0] = raw(node);
  return e;
}

}  // namespace

TEST_CASE("two new_node calls with no retire between return the same node") {
  Rig r(script({{kNew, kNew}, {}}));
  r.finish(1);
  const auto got = returned_nodes(r, 1);
  REQUIRE(got.size() == 2);
  CHECK(got[0] == got[1]);
  CHECK(step_indices(r, 1).size() == 1);
  CHECK(r.m.audit().clean());
}

TEST_CASE("the first new_node takes one snapshot step and returns a pool-0 node") {
  Rig r(script({{kNew}, {}}));
  r.finish(1);
  CHECK(start_of(r.m, 1) == 1);
  CHECK(step_indices(r, 1) == std::vector<Word>{1});
  CHECK(var(r.m, 1, VarKind::kSnapshot, 1) == 0);
  CHECK(var(r.m, 1, VarKind::kIndex) == 2);
  const auto got = returned_nodes(r, 1);
  REQUIRE(got.size() == 1);
  const auto& node = r.m.system().directory().node(got[0]);
  CHECK(node.owner == 1);
  CHECK(node.pool == 0);
  CHECK(r.m.audit().reclaim().stage(got[0]) == Stage::kAllocated);
}

TEST_CASE("crash between step and the start increment, then re-execution") {
  Rig r(script({{kNew, kRet, kNew}, {}}));
  REQUIRE(r.step_until(1, [](const Machine& m) { return m.point(1) == "step@3"; }));
  r.m.crash(1);
  r.finish(1);
  CHECK(returned_nodes(r, 1).size() == 2);
  CHECK(start_of(r.m, 1) == 2);
  CHECK(r.m.audit().clean());

  // Every crash point of the same script, at both sizes.
  for (int n : {2, 3}) {
    std::vector<std::vector<ScriptOp>> s{{kNew, kRet, kNew, kRet}};
    for (int p = 2; p <= n; ++p) s.push_back({kNew, kRet});
    ExploreBounds b;
    b.crash_budget = 1;
    const auto report = explore(script(s), b);
    CAPTURE(n);
    CHECK_FALSE(report.truncated);
    CHECK(report.clean());
    CHECK(report.crash_points.count("step@3") == 1);
  }
}

TEST_CASE("retire") {
  SUBCASE("after new_node the finish counter catches up") {
    Rig r(script({{kNew, kRet}, {}}));
    r.finish(1);
    CHECK(start_of(r.m, 1) == 1);
    CHECK(finish_of(r.m, 1) == 1);
    CHECK(r.m.audit().reclaim().stage(returned_nodes(r, 1)[0]) == Stage::kRetired);
  }
  SUBCASE("a second retire changes nothing") {
    Rig r(script({{kNew, kRet, kRet}, {}}));
    r.finish(1);
    CHECK(finish_of(r.m, 1) == 1);
    for (const auto& e : call_window(r.trace, 1, OpName::kRetire, 1)) {
      CHECK(e.kind != EventKind::kWrite);
      CHECK(e.kind != EventKind::kCas);
    }
    CHECK(r.m.audit().clean());
  }
  SUBCASE("at the initial state it is a no-op") {
    Rig r(script({{kRet}, {}}));
    r.finish(1);
    CHECK(finish_of(r.m, 1) == 0);
    for (const auto& e : call_window(r.trace, 1, OpName::kRetire)) {
      CHECK(e.kind != EventKind::kWrite);
      CHECK(e.kind != EventKind::kCas);
    }
    CHECK(r.m.audit().clean());
  }
}

TEST_CASE("n=2: six steps visit branches a, a, b, b, c, d and index returns to 1") {
  Rig r(script({passages(6), {}}));
  r.finish(1);
  CHECK(step_indices(r, 1) == std::vector<Word>{1, 2, 3, 4, 5, 6});
  CHECK(var(r.m, 1, VarKind::kIndex) == 1);
  CHECK(var(r.m, 1, VarKind::kCurrentPool) == 1);
  CHECK(var(r.m, 1, VarKind::kBackupPool) == 0);
  CHECK(r.annotations(Tag::kPoolSwap, 1).size() == 1);
  CHECK(r.annotations(Tag::kIndexReset, 1).size() == 1);
  // Branch b waits for the peer only; index 3 is p1 itself.
  CHECK_FALSE(call_window(r.trace, 1, OpName::kStep, 2).empty());
  for (const auto& e : call_window(r.trace, 1, OpName::kStep, 2)) CHECK(e.kind == EventKind::kPersist);
  std::size_t bwaits = 0;
  for (const auto& e : r.annotations(Tag::kCall, 1)) bwaits += e.arg[0] == static_cast<Word>(OpName::kBWait);
  CHECK(bwaits == 1);
  CHECK(r.m.audit().clean());
}

TEST_CASE("branch b against a peer parked in NCS returns without spinning") {
  Rig r(script({passages(4), passages(1)}));
  r.finish(2);
  r.finish(1);
  CHECK(start_of(r.m, 2) == finish_of(r.m, 2));
  CHECK(var(r.m, 1, VarKind::kSnapshot, 2) == 1);
  const auto w = call_window(r.trace, 1, OpName::kBWait);
  const auto& target = r.m.system().directory().broadcast(r.m.system().directory().reclaim_of(2)->finish).target[1];
  CHECK(std::count_if(w.begin(), w.end(), [&](const Event& e) {
          return e.kind == EventKind::kRead && e.cell == raw(target);
        }) == 1);
}

TEST_CASE("audit_access") {
  const int n = 2;
  Rig r(script({passages(4 * static_cast<int>(pool_size(n))), {}}));
  const auto& dir = r.m.system().directory();
  const NodeId first = pool_node(dir, 1, 0, 2);
  const auto& reclaim = r.m.audit().reclaim();

  REQUIRE(r.step_until(1, [&](const Machine& m) { return m.audit().reclaim().stage(first) == Stage::kAllocated; }));
  SUBCASE("peer reads an allocated node") {
    r.m.audit().observe(access(2, first, r.m.events()));
    CHECK(r.m.audit().clean());
  }
  SUBCASE("peer reads a free node") {
    r.m.audit().observe(access(2, pool_node(dir, 1, 1, 1), r.m.events()));
    CHECK(r.count(ViolationKind::kSafeReclamation) == 1);
  }
  SUBCASE("after reclamation") {
    REQUIRE(r.step_until(1, [&](const Machine&) { return reclaim.stage(first) == Stage::kReclaimed; }));
    r.m.audit().observe(access(1, first, r.m.events()));
    CHECK(r.m.audit().clean());
    r.m.audit().observe(access(2, first, r.m.events()));
    CHECK(r.count(ViolationKind::kSafeReclamation) == 1);
  }
}

TEST_CASE("each process owns exactly 2(2n+2) distinct nodes") {
  for (int n = 1; n <= 8; ++n) {
    CAPTURE(n);
    const auto w = build_workload(WorkloadConfig{.n = n});
    const auto& dir = w.system->directory();
    for (Pid p = 1; p <= static_cast<Pid>(n); ++p) {
      std::set<std::pair<std::uint32_t, std::uint32_t>> slots;
      std::set<std::uint32_t> ids;
      for (const auto& node : dir.nodes) {
        if (node.owner != p) continue;
        slots.insert({node.pool, node.pos});
        ids.insert(raw(node.id));
      }
      CHECK(ids.size() == 2 * (2 * static_cast<std::size_t>(n) + 2));
      CHECK(slots.size() == ids.size());
      for (std::uint32_t pool = 0; pool < 2; ++pool) {
        for (std::uint32_t pos = 1; pos <= pool_size(n); ++pos) CHECK(ids.count(raw(pool_node(dir, p, pool, pos))) == 1);
      }
    }
    CHECK(dir.nodes.size() == static_cast<std::size_t>(n) * 2 * pool_size(n));
  }
}

TEST_CASE("between pool swaps every new_node hands out a different node") {
  for (int n : {2, 3, 5}) {
    CAPTURE(n);
    const auto w = build_workload(WorkloadConfig{.n = n, .max_passages = 60});
    Rig r(w.system, 11);
    r.finish_all();
    REQUIRE(r.m.all_done());
    CHECK(r.m.audit().clean());
    for (Pid p = 1; p <= static_cast<Pid>(n); ++p) {
      std::set<Word> window;
      std::size_t swaps = 0;
      for (const auto& e : r.trace) {
        if (e.pid != p) continue;
        if (e.is_annotation(Tag::kPoolSwap)) {
          window.clear();
          ++swaps;
        } else if (e.is_annotation(Tag::kReturn) && e.arg[0] == static_cast<Word>(OpName::kNewNode)) {
          CHECK(window.insert(e.arg[1]).second);
        }
      }
      CHECK(swaps >= 60 / (pool_size(n)) - 1);
    }
  }
}

TEST_CASE("without the grace-period wait a peer's live reference is reclaimed") {
  auto build = [](Mutation m) {
    return build_workload(WorkloadConfig{.n = 2, .mutation = m, .deterministic = true}).system;
  };
  auto park_reader = [](Rig& r) {
    // p1 publishes its node; p2 reads the slot and stops right before
    // dereferencing it.
    REQUIRE(r.step_until(1, [](const Machine& m) { return m.point(1) == "passage@7"; }));
    REQUIRE(r.step_until(2, [](const Machine& m) {
      return m.point(2) == "passage@8" && m.process(2).frames.back().r[0] != 0;
    }));
    return static_cast<NodeId>(r.m.process(2).frames.back().r[0]);
  };

  SUBCASE("mutant") {
    Rig r(build(Mutation::kSkipGraceWait));
    const NodeId held = park_reader(r);
    CHECK(r.m.system().directory().node(held).owner == 1);
    REQUIRE(r.step_until(1, [&](const Machine& m) { return m.audit().reclaim().stage(held) == Stage::kReclaimed; }));
    r.m.step(2);
    CHECK(r.count(ViolationKind::kSafeReclamation) == 1);
  }
  SUBCASE("faithful") {
    Rig r(build(Mutation::kNone));
    const NodeId held = park_reader(r);
    CHECK_FALSE(r.step_until(1, [&](const Machine& m) { return m.audit().reclaim().stage(held) == Stage::kReclaimed; },
                             20000));
    CHECK(r.m.point(1).rfind("bwait@", 0) == 0);
    r.m.step(2);
    CHECK(r.m.audit().clean());
  }
}
