#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <vector>

#include "rme/harness/workload.hpp"
#include "rme/sim/machine.hpp"

namespace rme::test {

/// A machine with a trace attached, started.
struct Rig {
  explicit Rig(std::shared_ptr<const System> sys, std::uint64_t seed = 0) : m(std::move(sys), seed) {
    m.add_sink(&trace);
    m.start();
  }
  Rig(const Rig&) = delete;

  Machine m;
  Trace trace;

  /// Steps p until `pred` holds or p is done; returns whether pred held.
  bool step_until(Pid p, const std::function<bool(const Machine&)>& pred, int limit = 100000) {
    for (int k = 0; k < limit; ++k) {
      if (pred(m)) return true;
      if (m.status(p) == ProcStatus::kDone) return false;
      m.step(p);
    }
    return pred(m);
  }
  void finish(Pid p, int limit = 100000) {
    step_until(p, [&](const Machine& mm) { return mm.status(p) == ProcStatus::kDone; }, limit);
  }
  /// Round-robin until every process is done.
  void finish_all(int limit = 1000000) {
    for (int k = 0; k < limit && !m.all_done(); ++k) {
      for (Pid p = 1; p <= static_cast<Pid>(m.n()); ++p) {
        if (m.status(p) != ProcStatus::kDone) m.step(p);
      }
    }
  }
  Word cell(CellId c) const { return m.memory().value(c); }

  std::vector<Event> events_of(EventKind kind) const {
    std::vector<Event> out;
    for (const auto& e : trace) {
      if (e.kind == kind) out.push_back(e);
    }
    return out;
  }
  std::vector<Event> annotations(Tag tag, Pid pid = 0) const {
    std::vector<Event> out;
    for (const auto& e : trace) {
      if (e.is_annotation(tag) && (pid == 0 || e.pid == pid)) out.push_back(e);
    }
    return out;
  }
  std::size_t count(ViolationKind kind) const {
    const auto& v = m.audit().violations();
    return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](const auto& x) { return x.kind == kind; }));
  }
};

/// Events of p between the call note and the matching return note of the
/// k-th call of `op` (0-based).
inline std::vector<Event> call_window(const Trace& t, Pid p, OpName op, int k = 0) {
  std::vector<Event> out;
  int seen = -1;
  int depth = 0;
  for (const auto& e : t) {
    if (e.pid != p) continue;
    if (e.is_annotation(Tag::kCall) && e.arg[0] == static_cast<Word>(op)) {
      if (depth == 0 && ++seen == k) depth = 1;
      else if (depth > 0) ++depth;
      continue;
    }
    if (depth > 0 && e.is_annotation(Tag::kReturn) && e.arg[0] == static_cast<Word>(op)) {
      if (--depth == 0) return out;
      continue;
    }
    if (depth > 0) out.push_back(e);
  }
  return out;
}

inline std::uint64_t dsm_cost(const std::vector<Event>& events) {
  std::uint64_t total = 0;
  for (const auto& e : events) total += e.dsm_rmr;
  return total;
}

inline std::uint64_t cc_cost(const std::vector<Event>& events) {
  std::uint64_t total = 0;
  for (const auto& e : events) total += e.cc_rmr;
  return total;
}

}  // namespace rme::test
