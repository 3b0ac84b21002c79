#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rme/audit/violation.hpp"
#include "rme/sim/machine.hpp"
#include "rme/sim/trace.hpp"

namespace rme {

struct ExploreBounds {
  /// Crashes allowed per path; each may hit any running process at any step
  /// boundary.
  std::uint32_t crash_budget = 0;
  /// Distinct states before the report is truncated.
  std::uint64_t max_states = 5'000'000;
  /// Keep expanding states past a violation (reports every violation kind
  /// reachable, not just the first).
  bool continue_after_violation = true;
  /// Called once for every distinct terminal state (all processes done).
  std::function<void(const Machine&)> on_terminal;
};

/// One transition: a step of `pid`, or a crash of `pid` immediately
/// followed by its recovery.
struct Transition {
  Pid pid = 0;
  bool crash = false;
};

struct Counterexample {
  Violation violation;
  std::vector<Transition> path;
  Trace trace;
};

struct ExplorationReport {
  std::uint64_t states = 0;
  std::uint64_t transitions = 0;
  std::uint64_t terminal_states = 0;
  std::uint64_t paths = 0;          // complete interleavings, saturating
  bool paths_saturated = false;
  bool acyclic = true;              // false if some path revisits a state
  bool truncated = false;
  std::uint64_t max_depth = 0;
  std::map<std::string, std::uint64_t> violations;   // kind -> states exposing it
  std::vector<Counterexample> counterexamples;       // first one per kind
  std::set<std::string> crash_points;                // "routine@pc" crashed at least once

  std::uint64_t violation_count() const;
  bool clean() const { return violations.empty() && !truncated; }
};

/// Exhaustive depth-first enumeration of every interleaving of `system`
/// (plus up to crash_budget crash insertions), deduplicating states by a
/// 128-bit digest of the full machine state.
///
/// A step that leaves the state unchanged (a spin re-reading an unchanged
/// value) is a stutter and not a distinct path. A state where every
/// unfinished process can only stutter is reported as a lost wakeup.
ExplorationReport explore(std::shared_ptr<const System> system, const ExploreBounds& bounds);

/// Re-executes `path` on a fresh machine with tracing on.
Trace replay_path(std::shared_ptr<const System> system, const std::vector<Transition>& path);

std::string to_json(const ExplorationReport& report);

}  // namespace rme
