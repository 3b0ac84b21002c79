#pragma once

#include <memory>
#include <vector>

#include "rme/reclaim/reclaimer.hpp"
#include "rme/sim/system.hpp"

namespace rme {

struct WorkloadConfig {
  int n = 2;
  Variant variant = Variant::kDsm;
  Mutation mutation = Mutation::kNone;
  std::uint32_t payload_words = 4;
  /// Stop after this many completed retires per process; 0 runs forever.
  std::uint64_t max_passages = 0;
  /// NCS lasts a seed-chosen number of idle steps in [0, max_ncs].
  std::uint32_t max_ncs = 3;
  /// Explorer mode: empty NCS and peer = next process, so the program has no
  /// randomness of its own.
  bool deterministic = false;
  /// Drop the lock and the publication board; each passage is just
  /// new_node followed by retire.
  bool reclaim_only = false;
};

struct Workload {
  std::shared_ptr<System> system;
  ReclaimRoutines routines;
  RoutineId loop{};
};

/// Builds the five-segment process loop around the test lock, the
/// publication board and the reclaimer, for every process.
Workload build_workload(const WorkloadConfig& config);

/// One scripted call: `op` on broadcast object `obj` with argument `x`, or a
/// reclamation method (obj and x unused).
struct ScriptOp {
  OpName op = OpName::kBRead;
  std::uint32_t obj = 0;
  Word x = 0;
};

struct ScriptConfig {
  int n = 2;
  Variant variant = Variant::kDsm;
  Mutation mutation = Mutation::kNone;
  /// Number of broadcast objects; object k is written by process k+1.
  std::uint32_t objects = 1;
  /// Also wire the reclaimer so new_node / retire may be scripted.
  bool with_reclaimer = false;
  std::vector<std::vector<ScriptOp>> scripts;   // scripts[p-1] for process p
};

/// One broadcast object written by process 1. The writer performs
/// bset(1..rounds); every other process repeatedly reads the counter and
/// waits for the next value, with seed-chosen pauses so that waiters pile up
/// into wakeup chains. The pending wait argument is persistent, so a crashed
/// wait is re-executed with the same argument.
struct BroadcastStressConfig {
  int n = 2;
  Variant variant = Variant::kDsm;
  Mutation mutation = Mutation::kNone;
  std::uint64_t rounds = 50;
  std::uint32_t max_pause = 3;
};

std::shared_ptr<System> build_broadcast_stress(const BroadcastStressConfig& config);

/// Processes run fixed operation lists. A persistent progress counter makes
/// each operation re-executed in full after a crash that interrupts it.
std::shared_ptr<System> build_script(const ScriptConfig& config);

}  // namespace rme
