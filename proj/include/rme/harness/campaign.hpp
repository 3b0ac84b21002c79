#pragma once

#include <string>

#include "rme/harness/liveness.hpp"
#include "rme/harness/stats.hpp"
#include "rme/harness/workload.hpp"
#include "rme/sim/schedule.hpp"

namespace rme {

struct RunSpec {
  WorkloadConfig workload;
  ScheduleConfig schedule;   // schedule.n must equal workload.n
  std::uint64_t patience = 20000;
  bool keep_trace = false;
};

struct RunReport {
  RunResult result;
  StatsReport stats;
  ViolationList violations;   // auditors, then liveness
  Trace trace;                // empty unless keep_trace
  std::uint64_t pool_swap_checks = 0;

  bool clean() const { return violations.empty(); }
};

/// One seeded run of the process loop with every auditor, the liveness
/// monitor and the statistics collector attached.
RunReport run_workload(const RunSpec& spec);

struct ReplayReport {
  SystemConfig config;
  std::uint64_t events = 0;   // header included
  StatsReport stats;
  ViolationList violations;
  RmrAccount rmr;             // recomputed from the memory events
};

/// Re-runs every auditor and the liveness monitor over a stored trace. RMR
/// charges are recomputed by replaying the memory events against a fresh
/// memory built from the header. Throws ConfigError if the trace is not
/// self-consistent (gaps in seq, values that memory would not produce).
ReplayReport replay_trace(const Trace& trace, std::uint64_t patience);

std::string to_json(const ViolationList& violations);

}  // namespace rme
