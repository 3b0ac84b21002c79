#pragma once

#include <vector>

#include "rme/audit/violation.hpp"
#include "rme/sim/directory.hpp"
#include "rme/sim/trace.hpp"

namespace rme {

struct LivenessConfig {
  /// Events a process may wait between leaving NCS and entering CS.
  std::uint64_t patience = 20000;
  /// Own memory and persist steps allowed in one Exit / Recover segment.
  std::uint64_t exit_budget = 0;
  std::uint64_t recover_budget = 0;
};

/// Budgets from the straight-line length of the implementation: Exit is the
/// slot clear, the lock release and a marked retire; Recover is one owner
/// read plus, after a crash inside retire, a marked retire.
LivenessConfig liveness_config(const SystemConfig& config, std::uint64_t patience);

/// Own steps of one marked retire call (two marker persists included).
std::uint64_t retire_call_steps(const SystemConfig& config);

/// Starvation (bounded by patience) and bounded Exit / Recover.
class LivenessMonitor : public EventSink {
 public:
  LivenessMonitor(int n, LivenessConfig config);
  void on_event(const Event& e) override;
  /// Flags processes still waiting for CS at the end of the trace.
  ViolationList finish();
  const ViolationList& violations() const { return out_; }

 private:
  struct Proc {
    bool waiting = false;
    std::uint64_t since = 0;
    bool counting = false;
    Segment segment = Segment::kNcs;
    std::uint64_t steps = 0;
  };
  LivenessConfig config_;
  std::vector<Proc> procs_;
  std::uint64_t last_seq_ = 0;
  ViolationList out_;
};

ViolationList check_liveness(const Trace& trace, const LivenessConfig& config);

/// Overlapping CS intervals, from segment events alone. A crash ends the
/// crashed process's interval.
ViolationList check_me(const Trace& trace);

}  // namespace rme
