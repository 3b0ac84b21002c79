#include "rme/harness/liveness.hpp"

#include <fmt/format.h>

namespace rme {

std::uint64_t retire_call_steps(const SystemConfig& config) {
  // Marker persists, start read and count read, then bset when the guard
  // holds: CC writes count; DSM writes interim, scans announce[j] with a
  // wakeup write and a re-read per waiter, releases the head, writes count.
  if (config.variant == Variant::kCc) return 2 + 2 + 1;
  return 2 + 2 + 3 * static_cast<std::uint64_t>(config.n - 1) + 3;
}

LivenessConfig liveness_config(const SystemConfig& config, std::uint64_t patience) {
  LivenessConfig c;
  c.patience = patience;
  c.exit_budget = 2 + retire_call_steps(config);
  c.recover_budget = 1 + retire_call_steps(config);
  return c;
}

LivenessMonitor::LivenessMonitor(int n, LivenessConfig config)
    : config_(config), procs_(static_cast<std::size_t>(n) + 1) {}

void LivenessMonitor::on_event(const Event& e) {
  last_seq_ = e.seq;
  if (e.pid == kHarness || e.pid >= procs_.size()) return;
  auto& p = procs_[e.pid];
  if (is_memory_op(e.kind) || e.kind == EventKind::kPersist) {
    if (p.counting) ++p.steps;
    return;
  }
  switch (e.kind) {
    case EventKind::kCrash:
      p.counting = false;
      return;
    case EventKind::kSegmentEnter: {
      const auto s = static_cast<Segment>(e.arg[0]);
      if (s == Segment::kCs) p.waiting = false;
      p.counting = s == Segment::kExit || s == Segment::kRecover;
      p.segment = s;
      p.steps = 0;
      return;
    }
    case EventKind::kSegmentExit: {
      const auto s = static_cast<Segment>(e.arg[0]);
      if (s == Segment::kNcs) {
        p.waiting = true;
        p.since = e.seq;
      }
      if (p.counting && s == p.segment) {
        const auto budget = s == Segment::kExit ? config_.exit_budget : config_.recover_budget;
        if (p.steps > budget) {
          out_.push_back({ViolationKind::kStepBudget, e.seq, e.pid,
                          fmt::format("{} took {} steps, budget {}", name_of(s), p.steps, budget)});
        }
        p.counting = false;
      }
      return;
    }
    default:
      return;
  }
}

ViolationList LivenessMonitor::finish() {
  for (Pid pid = 1; pid < procs_.size(); ++pid) {
    const auto& p = procs_[pid];
    if (p.waiting && last_seq_ - p.since > config_.patience) {
      out_.push_back({ViolationKind::kStarvation, last_seq_, pid,
                      fmt::format("left NCS at seq {} and has not entered CS", p.since)});
    }
  }
  return out_;
}

ViolationList check_liveness(const Trace& trace, const LivenessConfig& config) {
  std::size_t header = 0;
  const Directory dir = Directory::from_header(trace, header);
  LivenessMonitor m(dir.n(), config);
  for (const auto& e : trace) m.on_event(e);
  return m.finish();
}

ViolationList check_me(const Trace& trace) {
  ViolationList out;
  std::vector<Pid> inside;
  auto drop = [&](Pid p) { std::erase(inside, p); };
  for (const auto& e : trace) {
    if (e.kind == EventKind::kCrash) {
      drop(e.pid);
      continue;
    }
    const bool enter = e.kind == EventKind::kSegmentEnter;
    if (!enter && e.kind != EventKind::kSegmentExit) continue;
    if (static_cast<Segment>(e.arg[0]) != Segment::kCs) continue;
    if (!enter) {
      drop(e.pid);
      continue;
    }
    if (!inside.empty()) {
      out.push_back({ViolationKind::kMutualExclusion, e.seq, e.pid,
                     fmt::format("entered CS while p{} is inside", inside.front())});
    }
    drop(e.pid);
    inside.push_back(e.pid);
  }
  return out;
}

}  // namespace rme
