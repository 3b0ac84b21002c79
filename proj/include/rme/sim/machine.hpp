#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rme/audit/auditors.hpp"
#include "rme/sim/memory.hpp"
#include "rme/sim/state_hash.hpp"
#include "rme/sim/system.hpp"
#include "rme/sim/trace.hpp"

namespace rme {

enum class ProcStatus : std::uint8_t { kRunning, kCrashed, kDone };

struct Process {
  ProcStatus status = ProcStatus::kRunning;
  std::vector<Frame> frames;   // volatile
  std::vector<Word> vars;      // persistent
  std::uint64_t steps = 0;     // bookkeeping only, not part of the state
  std::uint32_t crashes = 0;
  std::uint64_t draws = 0;
};

class Machine;

/// The view of the machine a routine gets while it runs local code.
class Context {
 public:
  Context(Machine& m, Pid pid) : m_(m), pid_(pid) {}

  Pid pid() const { return pid_; }
  int n() const;
  const System& system() const;
  const Directory& directory() const;
  Mutation mutation() const;

  Word var(VarSlot s) const;
  Word var(VarKind kind, std::uint32_t idx = 0) const;
  VarSlot slot(VarKind kind, std::uint32_t idx = 0) const;

  void annotate(Tag tag, Word a0 = 0, Word a1 = 0, Word a2 = 0);
  void call_note(OpName op, Word a = 0, Word b = 0) { annotate(Tag::kCall, static_cast<Word>(op), a, b); }
  void return_note(OpName op, Word a = 0, Word b = 0) { annotate(Tag::kReturn, static_cast<Word>(op), a, b); }
  void segment(EventKind kind, Segment s);
  /// Auditor shadow, readable by instrumentation code only.
  Stage stage(NodeId id) const;
  void lifecycle(NodeId id, Stage to);

  /// Deterministic per-process pseudo-randomness for harness decisions.
  Word random(Word bound);

 private:
  Machine& m_;
  Pid pid_;
};

/// One execution state of a System: shared memory, every process's frames
/// and persistent variables, and the auditors. Copyable; the explorer
/// branches by copying machines.
class Machine {
 public:
  explicit Machine(std::shared_ptr<const System> system, std::uint64_t seed = 0);

  /// Sinks are not owned and not copied semantically; the explorer detaches
  /// them from branch copies.
  void add_sink(EventSink* sink) { sinks_.push_back(sink); }
  void clear_sinks() { sinks_.clear(); }

  /// Emits the trace header. Call once before the first step.
  void start();

  int n() const { return system_->n(); }
  const System& system() const { return *system_; }
  ProcStatus status(Pid p) const { return procs_.at(p).status; }
  const Process& process(Pid p) const { return procs_.at(p); }
  bool all_done() const;
  const Memory& memory() const { return memory_; }
  const AuditSuite& audit() const { return audit_; }
  AuditSuite& audit() { return audit_; }
  std::uint64_t events() const { return seq_; }

  /// One scheduler step of p: recovery if p is crashed, otherwise its local
  /// code up to and including the next action.
  void step(Pid p);
  void crash(Pid p);

  /// "routine@pc" of p's innermost frame, or the status name.
  std::string point(Pid p) const;

  /// Hash of everything that determines future behaviour and audit outcomes.
  /// RMR counters, cache contents and bookkeeping are excluded.
  StateDigest digest() const;

 private:
  friend class Context;

  Event make(Pid pid, EventKind kind) const;
  void emit(Event& e);

  std::shared_ptr<const System> system_;
  std::shared_ptr<const Directory> dir_;
  Memory memory_;
  std::vector<Process> procs_;
  AuditSuite audit_;
  std::vector<EventSink*> sinks_;
  std::uint64_t seq_ = 0;
  std::uint64_t seed_ = 0;
};

}  // namespace rme
