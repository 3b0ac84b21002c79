#pragma once

#include <memory>
#include <vector>

#include "rme/audit/violation.hpp"
#include "rme/sim/directory.hpp"
#include "rme/sim/event.hpp"
#include "rme/sim/state_hash.hpp"

namespace rme {

// Incremental trace auditors. Each consumes events one at a time and keeps
// only the shadow state it needs, so the same code checks live runs,
// replayed traces and every state of an exhaustive exploration. All of them
// are plain values: copying a Machine copies its auditors.

/// Crashed processes stay silent until their recover event, and recovery
/// starts from the declared initial volatile state.
class CrashAudit {
 public:
  void reset(const Directory& dir);
  void observe(const Event& e, ViolationList& out);
  void hash_into(StateHasher& h) const { h.add(crashed_); }
  bool crashed(Pid p) const { return p >= 1 && ((crashed_ >> (p - 1)) & 1U); }

 private:
  std::vector<Word> digests_;
  std::uint64_t crashed_ = 0;   // bit p-1 set while p is crashed
};

/// Segment order, mutual exclusion and the publication-board discipline.
class SegmentAudit {
 public:
  void reset(const Directory& dir);
  void observe(const Event& e, ViolationList& out);
  void hash_into(StateHasher& h) const;
  Pid cs_holder() const { return cs_holder_; }

 private:
  const Directory* dir_ = nullptr;
  std::vector<std::uint8_t> expect_;   // segment each process must enter next
  std::vector<std::uint8_t> inside_;   // 1 while between enter and exit
  std::vector<Word> slot_;             // mirror of slot[p]
  Pid cs_holder_ = 0;
};

/// Usage rules, counter shape, wait safety and wakeup-chain homogeneity of
/// every broadcast object.
class BroadcastAudit {
 public:
  struct Object {
    Word count = 0;
    Word interim = 0;
    Word last_set = 0;           // argument of the last completed bset
    Word pending_x = 0;
    bool pending = false;        // bset started and not yet completed (survives crashes)
    std::uint64_t announced = 0; // bit v: the writer's last read of announce[v] in this bset saw x
  };

  void reset(const Directory& dir);
  void observe(const Event& e, ViolationList& out);
  void hash_into(StateHasher& h) const;
  const Object& object(ObjectId id) const { return objects_[raw(id)]; }
  /// Linearized counter value: interim_count for the DSM variant (a bwait
  /// may legitimately return before count is written), count for CC.
  Word finish_value(ObjectId id) const;

 private:
  const Directory* dir_ = nullptr;
  std::vector<Object> objects_;
};

/// Node lifecycle, safe reclamation, idempotent allocation and retirement,
/// freshness, start/finish synchronization and the quiescence witness.
class ReclaimAudit {
 public:
  void reset(const Directory& dir);
  void observe(const Event& e, const BroadcastAudit& bcast, ViolationList& out);
  void hash_into(StateHasher& h) const;
  Stage stage(NodeId id) const { return stages_[raw(id)]; }
  std::uint32_t generation(NodeId id) const { return gens_[raw(id)]; }

 private:
  struct Proc {
    Word start = 0;
    NodeId last_alloc{};
    bool retire_since_alloc = true;
    bool retired_done = false;
    bool redundant_retire = false;
    std::uint64_t witnessed = 0;        // peers seen quiescent since the last index reset
    std::vector<std::uint64_t> handed;  // own nodes returned since the last pool swap
  };

  void on_counter_change(Pid owner, const BroadcastAudit& bcast, const Event& e, ViolationList& out);
  bool quiescent(Pid p, const BroadcastAudit& bcast) const;

  const Directory* dir_ = nullptr;
  std::vector<Stage> stages_;          // index = node id (0 unused)
  std::vector<std::uint32_t> gens_;
  std::vector<Proc> procs_;
  std::vector<Pid> finish_owner_;      // object id -> reclaiming process, 0 if none
};

/// All auditors, fed in a fixed order.
class AuditSuite {
 public:
  AuditSuite() = default;
  explicit AuditSuite(std::shared_ptr<const Directory> dir) { reset(std::move(dir)); }

  void reset(std::shared_ptr<const Directory> dir);
  void observe(const Event& e);
  void hash_into(StateHasher& h) const;

  const ViolationList& violations() const { return violations_; }
  bool clean() const { return violations_.empty(); }
  void add(Violation v) { violations_.push_back(std::move(v)); }

  const CrashAudit& crash() const { return crash_; }
  const SegmentAudit& segments() const { return segments_; }
  const BroadcastAudit& broadcast() const { return bcast_; }
  const ReclaimAudit& reclaim() const { return reclaim_; }

 private:
  std::shared_ptr<const Directory> dir_;
  CrashAudit crash_;
  SegmentAudit segments_;
  BroadcastAudit bcast_;
  ReclaimAudit reclaim_;
  ViolationList violations_;
};

}  // namespace rme
