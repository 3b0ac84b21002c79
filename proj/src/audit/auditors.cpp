#include "rme/audit/auditors.hpp"

#include <fmt/format.h>

namespace rme {
namespace {

std::uint64_t bit(Pid p) { return std::uint64_t{1} << (p - 1); }

bool is_write(const Event& e) { return e.kind == EventKind::kWrite || e.kind == EventKind::kCas; }

// Value the event left in its cell; failed cas leaves the old value.
Word written_value(const Event& e) { return e.new_value; }

void flag(ViolationList& out, ViolationKind kind, const Event& e, std::string detail) {
  out.push_back({kind, e.seq, e.pid, std::move(detail)});
}

OpName op_of(const Event& e) { return static_cast<OpName>(e.arg[0]); }

bool is_set_op(OpName op) { return op == OpName::kBSet || op == OpName::kCcBSet; }
bool is_wait_op(OpName op) { return op == OpName::kBWait || op == OpName::kCcBWait; }

}  // namespace

// ---------------------------------------------------------------------------

void CrashAudit::reset(const Directory& dir) {
  digests_.assign(static_cast<std::size_t>(dir.n()) + 1, 0);
  for (const auto& p : dir.processes) digests_.at(p.pid) = p.recover_digest;
  crashed_ = 0;
}

void CrashAudit::observe(const Event& e, ViolationList& out) {
  if (e.pid == kHarness) return;
  const bool down = crashed(e.pid);
  switch (e.kind) {
    case EventKind::kCrash:
      if (down) flag(out, ViolationKind::kCrashSemantics, e, "crash of a crashed process");
      crashed_ |= bit(e.pid);
      return;
    case EventKind::kRecover:
      if (!down) flag(out, ViolationKind::kCrashSemantics, e, "recover without a crash");
      crashed_ &= ~bit(e.pid);
      if (e.arg[0] != digests_[e.pid]) {
        flag(out, ViolationKind::kCrashSemantics, e,
             fmt::format("volatile state at recovery {:#x}, expected {:#x}", e.arg[0], digests_[e.pid]));
      }
      return;
    default:
      if (down) {
        flag(out, ViolationKind::kCrashSemantics, e,
             fmt::format("{} event by a crashed process", name_of(e.kind)));
      }
  }
}

// ---------------------------------------------------------------------------

void SegmentAudit::reset(const Directory& dir) {
  dir_ = &dir;
  const auto slots = static_cast<std::size_t>(dir.n()) + 1;
  expect_.assign(slots, static_cast<std::uint8_t>(Segment::kNcs));
  inside_.assign(slots, 0);
  slot_.assign(slots, 0);
  for (Pid p = 1; p < slots; ++p) {
    if (auto c = dir.slot(p)) slot_[p] = dir.cell(raw(*c)).init;
  }
  cs_holder_ = 0;
}

void SegmentAudit::observe(const Event& e, ViolationList& out) {
  if (e.pid == kHarness) return;
  const Pid p = e.pid;
  switch (e.kind) {
    case EventKind::kSegmentEnter: {
      const auto seg = static_cast<Segment>(e.arg[0]);
      if (inside_[p] || static_cast<std::uint8_t>(seg) != expect_[p]) {
        flag(out, ViolationKind::kSegmentOrder, e,
             fmt::format("entered {} but expected {}", name_of(seg),
                         name_of(static_cast<Segment>(expect_[p]))));
      }
      inside_[p] = 1;
      expect_[p] = static_cast<std::uint8_t>(seg);
      if (seg == Segment::kCs) {
        if (cs_holder_ != 0 && cs_holder_ != p) {
          flag(out, ViolationKind::kMutualExclusion, e,
               fmt::format("p{} entered CS while p{} is in CS", p, cs_holder_));
        }
        cs_holder_ = p;
      }
      return;
    }
    case EventKind::kSegmentExit: {
      const auto seg = static_cast<Segment>(e.arg[0]);
      if (!inside_[p] || static_cast<std::uint8_t>(seg) != expect_[p]) {
        flag(out, ViolationKind::kSegmentOrder, e, fmt::format("left {} without entering it", name_of(seg)));
      }
      inside_[p] = 0;
      expect_[p] = static_cast<std::uint8_t>((static_cast<int>(seg) + 1) % 5);
      if (seg == Segment::kCs && cs_holder_ == p) cs_holder_ = 0;
      return;
    }
    case EventKind::kCrash:
      inside_[p] = 0;
      expect_[p] = static_cast<std::uint8_t>(Segment::kRecover);
      if (cs_holder_ == p) cs_holder_ = 0;
      return;
    case EventKind::kWrite:
    case EventKind::kCas:
      if (e.cell != kNoCell) {
        const auto& c = dir_->cell(e.cell);
        if (c.role == CellRole::kSlot) slot_[c.idx] = written_value(e);
      }
      return;
    case EventKind::kAnnotation:
      if (e.tag == Tag::kCall && op_of(e) == OpName::kRetire && slot_[p] != 0) {
        flag(out, ViolationKind::kSlotNotCleared, e,
             fmt::format("retire while slot[{}] still publishes node {}", p, slot_[p]));
      }
      return;
    default:
      return;
  }
}

void SegmentAudit::hash_into(StateHasher& h) const {
  for (std::size_t p = 1; p < expect_.size(); ++p) h.add(expect_[p] | (inside_[p] << 4));
  h.add(cs_holder_);
}

// ---------------------------------------------------------------------------

void BroadcastAudit::reset(const Directory& dir) {
  dir_ = &dir;
  objects_.assign(dir.broadcasts.size(), Object{});
  for (const auto& b : dir.broadcasts) {
    auto& o = objects_[raw(b.id)];
    o.count = dir.cell(raw(b.count)).init;
    o.interim = b.interim ? dir.cell(raw(*b.interim)).init : o.count;
    o.last_set = o.count;
  }
}

Word BroadcastAudit::finish_value(ObjectId id) const {
  const auto& o = objects_[raw(id)];
  return dir_->broadcast(id).variant == Variant::kDsm ? o.interim : o.count;
}

void BroadcastAudit::observe(const Event& e, ViolationList& out) {
  if (e.pid == kHarness) return;
  if (e.kind == EventKind::kAnnotation && (e.tag == Tag::kCall || e.tag == Tag::kReturn)) {
    const OpName op = op_of(e);
    if (!is_set_op(op) && !is_wait_op(op)) return;
    const auto id = static_cast<ObjectId>(e.arg[1]);
    const auto& decl = dir_->broadcast(id);
    auto& o = objects_[raw(id)];
    const Word x = e.arg[2];
    if (e.tag == Tag::kCall && is_set_op(op)) {
      if (e.pid != decl.writer) {
        flag(out, ViolationKind::kUsageRule, e, fmt::format("bset on object {} by non-writer p{}", raw(id), e.pid));
      }
      if (x != o.last_set && x != o.last_set + 1) {
        flag(out, ViolationKind::kUsageRule, e,
             fmt::format("bset({}) after last successful bset({})", x, o.last_set));
      }
      o.pending = true;
      o.pending_x = x;
      o.announced = 0;
    } else if (e.tag == Tag::kReturn && is_set_op(op)) {
      o.pending = false;
      o.last_set = x;
      o.announced = 0;
      if (o.count != x) {
        flag(out, ViolationKind::kInterimBound, e, fmt::format("bset({}) returned with count {}", x, o.count));
      }
    } else if (e.tag == Tag::kCall) {
      if (e.pid == decl.writer) {
        flag(out, ViolationKind::kUsageRule, e, fmt::format("bwait on object {} by its writer", raw(id)));
      }
      if (x > o.last_set + 1) {
        flag(out, ViolationKind::kUsageRule, e, fmt::format("bwait({}) with last successful bset({})", x, o.last_set));
      }
    } else {
      const Word reached = decl.variant == Variant::kDsm ? o.interim : o.count;
      if (reached < x) {
        flag(out, ViolationKind::kWaitSafety, e,
             fmt::format("bwait({}) on object {} returned at counter {}", x, raw(id), reached));
      }
    }
    return;
  }
  if (!is_memory_op(e.kind) || e.cell == kNoCell) return;
  const auto& c = dir_->cell(e.cell);
  switch (c.role) {
    case CellRole::kCount:
    case CellRole::kInterim: {
      if (!is_write(e)) return;
      auto& o = objects_[c.obj];
      const Word v = written_value(e);
      if (c.role == CellRole::kCount) {
        if (v < o.count || v > o.count + 1) {
          flag(out, ViolationKind::kMonotonicity, e, fmt::format("count {} -> {}", o.count, v));
        }
        o.count = v;
        // count is the last write of bset: the operation has taken full
        // effect even if a crash prevents its return.
        if (o.pending && v == o.pending_x) {
          o.pending = false;
          o.last_set = v;
        }
      } else {
        o.interim = v;
      }
      if (dir_->broadcast(static_cast<ObjectId>(c.obj)).variant == Variant::kCc) {
        o.interim = o.count;
        return;
      }
      if (o.interim < o.count || o.interim > o.count + 1 || (!o.pending && o.interim != o.count)) {
        flag(out, ViolationKind::kInterimBound, e,
             fmt::format("count {} interim {} pending {}", o.count, o.interim, o.pending));
      }
      return;
    }
    case CellRole::kAnnounce: {
      auto& o = objects_[c.obj];
      if (e.kind != EventKind::kRead || !o.pending || e.pid != dir_->broadcast(static_cast<ObjectId>(c.obj)).writer) {
        return;
      }
      if (e.old_value == o.pending_x) {
        o.announced |= bit(c.idx);
      } else {
        o.announced &= ~bit(c.idx);
      }
      return;
    }
    case CellRole::kWakeup: {
      if (!is_write(e)) return;
      const auto& o = objects_[c.obj];
      const Word v = written_value(e);
      const bool linked_ok = (o.announced & bit(c.idx)) != 0;
      const bool next_ok = v == 0 || (v <= 64 && (o.announced & bit(static_cast<Pid>(v))) != 0);
      if (!o.pending || !linked_ok || !next_ok) {
        flag(out, ViolationKind::kChainHomogeneity, e,
             fmt::format("wakeup[{}] <- {} outside a chain announcing {}", c.idx, v, o.pending_x));
      }
      return;
    }
    default:
      return;
  }
}

void BroadcastAudit::hash_into(StateHasher& h) const {
  for (const auto& o : objects_) {
    h.add(o.count);
    h.add(o.interim);
    h.add(o.last_set);
    h.add(o.pending ? o.pending_x + 1 : 0);
    h.add(o.announced);
  }
}

// ---------------------------------------------------------------------------

void ReclaimAudit::reset(const Directory& dir) {
  dir_ = &dir;
  stages_.assign(dir.nodes.size() + 1, Stage::kFree);
  gens_.assign(dir.nodes.size() + 1, 0);
  const auto slots = static_cast<std::size_t>(dir.n()) + 1;
  procs_.assign(slots, Proc{});
  finish_owner_.assign(dir.broadcasts.size(), 0);
  const std::size_t words = (dir.nodes_per_process() + 63) / 64;
  std::uint64_t all = 0;
  for (const auto& r : dir.reclaim) {
    all |= bit(r.pid);
    finish_owner_[raw(r.finish)] = r.pid;
    procs_[r.pid].start = dir.cell(raw(r.start)).init;
    procs_[r.pid].handed.assign(words, 0);
  }
  // Every window that begins at the initial state sees everyone quiescent.
  for (auto& p : procs_) p.witnessed = all;
}

bool ReclaimAudit::quiescent(Pid p, const BroadcastAudit& bcast) const {
  const auto* r = dir_->reclaim_of(p);
  return r != nullptr && procs_[p].start == bcast.finish_value(r->finish);
}

void ReclaimAudit::on_counter_change(Pid owner, const BroadcastAudit& bcast, const Event& e, ViolationList& out) {
  const auto* r = dir_->reclaim_of(owner);
  const Word start = procs_[owner].start;
  const Word count = bcast.object(r->finish).count;
  if (start < count || start - count > 1) {
    flag(out, ViolationKind::kCounterSync, e,
         fmt::format("start[{}] = {} but finish[{}].count = {}", owner, start, owner, count));
  }
  if (quiescent(owner, bcast)) {
    for (auto& p : procs_) p.witnessed |= bit(owner);
  }
}

void ReclaimAudit::observe(const Event& e, const BroadcastAudit& bcast, ViolationList& out) {
  if (e.pid == kHarness || dir_->reclaim.empty()) return;
  const Pid pid = e.pid;
  auto& me = procs_[pid];
  switch (e.kind) {
    case EventKind::kCrash:
      me.redundant_retire = false;
      return;
    case EventKind::kRead:
      return;
    case EventKind::kWrite:
    case EventKind::kCas: {
      if (me.redundant_retire && (e.category() == Category::kReclaim || e.category() == Category::kBroadcast)) {
        flag(out, ViolationKind::kIdempotentRetirement, e,
             fmt::format("repeated retire wrote cell {}", e.cell));
      }
      const auto& c = dir_->cell(e.cell);
      if (c.role == CellRole::kStart) {
        procs_[c.idx].start = written_value(e);
        on_counter_change(c.idx, bcast, e, out);
      } else if ((c.role == CellRole::kCount || c.role == CellRole::kInterim) && c.obj < finish_owner_.size() &&
                 finish_owner_[c.obj] != 0) {
        on_counter_change(finish_owner_[c.obj], bcast, e, out);
      }
      return;
    }
    case EventKind::kLifecycle: {
      const auto id = static_cast<NodeId>(e.arg[0]);
      const auto from = static_cast<Stage>(e.arg[1]);
      const auto to = static_cast<Stage>(e.arg[2]);
      const auto& node = dir_->node(id);
      const Stage actual = stages_[raw(id)];
      if (node.owner != pid || from != actual || !lifecycle_edge_allowed(from, to)) {
        flag(out, ViolationKind::kLifecycleOrder, e,
             fmt::format("node {} {} -> {} (shadow {}) by p{}", raw(id), name_of(from), name_of(to),
                         name_of(actual), pid));
      }
      stages_[raw(id)] = to;
      if (to == Stage::kAllocated) ++gens_[raw(id)];
      if (e.arg[3] != gens_[raw(id)]) {
        flag(out, ViolationKind::kLifecycleOrder, e,
             fmt::format("node {} generation {} but shadow {}", raw(id), e.arg[3], gens_[raw(id)]));
      }
      return;
    }
    case EventKind::kAnnotation:
      break;
    default:
      return;
  }

  switch (e.tag) {
    case Tag::kAccess: {
      const auto id = static_cast<NodeId>(e.arg[0]);
      const Stage s = stages_[raw(id)];
      if ((s == Stage::kFree || s == Stage::kReclaimed) && dir_->node(id).owner != pid) {
        flag(out, ViolationKind::kSafeReclamation, e,
             fmt::format("p{} accessed node {} of p{} in stage {}", pid, raw(id), dir_->node(id).owner, name_of(s)));
      }
      return;
    }
    case Tag::kCall:
      if (op_of(e) == OpName::kNewNode) {
        me.retired_done = false;
      } else if (op_of(e) == OpName::kRetire) {
        me.retire_since_alloc = true;
        me.redundant_retire = me.retired_done;
      }
      return;
    case Tag::kReturn:
      if (op_of(e) == OpName::kRetire) {
        me.retired_done = true;
        me.redundant_retire = false;
      } else if (op_of(e) == OpName::kNewNode) {
        const auto id = static_cast<NodeId>(e.arg[1]);
        const auto& node = dir_->node(id);
        if (raw(me.last_alloc) != 0 && !me.retire_since_alloc && id != me.last_alloc) {
          flag(out, ViolationKind::kIdempotentAllocation, e,
               fmt::format("new_node returned {} then {} with no retire between", raw(me.last_alloc), raw(id)));
        }
        if (node.owner != pid || stages_[raw(id)] != Stage::kAllocated) {
          flag(out, ViolationKind::kLifecycleOrder, e,
               fmt::format("new_node returned node {} in stage {}", raw(id), name_of(stages_[raw(id)])));
        }
        if (id != me.last_alloc) {
          const std::size_t per_pool = dir_->nodes_per_process() / 2;
          const std::size_t local = node.pool * per_pool + (node.pos - 1);
          auto& word = me.handed[local / 64];
          const std::uint64_t mask = std::uint64_t{1} << (local % 64);
          if (word & mask) {
            flag(out, ViolationKind::kFreshness, e,
                 fmt::format("node {} handed out twice between pool swaps", raw(id)));
          }
          word |= mask;
        }
        me.last_alloc = id;
        me.retire_since_alloc = false;
      }
      return;
    case Tag::kIndexReset: {
      me.witnessed = 0;
      for (const auto& r : dir_->reclaim) {
        if (quiescent(r.pid, bcast)) me.witnessed |= bit(r.pid);
      }
      return;
    }
    case Tag::kPoolSwap: {
      for (const auto& r : dir_->reclaim) {
        if (r.pid == pid || (me.witnessed & bit(r.pid))) continue;
        flag(out, ViolationKind::kQuiescence, e,
             fmt::format("pool swap by p{} without a quiescent instant of p{} since the last index reset", pid,
                         r.pid));
      }
      std::fill(me.handed.begin(), me.handed.end(), 0);
      return;
    }
    default:
      return;
  }
}

void ReclaimAudit::hash_into(StateHasher& h) const {
  for (std::size_t i = 1; i < stages_.size(); ++i) {
    h.add(static_cast<std::uint64_t>(stages_[i]) | (std::uint64_t{gens_[i]} << 8));
  }
  for (std::size_t p = 1; p < procs_.size(); ++p) {
    const auto& s = procs_[p];
    h.add(s.start);
    h.add(raw(s.last_alloc) | (std::uint64_t{s.retire_since_alloc} << 32) | (std::uint64_t{s.retired_done} << 33) |
          (std::uint64_t{s.redundant_retire} << 34));
    h.add(s.witnessed);
    h.add(s.handed);
  }
}

// ---------------------------------------------------------------------------

void AuditSuite::reset(std::shared_ptr<const Directory> dir) {
  dir_ = std::move(dir);
  crash_.reset(*dir_);
  segments_.reset(*dir_);
  bcast_.reset(*dir_);
  reclaim_.reset(*dir_);
  violations_.clear();
}

void AuditSuite::observe(const Event& e) {
  crash_.observe(e, violations_);
  segments_.observe(e, violations_);
  bcast_.observe(e, violations_);
  reclaim_.observe(e, bcast_, violations_);
}

void AuditSuite::hash_into(StateHasher& h) const {
  crash_.hash_into(h);
  segments_.hash_into(h);
  bcast_.hash_into(h);
  reclaim_.hash_into(h);
}

}  // namespace rme
