#include "rme/reclaim/reclaimer.hpp"

#include <fmt/format.h>

#include "rme/sim/machine.hpp"

namespace rme {
namespace {

constexpr auto kCat = Category::kReclaim;

const ReclaimDecl& wiring(Context& ctx) {
  const auto* r = ctx.directory().reclaim_of(ctx.pid());
  if (r == nullptr) throw SimError(fmt::format("p{} has no reclaimer", ctx.pid()));
  return *r;
}

NodeId current_node(Context& ctx) {
  return pool_node(ctx.directory(), ctx.pid(), static_cast<std::uint32_t>(ctx.var(VarKind::kCurrentPool)),
                   static_cast<std::uint32_t>(ctx.var(VarKind::kIndex)));
}

class NewNode final : public Routine {
 public:
  NewNode(RoutineId bread, RoutineId step) : bread_(bread), step_(step) {}
  std::string_view name() const override { return "new_node"; }

  // r1 = start[i] as read on entry
  Action resume(Context& ctx, Frame& f) const override {
    const auto& w = wiring(ctx);
    for (;;) {
      switch (f.pc) {
        case 0:
          ctx.call_note(OpName::kNewNode);
          return Action::read(w.start, kCat, 1);
        case 1:
          f.r[1] = f.r[0];
          return Action::call(bread_, 2, raw(w.finish));
        case 2:
          if (f.r[1] == f.r[0]) return Action::call(step_, 3);
          f.pc = 4;
          continue;
        case 3:
          return Action::write(w.start, f.r[1] + 1, kCat, 4);
        case 4: {
          const NodeId x = current_node(ctx);
          if (ctx.stage(x) != Stage::kAllocated) ctx.lifecycle(x, Stage::kAllocated);
          ctx.return_note(OpName::kNewNode, raw(x));
          return Action::ret(raw(x));
        }
        default:
          throw SimError("new_node: bad pc");
      }
    }
  }

 private:
  RoutineId bread_, step_;
};

class Retire final : public Routine {
 public:
  Retire(RoutineId bread, RoutineId bset) : bread_(bread), bset_(bset) {}
  std::string_view name() const override { return "retire"; }

  Action resume(Context& ctx, Frame& f) const override {
    const auto& w = wiring(ctx);
    for (;;) {
      switch (f.pc) {
        case 0: {
          ctx.call_note(OpName::kRetire);
          const NodeId x = current_node(ctx);
          if (ctx.stage(x) == Stage::kAllocated) ctx.lifecycle(x, Stage::kRetired);
          return Action::read(w.start, kCat, 1);
        }
        case 1:
          f.r[1] = f.r[0];
          return Action::call(bread_, 2, raw(w.finish));
        case 2:
          if (f.r[1] != f.r[0]) return Action::call(bset_, 3, raw(w.finish), f.r[1]);
          f.pc = 3;
          continue;
        case 3:
          ctx.return_note(OpName::kRetire);
          return Action::ret();
        default:
          throw SimError("retire: bad pc");
      }
    }
  }

 private:
  RoutineId bread_, bset_;
};

class Step final : public Routine {
 public:
  explicit Step(RoutineId bwait) : bwait_(bwait) {}
  std::string_view name() const override { return "step"; }

  // r1 = index on entry
  Action resume(Context& ctx, Frame& f) const override {
    const auto n = static_cast<Word>(ctx.n());
    const Pid i = ctx.pid();
    const VarSlot index = ctx.slot(VarKind::kIndex);
    switch (f.pc) {
      case 0: {
        f.r[1] = ctx.var(index);
        ctx.call_note(OpName::kStep, f.r[1]);
        const Word k = f.r[1];
        if (k <= n) {
          // Snapshot phase: one peer counter per step.
          return Action::read(ctx.directory().reclaim_of(static_cast<Pid>(k))->start, kCat, 1);
        }
        if (k <= 2 * n) {
          // Waiting phase: one peer per step, never oneself.
          const auto j = static_cast<Pid>(k - n);
          if (j != i && ctx.mutation() != Mutation::kSkipGraceWait) {
            return Action::call(bwait_, 4, raw(ctx.directory().reclaim_of(j)->finish),
                                ctx.var(VarKind::kSnapshot, j));
          }
          return Action::persist(index, k + 1, 3);
        }
        if (k == 2 * n + 1) {
          // Grace period complete: the backup pool becomes current.
          const Word backup = ctx.var(VarKind::kBackupPool);
          const auto& dir = ctx.directory();
          for (std::uint32_t pos = 1; pos <= pool_size(ctx.n()); ++pos) {
            const NodeId x = pool_node(dir, i, static_cast<std::uint32_t>(backup), pos);
            if (ctx.stage(x) == Stage::kRetired) ctx.lifecycle(x, Stage::kReclaimed);
          }
          ctx.annotate(Tag::kPoolSwap, backup);
          return Action::persist(ctx.slot(VarKind::kCurrentPool), backup, 5);
        }
        return Action::persist(ctx.slot(VarKind::kBackupPool), 1 - ctx.var(VarKind::kCurrentPool), 6);
      }
      case 1:
        return Action::persist(ctx.slot(VarKind::kSnapshot, static_cast<std::uint32_t>(f.r[1])), f.r[0], 2);
      case 2:
      case 4:
      case 5:
        return Action::persist(index, f.r[1] + 1, 3);
      case 6:
        ctx.annotate(Tag::kIndexReset);
        return Action::persist(index, 1, 3);
      case 3:
        ctx.return_note(OpName::kStep, f.r[1]);
        return Action::ret();
      default:
        throw SimError("step: bad pc");
    }
  }

 private:
  RoutineId bwait_;
};

// Brackets a reclamation method with the in_method marker so that Recover
// can tell which method a crash interrupted.
class MarkedCall final : public Routine {
 public:
  MarkedCall(RoutineId target, InMethod marker, std::string_view name)
      : target_(target), marker_(marker), name_(name) {}
  std::string_view name() const override { return name_; }

  Action resume(Context& ctx, Frame& f) const override {
    const VarSlot in_method = ctx.slot(VarKind::kInMethod);
    switch (f.pc) {
      case 0:
        return Action::persist(in_method, static_cast<Word>(marker_), 1);
      case 1:
        return Action::call(target_, 2);
      case 2:
        f.r[1] = f.r[0];
        return Action::persist(in_method, static_cast<Word>(InMethod::kNone), 3);
      case 3:
        return Action::ret(f.r[1]);
      default:
        throw SimError("marked call: bad pc");
    }
  }

 private:
  RoutineId target_;
  InMethod marker_;
  std::string_view name_;
};

}  // namespace

ReclaimRoutines install_reclamation(System& sys, Variant variant) {
  const int n = sys.n();
  for (Pid p = 1; p <= static_cast<Pid>(n); ++p) {
    const CellId start = sys.alloc_cell(p, 0, CellRole::kStart, 0, p);
    const ObjectId finish = make_broadcast(sys, p, variant);
    sys.declare_reclaim(p, start, finish);
  }
  for (Pid p = 1; p <= static_cast<Pid>(n); ++p) {
    for (std::uint32_t pool = 0; pool < 2; ++pool) {
      for (std::uint32_t pos = 1; pos <= pool_size(n); ++pos) sys.declare_node(p, pool, pos);
    }
  }
  for (std::uint32_t j = 1; j <= static_cast<std::uint32_t>(n); ++j) sys.declare_var(VarKind::kSnapshot, j, 0);
  sys.declare_var(VarKind::kCurrentPool, 0, 0);
  sys.declare_var(VarKind::kBackupPool, 0, 1);
  sys.declare_var(VarKind::kIndex, 0, 1);
  sys.declare_var(VarKind::kInMethod, 0, static_cast<Word>(InMethod::kNone));

  ReclaimRoutines r;
  r.bcast = install_broadcast(sys, variant);
  r.step = sys.add_routine(std::make_unique<Step>(r.bcast.wait));
  r.new_node = sys.add_routine(std::make_unique<NewNode>(r.bcast.read, r.step));
  r.retire = sys.add_routine(std::make_unique<Retire>(r.bcast.read, r.bcast.set));
  r.new_node_call = sys.add_routine(std::make_unique<MarkedCall>(r.new_node, InMethod::kNewNode, "new_node_call"));
  r.retire_call = sys.add_routine(std::make_unique<MarkedCall>(r.retire, InMethod::kRetire, "retire_call"));
  return r;
}

NodeId pool_node(const Directory& dir, Pid owner, std::uint32_t pool, std::uint32_t pos) {
  const std::uint32_t per_pool = pool_size(dir.n());
  if (owner < 1 || owner > static_cast<Pid>(dir.n()) || pool > 1 || pos < 1 || pos > per_pool) {
    throw SimError(fmt::format("no node at p{} pool {} position {}", owner, pool, pos));
  }
  const auto id = static_cast<NodeId>(1 + (owner - 1) * 2 * per_pool + pool * per_pool + (pos - 1));
  const auto& node = dir.node(id);
  if (node.owner != owner || node.pool != pool || node.pos != pos) throw SimError("node layout mismatch");
  return id;
}

CellId payload_cell(const Directory& dir, NodeId node, std::uint32_t word) {
  if (word >= dir.config.payload_words) throw SimError(fmt::format("payload word {} out of range", word));
  return static_cast<CellId>(raw(dir.node(node).payload) + word);
}

}  // namespace rme
