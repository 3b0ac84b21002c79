#include "rme/harness/workload.hpp"

#include <fmt/format.h>

#include "rme/sim/machine.hpp"

namespace rme {
namespace {

constexpr auto kLock = Category::kLock;
constexpr auto kWork = Category::kWorkload;

// Program points of the process loop.
enum Pc : std::uint16_t {
  kNcsCheck = 0,
  kNcsBegin,
  kNcsIdle,
  kRecover,
  kRecoverOwner,
  kEnter,
  kPublish,
  kPeek,
  kPeekPayload,
  kAcquire,
  kSpin,
  kCasResult,
  kCs,
  kCsPeer,
  kExit,
  kRelease,
  kRetire,
  kPassageDone,
  kReclaimNew,
};

// Registers: r1 own node, r2 peer node reference, r3 recovered lock
// ownership, r4 NCS steps left, r5 scratch.
class ProcessLoop final : public Routine {
 public:
  ProcessLoop(WorkloadConfig cfg, ReclaimRoutines r, CellId owner, std::vector<CellId> slots)
      : cfg_(cfg), r_(r), owner_(owner), slots_(std::move(slots)) {}
  std::string_view name() const override { return "passage"; }

  Action resume(Context& ctx, Frame& f) const override {
    const Pid i = ctx.pid();
    const auto& dir = ctx.directory();
    for (;;) {
      switch (f.pc) {
        case kNcsCheck:
          if (cfg_.max_passages > 0) {
            return Action::read(dir.broadcast(dir.reclaim_of(i)->finish).count, kWork, kNcsBegin);
          }
          f.pc = kNcsBegin;
          continue;
        case kNcsBegin:
          if (cfg_.max_passages > 0 && f.r[0] >= cfg_.max_passages) return Action::ret();
          f.r = {};
          if (!cfg_.reclaim_only) ctx.segment(EventKind::kSegmentEnter, Segment::kNcs);
          f.r[4] = cfg_.deterministic ? 0 : ctx.random(cfg_.max_ncs + 1);
          f.pc = kNcsIdle;
          continue;
        case kNcsIdle:
          if (f.r[4] > 0) {
            --f.r[4];
            return Action::idle(kNcsIdle);
          }
          if (!cfg_.reclaim_only) ctx.segment(EventKind::kSegmentExit, Segment::kNcs);
          f.pc = kRecover;
          continue;

        case kRecover:
          ctx.annotate(Tag::kPassageBegin);
          if (!cfg_.reclaim_only) ctx.segment(EventKind::kSegmentEnter, Segment::kRecover);
          // A crash inside retire is repaired here. A crash inside new_node
          // needs no repair: Enter calls it again anyway. Without a lock there
          // is no CS to re-enter, so the repaired retire ends the passage.
          if (ctx.var(VarKind::kInMethod) == static_cast<Word>(InMethod::kRetire)) {
            return Action::call(r_.retire_call, cfg_.reclaim_only ? kPassageDone : kRecoverOwner);
          }
          f.pc = kRecoverOwner;
          continue;
        case kRecoverOwner:
          if (cfg_.reclaim_only) return Action::call(r_.new_node_call, kReclaimNew);
          return Action::read(owner_, kLock, kEnter);
        case kEnter:
          f.r[3] = f.r[0] == i ? 1 : 0;
          ctx.segment(EventKind::kSegmentExit, Segment::kRecover);
          ctx.segment(EventKind::kSegmentEnter, Segment::kEnter);
          return Action::call(r_.new_node_call, kPublish);
        case kPublish:
          f.r[1] = f.r[0];
          return Action::write(slots_[i], f.r[1], kWork, kPeek);
        case kPeek: {
          if (ctx.n() == 1) {
            f.pc = kAcquire;
            continue;
          }
          Pid peer = i % static_cast<Pid>(ctx.n()) + 1;
          if (!cfg_.deterministic) {
            peer = static_cast<Pid>(ctx.random(static_cast<Word>(ctx.n() - 1)) + 1);
            if (peer >= i) ++peer;
          }
          return Action::read(slots_[peer], kWork, kPeekPayload);
        }
        case kPeekPayload:
          f.r[2] = f.r[0];
          if (f.r[2] != 0) {
            ctx.annotate(Tag::kAccess, f.r[2]);
            return Action::read(payload_cell(dir, static_cast<NodeId>(f.r[2])), kWork, kAcquire);
          }
          f.pc = kAcquire;
          continue;
        case kAcquire:
          if (f.r[3] != 0) {
            f.pc = kCs;
            continue;
          }
          return Action::read(owner_, kLock, kSpin);
        case kSpin:
          if (f.r[0] != 0) return Action::read(owner_, kLock, kSpin);
          return Action::cas(owner_, 0, i, kLock, kCasResult);
        case kCasResult:
          if (f.r[0] == 0) return Action::read(owner_, kLock, kSpin);
          f.pc = kCs;
          continue;

        case kCs:
          ctx.segment(EventKind::kSegmentExit, Segment::kEnter);
          ctx.segment(EventKind::kSegmentEnter, Segment::kCs);
          // Writing the same stamp again is harmless, so CS is re-executable.
          return Action::write(payload_cell(dir, static_cast<NodeId>(f.r[1])), f.r[1] | (Word{i} << 32), kWork,
                               kCsPeer);
        case kCsPeer:
          if (f.r[2] != 0) {
            ctx.annotate(Tag::kAccess, f.r[2]);
            return Action::read(payload_cell(dir, static_cast<NodeId>(f.r[2])), kWork, kExit);
          }
          f.pc = kExit;
          continue;

        case kExit:
          ctx.segment(EventKind::kSegmentExit, Segment::kCs);
          ctx.segment(EventKind::kSegmentEnter, Segment::kExit);
          return Action::write(slots_[i], 0, kWork, kRelease);
        case kRelease:
          if (ctx.mutation() == Mutation::kNeverReleaseLock) {
            f.pc = kRetire;
            continue;
          }
          return Action::write(owner_, 0, kLock, kRetire);
        case kRetire:
          return Action::call(r_.retire_call, kPassageDone);
        case kPassageDone:
          if (!cfg_.reclaim_only) ctx.segment(EventKind::kSegmentExit, Segment::kExit);
          ctx.annotate(Tag::kPassageEnd);
          f.r = {};
          f.pc = kNcsCheck;
          continue;

        case kReclaimNew:
          f.r[1] = f.r[0];
          f.pc = kRetire;
          continue;
        default:
          throw SimError(fmt::format("passage: bad pc {}", f.pc));
      }
    }
  }

 private:
  WorkloadConfig cfg_;
  ReclaimRoutines r_;
  CellId owner_;
  std::vector<CellId> slots_;
};

class Script final : public Routine {
 public:
  Script(std::vector<std::vector<ScriptOp>> scripts, std::vector<RoutineId> by_op)
      : scripts_(std::move(scripts)), by_op_(std::move(by_op)) {}
  std::string_view name() const override { return "script"; }

  // r1 = position in the script
  Action resume(Context& ctx, Frame& f) const override {
    const auto& ops = scripts_.at(ctx.pid() - 1);
    const VarSlot progress = ctx.slot(VarKind::kProgress);
    if (f.pc == 0) {
      f.r[1] = ctx.var(progress);
      if (f.r[1] >= ops.size()) return Action::ret();
      const auto& op = ops[f.r[1]];
      const RoutineId target = by_op_.at(static_cast<std::size_t>(op.op));
      if (raw(target) == 0xffff) throw SimError(fmt::format("script op {} is not wired", name_of(op.op)));
      return Action::call(target, 1, op.obj, op.x);
    }
    const Word next = f.r[1] + 1;
    f.r = {};
    return Action::persist(progress, next, 0);
  }

 private:
  std::vector<std::vector<ScriptOp>> scripts_;
  std::vector<RoutineId> by_op_;
};

// Writer pcs 0..2, waiter pcs 10..14. r1 = pause left, r2 = argument.
class BroadcastStress final : public Routine {
 public:
  BroadcastStress(BroadcastStressConfig cfg, BroadcastRoutines b) : cfg_(cfg), b_(b) {}
  std::string_view name() const override { return "bstress"; }

  Action resume(Context& ctx, Frame& f) const override {
    const VarSlot progress = ctx.slot(VarKind::kProgress);
    for (;;) {
      switch (f.pc) {
        case 0:
          if (ctx.pid() != 1) {
            f.pc = 10;
            continue;
          }
          f.r[2] = ctx.var(progress);
          if (f.r[2] >= cfg_.rounds) return Action::ret();
          f.r[1] = ctx.random(cfg_.max_pause + 1);
          f.pc = 1;
          continue;
        case 1:
          if (f.r[1] > 0) {
            --f.r[1];
            return Action::idle(1);
          }
          return Action::call(b_.set, 2, 0, f.r[2] + 1);
        case 2:
          return Action::persist(progress, f.r[2] + 1, 0);

        case 10:
          if (ctx.var(progress) != 0) {
            f.r[2] = ctx.var(progress);
            return Action::call(b_.wait, 14, 0, f.r[2]);
          }
          f.r[1] = ctx.random(cfg_.max_pause + 1);
          f.pc = 11;
          continue;
        case 11:
          if (f.r[1] > 0) {
            --f.r[1];
            return Action::idle(11);
          }
          return Action::call(b_.read, 12, 0);
        case 12:
          if (f.r[0] >= cfg_.rounds) return Action::ret();
          f.r[2] = f.r[0] + 1;
          return Action::persist(progress, f.r[2], 13);
        case 13:
          return Action::call(b_.wait, 14, 0, f.r[2]);
        case 14:
          return Action::persist(progress, 0, 10);
        default:
          throw SimError(fmt::format("bstress: bad pc {}", f.pc));
      }
    }
  }

 private:
  BroadcastStressConfig cfg_;
  BroadcastRoutines b_;
};

}  // namespace

std::shared_ptr<System> build_broadcast_stress(const BroadcastStressConfig& config) {
  if (config.n < 1 || config.n > kMaxProcesses) {
    throw ConfigError(fmt::format("n = {} outside 1..{}", config.n, kMaxProcesses));
  }
  auto sys = std::make_shared<System>(SystemConfig{config.n, config.variant, 4, config.mutation});
  make_broadcast(*sys, 1, config.variant);
  const auto b = install_broadcast(*sys, config.variant);
  sys->declare_var(VarKind::kProgress, 0, 0);
  const RoutineId r = sys->add_routine(std::make_unique<BroadcastStress>(config, b));
  for (Pid p = 1; p <= static_cast<Pid>(config.n); ++p) sys->set_entry(p, Frame{r, 0, {}}, Frame{r, 0, {}});
  sys->finalize();
  return sys;
}

Workload build_workload(const WorkloadConfig& config) {
  if (config.n < 1 || config.n > kMaxProcesses) {
    throw ConfigError(fmt::format("n = {} outside 1..{}", config.n, kMaxProcesses));
  }
  auto sys = std::make_shared<System>(SystemConfig{config.n, config.variant, config.payload_words, config.mutation});
  Workload w;
  w.routines = install_reclamation(*sys, config.variant);
  CellId owner{};
  std::vector<CellId> slots(static_cast<std::size_t>(config.n) + 1);
  if (!config.reclaim_only) {
    owner = sys->alloc_cell(kCentral, 0, CellRole::kLockOwner);
    for (Pid p = 1; p <= static_cast<Pid>(config.n); ++p) slots[p] = sys->alloc_cell(p, 0, CellRole::kSlot, 0, p);
  }
  w.loop = sys->add_routine(std::make_unique<ProcessLoop>(config, w.routines, owner, slots));
  for (Pid p = 1; p <= static_cast<Pid>(config.n); ++p) {
    // Without a CS to re-enter, a recovering process first checks whether its
    // passage quota is already met.
    sys->set_entry(p, Frame{w.loop, kNcsCheck, {}}, Frame{w.loop, config.reclaim_only ? kNcsCheck : kRecover, {}});
  }
  sys->finalize();
  w.system = std::move(sys);
  return w;
}

std::shared_ptr<System> build_script(const ScriptConfig& config) {
  if (config.n < 1 || config.n > kMaxProcesses) {
    throw ConfigError(fmt::format("n = {} outside 1..{}", config.n, kMaxProcesses));
  }
  if (config.scripts.size() != static_cast<std::size_t>(config.n)) {
    throw ConfigError("one script per process is required");
  }
  auto sys = std::make_shared<System>(SystemConfig{config.n, config.variant, 4, config.mutation});
  std::vector<RoutineId> by_op(enum_count<OpName>(), static_cast<RoutineId>(0xffff));
  BroadcastRoutines b;
  if (config.with_reclaimer) {
    const auto r = install_reclamation(*sys, config.variant);
    b = r.bcast;
    by_op[static_cast<std::size_t>(OpName::kNewNode)] = r.new_node;
    by_op[static_cast<std::size_t>(OpName::kRetire)] = r.retire;
    by_op[static_cast<std::size_t>(OpName::kStep)] = r.step;
  } else {
    if (config.objects > static_cast<std::uint32_t>(config.n)) throw ConfigError("more objects than writers");
    for (std::uint32_t k = 0; k < config.objects; ++k) make_broadcast(*sys, k + 1, config.variant);
    b = install_broadcast(*sys, config.variant);
  }
  // Either spelling of an operation runs the installed variant.
  for (auto op : {OpName::kBSet, OpName::kCcBSet}) by_op[static_cast<std::size_t>(op)] = b.set;
  for (auto op : {OpName::kBWait, OpName::kCcBWait}) by_op[static_cast<std::size_t>(op)] = b.wait;
  for (auto op : {OpName::kBRead, OpName::kCcBRead}) by_op[static_cast<std::size_t>(op)] = b.read;
  sys->declare_var(VarKind::kProgress, 0, 0);
  const RoutineId script = sys->add_routine(std::make_unique<Script>(config.scripts, by_op));
  for (Pid p = 1; p <= static_cast<Pid>(config.n); ++p) {
    sys->set_entry(p, Frame{script, 0, {}}, Frame{script, 0, {}});
  }
  sys->finalize();
  return sys;
}

}  // namespace rme
