#include "rme/broadcast/broadcast.hpp"

#include "rme/sim/machine.hpp"

namespace rme {
namespace {

constexpr auto kCat = Category::kBroadcast;

const BroadcastDecl& object_of(Context& ctx, const Frame& f) {
  return ctx.directory().broadcast(static_cast<ObjectId>(f.r[1]));
}

class BSet final : public Routine {
 public:
  std::string_view name() const override { return "bset"; }

  // r3 = j, r4 = last
  Action resume(Context& ctx, Frame& f) const override {
    const auto& b = object_of(ctx, f);
    const Word x = f.r[2];
    const auto n = static_cast<Word>(ctx.n());
    for (;;) {
      switch (f.pc) {
        case 0:
          ctx.call_note(OpName::kBSet, f.r[1], x);
          f.r[3] = 1;
          f.r[4] = 0;
          if (ctx.mutation() == Mutation::kSkipInterimWrite) {
            f.pc = 1;
            continue;
          }
          return Action::write(*b.interim, x, kCat, 1);
        case 1:
          // Scan every slot except the writer's own.
          while (f.r[3] <= n && f.r[3] == b.writer) ++f.r[3];
          if (f.r[3] > n) {
            f.pc = 5;
            continue;
          }
          return Action::read(b.announce[f.r[3]], kCat, 2);
        case 2:
          if (f.r[0] == x) return Action::write(b.wakeup[f.r[3]], f.r[4], kCat, 3);
          ++f.r[3];
          f.pc = 1;
          continue;
        case 3:
          return Action::read(b.announce[f.r[3]], kCat, 4);
        case 4:
          if (f.r[0] == x) f.r[4] = f.r[3];
          ++f.r[3];
          f.pc = 1;
          continue;
        case 5:
          if (f.r[4] > 0) return Action::cas(b.target[f.r[4]], x, 0, kCat, 6);
          f.pc = 6;
          continue;
        case 6:
          return Action::write(b.count, x, kCat, 7);
        case 7:
          ctx.return_note(OpName::kBSet, f.r[1], x);
          return Action::ret();
        default:
          throw SimError("bset: bad pc");
      }
    }
  }
};

class BWait final : public Routine {
 public:
  std::string_view name() const override { return "bwait"; }

  Action resume(Context& ctx, Frame& f) const override {
    const auto& b = object_of(ctx, f);
    const Word x = f.r[2];
    const Pid i = ctx.pid();
    for (;;) {
      switch (f.pc) {
        case 0:
          ctx.call_note(OpName::kBWait, f.r[1], x);
          return Action::write(b.target[i], x, kCat, 1);
        case 1:
          return Action::write(b.announce[i], x, kCat, 2);
        case 2:
          return Action::read(*b.interim, kCat, 3);
        case 3:
          if (f.r[0] >= x) return Action::write(b.target[i], 0, kCat, 4);
          f.pc = 4;
          continue;
        case 4:
          return Action::read(b.target[i], kCat, 5);
        case 5:
          // Spin until some process resets target[i]. Re-reading leaves the
          // frame unchanged, so the spin is a self-loop of the machine state.
          if (f.r[0] != 0) return Action::read(b.target[i], kCat, 5);
          return Action::write(b.announce[i], 0, kCat, 6);
        case 6:
          return Action::read(b.wakeup[i], kCat, 7);
        case 7:
          if (f.r[0] > 0) return Action::cas(b.target[f.r[0]], x, 0, kCat, 8);
          f.pc = 8;
          continue;
        case 8:
          ctx.return_note(OpName::kBWait, f.r[1], x);
          return Action::ret();
        default:
          throw SimError("bwait: bad pc");
      }
    }
  }
};

class BRead final : public Routine {
 public:
  BRead(OpName op, std::string_view name) : op_(op), name_(name) {}
  std::string_view name() const override { return name_; }

  Action resume(Context& ctx, Frame& f) const override {
    if (f.pc == 0) {
      ctx.call_note(op_, f.r[1]);
      return Action::read(object_of(ctx, f).count, kCat, 1);
    }
    ctx.return_note(op_, f.r[1], f.r[0]);
    return Action::ret(f.r[0]);
  }

 private:
  OpName op_;
  std::string_view name_;
};

class CcBSet final : public Routine {
 public:
  std::string_view name() const override { return "cc_bset"; }

  Action resume(Context& ctx, Frame& f) const override {
    if (f.pc == 0) {
      ctx.call_note(OpName::kCcBSet, f.r[1], f.r[2]);
      return Action::write(object_of(ctx, f).count, f.r[2], kCat, 1);
    }
    ctx.return_note(OpName::kCcBSet, f.r[1], f.r[2]);
    return Action::ret();
  }
};

class CcBWait final : public Routine {
 public:
  std::string_view name() const override { return "cc_bwait"; }

  Action resume(Context& ctx, Frame& f) const override {
    const auto& b = object_of(ctx, f);
    if (f.pc == 0) {
      ctx.call_note(OpName::kCcBWait, f.r[1], f.r[2]);
      return Action::read(b.count, kCat, 1);
    }
    if (f.r[0] < f.r[2]) return Action::read(b.count, kCat, 1);
    ctx.return_note(OpName::kCcBWait, f.r[1], f.r[2]);
    return Action::ret();
  }
};

}  // namespace

BroadcastRoutines install_broadcast(System& sys, Variant variant) {
  BroadcastRoutines r;
  if (variant == Variant::kDsm) {
    r.set = sys.add_routine(std::make_unique<BSet>());
    r.wait = sys.add_routine(std::make_unique<BWait>());
    r.read = sys.add_routine(std::make_unique<BRead>(OpName::kBRead, "bread"));
  } else {
    r.set = sys.add_routine(std::make_unique<CcBSet>());
    r.wait = sys.add_routine(std::make_unique<CcBWait>());
    r.read = sys.add_routine(std::make_unique<BRead>(OpName::kCcBRead, "cc_bread"));
  }
  return r;
}

ObjectId make_broadcast(System& sys, Pid writer, Variant variant) {
  const ObjectId id = sys.declare_broadcast(writer, variant);
  const auto obj = raw(id);
  sys.alloc_cell(writer, 0, CellRole::kCount, obj);
  if (variant == Variant::kCc) return id;
  sys.alloc_cell(writer, 0, CellRole::kInterim, obj);
  for (Pid j = 1; j <= static_cast<Pid>(sys.n()); ++j) {
    sys.alloc_cell(j, 0, CellRole::kTarget, obj, j);
    sys.alloc_cell(writer, 0, CellRole::kAnnounce, obj, j);
    sys.alloc_cell(writer, 0, CellRole::kWakeup, obj, j);
  }
  return id;
}

}  // namespace rme
