#include "rme/sim/machine.hpp"

#include <fmt/format.h>

namespace rme {

int Context::n() const { return m_.n(); }
const System& Context::system() const { return *m_.system_; }
const Directory& Context::directory() const { return *m_.dir_; }
Mutation Context::mutation() const { return m_.system_->mutation(); }

Word Context::var(VarSlot s) const { return m_.procs_[pid_].vars.at(raw(s)); }
Word Context::var(VarKind kind, std::uint32_t idx) const { return var(slot(kind, idx)); }
VarSlot Context::slot(VarKind kind, std::uint32_t idx) const { return m_.system_->var_slot(kind, idx); }

void Context::annotate(Tag tag, Word a0, Word a1, Word a2) {
  Event e = m_.make(pid_, EventKind::kAnnotation);
  e.tag = tag;
  e.arg = {a0, a1, a2, 0, 0};
  m_.emit(e);
}

void Context::segment(EventKind kind, Segment s) {
  Event e = m_.make(pid_, kind);
  e.tag = Tag::kSegment;
  e.arg[0] = static_cast<Word>(s);
  m_.emit(e);
}

Stage Context::stage(NodeId id) const { return m_.audit_.reclaim().stage(id); }

void Context::lifecycle(NodeId id, Stage to) {
  Event e = m_.make(pid_, EventKind::kLifecycle);
  e.tag = Tag::kLifecycle;
  const auto gen = m_.audit_.reclaim().generation(id) + (to == Stage::kAllocated ? 1 : 0);
  e.arg = {raw(id), static_cast<Word>(stage(id)), static_cast<Word>(to), gen, 0};
  m_.emit(e);
}

Word Context::random(Word bound) {
  auto& p = m_.procs_[pid_];
  const Word x = splitmix64(splitmix64(m_.seed_ ^ (Word{pid_} << 48)) ^ splitmix64(p.steps) ^
                            (Word{p.crashes} << 32) ^ ++p.draws);
  return bound == 0 ? x : x % bound;
}

// ---------------------------------------------------------------------------

Machine::Machine(std::shared_ptr<const System> system, std::uint64_t seed)
    : system_(std::move(system)), memory_(system_->initial_memory()), seed_(seed) {
  if (!system_->finalized()) throw SimError("machine needs a finalized system");
  dir_ = std::shared_ptr<const Directory>(system_, &system_->directory());
  procs_.resize(static_cast<std::size_t>(n()) + 1);
  for (Pid p = 1; p <= static_cast<Pid>(n()); ++p) {
    auto& proc = procs_[p];
    proc.frames = {system_->start_frame(p)};
    for (const auto& v : system_->vars()) proc.vars.push_back(v.init);
  }
  procs_[0].status = ProcStatus::kDone;
  audit_.reset(dir_);
}

void Machine::start() {
  if (seq_ != 0) throw SimError("machine already started");
  for (auto e : dir_->header_events()) emit(e);
}

bool Machine::all_done() const {
  for (Pid p = 1; p <= static_cast<Pid>(n()); ++p) {
    if (procs_[p].status != ProcStatus::kDone) return false;
  }
  return true;
}

Event Machine::make(Pid pid, EventKind kind) const {
  Event e;
  e.pid = pid;
  e.kind = kind;
  e.tag = implicit_tag(kind);
  return e;
}

void Machine::emit(Event& e) {
  e.seq = seq_++;
  audit_.observe(e);
  for (auto* s : sinks_) s->on_event(e);
}

void Machine::crash(Pid p) {
  auto& proc = procs_.at(p);
  if (proc.status != ProcStatus::kRunning) {
    throw SimError(fmt::format("p{} cannot crash while {}", p, proc.status == ProcStatus::kDone ? "done" : "crashed"));
  }
  proc.frames.clear();
  proc.status = ProcStatus::kCrashed;
  ++proc.crashes;
  Event e = make(p, EventKind::kCrash);
  emit(e);
}

void Machine::step(Pid p) {
  if (p < 1 || p > static_cast<Pid>(n())) throw SimError(fmt::format("no process {}", p));
  auto& proc = procs_[p];
  if (proc.status == ProcStatus::kDone) throw SimError(fmt::format("p{} is done", p));
  ++proc.steps;
  if (proc.status == ProcStatus::kCrashed) {
    proc.frames = {system_->recover_frame(p)};
    proc.status = ProcStatus::kRunning;
    Event e = make(p, EventKind::kRecover);
    e.arg[0] = frames_digest(proc.frames);
    emit(e);
    return;
  }

  Context ctx(*this, p);
  // Calls and returns are resolved inside the step; a routine that keeps
  // calling without ever acting is a harness bug.
  for (int guard = 0; guard < 4096; ++guard) {
    Frame& f = proc.frames.back();
    const Action a = system_->routine(f.routine).resume(ctx, f);
    switch (a.kind) {
      case ActionKind::kCall: {
        f.pc = a.next_pc;
        Frame callee;
        callee.routine = a.callee;
        callee.r[1] = a.args[0];
        callee.r[2] = a.args[1];
        callee.r[3] = a.args[2];
        proc.frames.push_back(callee);
        continue;
      }
      case ActionKind::kReturn:
        proc.frames.pop_back();
        if (proc.frames.empty()) {
          proc.status = ProcStatus::kDone;
          return;
        }
        proc.frames.back().r[0] = a.value;
        continue;
      case ActionKind::kHalt:
        proc.frames.clear();
        proc.status = ProcStatus::kDone;
        return;
      case ActionKind::kIdle:
        f.pc = a.next_pc;
        return;
      case ActionKind::kPersist: {
        f.pc = a.next_pc;
        auto& slot = proc.vars.at(raw(a.slot));
        const auto& decl = system_->vars()[raw(a.slot)];
        Event e = make(p, EventKind::kPersist);
        e.cell = raw(a.slot);
        e.home = p;
        e.old_value = slot;
        e.new_value = a.value;
        e.arg = {static_cast<Word>(decl.kind), decl.idx, 0, 0, 0};
        slot = a.value;
        emit(e);
        return;
      }
      case ActionKind::kRead:
      case ActionKind::kWrite:
      case ActionKind::kCas: {
        f.pc = a.next_pc;
        Event e = make(p, a.kind == ActionKind::kRead    ? EventKind::kRead
                          : a.kind == ActionKind::kWrite ? EventKind::kWrite
                                                         : EventKind::kCas);
        e.cell = raw(a.cell);
        e.home = memory_.home(a.cell);
        e.arg[0] = static_cast<Word>(a.category);
        Charge charge;
        if (a.kind == ActionKind::kRead) {
          e.old_value = e.new_value = memory_.read(p, a.cell, charge);
          f.r[0] = e.old_value;
        } else if (a.kind == ActionKind::kWrite) {
          e.old_value = memory_.write(p, a.cell, a.value, charge);
          e.new_value = a.value;
        } else {
          Word observed = 0;
          const bool ok = memory_.cas(p, a.cell, a.expected, a.value, observed, charge);
          e.old_value = observed;
          e.new_value = ok ? a.value : observed;
          e.arg[1] = a.expected;
          e.arg[2] = a.value;
          e.arg[3] = ok ? 1 : 0;
          f.r[0] = ok ? 1 : 0;
        }
        e.cc_rmr = charge.cc;
        e.dsm_rmr = charge.dsm;
        emit(e);
        return;
      }
    }
  }
  throw SimError(fmt::format("p{} at {} made no progress", p, point(p)));
}

std::string Machine::point(Pid p) const {
  const auto& proc = procs_.at(p);
  if (proc.status == ProcStatus::kCrashed) return "crashed";
  if (proc.status == ProcStatus::kDone || proc.frames.empty()) return "done";
  const auto& f = proc.frames.back();
  return fmt::format("{}@{}", system_->routine(f.routine).name(), f.pc);
}

StateDigest Machine::digest() const {
  StateHasher h;
  h.add(memory_.values());
  for (Pid p = 1; p <= static_cast<Pid>(n()); ++p) {
    const auto& proc = procs_[p];
    h.add(static_cast<std::uint64_t>(proc.status));
    h.add(frames_digest(proc.frames));
    h.add(proc.vars);
  }
  audit_.hash_into(h);
  return h.digest();
}

}  // namespace rme
