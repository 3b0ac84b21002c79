#include "rme/sim/system.hpp"

#include <fmt/format.h>

#include "rme/sim/state_hash.hpp"

namespace rme {

System::System(SystemConfig config) : memory_(config.n) {
  directory_.config = config;
  const auto slots = static_cast<std::size_t>(config.n) + 1;
  starts_.resize(slots);
  recovers_.resize(slots);
  has_entry_.assign(slots, false);
}

void System::check_open() const {
  if (finalized_) throw SimError("system is finalized");
}

CellId System::alloc_cell(Pid home, Word init, CellRole role, std::uint32_t obj, std::uint32_t idx) {
  check_open();
  const CellId id = memory_.alloc_cell(home, init);
  directory_.cells.push_back({id, home, init, role, obj, idx});
  return id;
}

ObjectId System::declare_broadcast(Pid writer, Variant variant) {
  check_open();
  if (writer < 1 || writer > static_cast<Pid>(n())) {
    throw SimError(fmt::format("broadcast writer {} outside 1..{}", writer, n()));
  }
  const auto id = static_cast<ObjectId>(directory_.broadcasts.size());
  BroadcastDecl b;
  b.id = id;
  b.writer = writer;
  b.variant = variant;
  directory_.broadcasts.push_back(std::move(b));
  return id;
}

NodeId System::declare_node(Pid owner, std::uint32_t pool, std::uint32_t pos) {
  check_open();
  const auto id = static_cast<NodeId>(directory_.nodes.size() + 1);
  const auto words = directory_.config.payload_words;
  CellId first{};
  for (std::uint32_t w = 0; w < words; ++w) {
    const CellId c = alloc_cell(owner, 0, CellRole::kPayload, raw(id), w);
    if (w == 0) first = c;
  }
  directory_.nodes.push_back({id, owner, pool, pos, first});
  return id;
}

void System::declare_reclaim(Pid pid, CellId start, ObjectId finish) {
  check_open();
  directory_.reclaim.push_back({pid, start, finish});
}

VarSlot System::declare_var(VarKind kind, std::uint32_t idx, Word init) {
  check_open();
  if (find_var(kind, idx)) {
    throw SimError(fmt::format("variable {}[{}] declared twice", name_of(kind), idx));
  }
  vars_.push_back({kind, idx, init});
  return static_cast<VarSlot>(vars_.size() - 1);
}

std::optional<VarSlot> System::find_var(VarKind kind, std::uint32_t idx) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].kind == kind && vars_[i].idx == idx) return static_cast<VarSlot>(i);
  }
  return std::nullopt;
}

VarSlot System::var_slot(VarKind kind, std::uint32_t idx) const {
  if (auto s = find_var(kind, idx)) return *s;
  throw SimError(fmt::format("no variable {}[{}]", name_of(kind), idx));
}

RoutineId System::add_routine(std::unique_ptr<Routine> routine) {
  check_open();
  routines_.push_back(std::move(routine));
  return static_cast<RoutineId>(routines_.size() - 1);
}

const Routine& System::routine(RoutineId id) const {
  if (raw(id) >= routines_.size()) throw SimError(fmt::format("unknown routine {}", raw(id)));
  return *routines_[raw(id)];
}

void System::set_entry(Pid pid, Frame start, Frame recover) {
  check_open();
  if (pid < 1 || pid > static_cast<Pid>(n())) throw SimError(fmt::format("no process {}", pid));
  starts_[pid] = start;
  recovers_[pid] = recover;
  has_entry_[pid] = true;
}

void System::finalize() {
  check_open();
  directory_.processes.clear();
  for (Pid p = 1; p <= static_cast<Pid>(n()); ++p) {
    if (!has_entry_[p]) throw SimError(fmt::format("process {} has no program", p));
    routine(starts_[p].routine);
    routine(recovers_[p].routine);
    directory_.processes.push_back({p, frames_digest({recovers_[p]})});
  }
  directory_.finalize();
  finalized_ = true;
}

Word frames_digest(const std::vector<Frame>& frames) {
  StateHasher h;
  h.add(frames.size());
  for (const auto& f : frames) {
    h.add(raw(f.routine));
    h.add(f.pc);
    h.add(f.r);
  }
  return h.digest().lo;
}

}  // namespace rme
