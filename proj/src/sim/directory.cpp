#include "rme/sim/directory.hpp"

#include <fmt/format.h>

namespace rme {

void Directory::finalize() {
  const auto n = static_cast<std::size_t>(config.n);
  lock_owner_.reset();
  slots_.assign(n + 1, std::nullopt);
  for (auto& b : broadcasts) {
    b.interim.reset();
    b.target.assign(n + 1, CellId{});
    b.announce.assign(n + 1, CellId{});
    b.wakeup.assign(n + 1, CellId{});
  }
  auto broadcast_at = [&](std::uint32_t obj) -> BroadcastDecl& {
    if (obj >= broadcasts.size()) throw ConfigError(fmt::format("cell refers to unknown object {}", obj));
    return broadcasts[obj];
  };
  auto slot_index = [&](std::uint32_t idx) {
    if (idx < 1 || idx > n) throw ConfigError(fmt::format("cell index {} outside 1..{}", idx, n));
    return static_cast<std::size_t>(idx);
  };
  for (const auto& c : cells) {
    switch (c.role) {
      case CellRole::kCount: broadcast_at(c.obj).count = c.id; break;
      case CellRole::kInterim: broadcast_at(c.obj).interim = c.id; break;
      case CellRole::kTarget: broadcast_at(c.obj).target[slot_index(c.idx)] = c.id; break;
      case CellRole::kAnnounce: broadcast_at(c.obj).announce[slot_index(c.idx)] = c.id; break;
      case CellRole::kWakeup: broadcast_at(c.obj).wakeup[slot_index(c.idx)] = c.id; break;
      case CellRole::kLockOwner: lock_owner_ = c.id; break;
      case CellRole::kSlot: slots_[slot_index(c.idx)] = c.id; break;
      default: break;
    }
  }
  reclaim_index_.assign(n + 1, -1);
  for (std::size_t k = 0; k < reclaim.size(); ++k) {
    reclaim_index_[slot_index(reclaim[k].pid)] = static_cast<std::int32_t>(k);
  }
}

const CellDecl& Directory::cell(std::uint32_t id) const {
  if (id >= cells.size()) throw SimError(fmt::format("unknown cell id {}", id));
  return cells[id];
}

const NodeDecl& Directory::node(NodeId id) const {
  const auto k = raw(id);
  if (k == 0 || k > nodes.size()) throw SimError(fmt::format("unknown node id {}", k));
  return nodes[k - 1];
}

const BroadcastDecl& Directory::broadcast(ObjectId id) const {
  if (raw(id) >= broadcasts.size()) throw SimError(fmt::format("unknown object id {}", raw(id)));
  return broadcasts[raw(id)];
}

const ReclaimDecl* Directory::reclaim_of(Pid pid) const {
  if (pid >= reclaim_index_.size() || reclaim_index_[pid] < 0) return nullptr;
  return &reclaim[static_cast<std::size_t>(reclaim_index_[pid])];
}

std::optional<CellId> Directory::slot(Pid pid) const {
  if (pid >= slots_.size()) return std::nullopt;
  return slots_[pid];
}

std::size_t Directory::nodes_per_process() const {
  return reclaim.empty() ? 0 : nodes.size() / reclaim.size();
}

std::vector<Event> Directory::header_events() const {
  std::vector<Event> out;
  auto decl = [&](Tag tag) -> Event& {
    Event e;
    e.pid = kHarness;
    e.kind = EventKind::kAnnotation;
    e.tag = tag;
    out.push_back(e);
    return out.back();
  };
  {
    auto& e = decl(Tag::kConfigDecl);
    e.arg = {static_cast<Word>(config.n), static_cast<Word>(config.variant), config.payload_words,
             static_cast<Word>(config.mutation), 0};
  }
  for (const auto& b : broadcasts) {
    auto& e = decl(Tag::kBroadcastDecl);
    e.arg = {raw(b.id), b.writer, static_cast<Word>(b.variant), 0, 0};
  }
  for (const auto& c : cells) {
    auto& e = decl(Tag::kCellDecl);
    e.cell = raw(c.id);
    e.home = c.home;
    e.new_value = c.init;
    e.arg = {static_cast<Word>(c.role), c.obj, c.idx, 0, 0};
  }
  for (const auto& nd : nodes) {
    auto& e = decl(Tag::kNodeDecl);
    e.arg = {raw(nd.id), nd.owner, nd.pool, nd.pos, raw(nd.payload)};
  }
  for (const auto& r : reclaim) {
    auto& e = decl(Tag::kReclaimDecl);
    e.arg = {r.pid, raw(r.start), raw(r.finish), 0, 0};
  }
  for (const auto& p : processes) {
    auto& e = decl(Tag::kProcessDecl);
    e.arg = {p.pid, p.recover_digest, 0, 0, 0};
  }
  return out;
}

Directory Directory::from_header(const Trace& trace, std::size_t& header_len) {
  Directory d;
  bool saw_config = false;
  header_len = 0;
  for (const auto& e : trace) {
    if (e.kind != EventKind::kAnnotation || e.pid != kHarness) break;
    switch (e.tag) {
      case Tag::kConfigDecl:
        d.config.n = static_cast<int>(e.arg[0]);
        d.config.variant = static_cast<Variant>(e.arg[1]);
        d.config.payload_words = static_cast<std::uint32_t>(e.arg[2]);
        d.config.mutation = static_cast<Mutation>(e.arg[3]);
        saw_config = true;
        break;
      case Tag::kBroadcastDecl: {
        BroadcastDecl b;
        b.id = static_cast<ObjectId>(e.arg[0]);
        b.writer = static_cast<Pid>(e.arg[1]);
        b.variant = static_cast<Variant>(e.arg[2]);
        if (raw(b.id) != d.broadcasts.size()) throw ConfigError("broadcast declarations out of order");
        d.broadcasts.push_back(b);
        break;
      }
      case Tag::kCellDecl: {
        CellDecl c;
        c.id = static_cast<CellId>(e.cell);
        c.home = e.home;
        c.init = e.new_value;
        c.role = static_cast<CellRole>(e.arg[0]);
        c.obj = static_cast<std::uint32_t>(e.arg[1]);
        c.idx = static_cast<std::uint32_t>(e.arg[2]);
        if (raw(c.id) != d.cells.size()) throw ConfigError("cell declarations out of order");
        d.cells.push_back(c);
        break;
      }
      case Tag::kNodeDecl: {
        NodeDecl nd;
        nd.id = static_cast<NodeId>(e.arg[0]);
        nd.owner = static_cast<Pid>(e.arg[1]);
        nd.pool = static_cast<std::uint32_t>(e.arg[2]);
        nd.pos = static_cast<std::uint32_t>(e.arg[3]);
        nd.payload = static_cast<CellId>(e.arg[4]);
        if (raw(nd.id) != d.nodes.size() + 1) throw ConfigError("node declarations out of order");
        d.nodes.push_back(nd);
        break;
      }
      case Tag::kReclaimDecl:
        d.reclaim.push_back({static_cast<Pid>(e.arg[0]), static_cast<CellId>(e.arg[1]),
                             static_cast<ObjectId>(e.arg[2])});
        break;
      case Tag::kProcessDecl:
        d.processes.push_back({static_cast<Pid>(e.arg[0]), e.arg[1]});
        break;
      default:
        goto done;
    }
    ++header_len;
  }
done:
  if (!saw_config) throw ConfigError("trace has no configuration header");
  if (d.config.n < 1 || d.config.n > kMaxProcesses) throw ConfigError("trace header has invalid n");
  d.finalize();
  return d;
}

}  // namespace rme
