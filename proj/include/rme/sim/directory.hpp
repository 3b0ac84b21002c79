#pragma once

#include <optional>
#include <vector>

#include "rme/sim/event.hpp"
#include "rme/sim/trace.hpp"
#include "rme/sim/types.hpp"
#include "rme/sim/vocabulary.hpp"

namespace rme {

struct SystemConfig {
  int n = 1;
  Variant variant = Variant::kDsm;
  std::uint32_t payload_words = 4;
  Mutation mutation = Mutation::kNone;
};

struct CellDecl {
  CellId id{};
  Pid home = kCentral;
  Word init = 0;
  CellRole role = CellRole::kOther;
  std::uint32_t obj = 0;
  std::uint32_t idx = 0;
};

struct NodeDecl {
  NodeId id{};
  Pid owner = 0;
  std::uint32_t pool = 0;
  std::uint32_t pos = 0;   // 1-based position within the pool
  CellId payload{};        // first payload cell; payload_words consecutive cells
};

struct BroadcastDecl {
  ObjectId id{};
  Pid writer = 0;
  Variant variant = Variant::kDsm;
  // Filled by Directory::finalize() from the cell declarations.
  CellId count{};
  std::optional<CellId> interim;
  std::vector<CellId> target;    // index 1..n (DSM variant only)
  std::vector<CellId> announce;
  std::vector<CellId> wakeup;
};

struct ReclaimDecl {
  Pid pid = 0;
  CellId start{};
  ObjectId finish{};
};

struct ProcessDecl {
  Pid pid = 0;
  Word recover_digest = 0;   // digest of the volatile state right after recovery
};

/// Static description of everything a trace refers to: configuration, cells
/// and their roles, nodes, broadcast objects, reclaimer wiring. It is emitted
/// as the header of every trace, so auditors work the same on live runs and
/// on traces loaded from disk.
class Directory {
 public:
  SystemConfig config;
  std::vector<CellDecl> cells;
  std::vector<NodeDecl> nodes;            // nodes[k] has id k+1
  std::vector<BroadcastDecl> broadcasts;  // broadcasts[k] has id k
  std::vector<ReclaimDecl> reclaim;       // one per process when reclamation is wired
  std::vector<ProcessDecl> processes;

  /// Rebuilds the derived lookup tables. Must be called after the last
  /// declaration is added.
  void finalize();

  int n() const { return config.n; }
  const CellDecl& cell(std::uint32_t id) const;
  const NodeDecl& node(NodeId id) const;
  const BroadcastDecl& broadcast(ObjectId id) const;
  /// Reclaimer wiring of `pid`, or nullptr when the system has no reclaimer.
  const ReclaimDecl* reclaim_of(Pid pid) const;
  std::optional<CellId> lock_owner() const { return lock_owner_; }
  std::optional<CellId> slot(Pid pid) const;
  std::size_t nodes_per_process() const;

  std::vector<Event> header_events() const;

  /// Reads the leading declaration events of `trace`. `header_len` receives
  /// the number of events consumed.
  static Directory from_header(const Trace& trace, std::size_t& header_len);

 private:
  std::optional<CellId> lock_owner_;
  std::vector<std::optional<CellId>> slots_;
  std::vector<std::int32_t> reclaim_index_;
};

}  // namespace rme
