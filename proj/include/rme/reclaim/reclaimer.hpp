#pragma once

#include "rme/broadcast/broadcast.hpp"
#include "rme/sim/system.hpp"

namespace rme {

struct ReclaimRoutines {
  BroadcastRoutines bcast;
  RoutineId new_node{};
  RoutineId retire{};
  RoutineId step{};
  /// Wrappers that bracket the method with the in_method recovery marker.
  RoutineId new_node_call{};
  RoutineId retire_call{};
};

/// Positions per pool.
constexpr std::uint32_t pool_size(int n) { return 2 * static_cast<std::uint32_t>(n) + 2; }

/// Declares start[], finish[], both node pools of every process and the
/// per-process persistent variables, and registers the routines.
ReclaimRoutines install_reclamation(System& sys, Variant variant);

/// Node at pool[pool][pos] of process `owner`; positions are 1-based.
NodeId pool_node(const Directory& dir, Pid owner, std::uint32_t pool, std::uint32_t pos);

/// First payload cell of a node.
CellId payload_cell(const Directory& dir, NodeId node, std::uint32_t word = 0);

}  // namespace rme
