#pragma once

#include "rme/sim/system.hpp"

namespace rme {

// Recoverable multi-reader single-writer counter with set / wait / read.
//
// Routine calling convention: r[1] = object id, r[2] = argument x.
// bread returns the counter value in r[0] of the caller.

struct BroadcastRoutines {
  RoutineId set{};
  RoutineId wait{};
  RoutineId read{};
};

/// Registers the three routines of `variant` with `sys`.
BroadcastRoutines install_broadcast(System& sys, Variant variant);

/// Allocates the cells of one object written by `writer`.
/// DSM: count and interim_count homed at the writer, target[j] homed at j,
/// announce[j] and wakeup[j] homed at the writer. CC: a single count cell.
ObjectId make_broadcast(System& sys, Pid writer, Variant variant);

}  // namespace rme
