#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace rme {

using Word = std::uint64_t;

// Processes are numbered 1..n. Pid 0 is reserved: as a cell home it means
// CENTRAL, as an event author it means the harness itself.
using Pid = std::uint32_t;
inline constexpr Pid kCentral = 0;
inline constexpr Pid kHarness = 0;

// Simulator-wide upper bound on n; the CC validity set is a 64-bit mask.
inline constexpr int kMaxProcesses = 64;

enum class CellId : std::uint32_t {};
enum class NodeId : std::uint32_t {};     // 1-based; 0 means "no node"
enum class ObjectId : std::uint32_t {};
enum class RoutineId : std::uint16_t {};
enum class VarSlot : std::uint16_t {};

inline constexpr std::uint32_t kNoCell = std::numeric_limits<std::uint32_t>::max();

constexpr std::uint32_t raw(CellId v) { return static_cast<std::uint32_t>(v); }
constexpr std::uint32_t raw(NodeId v) { return static_cast<std::uint32_t>(v); }
constexpr std::uint32_t raw(ObjectId v) { return static_cast<std::uint32_t>(v); }
constexpr std::uint16_t raw(RoutineId v) { return static_cast<std::uint16_t>(v); }
constexpr std::uint16_t raw(VarSlot v) { return static_cast<std::uint16_t>(v); }

/// Fatal harness error: a program or the harness misused the simulator
/// (unknown cell, malformed routine, ...). Never raised for algorithm bugs;
/// those are reported as auditor violations.
class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rme
