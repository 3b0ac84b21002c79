#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace rme {

// Every enum in this header appears in exported traces by name, so each one
// has a name table and a parser. Appending values is fine; renaming breaks
// previously written traces.

enum class EventKind : std::uint8_t {
  kRead,
  kWrite,
  kCas,
  kPersist,
  kCrash,
  kRecover,
  kSegmentEnter,
  kSegmentExit,
  kLifecycle,
  kAnnotation,
};

// RMR attribution bucket of a memory event.
enum class Category : std::uint8_t { kNone, kLock, kReclaim, kBroadcast, kWorkload };

enum class Segment : std::uint8_t { kNcs, kRecover, kEnter, kCs, kExit };

enum class Stage : std::uint8_t { kFree, kAllocated, kRetired, kReclaimed };

enum class OpName : std::uint8_t {
  kBSet,
  kBWait,
  kBRead,
  kCcBSet,
  kCcBWait,
  kCcBRead,
  kNewNode,
  kRetire,
  kStep,
};

enum class CellRole : std::uint8_t {
  kOther,
  kStart,
  kCount,
  kInterim,
  kTarget,
  kAnnounce,
  kWakeup,
  kLockOwner,
  kSlot,
  kPayload,
};

// Non-volatile private variables of one process.
enum class VarKind : std::uint8_t {
  kSnapshot,
  kCurrentPool,
  kBackupPool,
  kIndex,
  kInMethod,
  kProgress,
  kUser,
};

enum class Variant : std::uint8_t { kDsm, kCc };

// Deliberate faults used to show that the auditors and the explorer notice
// broken algorithms. kNone in every production configuration.
enum class Mutation : std::uint8_t {
  kNone,
  kSkipInterimWrite,   // bset never publishes interim_count
  kSkipGraceWait,      // Step's waiting phase performs no bwait
  kNeverReleaseLock,   // TestLock owner is never cleared in Exit
};

enum class InMethod : std::uint8_t { kNone, kNewNode, kRetire };

// Structured payload of annotation-like events.
enum class Tag : std::uint8_t {
  kNone,
  kMemOp,
  kPersist,
  kSegment,
  kLifecycle,
  kConfigDecl,
  kCellDecl,
  kNodeDecl,
  kBroadcastDecl,
  kReclaimDecl,
  kProcessDecl,
  kCall,
  kReturn,
  kAccess,
  kPoolSwap,
  kIndexReset,
  kPassageBegin,
  kPassageEnd,
  kRecovery,
};

template <typename E>
struct EnumNames;

#define RME_ENUM_NAMES(Type, ...)                                          \
  template <>                                                              \
  struct EnumNames<Type> {                                                 \
    static constexpr std::string_view kNames[] = {__VA_ARGS__};            \
  };

RME_ENUM_NAMES(EventKind, "read", "write", "cas", "persist", "crash", "recover",
               "segment-enter", "segment-exit", "lifecycle", "annotation")
RME_ENUM_NAMES(Category, "none", "lock", "reclaim", "bcast", "work")
RME_ENUM_NAMES(Segment, "NCS", "RECOVER", "ENTER", "CS", "EXIT")
RME_ENUM_NAMES(Stage, "FREE", "ALLOCATED", "RETIRED", "RECLAIMED")
RME_ENUM_NAMES(OpName, "bset", "bwait", "bread", "cc_bset", "cc_bwait", "cc_bread",
               "new_node", "retire", "step")
RME_ENUM_NAMES(CellRole, "other", "start", "count", "interim", "target", "announce",
               "wakeup", "owner", "slot", "payload")
RME_ENUM_NAMES(VarKind, "snapshot", "currentpool", "backuppool", "index", "in_method",
               "progress", "user")
RME_ENUM_NAMES(Variant, "dsm", "cc")
RME_ENUM_NAMES(Mutation, "none", "skip-interim-write", "skip-grace-wait",
               "never-release-lock")
RME_ENUM_NAMES(InMethod, "none", "new_node", "retire")
RME_ENUM_NAMES(Tag, "", "", "", "", "", "config", "cell", "node", "bcast",
               "reclaim", "proc", "call", "return", "access", "pool_swap",
               "index_reset", "passage_begin", "passage_end", "")

#undef RME_ENUM_NAMES

template <typename E>
constexpr std::string_view name_of(E value) {
  const auto i = static_cast<std::size_t>(value);
  constexpr auto count = std::size(EnumNames<E>::kNames);
  return i < count ? EnumNames<E>::kNames[i] : std::string_view{"?"};
}

template <typename E>
constexpr std::optional<E> parse_enum(std::string_view text) {
  std::size_t i = 0;
  for (auto name : EnumNames<E>::kNames) {
    if (!name.empty() && name == text) return static_cast<E>(i);
    ++i;
  }
  return std::nullopt;
}

template <typename E>
constexpr std::size_t enum_count() {
  return std::size(EnumNames<E>::kNames);
}

// Node lifecycle: FREE -> ALLOCATED -> RETIRED -> RECLAIMED -> ALLOCATED.
constexpr bool lifecycle_edge_allowed(Stage from, Stage to) {
  switch (from) {
    case Stage::kFree: return to == Stage::kAllocated;
    case Stage::kAllocated: return to == Stage::kRetired;
    case Stage::kRetired: return to == Stage::kReclaimed;
    case Stage::kReclaimed: return to == Stage::kAllocated;
  }
  return false;
}

constexpr bool is_memory_op(EventKind k) {
  return k == EventKind::kRead || k == EventKind::kWrite || k == EventKind::kCas;
}

}  // namespace rme
