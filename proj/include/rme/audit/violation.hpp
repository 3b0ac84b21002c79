#pragma once

#include <cstdint>
#include <string>
#include <vector>
#include <string_view>

#include "rme/sim/types.hpp"

namespace rme {

enum class ViolationKind : std::uint8_t {
  kCrashSemantics,
  kMutualExclusion,
  kSegmentOrder,
  kSlotNotCleared,
  kLifecycleOrder,
  kSafeReclamation,
  kIdempotentAllocation,
  kIdempotentRetirement,
  kFreshness,
  kCounterSync,
  kQuiescence,
  kUsageRule,
  kMonotonicity,
  kInterimBound,
  kWaitSafety,
  kChainHomogeneity,
  kLostWakeup,
  kStarvation,
  kStepBudget,
};

inline constexpr std::string_view kViolationNames[] = {
    "crash-semantics",        "mutual-exclusion",  "segment-order",    "slot-not-cleared",
    "lifecycle-order",        "safe-reclamation",  "idempotent-allocation",
    "idempotent-retirement",  "freshness",         "counter-sync",     "quiescence",
    "usage-rule",             "monotonicity",      "interim-bound",    "wait-safety",
    "chain-homogeneity",      "lost-wakeup",       "starvation",       "step-budget",
};

constexpr std::string_view name_of(ViolationKind k) {
  return kViolationNames[static_cast<std::size_t>(k)];
}

struct Violation {
  ViolationKind kind{};
  std::uint64_t seq = 0;   // event that exposed it
  Pid pid = 0;
  std::string detail;
};

using ViolationList = std::vector<Violation>;

}  // namespace rme
