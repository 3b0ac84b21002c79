#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rme/sim/machine.hpp"

namespace rme {

enum class CrashMode : std::uint8_t { kNone, kRandom, kTargeted };

/// Crash p when it is about to execute its `occurrence`-th step at `point`
/// ("routine@pc", see Machine::point).
struct CrashSite {
  Pid pid = 1;
  std::string point;
  std::uint32_t occurrence = 1;
};

struct CrashPolicy {
  CrashMode mode = CrashMode::kNone;
  double probability = 0.0;   // per eligible step, kRandom only
  std::vector<CrashSite> sites;
};

struct ScheduleConfig {
  std::uint64_t seed = 1;
  int n = 2;
  std::uint64_t max_events = 10000;   // trace events, header excluded
  CrashPolicy crash;
  /// A runnable process is never denied more than this many consecutive steps.
  std::uint32_t fairness = 64;
};

/// Throws ConfigError unless 0 <= probability <= 1, max_events >= 1,
/// fairness >= 1 and 1 <= n <= 64.
void validate(const ScheduleConfig& cfg);

ScheduleConfig schedule_from_json(const std::string& text);
ScheduleConfig load_schedule_config(const std::filesystem::path& path);
std::string to_json(const ScheduleConfig& cfg);

struct RunResult {
  std::uint64_t events = 0;
  std::uint64_t steps = 0;
  std::uint64_t crashes = 0;
  bool completed = false;   // every program returned
};

/// Drives `m` under a seeded, fairness-bounded random scheduler until
/// max_events or until every process is done. Deterministic in (system,
/// config).
RunResult run(Machine& m, const ScheduleConfig& cfg);

}  // namespace rme
