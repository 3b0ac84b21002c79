#include "rme/sim/schedule.hpp"

#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace rme {

using nlohmann::json;

void validate(const ScheduleConfig& cfg) {
  if (cfg.n < 1 || cfg.n > kMaxProcesses) throw ConfigError(fmt::format("n = {} outside 1..{}", cfg.n, kMaxProcesses));
  if (cfg.max_events < 1) throw ConfigError("max_events must be at least 1");
  if (cfg.fairness < 1) throw ConfigError("fairness bound must be at least 1");
  if (!(cfg.crash.probability >= 0.0 && cfg.crash.probability <= 1.0)) {
    throw ConfigError(fmt::format("crash probability {} outside [0, 1]", cfg.crash.probability));
  }
  for (const auto& s : cfg.crash.sites) {
    if (s.pid < 1 || s.pid > static_cast<Pid>(cfg.n)) throw ConfigError(fmt::format("crash site pid {}", s.pid));
    if (s.occurrence < 1) throw ConfigError("crash site occurrence must be at least 1");
  }
}

ScheduleConfig schedule_from_json(const std::string& text) {
  ScheduleConfig cfg;
  try {
    const json j = json::parse(text);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.n = j.value("n", cfg.n);
    cfg.max_events = j.value("max_events", cfg.max_events);
    cfg.fairness = j.value("fairness", cfg.fairness);
    if (j.contains("crash_policy")) {
      const auto& c = j.at("crash_policy");
      const auto mode = c.value("mode", std::string{"none"});
      if (mode == "none") {
        cfg.crash.mode = CrashMode::kNone;
      } else if (mode == "random") {
        cfg.crash.mode = CrashMode::kRandom;
      } else if (mode == "targeted") {
        cfg.crash.mode = CrashMode::kTargeted;
      } else {
        throw ConfigError(fmt::format("unknown crash mode '{}'", mode));
      }
      cfg.crash.probability = c.value("probability", 0.0);
      for (const auto& s : c.value("sites", json::array())) {
        cfg.crash.sites.push_back({s.at("pid").get<Pid>(), s.at("point").get<std::string>(),
                                   s.value("occurrence", std::uint32_t{1})});
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("schedule config: {}", e.what()));
  }
  validate(cfg);
  return cfg;
}

ScheduleConfig load_schedule_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return schedule_from_json(buf.str());
}

std::string to_json(const ScheduleConfig& cfg) {
  static constexpr const char* kModes[] = {"none", "random", "targeted"};
  json sites = json::array();
  for (const auto& s : cfg.crash.sites) sites.push_back({{"pid", s.pid}, {"point", s.point}, {"occurrence", s.occurrence}});
  json j = {{"seed", cfg.seed},
            {"n", cfg.n},
            {"max_events", cfg.max_events},
            {"fairness", cfg.fairness},
            {"crash_policy",
             {{"mode", kModes[static_cast<int>(cfg.crash.mode)]},
              {"probability", cfg.crash.probability},
              {"sites", sites}}}};
  return j.dump();
}

RunResult run(Machine& m, const ScheduleConfig& cfg) {
  validate(cfg);
  if (cfg.n != m.n()) throw ConfigError(fmt::format("schedule is for n = {} but the system has {}", cfg.n, m.n()));
  if (m.events() == 0) m.start();

  RunResult result;
  const std::uint64_t base = m.events();
  const auto n = static_cast<std::size_t>(m.n());
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::uint32_t> denied(n + 1, 0);
  std::vector<Pid> runnable;
  std::map<std::pair<Pid, std::string>, std::uint32_t> visits;
  // Idle steps emit nothing, so bound steps as well as events.
  const std::uint64_t max_steps = cfg.max_events * 8 + 1024;

  while (m.events() - base < cfg.max_events && result.steps < max_steps) {
    runnable.clear();
    for (Pid p = 1; p <= n; ++p) {
      if (m.status(p) != ProcStatus::kDone) runnable.push_back(p);
    }
    if (runnable.empty()) {
      result.completed = true;
      break;
    }
    Pid chosen = 0;
    std::uint32_t worst = 0;
    for (Pid p : runnable) {
      if (denied[p] >= cfg.fairness && denied[p] > worst) {
        worst = denied[p];
        chosen = p;
      }
    }
    if (chosen == 0) chosen = runnable[rng() % runnable.size()];
    for (Pid p : runnable) ++denied[p];
    denied[chosen] = 0;

    bool crash = false;
    if (m.status(chosen) == ProcStatus::kRunning) {
      switch (cfg.crash.mode) {
        case CrashMode::kNone:
          break;
        case CrashMode::kRandom:
          crash = static_cast<double>(rng() >> 11) * 0x1.0p-53 < cfg.crash.probability;
          break;
        case CrashMode::kTargeted: {
          const std::string point = m.point(chosen);
          const auto seen = ++visits[{chosen, point}];
          for (const auto& s : cfg.crash.sites) {
            if (s.pid == chosen && s.point == point && s.occurrence == seen) crash = true;
          }
          break;
        }
      }
    }
    ++result.steps;
    if (crash) {
      m.crash(chosen);
      ++result.crashes;
    } else {
      m.step(chosen);
    }
  }
  if (!result.completed && m.all_done()) result.completed = true;
  result.events = m.events() - base;
  return result;
}

}  // namespace rme
