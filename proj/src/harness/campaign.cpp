#include "rme/harness/campaign.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include "rme/sim/machine.hpp"

namespace rme {
namespace {

class PoolSwapCounter : public EventSink {
 public:
  void on_event(const Event& e) override {
    if (e.is_annotation(Tag::kPoolSwap)) ++count;
  }
  std::uint64_t count = 0;
};

}  // namespace

RunReport run_workload(const RunSpec& spec) {
  if (spec.schedule.n != spec.workload.n) {
    throw ConfigError(fmt::format("schedule n = {} but workload n = {}", spec.schedule.n, spec.workload.n));
  }
  const Workload w = build_workload(spec.workload);
  RunReport report;
  Machine m(w.system, spec.schedule.seed);
  StatsCollector stats(spec.workload.n);
  LivenessMonitor live(spec.workload.n, liveness_config(w.system->config(), spec.patience));
  PoolSwapCounter swaps;
  m.add_sink(&stats);
  m.add_sink(&live);
  m.add_sink(&swaps);
  if (spec.keep_trace) m.add_sink(&report.trace);
  report.result = run(m, spec.schedule);
  report.violations = m.audit().violations();
  for (auto& v : live.finish()) report.violations.push_back(std::move(v));
  report.stats = stats.report();
  report.stats.violations = report.violations.size();
  report.pool_swap_checks = swaps.count;
  return report;
}

ReplayReport replay_trace(const Trace& trace, std::uint64_t patience) {
  std::size_t header = 0;
  auto dir = std::make_shared<Directory>(Directory::from_header(trace, header));
  dir->finalize();
  ReplayReport report;
  report.config = dir->config;
  Memory memory(dir->n());
  for (const auto& c : dir->cells) {
    if (memory.alloc_cell(c.home, c.init) != c.id) throw ConfigError("cell ids are not dense");
  }
  AuditSuite audit(dir);
  StatsCollector stats(dir->n());
  LivenessMonitor live(dir->n(), liveness_config(dir->config, patience));

  std::uint64_t expect = 0;
  for (Event e : trace) {
    if (e.seq != expect++) throw ConfigError(fmt::format("seq {} where {} was expected", e.seq, expect - 1));
    if (is_memory_op(e.kind)) {
      if (e.pid < 1 || e.pid > static_cast<Pid>(dir->n())) throw ConfigError(fmt::format("seq {}: bad pid", e.seq));
      const auto cell = static_cast<CellId>(e.cell);
      if (e.cell >= memory.size() || memory.home(cell) != e.home) {
        throw ConfigError(fmt::format("seq {}: cell {} does not match the header", e.seq, e.cell));
      }
      Charge charge;
      bool consistent = true;
      switch (e.kind) {
        case EventKind::kRead:
          consistent = memory.read(e.pid, cell, charge) == e.old_value && e.new_value == e.old_value;
          break;
        case EventKind::kWrite:
          consistent = memory.write(e.pid, cell, e.new_value, charge) == e.old_value;
          break;
        default: {
          Word observed = 0;
          const bool ok = memory.cas(e.pid, cell, e.arg[1], e.arg[2], observed, charge);
          consistent = observed == e.old_value && ok == (e.arg[3] != 0) && memory.value(cell) == e.new_value;
          break;
        }
      }
      if (!consistent) throw ConfigError(fmt::format("seq {}: values disagree with memory", e.seq));
      e.cc_rmr = charge.cc;
      e.dsm_rmr = charge.dsm;
    }
    audit.observe(e);
    stats.on_event(e);
    live.on_event(e);
  }
  report.events = expect;
  report.violations = audit.violations();
  for (auto& v : live.finish()) report.violations.push_back(std::move(v));
  report.stats = stats.report();
  report.stats.violations = report.violations.size();
  report.rmr = memory.account();
  return report;
}

std::string to_json(const ViolationList& violations) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& v : violations) {
    j.push_back({{"kind", std::string{name_of(v.kind)}}, {"seq", v.seq}, {"pid", v.pid}, {"detail", v.detail}});
  }
  return j.dump();
}

}  // namespace rme
