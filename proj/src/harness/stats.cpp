#include "rme/harness/stats.hpp"

#include <algorithm>

#include <json.hpp>

namespace rme {

void StatsReport::merge(const StatsReport& other) {
  if (procs.size() < other.procs.size()) procs.resize(other.procs.size());
  n = std::max(n, other.n);
  for (std::size_t p = 0; p < other.procs.size(); ++p) {
    auto& mine = procs[p];
    const auto& theirs = other.procs[p];
    mine.passages += theirs.passages;
    mine.crashes += theirs.crashes;
    mine.pool_swaps += theirs.pool_swaps;
    for (std::size_t c = 0; c < mine.rmr.size(); ++c) {
      mine.rmr[c].cc += theirs.rmr[c].cc;
      mine.rmr[c].dsm += theirs.rmr[c].dsm;
    }
  }
  for (const auto& [op, m] : other.max_op) {
    auto& mine = max_op[op];
    mine.cc = std::max(mine.cc, m.cc);
    mine.dsm = std::max(mine.dsm, m.dsm);
  }
  for (const auto& [op, c] : other.calls) calls[op] += c;
  max_passage_reclaim.cc = std::max(max_passage_reclaim.cc, other.max_passage_reclaim.cc);
  max_passage_reclaim.dsm = std::max(max_passage_reclaim.dsm, other.max_passage_reclaim.dsm);
  passages_measured += other.passages_measured;
  violations += other.violations;
}

std::string StatsReport::to_json(RmrModel model) const {
  using nlohmann::json;
  const bool cc = model != RmrModel::kDsm;
  const bool dsm = model != RmrModel::kCc;
  auto pair = [&](const RmrPair& r) {
    json j = json::object();
    if (cc) j["cc"] = r.cc;
    if (dsm) j["dsm"] = r.dsm;
    return j;
  };
  json processes = json::array();
  for (std::size_t p = 0; p < procs.size(); ++p) {
    const auto& s = procs[p];
    json rmr = json::object();
    for (std::size_t c = 1; c < s.rmr.size(); ++c) rmr[std::string{name_of(static_cast<Category>(c))}] = pair(s.rmr[c]);
    processes.push_back({{"pid", p + 1},
                         {"passages", s.passages},
                         {"crashes", s.crashes},
                         {"pool_swaps", s.pool_swaps},
                         {"rmr", rmr}});
  }
  json ops = json::object();
  for (const auto& [op, m] : max_op) {
    json entry = pair(m);
    entry["calls"] = calls.count(op) ? calls.at(op) : 0;
    ops[op] = entry;
  }
  json j = {{"n", n},
            {"processes", processes},
            {"max_op_rmr", ops},
            {"max_passage_reclaim_rmr", pair(max_passage_reclaim)},
            {"passages_measured", passages_measured},
            {"violations", violations}};
  return j.dump();
}

StatsCollector::StatsCollector(int n) {
  report_.n = n;
  report_.procs.resize(static_cast<std::size_t>(n));
  calls_.resize(static_cast<std::size_t>(n) + 1);
  passages_.resize(static_cast<std::size_t>(n) + 1);
}

void StatsCollector::close_passage(Pid p) {
  auto& passage = passages_[p];
  if (!passage.open) return;
  auto& worst = report_.max_passage_reclaim;
  worst.cc = std::max(worst.cc, passage.rmr.cc);
  worst.dsm = std::max(worst.dsm, passage.rmr.dsm);
  ++report_.passages_measured;
  passage = {};
}

void StatsCollector::on_event(const Event& e) {
  if (e.pid == kHarness || e.pid >= calls_.size()) return;
  const Pid p = e.pid;
  auto& proc = report_.procs[p - 1];
  if (is_memory_op(e.kind)) {
    const auto cat = static_cast<std::size_t>(e.category());
    if (cat < proc.rmr.size()) {
      proc.rmr[cat].cc += e.cc_rmr;
      proc.rmr[cat].dsm += e.dsm_rmr;
    }
    for (auto& open : calls_[p]) {
      open.rmr.cc += e.cc_rmr;
      open.rmr.dsm += e.dsm_rmr;
    }
    const auto c = e.category();
    if (passages_[p].open && (c == Category::kReclaim || c == Category::kBroadcast)) {
      passages_[p].rmr.cc += e.cc_rmr;
      passages_[p].rmr.dsm += e.dsm_rmr;
    }
    return;
  }
  switch (e.kind) {
    case EventKind::kCrash:
      ++proc.crashes;
      calls_[p].clear();
      close_passage(p);
      return;
    case EventKind::kAnnotation:
      break;
    default:
      return;
  }
  switch (e.tag) {
    case Tag::kCall:
      calls_[p].push_back({static_cast<std::uint8_t>(e.arg[0]), {}});
      return;
    case Tag::kReturn: {
      auto& stack = calls_[p];
      while (!stack.empty()) {
        const auto open = stack.back();
        stack.pop_back();
        if (open.op != e.arg[0]) continue;
        const std::string op{name_of(static_cast<OpName>(open.op))};
        auto& worst = report_.max_op[op];
        worst.cc = std::max(worst.cc, open.rmr.cc);
        worst.dsm = std::max(worst.dsm, open.rmr.dsm);
        ++report_.calls[op];
        break;
      }
      return;
    }
    case Tag::kPassageBegin:
      close_passage(p);
      passages_[p].open = true;
      return;
    case Tag::kPassageEnd:
      ++proc.passages;
      close_passage(p);
      return;
    case Tag::kPoolSwap:
      ++proc.pool_swaps;
      return;
    default:
      return;
  }
}

}  // namespace rme
