#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "rme/sim/trace.hpp"

namespace rme {

enum class RmrModel : std::uint8_t { kCc, kDsm, kBoth };

struct RmrPair {
  std::uint64_t cc = 0;
  std::uint64_t dsm = 0;
};

struct ProcStats {
  std::uint64_t passages = 0;   // completed (failure-free) passages
  std::uint64_t crashes = 0;
  std::uint64_t pool_swaps = 0;
  std::array<RmrPair, 5> rmr{};   // indexed by Category
};

struct StatsReport {
  int n = 0;
  std::vector<ProcStats> procs;                 // procs[p-1]
  std::map<std::string, RmrPair> max_op;        // worst completed call, per operation
  std::map<std::string, std::uint64_t> calls;   // completed calls, per operation
  RmrPair max_passage_reclaim;                  // reclaim + broadcast RMRs of one passage
  std::uint64_t passages_measured = 0;
  std::uint64_t violations = 0;

  void merge(const StatsReport& other);
  std::string to_json(RmrModel model = RmrModel::kBoth) const;
};

/// Accumulates RMR statistics from a live or replayed event stream. Events
/// must carry their RMR charges.
class StatsCollector : public EventSink {
 public:
  explicit StatsCollector(int n);
  void on_event(const Event& e) override;
  const StatsReport& report() const { return report_; }

 private:
  struct OpenCall {
    std::uint8_t op;
    RmrPair rmr;
  };
  struct Passage {
    bool open = false;
    RmrPair rmr;
  };
  void close_passage(Pid p);

  StatsReport report_;
  std::vector<std::vector<OpenCall>> calls_;
  std::vector<Passage> passages_;
};

}  // namespace rme
