#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rme/sim/types.hpp"

namespace rme {

/// RMRs charged to one access, per model.
struct Charge {
  std::uint8_t cc = 0;
  std::uint8_t dsm = 0;
};

/// Per-process RMR totals, indexed by pid (entry 0 unused).
struct RmrAccount {
  std::vector<std::uint64_t> cc;
  std::vector<std::uint64_t> dsm;

  friend bool operator==(const RmrAccount&, const RmrAccount&) = default;
};

/// Shared memory: persistent words with a fixed home, plus live RMR
/// accounting under both the CC and the DSM model.
///
/// CC: a read costs one RMR unless the reader holds a valid cached copy;
/// every write or CAS (successful or not) costs one RMR, invalidates all
/// other copies and leaves the writer with a valid copy.
/// DSM: any access by a process other than the home costs one RMR; CENTRAL
/// cells are remote for everyone.
class Memory {
 public:
  explicit Memory(int n);

  CellId alloc_cell(Pid home, Word init);

  std::size_t size() const { return values_.size(); }
  int process_count() const { return n_; }
  Word value(CellId c) const { return values_[checked(c)]; }
  Pid home(CellId c) const { return homes_[checked(c)]; }
  std::span<const Word> values() const { return values_; }

  Word read(Pid pid, CellId c, Charge& charge);
  /// Returns the previous value.
  Word write(Pid pid, CellId c, Word v, Charge& charge);
  /// `observed` receives the value before the operation.
  bool cas(Pid pid, CellId c, Word expected, Word desired, Word& observed, Charge& charge);

  bool cached(Pid pid, CellId c) const { return (valid_[checked(c)] & bit(pid)) != 0; }
  const RmrAccount& account() const { return account_; }

 private:
  std::size_t checked(CellId c) const;
  void check_pid(Pid pid) const;
  static std::uint64_t bit(Pid pid) { return std::uint64_t{1} << (pid - 1); }
  void charge_write(Pid pid, std::size_t i, Charge& charge);

  int n_;
  std::vector<Word> values_;
  std::vector<Pid> homes_;
  std::vector<std::uint64_t> valid_;
  RmrAccount account_;
};

}  // namespace rme
