#include "rme/sim/memory.hpp"

#include <fmt/format.h>

namespace rme {

Memory::Memory(int n) : n_(n) {
  if (n < 1 || n > kMaxProcesses) {
    throw ConfigError(fmt::format("process count {} outside 1..{}", n, kMaxProcesses));
  }
  account_.cc.assign(static_cast<std::size_t>(n) + 1, 0);
  account_.dsm.assign(static_cast<std::size_t>(n) + 1, 0);
}

CellId Memory::alloc_cell(Pid home, Word init) {
  if (home > static_cast<Pid>(n_)) {
    throw SimError(fmt::format("cell home {} outside 0..{}", home, n_));
  }
  values_.push_back(init);
  homes_.push_back(home);
  valid_.push_back(0);
  return static_cast<CellId>(values_.size() - 1);
}

std::size_t Memory::checked(CellId c) const {
  const auto i = static_cast<std::size_t>(raw(c));
  if (i >= values_.size()) throw SimError(fmt::format("unknown cell id {}", i));
  return i;
}

Word Memory::read(Pid pid, CellId c, Charge& charge) {
  const auto i = checked(c);
  check_pid(pid);
  charge = {};
  if ((valid_[i] & bit(pid)) == 0) {
    charge.cc = 1;
    valid_[i] |= bit(pid);
  }
  if (homes_[i] != pid) charge.dsm = 1;
  account_.cc[pid] += charge.cc;
  account_.dsm[pid] += charge.dsm;
  return values_[i];
}

void Memory::check_pid(Pid pid) const {
  if (pid < 1 || pid > static_cast<Pid>(n_)) throw SimError(fmt::format("access by invalid pid {}", pid));
}

void Memory::charge_write(Pid pid, std::size_t i, Charge& charge) {
  check_pid(pid);
  charge.cc = 1;
  charge.dsm = homes_[i] != pid ? 1 : 0;
  valid_[i] = bit(pid);
  account_.cc[pid] += charge.cc;
  account_.dsm[pid] += charge.dsm;
}

Word Memory::write(Pid pid, CellId c, Word v, Charge& charge) {
  const auto i = checked(c);
  charge_write(pid, i, charge);
  const Word old = values_[i];
  values_[i] = v;
  return old;
}

bool Memory::cas(Pid pid, CellId c, Word expected, Word desired, Word& observed, Charge& charge) {
  const auto i = checked(c);
  charge_write(pid, i, charge);
  observed = values_[i];
  if (observed != expected) return false;
  values_[i] = desired;
  return true;
}

}  // namespace rme
