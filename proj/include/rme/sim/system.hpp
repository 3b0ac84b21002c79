#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "rme/sim/directory.hpp"
#include "rme/sim/memory.hpp"
#include "rme/sim/program.hpp"

namespace rme {

struct VarDecl {
  VarKind kind = VarKind::kUser;
  std::uint32_t idx = 0;
  Word init = 0;
};

/// Everything about a simulated system that does not change while it runs:
/// the initial memory image, the directory, the routines, the persistent
/// variable layout and each process's entry points. Built once, then shared
/// read-only by every Machine that executes it.
class System {
 public:
  explicit System(SystemConfig config);

  const SystemConfig& config() const { return directory_.config; }
  int n() const { return directory_.config.n; }
  Mutation mutation() const { return directory_.config.mutation; }

  CellId alloc_cell(Pid home, Word init, CellRole role = CellRole::kOther, std::uint32_t obj = 0,
                    std::uint32_t idx = 0);
  /// Declares a broadcast object; its cells are allocated by the caller with
  /// the matching roles.
  ObjectId declare_broadcast(Pid writer, Variant variant);
  /// Allocates a node with `payload_words` cells homed at its owner.
  NodeId declare_node(Pid owner, std::uint32_t pool, std::uint32_t pos);
  void declare_reclaim(Pid pid, CellId start, ObjectId finish);
  /// Persistent variables have the same layout in every process.
  VarSlot declare_var(VarKind kind, std::uint32_t idx, Word init);
  std::optional<VarSlot> find_var(VarKind kind, std::uint32_t idx) const;
  VarSlot var_slot(VarKind kind, std::uint32_t idx) const;

  RoutineId add_routine(std::unique_ptr<Routine> routine);
  /// The process starts with `start` as its only frame and restarts from
  /// `recover` after every crash.
  void set_entry(Pid pid, Frame start, Frame recover);

  /// Freezes the system. Required before a Machine can run it.
  void finalize();
  bool finalized() const { return finalized_; }

  const Directory& directory() const { return directory_; }
  const Memory& initial_memory() const { return memory_; }
  const Routine& routine(RoutineId id) const;
  std::size_t routine_count() const { return routines_.size(); }
  const std::vector<VarDecl>& vars() const { return vars_; }
  const Frame& start_frame(Pid pid) const { return starts_.at(pid); }
  const Frame& recover_frame(Pid pid) const { return recovers_.at(pid); }

 private:
  void check_open() const;

  Directory directory_;
  Memory memory_;
  std::vector<std::unique_ptr<Routine>> routines_;
  std::vector<VarDecl> vars_;
  std::vector<Frame> starts_;
  std::vector<Frame> recovers_;
  std::vector<bool> has_entry_;
  bool finalized_ = false;
};

/// Digest of a volatile frame stack; recover events carry it so auditors can
/// confirm that recovery starts from the declared initial volatile state.
Word frames_digest(const std::vector<Frame>& frames);

}  // namespace rme
