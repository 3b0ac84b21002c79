#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "rme/sim/types.hpp"
#include "rme/sim/vocabulary.hpp"

namespace rme {

class Context;

/// Volatile activation record of a routine. r[0] receives the result of
/// every memory action and the return value of every call; call arguments
/// arrive in r[1..3]. Everything in a frame is lost on a crash.
struct Frame {
  RoutineId routine{};
  std::uint16_t pc = 0;
  std::array<Word, 6> r{};

  friend bool operator==(const Frame&, const Frame&) = default;
};

enum class ActionKind : std::uint8_t {
  kRead,
  kWrite,
  kCas,
  kPersist,
  kIdle,
  kCall,
  kReturn,
  kHalt,
};

/// What a routine asks the machine to do next. Read, write, cas, persist and
/// idle each end the current step; call and return are resolved within it.
struct Action {
  ActionKind kind = ActionKind::kIdle;
  std::uint16_t next_pc = 0;
  Category category = Category::kNone;
  CellId cell{};
  Word value = 0;      // written value, cas desired value, persisted value, return value
  Word expected = 0;   // cas only
  VarSlot slot{};
  RoutineId callee{};
  std::array<Word, 3> args{};

  static Action read(CellId c, Category cat, std::uint16_t next) {
    Action a{ActionKind::kRead, next, cat};
    a.cell = c;
    return a;
  }
  static Action write(CellId c, Word v, Category cat, std::uint16_t next) {
    Action a{ActionKind::kWrite, next, cat};
    a.cell = c;
    a.value = v;
    return a;
  }
  /// r[0] receives 1 on success, 0 on failure.
  static Action cas(CellId c, Word expected, Word desired, Category cat, std::uint16_t next) {
    Action a{ActionKind::kCas, next, cat};
    a.cell = c;
    a.expected = expected;
    a.value = desired;
    return a;
  }
  static Action persist(VarSlot s, Word v, std::uint16_t next) {
    Action a{ActionKind::kPersist, next};
    a.slot = s;
    a.value = v;
    return a;
  }
  static Action idle(std::uint16_t next) { return Action{ActionKind::kIdle, next}; }
  static Action call(RoutineId r, std::uint16_t next, Word a0 = 0, Word a1 = 0, Word a2 = 0) {
    Action a{ActionKind::kCall, next};
    a.callee = r;
    a.args = {a0, a1, a2};
    return a;
  }
  static Action ret(Word v = 0) {
    Action a{ActionKind::kReturn};
    a.value = v;
    return a;
  }
  static Action halt() { return Action{ActionKind::kHalt}; }
};

/// A routine is a state machine over its frame. Implementations keep no
/// mutable state of their own: everything a process remembers lives in its
/// frames, its persistent variables or shared memory.
class Routine {
 public:
  virtual ~Routine() = default;
  virtual std::string_view name() const = 0;
  virtual Action resume(Context& ctx, Frame& f) const = 0;
};

}  // namespace rme
