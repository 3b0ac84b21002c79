#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "rme/sim/types.hpp"
#include "rme/sim/vocabulary.hpp"

namespace rme {

inline constexpr Pid kNoHome = std::numeric_limits<Pid>::max();

/// One entry of a trace.
///
/// The exported form has exactly the fields seq, pid, kind, cell, home, old,
/// new and note. `tag` and `arg` are the structured content of the note and
/// are rendered to / parsed from its text; the RMR charges are live
/// accounting only and are not exported.
///
/// Field use by kind:
///   read/write/cas  cell, home, old (value before), new (value after);
///                   arg[0] = Category; cas adds arg[1] expected,
///                   arg[2] desired, arg[3] success
///   persist         cell = variable slot, home = pid; arg[0] = VarKind,
///                   arg[1] = element index
///   segment-*       arg[0] = Segment
///   lifecycle       arg[0] node, arg[1] from Stage, arg[2] to Stage,
///                   arg[3] generation after the transition
///   annotation      tag selects the meaning of arg (see note_keys()).
struct Event {
  std::uint64_t seq = 0;
  Pid pid = 0;
  EventKind kind = EventKind::kAnnotation;
  std::uint32_t cell = kNoCell;
  Pid home = kNoHome;
  Word old_value = 0;
  Word new_value = 0;
  Tag tag = Tag::kNone;
  std::array<Word, 5> arg{};
  std::uint8_t cc_rmr = 0;
  std::uint8_t dsm_rmr = 0;

  Category category() const { return static_cast<Category>(arg[0]); }
  bool is_annotation(Tag t) const { return kind == EventKind::kAnnotation && tag == t; }

  friend bool operator==(const Event&, const Event&) = default;
};

std::string render_note(const Event& e);

/// Parses `note` into e.tag / e.arg. e.kind must already be set; it selects
/// the tag for head-less notes. Throws ConfigError on malformed text.
void parse_note(std::string_view note, Event& e);

/// Tag implied by an event kind when the note carries no head word.
Tag implicit_tag(EventKind kind);

}  // namespace rme
