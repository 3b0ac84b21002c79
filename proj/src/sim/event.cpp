#include "rme/sim/event.hpp"

#include <charconv>
#include <span>
#include <vector>

#include <fmt/format.h>

namespace rme {
namespace {

enum class Domain : std::uint8_t {
  kNumber,
  kCategory,
  kVar,
  kSegment,
  kStage,
  kVariant,
  kMutation,
  kRole,
  kOp,
};

struct KeySpec {
  std::string_view key;
  Domain domain = Domain::kNumber;
};

std::span<const KeySpec> keys_for(Tag tag) {
  static constexpr KeySpec kMemOp[] = {{"cat", Domain::kCategory},
                                       {"expect"},
                                       {"desired"},
                                       {"ok"}};
  static constexpr KeySpec kPersist[] = {{"var", Domain::kVar}, {"idx"}};
  static constexpr KeySpec kSegment[] = {{"seg", Domain::kSegment}};
  static constexpr KeySpec kLifecycle[] = {
      {"node"}, {"from", Domain::kStage}, {"to", Domain::kStage}, {"gen"}};
  static constexpr KeySpec kConfig[] = {{"n"},
                                        {"variant", Domain::kVariant},
                                        {"payload"},
                                        {"mutation", Domain::kMutation}};
  static constexpr KeySpec kCell[] = {{"role", Domain::kRole}, {"obj"}, {"idx"}};
  static constexpr KeySpec kNode[] = {{"id"}, {"owner"}, {"pool"}, {"pos"}, {"payload"}};
  static constexpr KeySpec kBcast[] = {{"obj"}, {"writer"}, {"variant", Domain::kVariant}};
  static constexpr KeySpec kReclaim[] = {{"pid"}, {"start"}, {"finish"}};
  static constexpr KeySpec kProc[] = {{"pid"}, {"digest"}};
  static constexpr KeySpec kCall[] = {{"op", Domain::kOp}, {"a"}, {"b"}};
  static constexpr KeySpec kAccess[] = {{"node"}};
  static constexpr KeySpec kPool[] = {{"pool"}};
  static constexpr KeySpec kRecovery[] = {{"digest"}};

  switch (tag) {
    case Tag::kMemOp: return kMemOp;
    case Tag::kPersist: return kPersist;
    case Tag::kSegment: return kSegment;
    case Tag::kLifecycle: return kLifecycle;
    case Tag::kConfigDecl: return kConfig;
    case Tag::kCellDecl: return kCell;
    case Tag::kNodeDecl: return kNode;
    case Tag::kBroadcastDecl: return kBcast;
    case Tag::kReclaimDecl: return kReclaim;
    case Tag::kProcessDecl: return kProc;
    case Tag::kCall:
    case Tag::kReturn: return kCall;
    case Tag::kAccess: return kAccess;
    case Tag::kPoolSwap: return kPool;
    case Tag::kRecovery: return kRecovery;
    default: return {};
  }
}

std::string_view domain_name(Domain d, Word v) {
  switch (d) {
    case Domain::kCategory: return name_of(static_cast<Category>(v));
    case Domain::kVar: return name_of(static_cast<VarKind>(v));
    case Domain::kSegment: return name_of(static_cast<Segment>(v));
    case Domain::kStage: return name_of(static_cast<Stage>(v));
    case Domain::kVariant: return name_of(static_cast<Variant>(v));
    case Domain::kMutation: return name_of(static_cast<Mutation>(v));
    case Domain::kRole: return name_of(static_cast<CellRole>(v));
    case Domain::kOp: return name_of(static_cast<OpName>(v));
    case Domain::kNumber: break;
  }
  return {};
}

template <typename E>
std::optional<Word> parse_as(std::string_view text) {
  if (auto v = parse_enum<E>(text)) return static_cast<Word>(*v);
  return std::nullopt;
}

std::optional<Word> domain_parse(Domain d, std::string_view text) {
  switch (d) {
    case Domain::kCategory: return parse_as<Category>(text);
    case Domain::kVar: return parse_as<VarKind>(text);
    case Domain::kSegment: return parse_as<Segment>(text);
    case Domain::kStage: return parse_as<Stage>(text);
    case Domain::kVariant: return parse_as<Variant>(text);
    case Domain::kMutation: return parse_as<Mutation>(text);
    case Domain::kRole: return parse_as<CellRole>(text);
    case Domain::kOp: return parse_as<OpName>(text);
    case Domain::kNumber: {
      Word v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
      return v;
    }
  }
  return std::nullopt;
}

}  // namespace

Tag implicit_tag(EventKind kind) {
  switch (kind) {
    case EventKind::kRead:
    case EventKind::kWrite:
    case EventKind::kCas: return Tag::kMemOp;
    case EventKind::kPersist: return Tag::kPersist;
    case EventKind::kSegmentEnter:
    case EventKind::kSegmentExit: return Tag::kSegment;
    case EventKind::kLifecycle: return Tag::kLifecycle;
    case EventKind::kRecover: return Tag::kRecovery;
    default: return Tag::kNone;
  }
}

std::string render_note(const Event& e) {
  std::string out{name_of(e.tag)};
  auto keys = keys_for(e.tag);
  // Plain reads and writes only carry their category.
  if (e.tag == Tag::kMemOp && e.kind != EventKind::kCas) keys = keys.first(1);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (!out.empty()) out.push_back(' ');
    const auto& spec = keys[i];
    if (spec.domain == Domain::kNumber) {
      fmt::format_to(std::back_inserter(out), "{}={}", spec.key, e.arg[i]);
    } else {
      fmt::format_to(std::back_inserter(out), "{}={}", spec.key, domain_name(spec.domain, e.arg[i]));
    }
  }
  return out;
}

void parse_note(std::string_view note, Event& e) {
  e.tag = implicit_tag(e.kind);
  e.arg = {};
  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < note.size()) {
    while (pos < note.size() && note[pos] == ' ') ++pos;
    std::size_t end = note.find(' ', pos);
    if (end == std::string_view::npos) end = note.size();
    if (end > pos) tokens.push_back(note.substr(pos, end - pos));
    pos = end;
  }
  std::size_t first = 0;
  if (!tokens.empty() && tokens[0].find('=') == std::string_view::npos) {
    auto head = parse_enum<Tag>(tokens[0]);
    if (!head) throw ConfigError(fmt::format("unknown note head '{}'", tokens[0]));
    e.tag = *head;
    first = 1;
  }
  const auto keys = keys_for(e.tag);
  for (std::size_t t = first; t < tokens.size(); ++t) {
    const auto eq = tokens[t].find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("malformed note token '{}'", tokens[t]));
    }
    const auto key = tokens[t].substr(0, eq);
    const auto value = tokens[t].substr(eq + 1);
    bool matched = false;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (keys[i].key != key) continue;
      auto parsed = domain_parse(keys[i].domain, value);
      if (!parsed) throw ConfigError(fmt::format("bad value '{}' for key '{}'", value, key));
      e.arg[i] = *parsed;
      matched = true;
      break;
    }
    if (!matched) throw ConfigError(fmt::format("unknown note key '{}'", key));
  }
}

}  // namespace rme
