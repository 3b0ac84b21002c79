#include "rme/sim/trace.hpp"

#include <memory>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <zlib.h>

#include "json.hpp"

namespace rme {
namespace {

struct GzCloser {
  void operator()(gzFile f) const {
    if (f != nullptr) gzclose(f);
  }
};
using GzHandle = std::unique_ptr<gzFile_s, GzCloser>;

}  // namespace

std::string to_ndjson_line(const Event& e) {
  std::string out;
  out.reserve(128);
  auto it = std::back_inserter(out);
  fmt::format_to(it, R"({{"seq":{},"pid":{},"kind":"{}","cell":)", e.seq, e.pid, name_of(e.kind));
  if (e.cell == kNoCell) {
    fmt::format_to(it, "null");
  } else {
    fmt::format_to(it, "{}", e.cell);
  }
  fmt::format_to(it, R"(,"home":)");
  if (e.home == kNoHome) {
    fmt::format_to(it, "null");
  } else {
    fmt::format_to(it, "{}", e.home);
  }
  fmt::format_to(it, R"(,"old":{},"new":{},"note":"{}"}})", e.old_value, e.new_value,
                 render_note(e));
  return out;
}

Event from_ndjson_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(fmt::format("malformed trace line: {}", ex.what()));
  }
  Event e;
  try {
    e.seq = j.at("seq").get<std::uint64_t>();
    e.pid = j.at("pid").get<Pid>();
    auto kind = parse_enum<EventKind>(j.at("kind").get<std::string>());
    if (!kind) throw ConfigError("unknown event kind");
    e.kind = *kind;
    const auto& cell = j.at("cell");
    e.cell = cell.is_null() ? kNoCell : cell.get<std::uint32_t>();
    const auto& home = j.at("home");
    e.home = home.is_null() ? kNoHome : home.get<Pid>();
    e.old_value = j.at("old").get<Word>();
    e.new_value = j.at("new").get<Word>();
    parse_note(j.at("note").get<std::string>(), e);
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError(fmt::format("malformed trace event: {}", ex.what()));
  }
  return e;
}

void write_ndjson(const Trace& trace, std::ostream& out) {
  for (const auto& e : trace) out << to_ndjson_line(e) << '\n';
}

std::string to_ndjson(const Trace& trace) {
  std::ostringstream out;
  write_ndjson(trace, out);
  return out.str();
}

void save_trace(const Trace& trace, const std::filesystem::path& path, bool gzip) {
  GzHandle f{gzopen(path.c_str(), gzip ? "wb6" : "wbT")};
  if (!f) throw ConfigError(fmt::format("cannot open '{}' for writing", path.string()));
  for (const auto& e : trace) {
    auto line = to_ndjson_line(e);
    line.push_back('\n');
    if (gzwrite(f.get(), line.data(), static_cast<unsigned>(line.size())) !=
        static_cast<int>(line.size())) {
      throw ConfigError(fmt::format("write to '{}' failed", path.string()));
    }
  }
}

Trace load_trace(const std::filesystem::path& path) {
  GzHandle f{gzopen(path.c_str(), "rb")};
  if (!f) throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  Trace trace;
  std::string line;
  char buf[4096];
  std::uint64_t expected_seq = 0;
  auto flush = [&] {
    if (line.empty()) return;
    Event e = from_ndjson_line(line);
    if (e.seq != expected_seq) {
      throw ConfigError(fmt::format("trace sequence gap: expected {}, found {}", expected_seq, e.seq));
    }
    ++expected_seq;
    trace.push_back(e);
    line.clear();
  };
  for (;;) {
    int got = gzread(f.get(), buf, sizeof(buf));
    if (got < 0) throw ConfigError(fmt::format("read of '{}' failed", path.string()));
    if (got == 0) break;
    for (int i = 0; i < got; ++i) {
      if (buf[i] == '\n') {
        flush();
      } else {
        line.push_back(buf[i]);
      }
    }
  }
  flush();
  return trace;
}

}  // namespace rme
