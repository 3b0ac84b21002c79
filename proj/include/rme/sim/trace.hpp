#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "rme/sim/event.hpp"

namespace rme {

/// Receives events as the simulator produces them.
class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void on_event(const Event& e) = 0;
};

/// The totally ordered event log of one execution.
class Trace : public EventSink {
 public:
  void on_event(const Event& e) override { events_.push_back(e); }

  const std::vector<Event>& events() const { return events_; }
  std::vector<Event>& events() { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  auto begin() const { return events_.begin(); }
  auto end() const { return events_.end(); }
  void push_back(const Event& e) { events_.push_back(e); }

 private:
  std::vector<Event> events_;
};

/// One JSON object per line: seq, pid, kind, cell, home, old, new, note.
std::string to_ndjson_line(const Event& e);
Event from_ndjson_line(std::string_view line);

void write_ndjson(const Trace& trace, std::ostream& out);
std::string to_ndjson(const Trace& trace);

/// Writes the trace to `path`, gzip-compressed when `gzip` is set.
void save_trace(const Trace& trace, const std::filesystem::path& path, bool gzip = false);

/// Reads a trace written by save_trace. Compressed and plain files are both
/// accepted. Throws ConfigError on malformed content.
Trace load_trace(const std::filesystem::path& path);

}  // namespace rme
