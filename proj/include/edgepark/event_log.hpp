#pragma once

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "edgepark/types.hpp"

namespace edgepark {

/// A received event as written ahead of the state change it causes.
/// `rejected` marks events the state machine refused (clock regression).
struct EventEntry {
  OccupancyEvent event;
  bool rejected = false;
  friend bool operator==(const EventEntry&, const EventEntry&) = default;
};

/// Written after the roll-up of [window_start, ts].
struct FlushMarker {
  EpochMs ts = 0;
  EpochMs window_start = 0;
  friend bool operator==(const FlushMarker&, const FlushMarker&) = default;
};

/// The gateway session was lost at ts; every bay became unknown.
struct DisconnectMarker {
  EpochMs ts = 0;
  friend bool operator==(const DisconnectMarker&, const DisconnectMarker&) = default;
};

using LogEntry = std::variant<EventEntry, FlushMarker, DisconnectMarker>;

EpochMs entry_ts(const LogEntry& entry);

/// One JSON object, no newline:
///   {"ts":..,"lotId":"..","bayId":..,"status":"occupied"|"free","src":"snapshot"|"update"}
///   {"ts":..,"marker":"flush","windowStart":..}
///   {"ts":..,"marker":"disconnect"}
/// Rejected events carry an extra "rejected":true.
std::string encode_log_entry(const LogEntry& entry);
/// Throws ProtocolError.
LogEntry decode_log_entry(std::string_view line);

/// Append-only JSON-lines log. Each append is flushed before returning.
class EventLog {
 public:
  /// Opens (creating parent directories) for appending. Throws std::runtime_error.
  explicit EventLog(std::filesystem::path path);
  ~EventLog();
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  void append(const LogEntry& entry);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
};

struct LogContents {
  std::vector<LogEntry> entries;
  /// Unparseable final line (a write cut short by a crash).
  bool torn_tail = false;
  /// Unparseable lines before the last one.
  std::size_t bad_lines = 0;
  /// Length of the prefix holding only complete, parseable lines.
  std::uintmax_t valid_bytes = 0;
};

/// Reads a log; a missing file reads as empty. Throws std::runtime_error if
/// the file exists but cannot be read.
LogContents read_log(const std::filesystem::path& path);

struct RecoveredState {
  BayTable table;
  /// Most recent roll-up recorded in the log.
  std::optional<FlushMarker> last_flush;
  std::optional<EpochMs> first_ts;
  std::optional<EpochMs> last_ts;
  std::vector<std::string> warnings;
};

/// Rebuilds the live table by replaying the whole log: events through
/// apply_event, flush markers as roll-up resets, disconnect markers as
/// invalidation. A torn final line is dropped and, when `repair` is set,
/// cut from the file so later appends start on a clean line. An unreadable
/// log yields an empty table and a warning.
RecoveredState recover(const std::filesystem::path& log_path, bool repair = true);

}  // namespace edgepark
