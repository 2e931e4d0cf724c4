#include "edgepark/event_log.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "edgepark/occupancy.hpp"

namespace edgepark {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

EpochMs entry_ts(const LogEntry& entry) {
  return std::visit(
      [](const auto& e) -> EpochMs {
        if constexpr (std::is_same_v<std::decay_t<decltype(e)>, EventEntry>) {
          return e.event.ts;
        } else {
          return e.ts;
        }
      },
      entry);
}

std::string encode_log_entry(const LogEntry& entry) {
  if (const auto* ev = std::get_if<EventEntry>(&entry)) {
    ojson j{{"ts", ev->event.ts},
            {"lotId", ev->event.lot_id},
            {"bayId", ev->event.bay_id},
            {"status", std::string(to_string(ev->event.status))},
            {"src", ev->event.kind == EventKind::snapshot ? "snapshot" : "update"}};
    if (ev->rejected) j["rejected"] = true;
    return j.dump();
  }
  if (const auto* fm = std::get_if<FlushMarker>(&entry)) {
    return ojson{{"ts", fm->ts}, {"marker", "flush"}, {"windowStart", fm->window_start}}.dump();
  }
  const auto& dm = std::get<DisconnectMarker>(entry);
  return ojson{{"ts", dm.ts}, {"marker", "disconnect"}}.dump();
}

LogEntry decode_log_entry(std::string_view line) {
  const json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ProtocolError("log line is not a JSON object");
  try {
    const EpochMs ts = j.at("ts").get<EpochMs>();
    if (auto m = j.find("marker"); m != j.end()) {
      const std::string kind = m->get<std::string>();
      if (kind == "flush") return FlushMarker{ts, j.at("windowStart").get<EpochMs>()};
      if (kind == "disconnect") return DisconnectMarker{ts};
      throw ProtocolError("unknown log marker '" + kind + "'");
    }
    EventEntry e;
    e.event.ts = ts;
    e.event.lot_id = j.at("lotId").get<std::string>();
    e.event.bay_id = j.at("bayId").get<BayId>();
    const auto status = parse_bay_status(j.at("status").get<std::string>());
    if (!status || *status == BayStatus::unknown) throw ProtocolError("bad status in log line");
    e.event.status = *status;
    const std::string src = j.at("src").get<std::string>();
    if (src == "snapshot") {
      e.event.kind = EventKind::snapshot;
    } else if (src == "update") {
      e.event.kind = EventKind::update;
    } else {
      throw ProtocolError("bad src '" + src + "' in log line");
    }
    e.rejected = j.value("rejected", false);
    return e;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed log line: ") + e.what());
  }
}

EventLog::EventLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  file_ = std::fopen(path_.c_str(), "ab");
  if (!file_) throw std::runtime_error("cannot open event log " + path_.string());
}

EventLog::~EventLog() {
  if (file_) std::fclose(file_);
}

void EventLog::append(const LogEntry& entry) {
  std::string line = encode_log_entry(entry);
  line.push_back('\n');
  if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0) {
    throw std::runtime_error("write to event log " + path_.string() + " failed");
  }
}

LogContents read_log(const std::filesystem::path& path) {
  LogContents out;
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return out;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read event log " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();

  std::size_t pos = 0;
  std::size_t pending_bad = 0;
  while (pos < data.size()) {
    const auto nl = data.find('\n', pos);
    const bool complete = nl != std::string::npos;
    const std::string_view line(data.data() + pos, (complete ? nl : data.size()) - pos);
    const std::size_t next = complete ? nl + 1 : data.size();
    if (line.empty()) {
      pos = next;
      continue;
    }
    bool parsed = false;
    if (complete) {
      try {
        out.entries.push_back(decode_log_entry(line));
        parsed = true;
      } catch (const ProtocolError&) {
      }
    }
    if (parsed) {
      out.bad_lines += pending_bad;
      pending_bad = 0;
      out.valid_bytes = next;
    } else {
      ++pending_bad;
    }
    pos = next;
  }
  // A bad stretch at the very end is a torn write; anything earlier is corruption.
  if (pending_bad > 0) {
    out.torn_tail = true;
    out.bad_lines += pending_bad - 1;
  }
  return out;
}

RecoveredState recover(const std::filesystem::path& log_path, bool repair) {
  RecoveredState state;
  LogContents contents;
  try {
    contents = read_log(log_path);
  } catch (const std::exception& e) {
    state.warnings.push_back(std::string("event log unreadable, starting empty: ") + e.what());
    return state;
  }
  if (contents.torn_tail) {
    state.warnings.push_back("discarded torn final line of " + log_path.string());
    if (repair) std::filesystem::resize_file(log_path, contents.valid_bytes);
  }
  if (contents.bad_lines > 0) {
    state.warnings.push_back("skipped " + std::to_string(contents.bad_lines) +
                             " malformed log line(s)");
  }

  for (const auto& entry : contents.entries) {
    const EpochMs ts = entry_ts(entry);
    if (!state.first_ts) state.first_ts = ts;
    state.last_ts = ts;
    try {
      if (const auto* ev = std::get_if<EventEntry>(&entry)) {
        if (!ev->rejected) apply_event(state.table, ev->event);
      } else if (const auto* fm = std::get_if<FlushMarker>(&entry)) {
        rollup(state.table, RollupWindow{fm->window_start, fm->ts});
        state.last_flush = *fm;
      } else {
        invalidate(state.table, ts);
      }
    } catch (const std::exception& e) {
      state.warnings.push_back(std::string("log entry at ") + std::to_string(ts) +
                               " not replayable: " + e.what());
    }
  }
  return state;
}

}  // namespace edgepark
