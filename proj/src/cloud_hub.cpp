#include "edgepark/cloud_hub.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <json.hpp>

namespace edgepark {

void validate_envelope(const UploadEnvelope& env) {
  if (env.lot_id.empty()) throw ProtocolError("envelope lotId is empty");
  if (env.window_end <= env.window_start) throw ProtocolError("envelope window is empty");
  if (env.idempotency_key != make_idempotency_key(env.lot_id, env.window_start)) {
    throw ProtocolError("envelope key does not match lotId:windowStart");
  }
  const std::int64_t window_sec = (env.window_end - env.window_start) / 1000;
  for (std::size_t i = 0; i < env.records.size(); ++i) {
    const auto& r = env.records[i];
    if (r.bay_id <= 0) throw ProtocolError("record bayId must be positive");
    if (i > 0 && env.records[i - 1].bay_id >= r.bay_id) {
      throw ProtocolError("records must be sorted by bayId without repeats");
    }
    if (r.occupation_time_sec < 0 || r.occupation_time_sec > window_sec) {
      throw ProtocolError("occupationTime outside the window for bay " + std::to_string(r.bay_id));
    }
    if (r.occupation_rate.e4 < 0 || r.occupation_rate.e4 > 10'000) {
      throw ProtocolError("occupationRate outside [0, 1] for bay " + std::to_string(r.bay_id));
    }
  }
}

std::string encode_stored(const StoredRollup& s) {
  return "{\"key\":" + nlohmann::json(s.idempotency_key).dump() +
         ",\"lotId\":" + nlohmann::json(s.lot_id).dump() +
         ",\"windowStart\":" + std::to_string(s.window_start) +
         ",\"windowEnd\":" + std::to_string(s.window_end) +
         ",\"receivedAt\":" + std::to_string(s.received_at) +
         ",\"records\":" + encode_records(s.records, s.window_end - s.window_start) + "}";
}

StoredRollup decode_stored(std::string_view line) {
  // Same field set as a rollup message apart from "type" and "receivedAt".
  const auto j = nlohmann::json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("receivedAt")) {
    throw ProtocolError("bad hub store line");
  }
  auto as_message = j;
  as_message["type"] = "rollup";
  auto decoded = decode(as_message.dump());
  auto& env = std::get<msg::Rollup>(decoded).envelope;
  return StoredRollup{env.idempotency_key, env.lot_id,          env.window_start,
                      env.window_end,      std::move(env.records), j["receivedAt"].get<EpochMs>()};
}

std::filesystem::path HubStore::lot_file(const std::filesystem::path& dir, const std::string& lot_id) {
  std::string safe = lot_id;
  for (char& c : safe) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  }
  return dir / (safe + ".jsonl");
}

HubStore::HubStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
  for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
    if (entry.path().extension() != ".jsonl") continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        StoredRollup s = decode_stored(line);
        by_key_.try_emplace(s.idempotency_key, std::move(s));
      } catch (const ProtocolError&) {
        // Torn tail of an interrupted append; the upload is still unacked.
      }
    }
  }
}

HubStore::PutResult HubStore::put(const UploadEnvelope& envelope, EpochMs received_at) {
  validate_envelope(envelope);
  if (by_key_.contains(envelope.idempotency_key)) return PutResult::duplicate;

  StoredRollup stored{envelope.idempotency_key, envelope.lot_id, envelope.window_start,
                      envelope.window_end,      envelope.records, received_at};
  for (auto& r : stored.records) r.occupation_ms = r.occupation_time_sec * 1000;
  std::string line = encode_stored(stored);
  line.push_back('\n');

  const auto path = lot_file(dir_, envelope.lot_id);
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw std::runtime_error("cannot open hub store " + path.string());
  const ssize_t n = ::write(fd, line.data(), line.size());
  const bool ok = n == static_cast<ssize_t>(line.size()) && ::fsync(fd) == 0;
  ::close(fd);
  if (!ok) throw std::runtime_error("write to hub store " + path.string() + " failed");

  by_key_.emplace(stored.idempotency_key, std::move(stored));
  return PutResult::stored;
}

std::optional<StoredRollup> HubStore::find(const std::string& lot_id, EpochMs window_start) const {
  auto it = by_key_.find(make_idempotency_key(lot_id, window_start));
  if (it == by_key_.end()) return std::nullopt;
  return it->second;
}

std::vector<StoredRollup> HubStore::list(const std::string& lot_id) const {
  std::vector<StoredRollup> out;
  for (const auto& [key, s] : by_key_) {
    if (s.lot_id == lot_id) out.push_back(s);
  }
  std::sort(out.begin(), out.end(),
            [](const StoredRollup& a, const StoredRollup& b) { return a.window_start < b.window_start; });
  return out;
}

std::vector<std::string> HubStore::lots() const {
  std::vector<std::string> out;
  for (const auto& [key, s] : by_key_) {
    if (std::find(out.begin(), out.end(), s.lot_id) == out.end()) out.push_back(s.lot_id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<std::vector<RollupRecord>> query_daily(const HubStore& store, const std::string& lot_id,
                                                     EpochMs window_start) {
  auto found = store.find(lot_id, window_start);
  if (!found) return std::nullopt;
  return std::move(found->records);
}

std::optional<WeeklyReport> weekly_report(const HubStore& store, const std::string& lot_id,
                                          EpochMs week_start) {
  WeeklyReport report;
  report.lot_id = lot_id;
  report.week_start = week_start;
  bool any = false;
  for (int d = 0; d < 7; ++d) {
    auto records = query_daily(store, lot_id, week_start + d * kDayMs);
    if (!records) continue;
    any = true;
    double sum = 0.0;
    for (const auto& r : *records) {
      const double hours = static_cast<double>(r.occupation_time_sec) / 3600.0;
      sum += hours;
      auto [lo, fresh_lo] = report.per_bay_min_hours.try_emplace(r.bay_id, hours);
      if (!fresh_lo) lo->second = std::min(lo->second, hours);
      auto [hi, fresh_hi] = report.per_bay_max_hours.try_emplace(r.bay_id, hours);
      if (!fresh_hi) hi->second = std::max(hi->second, hours);
    }
    report.per_day_fleet_avg_hours[static_cast<std::size_t>(d)] =
        records->empty() ? 0.0 : sum / static_cast<double>(records->size());
  }
  if (!any) return std::nullopt;
  return report;
}

// HubService --------------------------------------------------------------------

HubService::HubService(HubStore& store, const Clock& clock, HubFaults faults)
    : store_(store), clock_(clock), faults_(faults) {}

void HubService::attach(std::unique_ptr<Connection> connection) {
  sessions_.push_back(std::move(connection));
}

void HubService::drop_sessions() {
  for (auto& conn : sessions_) conn->close();
  sessions_.clear();
}

void HubService::poll() {
  for (auto& conn : sessions_) {
    while (conn->is_open()) {
      auto line = conn->receive_line();
      if (!line) break;
      if (auto reply = handle_line(*line)) conn->send_line(*reply);
    }
  }
  std::erase_if(sessions_, [](const auto& c) { return !c->is_open(); });
}

std::optional<std::string> HubService::handle_line(std::string_view line) {
  WireMessage message;
  try {
    message = decode(line);
  } catch (const ProtocolError& e) {
    ++stats_.errors_sent;
    return encode(msg::Error{e.what()});
  }

  if (auto* rollup = std::get_if<msg::Rollup>(&message)) {
    ++stats_.rollups_received;
    if (faults_.drop_rollups > 0) {
      --faults_.drop_rollups;
      return std::nullopt;
    }
    HubStore::PutResult result;
    try {
      result = store_.put(rollup->envelope, clock_.now_ms());
    } catch (const ProtocolError& e) {
      ++stats_.errors_sent;
      return encode(msg::Error{e.what()});
    }
    if (result == HubStore::PutResult::stored) {
      ++stats_.stored;
    } else {
      ++stats_.duplicates;
    }
    if (faults_.lose_acks > 0) {
      --faults_.lose_acks;
      return std::nullopt;
    }
    ++stats_.acks_sent;
    return encode(msg::Ack{rollup->envelope.idempotency_key});
  }
  if (auto* q = std::get_if<msg::QueryDaily>(&message)) {
    ++stats_.queries;
    auto found = store_.find(q->lot_id, q->window_start);
    if (!found) return encode(msg::NotFound{});
    return encode(msg::Daily{found->lot_id, found->window_start, found->window_end, found->records});
  }
  if (auto* q = std::get_if<msg::QueryWeekly>(&message)) {
    ++stats_.queries;
    auto report = weekly_report(store_, q->lot_id, q->week_start);
    if (!report) return encode(msg::NotFound{});
    return encode(msg::Weekly{std::move(*report)});
  }
  ++stats_.errors_sent;
  return encode(msg::Error{"unsupported message type '" + std::string(type_name(message)) + "'"});
}

}  // namespace edgepark
