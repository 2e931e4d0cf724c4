#include "edgepark/edge_agent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "edgepark/csv.hpp"
#include "edgepark/occupancy.hpp"

namespace edgepark {
namespace {

constexpr std::size_t kMaxStoredWarnings = 1000;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string file_safe(std::string_view key) {
  std::string out(key);
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') c = '_';
  }
  return out;
}

void write_envelope_file(const std::filesystem::path& dir, const UploadEnvelope& env) {
  std::filesystem::create_directories(dir);
  const auto path = dir / (file_safe(env.idempotency_key) + ".json");
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << encode(msg::Rollup{env}) << '\n';
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

Millis Backoff::delay_after(int failures) const {
  const double raw = static_cast<double>(initial_ms) * std::pow(multiplier, std::max(0, failures - 1));
  return std::min<Millis>(cap_ms, std::max<Millis>(1, static_cast<Millis>(std::min(raw, 9.0e15))));
}

void AgentConfig::validate() const {
  if (poll_interval_sec < 1) throw ConfigError("poll interval must be at least 1 s");
  if (rollup_period_sec < poll_interval_sec) {
    throw ConfigError("roll-up period must not be shorter than the poll interval");
  }
  if (reconnect_backoff.initial_ms < 1 || reconnect_backoff.multiplier < 1.0 ||
      reconnect_backoff.cap_ms < reconnect_backoff.initial_ms) {
    throw ConfigError("reconnect backoff needs initial >= 1 ms, multiplier >= 1, cap >= initial");
  }
  if (ack_timeout_ms < 1) throw ConfigError("ack timeout must be positive");
  if (!(time_warp > 0)) throw ConfigError("time warp must be positive");
  if (log_path.empty() || csv_dir.empty()) throw ConfigError("log path and CSV directory are required");
}

std::filesystem::path outbox_dir(const AgentConfig& config) { return config.csv_dir / "outbox"; }
std::filesystem::path dead_letter_dir(const AgentConfig& config) {
  return config.csv_dir / "dead-letter";
}

UploadEnvelope decode_envelope_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string line;
  if (!in || !std::getline(in, line)) throw ProtocolError("cannot read envelope " + path.string());
  auto message = decode(line);
  auto* rollup = std::get_if<msg::Rollup>(&message);
  if (!rollup) throw ProtocolError(path.string() + " is not a rollup envelope");
  return std::move(rollup->envelope);
}

EdgeAgent::EdgeAgent(AgentConfig config, const Clock& clock, Connector& gateway, Connector& cloud)
    : config_(std::move(config)), clock_(clock), gateway_(gateway), cloud_(cloud) {
  config_.validate();
  const EpochMs now = clock_.now_ms();

  RecoveredState recovered = recover(config_.log_path);
  table_ = std::move(recovered.table);
  for (auto& w : recovered.warnings) warn(std::move(w));
  if (!table_.empty()) lot_id_ = table_.begin()->second.lot_id;

  const Millis period = config_.rollup_period_ms();
  const EpochMs anchor = config_.window_epoch.value_or(utc_midnight(recovered.first_ts.value_or(now)));
  if (recovered.last_flush) {
    next_boundary_ = recovered.last_flush->ts + period;
  } else {
    next_boundary_ = window_containing(recovered.first_ts.value_or(now), anchor, period).end;
  }

  log_ = std::make_unique<EventLog>(config_.log_path);

  std::error_code ec;
  if (std::filesystem::is_directory(outbox_dir(config_), ec)) {
    for (const auto& entry : std::filesystem::directory_iterator(outbox_dir(config_))) {
      if (entry.path().extension() != ".json") continue;
      try {
        outbox_.push_back(decode_envelope_file(entry.path()));
      } catch (const ProtocolError& e) {
        warn(std::string("skipping unreadable outbox entry: ") + e.what());
      }
    }
    std::sort(outbox_.begin(), outbox_.end(), [](const UploadEnvelope& a, const UploadEnvelope& b) {
      return a.window_start < b.window_start;
    });
  }

  next_connect_at_ = now;
  next_upload_at_ = now;
}

EdgeAgent::~EdgeAgent() {
  if (session_) session_->close();
  if (cloud_conn_) cloud_conn_->close();
}

void EdgeAgent::warn(std::string text) {
  if (warnings_.size() < kMaxStoredWarnings) warnings_.push_back(std::move(text));
}

void EdgeAgent::poll() {
  const EpochMs now = clock_.now_ms();
  // Boundaries first: nothing stamped after a boundary may land in the window before it.
  run_rollups(now);
  poll_gateway(now);
  run_ping_loop(now);
  pump_uploads(now);
}

std::optional<EpochMs> EdgeAgent::next_deadline() const {
  EpochMs due = next_boundary_;
  if (!session_) {
    due = std::min(due, next_connect_at_);
  } else if (phase_ == Phase::awaiting_snapshot) {
    due = std::min(due, session_opened_at_ + config_.poll_interval_ms());
  } else {
    due = std::min(due, next_ping_at_);
  }
  if (in_flight_) {
    due = std::min(due, sent_at_ + config_.ack_timeout_ms);
  } else if (!outbox_.empty()) {
    due = std::min(due, next_upload_at_);
  }
  return due;
}

// Gateway session -------------------------------------------------------------

void EdgeAgent::poll_gateway(EpochMs now) {
  if (!session_) {
    if (now < next_connect_at_) return;
    session_ = gateway_.connect();
    if (session_) {
      phase_ = Phase::awaiting_snapshot;
      session_opened_at_ = now;
      if (!session_->send_line(encode(msg::Hello{config_.client_name, kProtocolVersion}))) {
        session_.reset();
      }
    }
    if (!session_) {
      ++stats_.connect_failures;
      next_connect_at_ = now + config_.reconnect_backoff.delay_after(++connect_failures_in_row_);
      return;
    }
  }

  while (session_) {
    auto line = session_->receive_line();
    if (!line) break;
    handle_gateway_line(*line, now);
  }
  if (!session_) return;
  if (!session_->is_open()) {
    lose_session(now);
  } else if (phase_ == Phase::awaiting_snapshot &&
             now >= session_opened_at_ + config_.poll_interval_ms()) {
    warn("no snapshot within one poll interval; reconnecting");
    lose_session(now);
  }
}

void EdgeAgent::handle_gateway_line(const std::string& line, EpochMs now) {
  WireMessage message;
  try {
    message = decode(line);
  } catch (const ProtocolError& e) {
    ++stats_.protocol_errors;
    warn(std::string("gateway protocol error: ") + e.what());
    lose_session(now);
    return;
  }
  std::visit(overloaded{
                 [&](const msg::Bays& m) { handle_snapshot(m, now); },
                 [&](const msg::BaysUpdate& m) {
                   if (phase_ == Phase::live) {
                     ingest(m, now);
                   } else {
                     warn("update before snapshot ignored");
                   }
                 },
                 [&](const msg::Pong& m) {
                   if (awaiting_pong_ && m.seq == ping_seq_) {
                     awaiting_pong_ = false;
                     missed_pongs_ = 0;
                     ++stats_.pongs_matched;
                   }
                 },
                 [&](const msg::Error& m) { warn("gateway error: " + m.reason); },
                 [&](const auto& other) {
                   warn("unexpected '" + std::string(type_name(WireMessage{other})) + "' from gateway");
                 },
             },
             message);
}

void EdgeAgent::handle_snapshot(const msg::Bays& bays, EpochMs now) {
  for (const auto& lot : bays.data) {
    for (const auto& bay : lot.bays) {
      record(OccupancyEvent{EventKind::snapshot, now, lot.lot_id, bay.id, bay.status});
    }
  }
  if (!bays.data.empty()) lot_id_ = bays.data.front().lot_id;
  if (phase_ == Phase::awaiting_snapshot) {
    phase_ = Phase::live;
    ++stats_.sessions;
    connect_failures_in_row_ = 0;
    if (gap_started_) {
      stats_.gaps.emplace_back(*gap_started_, now);
      gap_started_.reset();
    }
    ping_seq_ = 0;
    next_ping_at_ = now + config_.poll_interval_ms();
    awaiting_pong_ = false;
    missed_pongs_ = 0;
  }
}

void EdgeAgent::ingest(const msg::BaysUpdate& update, EpochMs now) {
  ++stats_.updates_received;
  record(OccupancyEvent{EventKind::update, now, update.lot_id, update.bay.id, update.bay.status});
}

void EdgeAgent::record(const OccupancyEvent& event) {
  if (is_clock_regression(table_, event)) {
    log_->append(EventEntry{event, /*rejected=*/true});
    ++stats_.rejected_events;
    warn("clock regression on bay " + std::to_string(event.bay_id) + "; event rejected");
    return;
  }
  log_->append(EventEntry{event});
  switch (apply_event(table_, event)) {
    case ApplyOutcome::duplicate_ignored:
      ++stats_.duplicate_updates;
      warn("duplicate status for bay " + std::to_string(event.bay_id));
      break;
    case ApplyOutcome::created_unknown_bay:
      ++stats_.unknown_bays;
      warn("update for unknown bay " + std::to_string(event.bay_id));
      break;
    case ApplyOutcome::applied:
      break;
  }
}

void EdgeAgent::lose_session(EpochMs now) {
  const bool was_live = phase_ == Phase::live;
  session_->close();
  session_.reset();
  phase_ = Phase::awaiting_snapshot;
  awaiting_pong_ = false;
  missed_pongs_ = 0;
  if (was_live) {
    ++stats_.disconnects;
    log_->append(DisconnectMarker{now});
    invalidate(table_, now);
    gap_started_ = now;
    next_connect_at_ = now;
    connect_failures_in_row_ = 0;
  } else {
    ++stats_.connect_failures;
    next_connect_at_ = now + config_.reconnect_backoff.delay_after(++connect_failures_in_row_);
  }
}

void EdgeAgent::run_ping_loop(EpochMs now) {
  while (live() && now >= next_ping_at_) {
    if (awaiting_pong_ && ++missed_pongs_ >= 3) {
      warn("3 pongs missed; gateway session declared dead");
      lose_session(now);
      return;
    }
    ++ping_seq_;
    awaiting_pong_ = true;
    next_ping_at_ += config_.poll_interval_ms();
    if (!session_->send_line(encode(msg::Ping{ping_seq_}))) {
      lose_session(now);
      return;
    }
    ++stats_.pings_sent;
  }
}

// Roll-up ---------------------------------------------------------------------

void EdgeAgent::run_rollups(EpochMs now) {
  const Millis period = config_.rollup_period_ms();
  while (now >= next_boundary_) {
    roll_window(RollupWindow{next_boundary_ - period, next_boundary_});
    next_boundary_ += period;
  }
}

void EdgeAgent::roll_window(const RollupWindow& window) {
  std::vector<RollupRecord> records = rollup(table_, window);
  ++stats_.rollups;
  UploadEnvelope envelope = make_envelope(lot_id_.empty() ? "lot" : lot_id_, window, std::move(records));

  std::optional<std::filesystem::path> written;
  for (int attempt = 0; attempt < 2 && !written; ++attempt) {
    try {
      written = write_csv(envelope.records, window, envelope.lot_id, config_.csv_dir);
    } catch (const std::exception& e) {
      warn(std::string("CSV write failed: ") + e.what());
    }
  }
  if (written) {
    csv_files_.push_back(*written);
  } else {
    ++stats_.csv_failures;
    write_envelope_file(dead_letter_dir(config_), envelope);
  }

  log_->append(FlushMarker{window.end, window.start});
  write_envelope_file(outbox_dir(config_), envelope);
  outbox_.push_back(std::move(envelope));
}

// Upload ----------------------------------------------------------------------

void EdgeAgent::pump_uploads(EpochMs now) {
  auto fail = [&] {
    in_flight_ = false;
    if (cloud_conn_) cloud_conn_->close();
    cloud_conn_.reset();
    next_upload_at_ = now + config_.reconnect_backoff.delay_after(++upload_failures_in_row_);
  };

  if (cloud_conn_) {
    while (auto line = cloud_conn_->receive_line()) {
      WireMessage message;
      try {
        message = decode(*line);
      } catch (const ProtocolError&) {
        continue;  // falls through to the ack timeout
      }
      const auto* ack = std::get_if<msg::Ack>(&message);
      if (ack && in_flight_ && !outbox_.empty() && ack->key == outbox_.front().idempotency_key) {
        std::error_code ec;
        std::filesystem::remove(outbox_dir(config_) / (file_safe(ack->key) + ".json"), ec);
        outbox_.pop_front();
        in_flight_ = false;
        upload_failures_in_row_ = 0;
        next_upload_at_ = now;
        ++stats_.upload_acks;
      }
    }
    if (!cloud_conn_->is_open()) {
      cloud_conn_.reset();
      if (in_flight_) fail();
    }
  }

  if (in_flight_ && now >= sent_at_ + config_.ack_timeout_ms) fail();

  if (!in_flight_ && !outbox_.empty() && now >= next_upload_at_) {
    if (!cloud_conn_) cloud_conn_ = cloud_.connect();
    if (!cloud_conn_ || !cloud_conn_->send_line(encode(msg::Rollup{outbox_.front()}))) {
      fail();
      return;
    }
    ++stats_.upload_sends;
    in_flight_ = true;
    sent_at_ = now;
  }
}

}  // namespace edgepark
