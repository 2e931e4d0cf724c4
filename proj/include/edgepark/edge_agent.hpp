#pragma once

#include <deque>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "edgepark/clock.hpp"
#include "edgepark/event_log.hpp"
#include "edgepark/transport.hpp"
#include "edgepark/types.hpp"
#include "edgepark/wire.hpp"

namespace edgepark {

struct Backoff {
  Millis initial_ms = 1000;
  double multiplier = 2.0;
  Millis cap_ms = 30'000;

  /// Delay before attempt `failures` + 1 after `failures` consecutive failures (>= 1).
  Millis delay_after(int failures) const;
};

enum class ClockMode { real, virtual_time };

struct AgentConfig {
  std::string gateway_address = "127.0.0.1:7400";
  std::string cloud_address = "127.0.0.1:7500";
  int poll_interval_sec = 60;
  int rollup_period_sec = 86'400;
  std::filesystem::path log_path = "edge-agent/events.log";
  std::filesystem::path csv_dir = "edge-agent/csv";
  ClockMode clock_mode = ClockMode::real;
  double time_warp = 1.0;
  Backoff reconnect_backoff;
  /// How long an upload waits for its ack before it is retried.
  Millis ack_timeout_ms = 5000;
  /// Roll-up boundaries fall on window_epoch + k * period. Defaults to UTC
  /// midnight of the day the log starts (or of startup for an empty log).
  std::optional<EpochMs> window_epoch;
  std::string client_name = "edge-agent";

  /// Throws ConfigError.
  void validate() const;
  Millis poll_interval_ms() const { return static_cast<Millis>(poll_interval_sec) * 1000; }
  Millis rollup_period_ms() const { return static_cast<Millis>(rollup_period_sec) * 1000; }
};

/// Pending uploads live here until acked; roll-ups whose CSV could not be
/// written are copied to dead-letter/.
std::filesystem::path outbox_dir(const AgentConfig& config);
std::filesystem::path dead_letter_dir(const AgentConfig& config);

/// Window length is taken from the envelope. Throws ProtocolError.
UploadEnvelope decode_envelope_file(const std::filesystem::path& path);

struct AgentStats {
  std::int64_t sessions = 0;
  std::int64_t connect_failures = 0;
  std::int64_t disconnects = 0;
  std::int64_t pings_sent = 0;
  std::int64_t pongs_matched = 0;
  std::int64_t updates_received = 0;
  std::int64_t duplicate_updates = 0;
  std::int64_t unknown_bays = 0;
  std::int64_t rejected_events = 0;
  std::int64_t protocol_errors = 0;
  std::int64_t rollups = 0;
  std::int64_t csv_failures = 0;
  std::int64_t upload_sends = 0;
  std::int64_t upload_acks = 0;
  /// Stretches during which no gateway session was live, [from, to).
  std::vector<std::pair<EpochMs, EpochMs>> gaps;

  std::int64_t warnings() const { return duplicate_updates + unknown_bays; }
};

/// The edge application: keeps a gateway session alive, write-ahead logs and
/// applies every event, rolls the table up at window boundaries into CSV
/// files, and uploads each roll-up until the cloud acknowledges it.
///
/// Single-threaded and non-blocking: the owner calls poll() whenever time
/// moves or input may have arrived. State is recovered from the log and the
/// outbox at construction.
class EdgeAgent {
 public:
  EdgeAgent(AgentConfig config, const Clock& clock, Connector& gateway, Connector& cloud);
  ~EdgeAgent();
  EdgeAgent(const EdgeAgent&) = delete;
  EdgeAgent& operator=(const EdgeAgent&) = delete;

  void poll();
  /// Earliest clock reading at which poll() has timed work to do.
  std::optional<EpochMs> next_deadline() const;

  bool live() const { return session_ && phase_ == Phase::live; }
  const BayTable& table() const { return table_; }
  const AgentStats& stats() const { return stats_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  std::size_t pending_uploads() const { return outbox_.size(); }
  std::int64_t last_ping_seq() const { return ping_seq_; }
  /// Paths of CSV files written so far, in order.
  const std::vector<std::filesystem::path>& csv_files() const { return csv_files_; }
  EpochMs next_rollup_at() const { return next_boundary_; }
  /// Start of the current stretch without a live session, if one is open.
  std::optional<EpochMs> open_gap_since() const { return gap_started_; }
  const AgentConfig& config() const { return config_; }

 private:
  enum class Phase { awaiting_snapshot, live };

  void poll_gateway(EpochMs now);
  void handle_gateway_line(const std::string& line, EpochMs now);
  void handle_snapshot(const msg::Bays& bays, EpochMs now);
  void ingest(const msg::BaysUpdate& update, EpochMs now);
  void record(const OccupancyEvent& event);
  void lose_session(EpochMs now);
  void run_ping_loop(EpochMs now);
  void run_rollups(EpochMs now);
  void roll_window(const RollupWindow& window);
  void pump_uploads(EpochMs now);
  void warn(std::string text);

  AgentConfig config_;
  const Clock& clock_;
  Connector& gateway_;
  Connector& cloud_;
  std::unique_ptr<EventLog> log_;
  BayTable table_;
  AgentStats stats_;
  std::vector<std::string> warnings_;
  std::vector<std::filesystem::path> csv_files_;

  // Gateway session.
  std::unique_ptr<Connection> session_;
  Phase phase_ = Phase::awaiting_snapshot;
  EpochMs session_opened_at_ = 0;
  EpochMs next_connect_at_ = 0;
  int connect_failures_in_row_ = 0;
  std::optional<EpochMs> gap_started_;
  std::string lot_id_;

  // Liveness.
  std::int64_t ping_seq_ = 0;
  EpochMs next_ping_at_ = 0;
  bool awaiting_pong_ = false;
  int missed_pongs_ = 0;

  // Roll-up schedule.
  EpochMs next_boundary_ = 0;

  // Upload queue: single producer (roll-up), single consumer (uploader).
  std::deque<UploadEnvelope> outbox_;
  std::unique_ptr<Connection> cloud_conn_;
  bool in_flight_ = false;
  EpochMs sent_at_ = 0;
  EpochMs next_upload_at_ = 0;
  int upload_failures_in_row_ = 0;
};

}  // namespace edgepark
