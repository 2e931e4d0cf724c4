#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "edgepark/clock.hpp"
#include "edgepark/transport.hpp"
#include "edgepark/types.hpp"
#include "edgepark/wire.hpp"

namespace edgepark {

/// Alternating on/off process per bay with exponential holding times.
struct SensorModel {
  double mean_occupied_min = 60.0;
  double mean_free_min = 132.0;  // 60 / (60 + 132) = 7.5 h of every 24 h
  std::uint64_t seed = 1;

  /// Long-run fraction of time a bay is occupied.
  double occupied_fraction() const { return mean_occupied_min / (mean_occupied_min + mean_free_min); }
};

/// A stretch of gateway unavailability in simulated time: live sessions are
/// closed at `at_ms` and new sessions are turned away until at_ms + duration_ms.
struct Outage {
  Millis at_ms = 0;
  Millis duration_ms = 0;
  friend bool operator==(const Outage&, const Outage&) = default;
};

/// All off by default.
struct GatewayFaults {
  std::vector<Outage> drops;
  /// Every Nth pushed update is sent twice; 0 disables.
  int duplicate_every = 0;
  /// Pushed updates go out this much later than they happen.
  Millis delay_ms = 0;
};

/// Parses one `--inject` value: "drop@<sec>[+<sec>]", "duplicate[:<n>]" or
/// "delay:<ms>". Throws ConfigError.
void add_gateway_fault(GatewayFaults& faults, std::string_view spec);

struct GatewayConfig {
  std::string listen_address = "127.0.0.1:7400";
  std::string lot_id = "lot-1";
  int bay_count = 22;
  SensorModel model;
  double time_warp = 1.0;
  GatewayFaults faults;

  /// Throws ConfigError.
  void validate() const;
};

struct TraceItem {
  Millis sim_ts = 0;
  BayId bay_id = 0;
  BayStatus new_status = BayStatus::free;
  friend bool operator==(const TraceItem&, const TraceItem&) = default;
};

/// Ground truth of a simulated lot: bay i (1-based) starts in initial[i - 1]
/// and changes at each of its items. Items are sorted by (sim_ts, bay_id).
struct Trace {
  std::vector<BayStatus> initial;
  std::vector<TraceItem> items;
  Millis duration_ms = 0;

  int bay_count() const { return static_cast<int>(initial.size()); }
  friend bool operator==(const Trace&, const Trace&) = default;
};

/// Draws a trace from config.model. Fully determined by (seed, bay count,
/// means, duration); each bay has its own generator stream so bays do not
/// depend on one another. Throws PreconditionError if duration_ms <= 0.
Trace generate_trace(const GatewayConfig& config, Millis duration_ms);

/// Status of every bay at sim_ts (items at exactly sim_ts included), as the
/// single-lot `bays` message. Throws PreconditionError outside [0, duration].
msg::Bays snapshot_at(const Trace& trace, Millis sim_ts, const GatewayConfig& config);

/// The trace as the edge would timestamp it with zero latency: one snapshot
/// event per bay at `start`, then one update per item at start + sim_ts.
std::vector<OccupancyEvent> trace_events(const Trace& trace, const std::string& lot_id,
                                         EpochMs start);

/// Serves a trace over the wire protocol. Transport agnostic: connections are
/// handed in through attach() and everything happens in poll().
class GatewayService {
 public:
  struct Stats {
    std::int64_t sessions_accepted = 0;
    std::int64_t sessions_refused = 0;
    std::int64_t updates_sent = 0;
    std::int64_t pongs_sent = 0;
    std::int64_t errors_sent = 0;
  };

  /// sim_start is the clock reading that corresponds to sim_ts = 0.
  GatewayService(GatewayConfig config, Trace trace, const Clock& clock, EpochMs sim_start);

  void attach(std::unique_ptr<Connection> connection);
  /// Reads client messages, answers them and pushes updates that are due.
  void poll();
  /// Earliest clock reading at which poll() has scheduled work.
  std::optional<EpochMs> next_due() const;
  /// Closes every live session.
  void drop_sessions();

  std::size_t session_count() const { return sessions_.size(); }
  const Stats& stats() const { return stats_; }
  const Trace& trace() const { return trace_; }

 private:
  struct Session {
    std::unique_ptr<Connection> conn;
    bool greeted = false;
    std::size_t cursor = 0;  // next trace item to push
  };

  Millis sim_now() const;
  bool in_outage(Millis sim) const;
  void serve(Session& session, Millis sim);
  void push_due(Session& session, Millis sim);

  GatewayConfig config_;
  Trace trace_;
  const Clock& clock_;
  EpochMs sim_start_;
  std::vector<Session> sessions_;
  std::vector<bool> drops_done_;
  std::int64_t pushed_ = 0;
  Stats stats_;
};

}  // namespace edgepark
