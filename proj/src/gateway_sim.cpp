#include "edgepark/gateway_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace edgepark {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Millis exponential_ms(std::mt19937_64& rng, double mean_min) {
  const double ms = -mean_min * 60'000.0 * std::log1p(-uniform01(rng));
  return std::max<Millis>(1, std::llround(ms));
}

Millis parse_seconds(std::string_view text, std::string_view spec) {
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(text), &used);
    if (used != text.size() || v < 0) throw std::invalid_argument("seconds");
    return std::llround(v * 1000.0);
  } catch (const std::logic_error&) {
    throw ConfigError("bad fault '" + std::string(spec) + "'");
  }
}

}  // namespace

void add_gateway_fault(GatewayFaults& faults, std::string_view spec) {
  if (spec.starts_with("drop@")) {
    auto body = spec.substr(5);
    const auto plus = body.find('+');
    Outage o;
    o.at_ms = parse_seconds(body.substr(0, plus), spec);
    if (plus != std::string_view::npos) o.duration_ms = parse_seconds(body.substr(plus + 1), spec);
    faults.drops.push_back(o);
  } else if (spec == "duplicate") {
    faults.duplicate_every = 1;
  } else if (spec.starts_with("duplicate:")) {
    const Millis n = parse_seconds(spec.substr(10), spec) / 1000;
    if (n < 1) throw ConfigError("bad fault '" + std::string(spec) + "'");
    faults.duplicate_every = static_cast<int>(n);
  } else if (spec.starts_with("delay:")) {
    faults.delay_ms = parse_seconds(spec.substr(6), spec) / 1000;
  } else {
    throw ConfigError("unknown gateway fault '" + std::string(spec) + "'");
  }
}

void GatewayConfig::validate() const {
  if (bay_count < 0) throw ConfigError("bay count must not be negative");
  if (!(model.mean_occupied_min > 0) || !(model.mean_free_min > 0)) {
    throw ConfigError("sensor model means must be positive");
  }
  if (!(time_warp > 0)) throw ConfigError("time warp must be positive");
  if (lot_id.empty()) throw ConfigError("lot id must not be empty");
}

Trace generate_trace(const GatewayConfig& config, Millis duration_ms) {
  if (duration_ms <= 0) throw PreconditionError("trace duration must be positive");
  Trace trace;
  trace.duration_ms = duration_ms;
  const double p_occupied = config.model.occupied_fraction();

  for (int b = 1; b <= config.bay_count; ++b) {
    std::mt19937_64 rng(splitmix64(config.model.seed ^ splitmix64(static_cast<std::uint64_t>(b))));
    BayStatus status = uniform01(rng) < p_occupied ? BayStatus::occupied : BayStatus::free;
    trace.initial.push_back(status);
    Millis t = 0;
    for (;;) {
      const double mean = status == BayStatus::occupied ? config.model.mean_occupied_min
                                                        : config.model.mean_free_min;
      t += exponential_ms(rng, mean);
      if (t > duration_ms) break;
      status = status == BayStatus::occupied ? BayStatus::free : BayStatus::occupied;
      trace.items.push_back({t, b, status});
    }
  }
  std::sort(trace.items.begin(), trace.items.end(), [](const TraceItem& a, const TraceItem& b) {
    return a.sim_ts != b.sim_ts ? a.sim_ts < b.sim_ts : a.bay_id < b.bay_id;
  });
  return trace;
}

msg::Bays snapshot_at(const Trace& trace, Millis sim_ts, const GatewayConfig& config) {
  if (sim_ts < 0 || sim_ts > trace.duration_ms) {
    throw PreconditionError("snapshot time " + std::to_string(sim_ts) + " outside trace");
  }
  std::vector<BayStatus> status = trace.initial;
  for (const auto& item : trace.items) {
    if (item.sim_ts > sim_ts) break;
    status[static_cast<std::size_t>(item.bay_id - 1)] = item.new_status;
  }
  LotSnapshot lot{config.lot_id, {}};
  for (std::size_t i = 0; i < status.size(); ++i) {
    lot.bays.push_back({static_cast<BayId>(i + 1), status[i]});
  }
  return msg::Bays{{std::move(lot)}};
}

std::vector<OccupancyEvent> trace_events(const Trace& trace, const std::string& lot_id,
                                         EpochMs start) {
  std::vector<OccupancyEvent> events;
  events.reserve(trace.initial.size() + trace.items.size());
  for (std::size_t i = 0; i < trace.initial.size(); ++i) {
    events.push_back({EventKind::snapshot, start, lot_id, static_cast<BayId>(i + 1), trace.initial[i]});
  }
  for (const auto& item : trace.items) {
    events.push_back({EventKind::update, start + item.sim_ts, lot_id, item.bay_id, item.new_status});
  }
  return events;
}

// GatewayService ---------------------------------------------------------------

GatewayService::GatewayService(GatewayConfig config, Trace trace, const Clock& clock,
                               EpochMs sim_start)
    : config_(std::move(config)),
      trace_(std::move(trace)),
      clock_(clock),
      sim_start_(sim_start),
      drops_done_(config_.faults.drops.size(), false) {}

Millis GatewayService::sim_now() const { return clock_.now_ms() - sim_start_; }

bool GatewayService::in_outage(Millis sim) const {
  return std::any_of(config_.faults.drops.begin(), config_.faults.drops.end(), [sim](const Outage& o) {
    return sim >= o.at_ms && sim < o.at_ms + o.duration_ms;
  });
}

void GatewayService::attach(std::unique_ptr<Connection> connection) {
  if (in_outage(sim_now())) {
    ++stats_.sessions_refused;
    connection->close();
    return;
  }
  ++stats_.sessions_accepted;
  sessions_.push_back(Session{std::move(connection)});
}

void GatewayService::drop_sessions() {
  for (auto& s : sessions_) s.conn->close();
  sessions_.clear();
}

void GatewayService::poll() {
  const Millis sim = sim_now();
  for (std::size_t i = 0; i < drops_done_.size(); ++i) {
    if (!drops_done_[i] && sim >= config_.faults.drops[i].at_ms) {
      drops_done_[i] = true;
      drop_sessions();
    }
  }
  for (auto& s : sessions_) {
    serve(s, sim);
    if (s.greeted && s.conn->is_open()) push_due(s, sim);
  }
  std::erase_if(sessions_, [](const Session& s) { return !s.conn->is_open(); });
}

void GatewayService::serve(Session& session, Millis sim) {
  while (session.conn->is_open()) {
    auto line = session.conn->receive_line();
    if (!line) return;
    WireMessage in;
    try {
      in = decode(*line);
    } catch (const ProtocolError& e) {
      session.conn->send_line(encode(msg::Error{e.what()}));
      ++stats_.errors_sent;
      session.conn->close();
      return;
    }
    if (auto* ping = std::get_if<msg::Ping>(&in)) {
      session.conn->send_line(encode(msg::Pong{ping->seq}));
      ++stats_.pongs_sent;
    } else if (std::holds_alternative<msg::Hello>(in)) {
      const Millis at = std::clamp<Millis>(sim, 0, trace_.duration_ms);
      session.conn->send_line(encode(snapshot_at(trace_, at, config_)));
      session.greeted = true;
      session.cursor = static_cast<std::size_t>(
          std::upper_bound(trace_.items.begin(), trace_.items.end(), at,
                           [](Millis t, const TraceItem& item) { return t < item.sim_ts; }) -
          trace_.items.begin());
    } else {
      session.conn->send_line(
          encode(msg::Error{"unexpected message type '" + std::string(type_name(in)) + "'"}));
      ++stats_.errors_sent;
      session.conn->close();
      return;
    }
  }
}

void GatewayService::push_due(Session& session, Millis sim) {
  const Millis delay = config_.faults.delay_ms;
  while (session.cursor < trace_.items.size() && trace_.items[session.cursor].sim_ts + delay <= sim) {
    const auto& item = trace_.items[session.cursor++];
    const std::string line =
        encode(msg::BaysUpdate{config_.lot_id, BayReading{item.bay_id, item.new_status}});
    if (!session.conn->send_line(line)) return;
    ++stats_.updates_sent;
    ++pushed_;
    const int every = config_.faults.duplicate_every;
    if (every > 0 && pushed_ % every == 0) {
      session.conn->send_line(line);
      ++stats_.updates_sent;
    }
  }
}

std::optional<EpochMs> GatewayService::next_due() const {
  std::optional<Millis> due;
  auto consider = [&due](Millis t) {
    if (!due || t < *due) due = t;
  };
  for (std::size_t i = 0; i < drops_done_.size(); ++i) {
    if (!drops_done_[i]) consider(config_.faults.drops[i].at_ms);
  }
  for (const auto& s : sessions_) {
    if (s.greeted && s.cursor < trace_.items.size()) {
      consider(trace_.items[s.cursor].sim_ts + config_.faults.delay_ms);
    }
  }
  if (!due) return std::nullopt;
  return sim_start_ + *due;
}

}  // namespace edgepark
