#include "edgepark/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <set>
#include <sstream>

#include "edgepark/csv.hpp"
#include "edgepark/occupancy.hpp"
#include "edgepark/oracle.hpp"

namespace edgepark {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kGatewayEndpoint = "gateway";
constexpr const char* kCloudEndpoint = "cloud";

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path, std::ios::binary);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

std::string hours(double h) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", h);
  return buf;
}

std::string scenario_text(const ScenarioConfig& sc) {
  std::ostringstream out;
  out.precision(17);
  out << "name = " << sc.name << '\n'
      << "seed = " << sc.gateway.model.seed << '\n'
      << "bays = " << sc.gateway.bay_count << '\n'
      << "lot-id = " << sc.gateway.lot_id << '\n'
      << "mean-occupied-min = " << sc.gateway.model.mean_occupied_min << '\n'
      << "mean-free-min = " << sc.gateway.model.mean_free_min << '\n'
      << "simulated-days = " << sc.simulated_days << '\n'
      << "start = " << format_iso_extended(sc.start) << '\n'
      << "poll-interval-sec = " << sc.poll_interval_sec << '\n'
      << "rollup-period-sec = " << sc.rollup_period_sec << '\n'
      << "ack-timeout-ms = " << sc.ack_timeout_ms << '\n'
      << "backoff-initial-ms = " << sc.reconnect_backoff.initial_ms << '\n'
      << "backoff-multiplier = " << sc.reconnect_backoff.multiplier << '\n'
      << "backoff-cap-ms = " << sc.reconnect_backoff.cap_ms << '\n';
  for (const auto& d : sc.gateway.faults.drops) {
    out << "inject = drop@" << d.at_ms / 1000.0 << '+' << d.duration_ms / 1000.0 << '\n';
  }
  if (sc.gateway.faults.duplicate_every > 0) {
    out << "inject = duplicate:" << sc.gateway.faults.duplicate_every << '\n';
  }
  if (sc.gateway.faults.delay_ms > 0) out << "inject = delay:" << sc.gateway.faults.delay_ms << '\n';
  if (sc.hub_faults.drop_rollups > 0) out << "hub-drop-rollups = " << sc.hub_faults.drop_rollups << '\n';
  if (sc.hub_faults.lose_acks > 0) out << "hub-lose-acks = " << sc.hub_faults.lose_acks << '\n';
  for (const auto& o : sc.hub_outages) {
    out << "hub-down = " << o.at_ms / 1000.0 << '+' << o.duration_ms / 1000.0 << '\n';
  }
  for (const auto& c : sc.crashes) out << "crash = " << c.at_ms / 1000.0 << '+' << c.down_ms / 1000.0 << '\n';
  if (sc.trace_file) out << "trace-file = " << fs::absolute(*sc.trace_file).string() << '\n';
  return out.str();
}

struct RunInfo {
  std::string lot_id;
  EpochMs start = 0;
  EpochMs end = 0;
  Millis period_ms = 0;
  std::vector<RollupWindow> windows;
  Millis gap_ms = 0;
};

RunInfo read_run_info(const fs::path& run_dir) {
  const auto j = nlohmann::json::parse(read_text(run_dir / "run.json"), nullptr, false);
  if (j.is_discarded()) throw std::runtime_error("run.json is not valid JSON");
  RunInfo info;
  try {
    info.lot_id = j.at("lotId").get<std::string>();
    info.start = j.at("start").get<EpochMs>();
    info.end = j.at("end").get<EpochMs>();
    info.period_ms = j.at("periodMs").get<Millis>();
    info.gap_ms = j.at("gapMs").get<Millis>();
    for (const auto& ws : j.at("windows")) {
      const EpochMs s = ws.get<EpochMs>();
      info.windows.push_back({s, s + info.period_ms});
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("run.json is incomplete: ") + e.what());
  }
  return info;
}

struct DayRow {
  EpochMs window_start = 0;
  std::optional<double> fleet_avg_hours;
};

struct Report {
  std::vector<DayRow> days;
  std::map<BayId, double> min_hours;
  std::map<BayId, double> max_hours;
};

Report build_report(const HubStore& store, const std::string& lot_id,
                    const std::vector<RollupWindow>& windows) {
  Report rep;
  for (const auto& w : windows) {
    DayRow row{w.start, std::nullopt};
    if (auto records = query_daily(store, lot_id, w.start)) {
      double sum = 0.0;
      for (const auto& r : *records) {
        const double h = static_cast<double>(r.occupation_time_sec) / 3600.0;
        sum += h;
        auto [lo, fresh_lo] = rep.min_hours.try_emplace(r.bay_id, h);
        if (!fresh_lo) lo->second = std::min(lo->second, h);
        auto [hi, fresh_hi] = rep.max_hours.try_emplace(r.bay_id, h);
        if (!fresh_hi) hi->second = std::max(hi->second, h);
      }
      row.fleet_avg_hours = records->empty() ? 0.0 : sum / static_cast<double>(records->size());
    }
    rep.days.push_back(row);
  }
  return rep;
}

std::string render_markdown(const Report& rep) {
  std::ostringstream out;
  out << "## Fleet-average occupancy per day\n\n| day | window start | fleet avg (h) |\n|---|---|---|\n";
  for (std::size_t i = 0; i < rep.days.size(); ++i) {
    out << "| " << i + 1 << " | " << format_iso_extended(rep.days[i].window_start) << " | "
        << (rep.days[i].fleet_avg_hours ? hours(*rep.days[i].fleet_avg_hours) : "NA") << " |\n";
  }
  out << "\n## Per-bay daily occupancy\n\n| bay | min (h) | max (h) |\n|---|---|---|\n";
  for (const auto& [bay, lo] : rep.min_hours) {
    out << "| " << bay << " | " << hours(lo) << " | " << hours(rep.max_hours.at(bay)) << " |\n";
  }
  return out.str();
}

std::string ledger_text(const TrafficLedger& ledger) {
  std::ostringstream out;
  out << "raw forwarding:    " << ledger.raw_forward_bytes << " bytes (" << ledger.event_count
      << " update messages)\n"
      << "aggregated upload: " << ledger.aggregated_bytes << " bytes (" << ledger.envelope_count
      << " envelopes)\n";
  if (auto r = ledger.reduction_ratio()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", *r);
    out << "ratio:             " << buf << '\n';
  } else {
    out << "ratio:             undefined (no update messages)\n";
  }
  return out.str();
}

}  // namespace

// Traffic ----------------------------------------------------------------------

std::optional<double> TrafficLedger::reduction_ratio() const {
  if (raw_forward_bytes <= 0) return std::nullopt;
  return static_cast<double>(aggregated_bytes) / static_cast<double>(raw_forward_bytes);
}

std::string TrafficLedger::to_json() const {
  ojson j{{"rawForwardBytes", raw_forward_bytes},
          {"aggregatedBytes", aggregated_bytes},
          {"eventCount", event_count},
          {"envelopeCount", envelope_count}};
  if (auto r = reduction_ratio()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", *r);
    j["reductionRatio"] = std::string(buf);
  } else {
    j["reductionRatio"] = nullptr;
  }
  return j.dump(2) + "\n";
}

TrafficLedger traffic_report(const fs::path& run_dir) {
  TrafficLedger ledger;
  for (const auto& line : read_lines(run_dir / "wire" / "updates.jsonl")) {
    ledger.raw_forward_bytes += static_cast<std::int64_t>(line.size()) + 1;
    ++ledger.event_count;
  }
  std::set<std::string> seen;
  for (const auto& line : read_lines(run_dir / "wire" / "uploads.jsonl")) {
    const auto message = decode(line);
    const auto* rollup = std::get_if<msg::Rollup>(&message);
    if (!rollup || !seen.insert(rollup->envelope.idempotency_key).second) continue;
    ledger.aggregated_bytes += static_cast<std::int64_t>(line.size()) + 1;
    ++ledger.envelope_count;
  }
  return ledger;
}

// run-sim ----------------------------------------------------------------------

RunResult run_sim(const ScenarioConfig& sc, const fs::path& out) {
  sc.validate();
  fs::create_directories(out);
  for (const char* sub : {"agent", "hub", "wire"}) fs::remove_all(out / sub);
  for (const char* f : {"run.json", "trace.jsonl", "ledger.json", "summary.md", "scenario.cfg"}) {
    fs::remove(out / f);
  }
  fs::create_directories(out / "wire");
  write_text(out / "scenario.cfg", scenario_text(sc));

  const Millis duration = sc.duration_ms();
  const EpochMs end = sc.start + duration;
  TraceFile tf;
  if (sc.trace_file) {
    tf = read_trace_file(*sc.trace_file, sc.gateway.bay_count, duration);
    tf.trace.duration_ms = duration;
  } else {
    tf.trace = generate_trace(sc.gateway, duration);
  }
  tf.lot_id = sc.gateway.lot_id;
  tf.start = sc.start;
  write_trace_file(out / "trace.jsonl", tf);

  VirtualClock clock(sc.start);
  InProcessNetwork net;
  std::int64_t lines_moved = 0;
  std::ofstream updates_out(out / "wire" / "updates.jsonl", std::ios::binary);
  std::ofstream uploads_out(out / "wire" / "uploads.jsonl", std::ios::binary);
  net.set_tap([&](const std::string& endpoint, InProcessNetwork::Direction dir, std::string_view line) {
    ++lines_moved;
    if (endpoint == kGatewayEndpoint && dir == InProcessNetwork::Direction::to_client &&
        line.starts_with(R"({"type":"baysUpdate")")) {
      updates_out << line << '\n';
    } else if (endpoint == kCloudEndpoint && dir == InProcessNetwork::Direction::to_server &&
               line.starts_with(R"({"type":"rollup")")) {
      uploads_out << line << '\n';
    }
  });

  Acceptor& gateway_acceptor = net.listen(kGatewayEndpoint);
  Acceptor& hub_acceptor = net.listen(kCloudEndpoint);
  HubStore store(out / "hub");
  HubService hub(store, clock, sc.hub_faults);
  GatewayService gateway(sc.gateway, tf.trace, clock, sc.start);
  auto gateway_connector = net.connector(kGatewayEndpoint);
  auto cloud_connector = net.connector(kCloudEndpoint);

  AgentConfig ac;
  ac.gateway_address = kGatewayEndpoint;
  ac.cloud_address = kCloudEndpoint;
  ac.poll_interval_sec = sc.poll_interval_sec;
  ac.rollup_period_sec = sc.rollup_period_sec;
  ac.log_path = out / "agent" / "events.log";
  ac.csv_dir = out / "agent" / "csv";
  ac.clock_mode = ClockMode::virtual_time;
  ac.reconnect_backoff = sc.reconnect_backoff;
  ac.ack_timeout_ms = sc.ack_timeout_ms;
  ac.window_epoch = utc_midnight(sc.start);
  auto make_agent = [&] {
    return std::make_unique<EdgeAgent>(ac, clock, *gateway_connector, *cloud_connector);
  };

  // Harness-driven faults, in time order.
  enum class Action { crash, restart, hub_down, hub_up };
  struct Timed {
    EpochMs at;
    Action action;
    Millis down_ms;
  };
  std::vector<Timed> timed;
  for (const auto& c : sc.crashes) {
    timed.push_back({sc.start + c.at_ms, Action::crash, c.down_ms});
    if (c.down_ms > 0) timed.push_back({sc.start + c.at_ms + c.down_ms, Action::restart, 0});
  }
  for (const auto& o : sc.hub_outages) {
    timed.push_back({sc.start + o.at_ms, Action::hub_down, 0});
    timed.push_back({sc.start + o.at_ms + o.duration_ms, Action::hub_up, 0});
  }
  std::stable_sort(timed.begin(), timed.end(), [](const Timed& a, const Timed& b) { return a.at < b.at; });

  RunResult result;
  result.run_dir = out;
  std::vector<std::pair<EpochMs, EpochMs>> gaps;
  std::int64_t crashes = 0;
  AgentStats totals;
  auto absorb = [&](const EdgeAgent& a, EpochMs now) {
    const auto& s = a.stats();
    totals.sessions += s.sessions;
    totals.connect_failures += s.connect_failures;
    totals.disconnects += s.disconnects;
    totals.pings_sent += s.pings_sent;
    totals.pongs_matched += s.pongs_matched;
    totals.updates_received += s.updates_received;
    totals.duplicate_updates += s.duplicate_updates;
    totals.unknown_bays += s.unknown_bays;
    totals.rejected_events += s.rejected_events;
    totals.protocol_errors += s.protocol_errors;
    totals.rollups += s.rollups;
    totals.csv_failures += s.csv_failures;
    totals.upload_sends += s.upload_sends;
    totals.upload_acks += s.upload_acks;
    gaps.insert(gaps.end(), s.gaps.begin(), s.gaps.end());
    if (auto since = a.open_gap_since()) gaps.emplace_back(*since, now);
  };

  std::unique_ptr<EdgeAgent> agent = make_agent();
  auto pump = [&] {
    for (int round = 0; round < 100'000; ++round) {
      const auto before = lines_moved;
      while (auto c = gateway_acceptor.accept()) gateway.attach(std::move(c));
      while (auto c = hub_acceptor.accept()) hub.attach(std::move(c));
      gateway.poll();
      if (agent) agent->poll();
      hub.poll();
      const auto due = agent ? agent->next_deadline() : std::nullopt;
      if (lines_moved == before && !(due && *due <= clock.now_ms())) return;
    }
    throw std::runtime_error("simulation did not settle at " + format_iso_extended(clock.now_ms()));
  };

  const EpochMs drain_limit = end + kDayMs;
  std::size_t next_timed = 0;
  pump();
  for (;;) {
    const EpochMs now = clock.now_ms();
    if (now >= end && agent && agent->next_rollup_at() > end && agent->pending_uploads() == 0) break;
    if (now > drain_limit) throw std::runtime_error("uploads still pending a day after the run ended");

    EpochMs next = std::numeric_limits<EpochMs>::max();
    if (auto d = gateway.next_due()) next = std::min(next, *d);
    if (agent) {
      if (auto d = agent->next_deadline()) next = std::min(next, *d);
    }
    if (next_timed < timed.size()) next = std::min(next, timed[next_timed].at);
    if (now < end) next = std::min(next, end);
    if (next == std::numeric_limits<EpochMs>::max()) throw std::runtime_error("simulation stalled");
    if (next > now) clock.set(next);

    while (next_timed < timed.size() && timed[next_timed].at <= clock.now_ms()) {
      const Timed t = timed[next_timed++];
      switch (t.action) {
        case Action::crash:
          if (agent) {
            ++crashes;
            absorb(*agent, t.at);
            agent.reset();
            if (t.down_ms == 0) {
              agent = make_agent();
            } else {
              gaps.emplace_back(t.at, t.at + t.down_ms);
            }
          }
          break;
        case Action::restart:
          if (!agent) agent = make_agent();
          break;
        case Action::hub_down:
          net.set_refusing(kCloudEndpoint, true);
          hub.drop_sessions();
          break;
        case Action::hub_up:
          net.set_refusing(kCloudEndpoint, false);
          break;
      }
      pump();
    }
    pump();
  }
  absorb(*agent, end);
  updates_out.close();
  uploads_out.close();

  // Windows the agent rolled up inside the run.
  const Millis period = static_cast<Millis>(sc.rollup_period_sec) * 1000;
  for (auto w = window_containing(sc.start, utc_midnight(sc.start), period); w.end <= end;
       w = {w.end, w.end + period}) {
    result.windows.push_back(w);
  }
  for (const auto& [from, to] : gaps) {
    const EpochMs a = std::max(from, sc.start);
    const EpochMs b = std::min(to, end);
    if (b > a) result.gap_ms += b - a;
  }
  result.pings_sent = totals.pings_sent;
  result.upload_sends = totals.upload_sends;
  result.stored_rollups = static_cast<std::int64_t>(store.size());

  ojson run;
  run["name"] = sc.name;
  run["lotId"] = sc.gateway.lot_id;
  run["bays"] = sc.gateway.bay_count;
  run["start"] = sc.start;
  run["end"] = end;
  run["periodMs"] = period;
  auto windows = ojson::array();
  for (const auto& w : result.windows) windows.push_back(w.start);
  run["windows"] = windows;
  run["gapMs"] = result.gap_ms;
  auto gap_list = ojson::array();
  for (const auto& [from, to] : gaps) gap_list.push_back(ojson::array({from, to}));
  run["gaps"] = gap_list;
  run["crashes"] = crashes;
  run["agent"] = ojson{{"sessions", totals.sessions},
                       {"connectFailures", totals.connect_failures},
                       {"disconnects", totals.disconnects},
                       {"pingsSent", totals.pings_sent},
                       {"pongsMatched", totals.pongs_matched},
                       {"updatesReceived", totals.updates_received},
                       {"duplicateUpdates", totals.duplicate_updates},
                       {"unknownBays", totals.unknown_bays},
                       {"rejectedEvents", totals.rejected_events},
                       {"protocolErrors", totals.protocol_errors},
                       {"rollups", totals.rollups},
                       {"csvFailures", totals.csv_failures},
                       {"uploadSends", totals.upload_sends},
                       {"uploadAcks", totals.upload_acks}};
  run["gateway"] = ojson{{"sessionsAccepted", gateway.stats().sessions_accepted},
                         {"sessionsRefused", gateway.stats().sessions_refused},
                         {"updatesSent", gateway.stats().updates_sent},
                         {"pongsSent", gateway.stats().pongs_sent}};
  run["hub"] = ojson{{"rollupsReceived", hub.stats().rollups_received},
                     {"stored", hub.stats().stored},
                     {"duplicates", hub.stats().duplicates},
                     {"acksSent", hub.stats().acks_sent}};
  write_text(out / "run.json", run.dump(2) + "\n");

  result.ledger = traffic_report(out);
  write_text(out / "ledger.json", result.ledger.to_json());

  result.summary = "# Run " + sc.name + "\n\n" +
                   render_markdown(build_report(store, sc.gateway.lot_id, result.windows)) +
                   "\n## Traffic\n\n```\n" + ledger_text(result.ledger) + "```\n";
  write_text(out / "summary.md", result.summary);
  return result;
}

// replay -----------------------------------------------------------------------

ReplayResult replay(const fs::path& log_path, int window_sec, const fs::path& out_dir) {
  if (window_sec < 1) throw ConfigError("window length must be at least 1 s");
  const Millis period = static_cast<Millis>(window_sec) * 1000;
  const LogContents log = read_log(log_path);

  ReplayResult result;
  result.torn_lines = log.torn_tail ? 1 : 0;
  result.bad_lines = log.bad_lines;
  if (log.entries.empty()) return result;

  std::optional<EpochMs> anchor;
  std::string lot_id;
  for (const auto& e : log.entries) {
    if (const auto* fm = std::get_if<FlushMarker>(&e)) {
      if (fm->ts - fm->window_start != period) {
        throw ConfigError("log windows are " + std::to_string((fm->ts - fm->window_start) / 1000) +
                          " s long, not " + std::to_string(window_sec) + " s");
      }
      if (!anchor) anchor = fm->window_start;
    } else if (const auto* ev = std::get_if<EventEntry>(&e); ev && lot_id.empty()) {
      lot_id = ev->event.lot_id;
    }
  }
  if (lot_id.empty()) lot_id = "lot";

  BayTable table;
  RollupWindow window = window_containing(entry_ts(log.entries.front()), anchor.value_or(0), period);
  bool dirty = false;
  auto emit = [&] {
    result.files.push_back(write_csv(rollup(table, window), window, lot_id, out_dir));
    window = {window.end, window.end + period};
    dirty = false;
  };

  for (const auto& e : log.entries) {
    const EpochMs ts = entry_ts(e);
    if (const auto* fm = std::get_if<FlushMarker>(&e)) {
      while (window.end < fm->ts) emit();
      emit();
      continue;
    }
    while (ts >= window.end) emit();
    if (const auto* ev = std::get_if<EventEntry>(&e)) {
      if (!ev->rejected) apply_event(table, ev->event);
    } else {
      invalidate(table, ts);
    }
    dirty = true;
  }
  if (dirty) emit();
  return result;
}

// verify -----------------------------------------------------------------------

std::string VerifyReport::to_text() const {
  std::ostringstream out;
  out << (pass ? "PASS" : "FAIL") << ": " << windows_checked << " window(s), max per-bay error "
      << max_error_ms << " ms (bound " << bound_ms << " ms)\n";
  for (const auto& f : failures) out << "  - " << f << '\n';
  return out.str();
}

VerifyReport verify(const fs::path& run_dir) {
  VerifyReport report;
  std::vector<std::string> missing;
  for (const char* f : {"run.json", "trace.jsonl"}) {
    if (!fs::exists(run_dir / f)) missing.push_back(f);
  }
  if (!fs::exists(run_dir / "hub")) missing.push_back("hub/");
  if (!missing.empty()) {
    std::string inventory;
    std::error_code ec;
    if (fs::is_directory(run_dir, ec)) {
      for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
        inventory += " " + fs::relative(entry.path(), run_dir).string();
      }
    }
    for (const auto& m : missing) report.failures.push_back("missing artifact: " + m);
    report.failures.push_back("run directory holds:" + (inventory.empty() ? std::string(" nothing") : inventory));
    return report;
  }

  const RunInfo info = read_run_info(run_dir);
  report.bound_ms = info.gap_ms;
  const TraceFile tf = read_trace_file(run_dir / "trace.jsonl", 0, info.end - info.start);
  const auto events = trace_events(tf.trace, info.lot_id, info.start);
  const HubStore store(run_dir / "hub");

  // Each key may be stored only once.
  std::map<std::string, int> key_lines;
  for (const auto& line : read_lines(HubStore::lot_file(run_dir / "hub", info.lot_id))) {
    try {
      ++key_lines[decode_stored(line).idempotency_key];
    } catch (const ProtocolError&) {
    }
  }

  for (const auto& window : info.windows) {
    ++report.windows_checked;
    const std::string where = "window " + format_iso_extended(window.start);
    const auto oracle = oracle_occupancy(events, window);
    const auto csv_path = run_dir / "agent" / "csv" / csv_file_name(info.lot_id, window.start);

    std::vector<CsvRow> rows;
    try {
      rows = read_csv(csv_path);
    } catch (const std::exception& e) {
      report.failures.push_back(where + ": " + e.what());
      continue;
    }
    std::map<BayId, CsvRow> by_bay;
    for (const auto& r : rows) by_bay[r.bay_id] = r;

    for (const auto& [bay, ms] : oracle) {
      auto it = by_bay.find(bay);
      if (it == by_bay.end()) {
        report.failures.push_back(where + ": bay " + std::to_string(bay) + " missing from CSV");
        continue;
      }
      const std::int64_t expected_sec = ms / 1000;
      const Millis err = std::abs(expected_sec - it->second.occupation_time_sec) * 1000;
      report.max_error_ms = std::max(report.max_error_ms, err);
      if (err > report.bound_ms) {
        report.failures.push_back(where + ": bay " + std::to_string(bay) + " CSV has " +
                                  std::to_string(it->second.occupation_time_sec) + " s, oracle " +
                                  std::to_string(expected_sec) + " s");
      }
      if (it->second.occupation_rate !=
          occupation_rate(std::min<Millis>(it->second.occupation_time_sec * 1000, window.length()),
                          window.length())) {
        report.failures.push_back(where + ": bay " + std::to_string(bay) +
                                  " rate does not match its occupation time");
      }
    }
    for (const auto& [bay, row] : by_bay) {
      if (!oracle.contains(bay)) {
        report.failures.push_back(where + ": CSV lists bay " + std::to_string(bay) + " absent from the trace");
      }
    }

    const auto stored = store.find(info.lot_id, window.start);
    if (!stored) {
      report.failures.push_back(where + ": not in hub store");
      continue;
    }
    if (const int n = key_lines[stored->idempotency_key]; n != 1) {
      report.failures.push_back(where + ": stored " + std::to_string(n) + " times");
    }
    if (stored->records.size() != rows.size()) {
      report.failures.push_back(where + ": hub has " + std::to_string(stored->records.size()) +
                                " records, CSV " + std::to_string(rows.size()));
      continue;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& h = stored->records[i];
      if (h.bay_id != rows[i].bay_id || h.occupation_time_sec != rows[i].occupation_time_sec ||
          h.occupation_rate != rows[i].occupation_rate) {
        report.failures.push_back(where + ": bay " + std::to_string(rows[i].bay_id) +
                                  " differs between CSV and hub store");
      }
    }
  }
  report.pass = report.failures.empty() && report.max_error_ms <= report.bound_ms;
  return report;
}

// export-report ----------------------------------------------------------------

std::vector<fs::path> export_report(const fs::path& run_dir, ReportFormat format) {
  const RunInfo info = read_run_info(run_dir);
  const HubStore store(run_dir / "hub");
  const Report rep = build_report(store, info.lot_id, info.windows);

  std::vector<fs::path> written;
  if (format == ReportFormat::markdown) {
    const auto path = run_dir / "report.md";
    write_text(path, render_markdown(rep));
    written.push_back(path);
    return written;
  }
  std::string daily = "day,windowStart,fleetAvgHours\n";
  for (std::size_t i = 0; i < rep.days.size(); ++i) {
    daily += std::to_string(i + 1) + "," + format_iso_extended(rep.days[i].window_start) + "," +
             (rep.days[i].fleet_avg_hours ? hours(*rep.days[i].fleet_avg_hours) : "NA") + "\n";
  }
  std::string bays = "bayId,minHours,maxHours\n";
  for (const auto& [bay, lo] : rep.min_hours) {
    bays += std::to_string(bay) + "," + hours(lo) + "," + hours(rep.max_hours.at(bay)) + "\n";
  }
  write_text(run_dir / "report_daily.csv", daily);
  write_text(run_dir / "report_bays.csv", bays);
  written.push_back(run_dir / "report_daily.csv");
  written.push_back(run_dir / "report_bays.csv");
  return written;
}

}  // namespace edgepark
