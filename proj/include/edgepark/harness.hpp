#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "edgepark/cloud_hub.hpp"
#include "edgepark/edge_agent.hpp"
#include "edgepark/gateway_sim.hpp"

namespace edgepark {

/// Agent crash at at_ms (simulated offset from the scenario start); a new
/// agent recovers from disk after down_ms.
struct CrashFault {
  Millis at_ms = 0;
  Millis down_ms = 0;
};

/// Everything needed to reproduce one simulated run. Loaded from a flat
/// `key = value` file whose keys mirror the CLI flags of the three services.
struct ScenarioConfig {
  std::string name = "scenario";
  GatewayConfig gateway;
  int poll_interval_sec = 60;
  int rollup_period_sec = 86'400;
  Backoff reconnect_backoff;
  Millis ack_timeout_ms = 5000;
  HubFaults hub_faults;
  std::vector<Outage> hub_outages;
  std::vector<CrashFault> crashes;
  int simulated_days = 1;
  EpochMs start = 1'542'499'200'000;  // 2018-11-18T00:00:00Z
  /// Scripted trace instead of a generated one.
  std::optional<std::filesystem::path> trace_file;

  Millis duration_ms() const { return static_cast<Millis>(simulated_days) * kDayMs; }
  /// Throws ConfigError.
  void validate() const;
};

/// Throws ConfigError with the offending line.
ScenarioConfig parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Trace file: an optional header object carrying "initial" (status per bay,
/// bay 1 first) and, in run directories, "lotId", "start" and "durationMs";
/// then one {"simTs":..,"bayId":..,"status":..} object per line.
struct TraceFile {
  Trace trace;
  std::string lot_id;
  EpochMs start = 0;
};
void write_trace_file(const std::filesystem::path& path, const TraceFile& file);
/// Throws ConfigError. Items must alternate per bay starting from the
/// initial status; bays absent from "initial" start free.
TraceFile read_trace_file(const std::filesystem::path& path, int bay_count, Millis duration_ms);

struct TrafficLedger {
  std::int64_t raw_forward_bytes = 0;
  std::int64_t aggregated_bytes = 0;
  std::int64_t event_count = 0;
  std::int64_t envelope_count = 0;

  /// aggregated / raw; nullopt when nothing would have been forwarded.
  std::optional<double> reduction_ratio() const;
  std::string to_json() const;
};

struct RunResult {
  std::filesystem::path run_dir;
  std::vector<RollupWindow> windows;
  /// Time with no live gateway session, crash downtime included.
  Millis gap_ms = 0;
  std::int64_t pings_sent = 0;
  std::int64_t upload_sends = 0;
  std::int64_t stored_rollups = 0;
  TrafficLedger ledger;
  std::string summary;
};

/// Runs gateway, agent and hub in-process on one virtual clock for the
/// scenario's simulated days and writes the run directory:
///   scenario.cfg, run.json, trace.jsonl, agent/events.log, agent/csv/*.csv,
///   hub/<lot>.jsonl, wire/updates.jsonl, wire/uploads.jsonl, ledger.json,
///   summary.md
/// Throws ConfigError for bad scenarios and std::runtime_error when a
/// component fails.
RunResult run_sim(const ScenarioConfig& scenario, const std::filesystem::path& out_dir);

struct ReplayResult {
  std::vector<std::filesystem::path> files;
  std::size_t torn_lines = 0;
  std::size_t bad_lines = 0;
};

/// Feeds an event log through a clean table and writes one CSV per window.
/// Windows are window_sec long, anchored at the log's first flush marker (or
/// at multiples of window_sec from the Unix epoch without one). Throws
/// ConfigError if the log's flush markers disagree with window_sec.
ReplayResult replay(const std::filesystem::path& log_path, int window_sec,
                    const std::filesystem::path& out_dir);

struct VerifyReport {
  bool pass = false;
  Millis max_error_ms = 0;
  Millis bound_ms = 0;
  std::size_t windows_checked = 0;
  std::vector<std::string> failures;

  std::string to_text() const;
};

/// Recomputes every window from the saved trace with oracle_occupancy and
/// compares against the CSVs and the hub store.
VerifyReport verify(const std::filesystem::path& run_dir);

/// Sizes of the captured wire traffic: every baysUpdate line as if forwarded
/// to the cloud, against each distinct roll-up upload. Sizes include the
/// newline.
TrafficLedger traffic_report(const std::filesystem::path& run_dir);

enum class ReportFormat { csv, markdown };

/// Per-day fleet averages and per-bay daily min/max (hours) from the hub
/// store. Returns the files written.
std::vector<std::filesystem::path> export_report(const std::filesystem::path& run_dir,
                                                 ReportFormat format);

}  // namespace edgepark
