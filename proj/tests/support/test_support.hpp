#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "edgepark/clock.hpp"
#include "edgepark/cloud_hub.hpp"
#include "edgepark/edge_agent.hpp"
#include "edgepark/gateway_sim.hpp"
#include "edgepark/transport.hpp"
#include "edgepark/types.hpp"

namespace edgepark::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "edgepark");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

std::string slurp(const std::filesystem::path& path);

struct RandomTraceSpec {
  int max_bays = 50;
  int max_events = 10'000;
  EpochMs start = 1'542'499'200'000;
  Millis max_step_ms = 600'000;
};

/// A sorted trace: an initial snapshot for a random subset of bays, then
/// updates with random gaps (including zero), repeated statuses and bays
/// that were never in the snapshot.
std::vector<OccupancyEvent> random_trace(std::mt19937_64& rng, const RandomTraceSpec& spec);

/// Per-window exact totals (ms) reported by the production state machine.
using WindowTotals = std::vector<std::map<BayId, Millis>>;

/// Drives apply_event and rollup over `trace` the way the edge agent does:
/// each boundary is rolled up before any event stamped at or after it.
/// Windows are [anchor + k*period, anchor + (k+1)*period) for k = 0..count-1.
WindowTotals aggregate(const std::vector<OccupancyEvent>& trace, EpochMs anchor, Millis period, int count);

/// Gateway, agent and hub wired over an in-process network on one virtual clock.
class Rig {
 public:
  Rig(GatewayConfig gateway, Trace trace, AgentConfig agent, HubFaults hub_faults = {},
      EpochMs start = 1'542'499'200'000);

  /// Moves every component until no more lines flow at the current instant.
  void settle();
  /// Advances to `t` one deadline at a time, settling at each step.
  void run_until(EpochMs t);
  void crash_agent() { agent.reset(); }
  void restart_agent();

  VirtualClock clock;
  InProcessNetwork net;
  Acceptor& gateway_acceptor;
  Acceptor& hub_acceptor;
  std::unique_ptr<Connector> gateway_connector;
  std::unique_ptr<Connector> cloud_connector;
  std::unique_ptr<GatewayService> gateway;
  std::unique_ptr<HubStore> store;
  std::unique_ptr<HubService> hub;
  AgentConfig agent_config;
  std::unique_ptr<EdgeAgent> agent;
  std::int64_t lines = 0;
  std::vector<std::string> to_gateway;
  std::vector<std::string> from_gateway;
};

/// Agent settings for tests: files under dir, virtual clock, UTC-midnight windows.
AgentConfig test_agent_config(const std::filesystem::path& dir, EpochMs start = 1'542'499'200'000);

}  // namespace edgepark::testing
