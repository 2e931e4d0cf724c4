#include <CLI11.hpp>
#include <iostream>
#include <memory>

#include "edgepark/clock.hpp"
#include "edgepark/edge_agent.hpp"
#include "edgepark/tcp.hpp"
#include "service_loop.hpp"

int main(int argc, char** argv) {
  using namespace edgepark;
  CLI::App app{"Edge agent: tracks bay occupancy and uploads daily roll-ups"};
  AgentConfig config;
  std::string clock_mode = "real";
  std::string start;
  app.add_option("--gateway", config.gateway_address, "Gateway host:port")
      ->envname("EDGEPARK_GATEWAY")->capture_default_str();
  app.add_option("--cloud", config.cloud_address, "Cloud hub host:port")
      ->envname("EDGEPARK_CLOUD")->capture_default_str();
  app.add_option("--poll-interval-sec", config.poll_interval_sec, "Ping interval")
      ->envname("EDGEPARK_POLL_INTERVAL_SEC")->capture_default_str();
  app.add_option("--rollup-period-sec", config.rollup_period_sec, "Roll-up window length")
      ->envname("EDGEPARK_ROLLUP_PERIOD_SEC")->capture_default_str();
  app.add_option("--log", config.log_path, "Event log path")->envname("EDGEPARK_LOG")->capture_default_str();
  app.add_option("--csv-dir", config.csv_dir, "Directory for roll-up CSVs")
      ->envname("EDGEPARK_CSV_DIR")->capture_default_str();
  app.add_option("--clock", clock_mode, "real or virtual")
      ->envname("EDGEPARK_CLOCK")->check(CLI::IsMember({"real", "virtual"}))->capture_default_str();
  app.add_option("--time-warp", config.time_warp, "Simulated seconds per wall-clock second")
      ->envname("EDGEPARK_TIME_WARP")->capture_default_str();
  app.add_option("--start", start, "Virtual clock start, ISO-8601 UTC (virtual clock only)")
      ->envname("EDGEPARK_START");
  CLI11_PARSE(app, argc, argv);

  try {
    config.clock_mode = clock_mode == "virtual" ? ClockMode::virtual_time : ClockMode::real;
    config.validate();
    const EpochMs wall = SystemClock().now_ms();
    EpochMs origin = wall;
    if (!start.empty()) {
      if (config.clock_mode != ClockMode::virtual_time) throw ConfigError("--start needs --clock virtual");
      origin = parse_iso8601(start);
    }
    std::unique_ptr<Clock> clock = std::make_unique<WarpedClock>(origin, config.time_warp);
    if (config.clock_mode == ClockMode::real && config.time_warp == 1.0) clock = std::make_unique<SystemClock>();

    TcpConnector gateway(config.gateway_address);
    TcpConnector cloud(config.cloud_address);
    EdgeAgent agent(config, *clock, gateway, cloud);
    for (const auto& w : agent.warnings()) std::cerr << "edge-agent: " << w << '\n';
    std::size_t reported = agent.warnings().size();
    tools::install_stop_handlers();
    tools::run_until_stopped([&] {
      agent.poll();
      const auto& warnings = agent.warnings();
      for (; reported < warnings.size(); ++reported) std::cerr << "edge-agent: " << warnings[reported] << '\n';
      return true;
    });
    std::cerr << "edge-agent: " << agent.stats().rollups << " roll-ups, " << agent.pending_uploads()
              << " upload(s) pending\n";
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "edge-agent: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
