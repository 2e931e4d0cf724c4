#include <CLI11.hpp>
#include <iostream>

#include "edgepark/clock.hpp"
#include "edgepark/gateway_sim.hpp"
#include "edgepark/tcp.hpp"
#include "service_loop.hpp"

int main(int argc, char** argv) {
  using namespace edgepark;
  CLI::App app{"Simulated parking-sensor gateway"};
  GatewayConfig config;
  double duration_sec = 7.0 * 86'400;
  std::vector<std::string> faults;
  app.add_option("--listen", config.listen_address, "host:port to listen on")->capture_default_str();
  app.add_option("--bays", config.bay_count, "Number of bays")->capture_default_str();
  app.add_option("--lot-id", config.lot_id, "Lot identifier")->capture_default_str();
  app.add_option("--seed", config.model.seed, "Random seed")->capture_default_str();
  app.add_option("--mean-occupied-min", config.model.mean_occupied_min, "Mean occupied holding time")
      ->capture_default_str();
  app.add_option("--mean-free-min", config.model.mean_free_min, "Mean free holding time")->capture_default_str();
  app.add_option("--duration", duration_sec, "Simulated seconds of sensor activity")->capture_default_str();
  app.add_option("--time-warp", config.time_warp, "Simulated seconds per wall-clock second")
      ->capture_default_str();
  app.add_option("--inject", faults, "drop@<sec>[+<sec>], duplicate[:<n>] or delay:<ms>");
  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& f : faults) add_gateway_fault(config.faults, f);
    config.validate();
    if (!(duration_sec >= 0)) throw ConfigError("--duration must be non-negative");
    const Trace trace = generate_trace(config, static_cast<Millis>(duration_sec * 1000));
    TcpAcceptor acceptor(config.listen_address);
    const WarpedClock clock(SystemClock().now_ms(), config.time_warp);
    GatewayService gateway(config, trace, clock, clock.now_ms());
    std::cerr << "gateway-sim: " << config.bay_count << " bays, " << trace.items.size()
              << " transitions, listening on port " << acceptor.port() << '\n';
    tools::install_stop_handlers();
    tools::run_until_stopped([&] {
      while (auto c = acceptor.accept()) gateway.attach(std::move(c));
      gateway.poll();
      return true;
    });
    std::cerr << "gateway-sim: sent " << gateway.stats().updates_sent << " updates\n";
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "gateway-sim: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
