#include <CLI11.hpp>
#include <iostream>

#include "edgepark/clock.hpp"
#include "edgepark/cloud_hub.hpp"
#include "edgepark/tcp.hpp"
#include "service_loop.hpp"

int main(int argc, char** argv) {
  using namespace edgepark;
  CLI::App app{"Cloud hub: stores roll-ups and answers daily and weekly queries"};
  std::string listen = "127.0.0.1:7500";
  std::string store_dir = "cloud-hub";
  app.add_option("--listen", listen, "host:port to listen on")->capture_default_str();
  app.add_option("--store-dir", store_dir, "Directory for the roll-up store")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    HubStore store(store_dir);
    SystemClock clock;
    HubService hub(store, clock);
    TcpAcceptor acceptor(listen);
    std::cerr << "cloud-hub: " << store.size() << " stored roll-up(s), listening on port " << acceptor.port()
              << '\n';
    tools::install_stop_handlers();
    tools::run_until_stopped([&] {
      while (auto c = acceptor.accept()) hub.attach(std::move(c));
      hub.poll();
      return true;
    });
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "cloud-hub: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
