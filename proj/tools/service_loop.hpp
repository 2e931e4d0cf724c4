#pragma once

#include <atomic>
#include <chrono>
#include <csignal>
#include <thread>

namespace edgepark::tools {

inline std::atomic<bool> g_stop{false};

inline void install_stop_handlers() {
  auto handler = [](int) { g_stop.store(true); };
  std::signal(SIGINT, handler);
  std::signal(SIGTERM, handler);
  std::signal(SIGPIPE, SIG_IGN);
}

/// Calls step() every few milliseconds until a stop signal arrives or step returns false.
template <class Step>
void run_until_stopped(Step step) {
  while (!g_stop.load()) {
    if (!step()) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

}  // namespace edgepark::tools
