#include <CLI11.hpp>
#include <cstdio>
#include <iostream>

#include "edgepark/harness.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCrash = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace edgepark;
  CLI::App app{"Parking occupancy pipeline: simulation, replay, verification and reports"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, log_path, run_dir, format = "csv";
  int window_sec = 86'400;

  auto* run_cmd = app.add_subcommand("run-sim", "Run gateway, agent and hub under a virtual clock");
  run_cmd->add_option("--scenario", scenario_path, "Scenario file")->required();
  run_cmd->add_option("--out", out_dir, "Run directory")->required();

  auto* replay_cmd = app.add_subcommand("replay", "Rebuild roll-up CSVs from an event log");
  replay_cmd->add_option("--log", log_path, "Event log")->required();
  replay_cmd->add_option("--window-sec", window_sec, "Window length in seconds")->check(CLI::PositiveNumber);
  replay_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* verify_cmd = app.add_subcommand("verify", "Check a run directory against the oracle");
  verify_cmd->add_option("--run", run_dir, "Run directory")->required();

  auto* traffic_cmd = app.add_subcommand("traffic-report", "Raw forwarding versus aggregated upload bytes");
  traffic_cmd->add_option("--run", run_dir, "Run directory")->required();

  auto* export_cmd = app.add_subcommand("export-report", "Daily and per-bay occupancy from the hub store");
  export_cmd->add_option("--run", run_dir, "Run directory")->required();
  export_cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "markdown"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (run_cmd->parsed()) {
      const auto result = run_sim(load_scenario(scenario_path), out_dir);
      std::cout << "windows: " << result.windows.size() << "\nstored roll-ups: " << result.stored_rollups
                << "\ndisconnected: " << result.gap_ms << " ms\n"
                << result.ledger.to_json();
    } else if (replay_cmd->parsed()) {
      const auto result = replay(log_path, window_sec, out_dir);
      for (const auto& f : result.files) std::cout << f.string() << '\n';
      if (result.torn_lines > 0) std::cerr << "warning: discarded a torn final log line\n";
      if (result.bad_lines > 0) std::cerr << "warning: skipped " << result.bad_lines << " malformed log line(s)\n";
    } else if (verify_cmd->parsed()) {
      const auto report = verify(run_dir);
      std::cout << report.to_text();
      return report.pass ? kExitPass : kExitVerifyFailed;
    } else if (traffic_cmd->parsed()) {
      std::cout << traffic_report(run_dir).to_json();
    } else if (export_cmd->parsed()) {
      for (const auto& f : export_report(run_dir, format == "markdown" ? ReportFormat::markdown : ReportFormat::csv)) {
        std::cout << f.string() << '\n';
      }
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCrash;
  }
  return kExitPass;
}
