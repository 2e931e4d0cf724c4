#include <gtest/gtest.h>

#include <fstream>

#include "edgepark/csv.hpp"
#include "edgepark/harness.hpp"
#include "test_support.hpp"

namespace edgepark {
namespace {

ScenarioConfig small_scenario(int days = 2) {
  return parse_scenario("name = small\nseed = 3\nbays = 6\nsimulated-days = " + std::to_string(days) + "\n");
}

TEST(Scenario, ParsesEveryKey) {
  const auto sc = parse_scenario(R"(# comment
name = full
seed = 42
bays = 10
lot-id = north
mean-occupied-min = 30
mean-free-min = 66
simulated-days = 3
start = 2020-01-02T00:00:00Z
poll-interval-sec = 30
rollup-period-sec = 3600
ack-timeout-ms = 700
backoff-initial-ms = 200
backoff-multiplier = 3
backoff-cap-ms = 9000
inject = drop@100+120
inject = duplicate:5
hub-drop-rollups = 1
hub-lose-acks = 2
hub-down = 50+10
crash = 500+60
)");
  EXPECT_EQ(sc.name, "full");
  EXPECT_EQ(sc.gateway.model.seed, 42u);
  EXPECT_EQ(sc.gateway.bay_count, 10);
  EXPECT_EQ(sc.gateway.lot_id, "north");
  EXPECT_DOUBLE_EQ(sc.gateway.model.mean_occupied_min, 30);
  EXPECT_EQ(sc.simulated_days, 3);
  EXPECT_EQ(sc.start, 1'577'923'200'000);
  EXPECT_EQ(sc.poll_interval_sec, 30);
  EXPECT_EQ(sc.rollup_period_sec, 3600);
  EXPECT_EQ(sc.ack_timeout_ms, 700);
  EXPECT_EQ(sc.reconnect_backoff.cap_ms, 9000);
  ASSERT_EQ(sc.gateway.faults.drops.size(), 1u);
  EXPECT_EQ(sc.gateway.faults.duplicate_every, 5);
  EXPECT_EQ(sc.hub_faults.lose_acks, 2);
  ASSERT_EQ(sc.hub_outages.size(), 1u);
  EXPECT_EQ(sc.hub_outages[0], (Outage{50'000, 10'000}));
  ASSERT_EQ(sc.crashes.size(), 1u);
  EXPECT_EQ(sc.crashes[0].down_ms, 60'000);
}

TEST(Scenario, ReportsBadLines) {
  EXPECT_THROW(parse_scenario("colour = blue\n"), ConfigError);
  EXPECT_THROW(parse_scenario("bays\n"), ConfigError);
  EXPECT_THROW(parse_scenario("bays = many\n"), ConfigError);
  EXPECT_THROW(parse_scenario("simulated-days = 0\n"), ConfigError);
  EXPECT_THROW(parse_scenario("inject = meteor\n"), ConfigError);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.scn"), ConfigError);
}

TEST(TraceFile, RoundTripsAndValidates) {
  testing::TempDir dir;
  GatewayConfig gw;
  gw.bay_count = 4;
  TraceFile tf{generate_trace(gw, kDayMs), "lot-1", 1000};
  write_trace_file(dir / "t.jsonl", tf);
  const auto back = read_trace_file(dir / "t.jsonl", 0, kDayMs);
  EXPECT_EQ(back.trace, tf.trace);
  EXPECT_EQ(back.lot_id, "lot-1");
  EXPECT_EQ(back.start, 1000);

  std::ofstream(dir / "bad.jsonl") << R"({"initial":["free"]})" << "\n"
                                   << R"({"simTs":10,"bayId":1,"status":"free"})" << "\n";
  EXPECT_THROW(read_trace_file(dir / "bad.jsonl", 1, kDayMs), ConfigError);
}

TEST(RunSim, ProducesAVerifiableRunDirectory) {
  testing::TempDir dir;
  const auto result = run_sim(small_scenario(), dir.path());
  EXPECT_EQ(result.windows.size(), 2u);
  EXPECT_EQ(result.stored_rollups, 2);
  for (const char* f : {"run.json", "trace.jsonl", "ledger.json", "summary.md", "scenario.cfg",
                        "wire/updates.jsonl", "wire/uploads.jsonl", "agent/events.log", "hub/lot-1.jsonl"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  const auto report = verify(dir.path());
  EXPECT_TRUE(report.pass) << report.to_text();
  EXPECT_EQ(report.windows_checked, 2u);
  EXPECT_EQ(report.max_error_ms, 0);
}

TEST(RunSim, SavedScenarioReproducesTheRun) {
  testing::TempDir a, b;
  run_sim(small_scenario(), a.path());
  run_sim(load_scenario(a / "scenario.cfg"), b.path());
  EXPECT_EQ(testing::slurp(a / "hub/lot-1.jsonl"), testing::slurp(b / "hub/lot-1.jsonl"));
}

TEST(Verify, NamesTheTamperedBayAndWindow) {
  testing::TempDir dir;
  const auto result = run_sim(small_scenario(), dir.path());
  const auto csv = dir / ("agent/csv/" + csv_file_name("lot-1", result.windows[1].start));
  auto text = testing::slurp(csv);
  const auto row = text.find("\n3,");
  ASSERT_NE(row, std::string::npos);
  const auto comma = text.find(',', row + 3);
  text.replace(row + 3, comma - row - 3, "1");
  text.replace(text.find(',', row + 3) + 1, 6, "0.0000");
  std::ofstream(csv, std::ios::binary | std::ios::trunc) << text;
  const auto report = verify(dir.path());
  EXPECT_FALSE(report.pass);
  const std::string all = report.to_text();
  EXPECT_NE(all.find("bay 3"), std::string::npos) << all;
  EXPECT_NE(all.find(format_iso_extended(result.windows[1].start)), std::string::npos) << all;
}

TEST(Verify, ListsMissingArtifacts) {
  testing::TempDir dir;
  std::ofstream(dir / "stray.txt") << "x";
  const auto report = verify(dir.path());
  EXPECT_FALSE(report.pass);
  const auto text = report.to_text();
  EXPECT_NE(text.find("run.json"), std::string::npos);
  EXPECT_NE(text.find("stray.txt"), std::string::npos);
}

TEST(Replay, RebuildsTheAgentCsvs) {
  testing::TempDir dir;
  run_sim(small_scenario(3), dir.path());
  const auto out = dir / "replayed";
  const auto result = replay(dir / "agent/events.log", 86'400, out);
  ASSERT_EQ(result.files.size(), 3u);
  for (const auto& f : result.files) {
    EXPECT_EQ(testing::slurp(f), testing::slurp(dir / "agent/csv" / f.filename())) << f;
  }
  EXPECT_THROW(replay(dir / "agent/events.log", 3600, out), ConfigError);
}

TEST(Replay, EmptyLogWritesNothing) {
  testing::TempDir dir;
  std::ofstream(dir / "empty.log").flush();
  EXPECT_TRUE(replay(dir / "empty.log", 86'400, dir / "out").files.empty());
}

TEST(Replay, LogWithoutMarkersIsCutOnEpochMultiples) {
  testing::TempDir dir;
  {
    std::ofstream log(dir / "e.log");
    log << R"({"ts":100000,"lotId":"L","bayId":1,"status":"occupied","src":"snapshot"})" << "\n"
        << R"({"ts":3700000,"lotId":"L","bayId":1,"status":"free","src":"update"})" << "\n";
  }
  const auto result = replay(dir / "e.log", 3600, dir / "out");
  ASSERT_EQ(result.files.size(), 2u);
  EXPECT_EQ(read_csv(result.files[0]).at(0).occupation_time_sec, 3500);
  EXPECT_EQ(read_csv(result.files[1]).at(0).occupation_time_sec, 100);
}

TEST(TrafficReport, AggregatedSizeIgnoresEventCount) {
  testing::TempDir busy, calm;
  auto sc = small_scenario(2);
  sc.gateway.model.mean_occupied_min = 5;
  sc.gateway.model.mean_free_min = 11;
  const auto a = run_sim(sc, busy.path());
  sc.gateway.model.mean_occupied_min = 300;
  sc.gateway.model.mean_free_min = 660;
  const auto b = run_sim(sc, calm.path());
  EXPECT_GT(a.ledger.event_count, 10 * b.ledger.event_count);
  EXPECT_EQ(a.ledger.aggregated_bytes, b.ledger.aggregated_bytes);
  EXPECT_LT(a.ledger.aggregated_bytes, a.ledger.raw_forward_bytes);
  EXPECT_EQ(traffic_report(busy.path()).to_json(), testing::slurp(busy / "ledger.json"));
}

TEST(TrafficReport, RetriedUploadsCountOnce) {
  testing::TempDir dir;
  auto sc = small_scenario(2);
  sc.hub_faults.lose_acks = 3;
  const auto r = run_sim(sc, dir.path());
  EXPECT_GT(r.upload_sends, 2);
  EXPECT_EQ(r.ledger.envelope_count, 2);
}

TEST(ExportReport, CsvAndMarkdownAgreeWithTheHub) {
  testing::TempDir dir;
  auto sc = small_scenario(3);
  run_sim(sc, dir.path());
  // Drop day 2 from the store to exercise the missing-day path.
  const auto hub_file = dir / "hub/lot-1.jsonl";
  std::string kept;
  {
    std::ifstream in(hub_file);
    int n = 0;
    for (std::string l; std::getline(in, l); ++n) {
      if (n != 1) kept += l + "\n";
    }
  }
  std::ofstream(hub_file, std::ios::trunc) << kept;
  const auto files = export_report(dir.path(), ReportFormat::csv);
  ASSERT_EQ(files.size(), 2u);
  const auto daily = testing::slurp(dir / "report_daily.csv");
  EXPECT_EQ(daily.substr(0, daily.find('\n')), "day,windowStart,fleetAvgHours");
  EXPECT_NE(daily.find("\n2,2018-11-19T00:00:00Z,NA\n"), std::string::npos) << daily;
  const auto bays = testing::slurp(dir / "report_bays.csv");
  EXPECT_EQ(std::count(bays.begin(), bays.end(), '\n'), 7);
  export_report(dir.path(), ReportFormat::markdown);
  EXPECT_NE(testing::slurp(dir / "report.md").find("| 2 | 2018-11-19T00:00:00Z | NA |"), std::string::npos);
}

}  // namespace
}  // namespace edgepark
