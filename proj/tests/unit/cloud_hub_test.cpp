#include <gtest/gtest.h>

#include <fstream>

#include "edgepark/cloud_hub.hpp"
#include "edgepark/occupancy.hpp"
#include "test_support.hpp"

namespace edgepark {
namespace {

constexpr EpochMs kWeek = 1'542'499'200'000;

UploadEnvelope day(int d, std::vector<std::pair<BayId, std::int64_t>> bays, std::string lot = "lot-1") {
  std::vector<RollupRecord> records;
  for (auto [bay, sec] : bays) records.push_back({bay, sec, occupation_rate(sec * 1000, kDayMs), sec * 1000});
  return make_envelope(std::move(lot), {kWeek + d * kDayMs, kWeek + (d + 1) * kDayMs}, std::move(records));
}

TEST(HubStore, SameKeyFiveTimesStoresOnce) {
  testing::TempDir dir;
  HubStore store(dir.path());
  const auto env = day(0, {{1, 100}, {2, 200}});
  EXPECT_EQ(store.put(env, 1), HubStore::PutResult::stored);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(store.put(env, 2 + i), HubStore::PutResult::duplicate);
  EXPECT_EQ(store.size(), 1u);
  std::ifstream in(HubStore::lot_file(dir.path(), "lot-1"));
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  EXPECT_EQ(lines, 1);
  EXPECT_EQ(store.find("lot-1", kWeek)->received_at, 1);
}

TEST(HubStore, SurvivesARestart) {
  testing::TempDir dir;
  {
    HubStore store(dir.path());
    store.put(day(0, {{1, 100}}), 5);
    store.put(day(1, {{1, 300}}, "lot-2"), 6);
  }
  HubStore reopened(dir.path());
  EXPECT_EQ(reopened.size(), 2u);
  EXPECT_EQ(reopened.lots(), (std::vector<std::string>{"lot-1", "lot-2"}));
  ASSERT_TRUE(reopened.find("lot-2", kWeek + kDayMs));
  EXPECT_EQ(reopened.find("lot-2", kWeek + kDayMs)->records[0].occupation_time_sec, 300);
  EXPECT_EQ(reopened.put(day(0, {{1, 100}}), 9), HubStore::PutResult::duplicate);
}

TEST(HubStore, IgnoresATornLastLine) {
  testing::TempDir dir;
  {
    HubStore store(dir.path());
    store.put(day(0, {{1, 100}}), 5);
  }
  {
    std::ofstream out(HubStore::lot_file(dir.path(), "lot-1"), std::ios::app);
    out << R"({"key":"lot-1:1)";
  }
  HubStore reopened(dir.path());
  EXPECT_EQ(reopened.size(), 1u);
}

TEST(HubStore, RejectsInconsistentEnvelopes) {
  testing::TempDir dir;
  HubStore store(dir.path());
  auto env = day(0, {{1, 100}});
  env.idempotency_key = "other";
  EXPECT_THROW(store.put(env, 0), ProtocolError);
  env = day(0, {{2, 100}, {1, 100}});
  EXPECT_THROW(store.put(env, 0), ProtocolError);
  env = day(0, {{1, 100}});
  env.records[0].occupation_time_sec = 86'401;
  EXPECT_THROW(store.put(env, 0), ProtocolError);
  EXPECT_EQ(store.size(), 0u);
}

TEST(WeeklyReport, AveragesPerDayAndTracksPerBayExtremes) {
  testing::TempDir dir;
  HubStore store(dir.path());
  store.put(day(0, {{1, 3600}, {2, 7200}}), 0);
  store.put(day(2, {{1, 10'800}, {2, 0}}), 0);
  const auto report = weekly_report(store, "lot-1", kWeek);
  ASSERT_TRUE(report);
  EXPECT_DOUBLE_EQ(*report->per_day_fleet_avg_hours[0], 1.5);
  EXPECT_FALSE(report->per_day_fleet_avg_hours[1]);
  EXPECT_DOUBLE_EQ(*report->per_day_fleet_avg_hours[2], 1.5);
  EXPECT_DOUBLE_EQ(report->per_bay_min_hours.at(1), 1.0);
  EXPECT_DOUBLE_EQ(report->per_bay_max_hours.at(1), 3.0);
  EXPECT_DOUBLE_EQ(report->per_bay_min_hours.at(2), 0.0);
  EXPECT_DOUBLE_EQ(report->per_bay_max_hours.at(2), 2.0);
  EXPECT_FALSE(weekly_report(store, "lot-1", kWeek + 30 * kDayMs));
}

TEST(WeeklyReport, AgreesWithTheDailyQueries) {
  testing::TempDir dir;
  HubStore store(dir.path());
  for (int d = 0; d < 7; ++d) store.put(day(d, {{1, 1000 * d}, {5, 86'400 - 999 * d}, {9, 77 * d}}), 0);
  const auto report = weekly_report(store, "lot-1", kWeek);
  ASSERT_TRUE(report);
  for (int d = 0; d < 7; ++d) {
    const auto records = query_daily(store, "lot-1", kWeek + d * kDayMs);
    ASSERT_TRUE(records);
    double sum = 0;
    for (const auto& r : *records) sum += static_cast<double>(r.occupation_time_sec) / 3600.0;
    EXPECT_DOUBLE_EQ(*report->per_day_fleet_avg_hours[static_cast<std::size_t>(d)], sum / 3);
  }
}

TEST(HubService, AnswersRollupsAndQueriesOverTheWire) {
  testing::TempDir dir;
  HubStore store(dir.path());
  VirtualClock clock(kWeek + kDayMs);
  HubService hub(store, clock);
  const auto env = day(0, {{1, 3600}});
  EXPECT_EQ(hub.handle_line(encode(msg::Rollup{env})), encode(msg::Ack{env.idempotency_key}));
  EXPECT_EQ(hub.handle_line(encode(msg::Rollup{env})), encode(msg::Ack{env.idempotency_key}));
  EXPECT_EQ(hub.stats().duplicates, 1);
  const auto daily = decode(*hub.handle_line(encode(msg::QueryDaily{"lot-1", kWeek})));
  ASSERT_TRUE(std::holds_alternative<msg::Daily>(daily));
  EXPECT_EQ(std::get<msg::Daily>(daily).records, env.records);
  EXPECT_EQ(hub.handle_line(encode(msg::QueryDaily{"lot-1", kWeek + kDayMs})), encode(msg::NotFound{}));
  const auto weekly = decode(*hub.handle_line(encode(msg::QueryWeekly{"lot-1", kWeek})));
  ASSERT_TRUE(std::holds_alternative<msg::Weekly>(weekly));
  EXPECT_EQ(std::get<msg::Weekly>(weekly).report, *weekly_report(store, "lot-1", kWeek));
  EXPECT_TRUE(std::holds_alternative<msg::Error>(decode(*hub.handle_line("nonsense"))));
}

TEST(HubService, FaultsSwallowRollupsAndAcks) {
  testing::TempDir dir;
  HubStore store(dir.path());
  VirtualClock clock(0);
  HubService hub(store, clock, HubFaults{1, 1});
  const auto line = encode(msg::Rollup{day(0, {{1, 5}})});
  EXPECT_FALSE(hub.handle_line(line));
  EXPECT_EQ(store.size(), 0u);
  EXPECT_FALSE(hub.handle_line(line));
  EXPECT_EQ(store.size(), 1u);
  EXPECT_TRUE(hub.handle_line(line));
}

}  // namespace
}  // namespace edgepark
