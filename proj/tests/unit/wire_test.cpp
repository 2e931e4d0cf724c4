#include <gtest/gtest.h>

#include "edgepark/occupancy.hpp"
#include "edgepark/wire.hpp"

namespace edgepark {
namespace {

RollupRecord rec(BayId bay, std::int64_t sec, Millis window_ms) {
  return {bay, sec, occupation_rate(sec * 1000, window_ms), sec * 1000};
}

UploadEnvelope sample_envelope() {
  return make_envelope("lot-7", {1'542'499'200'000, 1'542'499'200'000 + kDayMs},
                       {rec(1, 0, kDayMs), rec(2, 27'000, kDayMs), rec(12, 86'400, kDayMs)});
}

TEST(Wire, IdempotencyKeyIsLotAndWindowStart) {
  EXPECT_EQ(make_idempotency_key("lot-7", 1'542'499'200'000), "lot-7:1542499200000");
  EXPECT_EQ(sample_envelope().idempotency_key, "lot-7:1542499200000");
}

TEST(Wire, EncodesTheHandshakeExactly) {
  EXPECT_EQ(encode(msg::Hello{"edge", 1}), R"({"type":"hello","client":"edge","proto":1})");
  EXPECT_EQ(encode(msg::Ping{3}), R"({"type":"ping","seq":3})");
  EXPECT_EQ(encode(msg::BaysUpdate{"L", {4, BayStatus::occupied}}),
            R"({"type":"baysUpdate","lotId":"L","bay":{"id":4,"status":"occupied"}})");
  EXPECT_EQ(encode(msg::Bays{{LotSnapshot{"L", {{1, BayStatus::free}}}}}),
            R"({"type":"bays","data":[{"lotId":"L","bays":[{"id":1,"status":"free"}]}]})");
}

TEST(Wire, EveryMessageRoundTrips) {
  WeeklyReport weekly{"lot-7", 1000, {}, {{1, 2.5}}, {{1, 7.25}}};
  weekly.per_day_fleet_avg_hours[0] = 7.5;
  weekly.per_day_fleet_avg_hours[3] = 0.0;
  const std::vector<WireMessage> messages{
      msg::Hello{"agent", 1},
      msg::Bays{{LotSnapshot{"a", {{1, BayStatus::free}, {2, BayStatus::occupied}}}}},
      msg::BaysUpdate{"a", {9, BayStatus::free}},
      msg::Ping{41},
      msg::Pong{41},
      msg::Rollup{sample_envelope()},
      msg::Ack{"lot-7:1542499200000"},
      msg::Error{"nope"},
      msg::QueryDaily{"lot-7", 1'542'499'200'000},
      msg::Daily{"lot-7", 1'542'499'200'000, 1'542'499'200'000 + kDayMs, sample_envelope().records},
      msg::NotFound{},
      msg::QueryWeekly{"lot-7", 1'542'499'200'000},
      msg::Weekly{weekly},
  };
  for (const auto& m : messages) {
    const auto line = encode(m);
    EXPECT_EQ(line.find('\n'), std::string::npos);
    auto back = decode(line);
    if (auto* r = std::get_if<msg::Rollup>(&back)) {
      // Milliseconds never travel; the decoder rebuilds them from seconds.
      for (auto& record : r->envelope.records) EXPECT_EQ(record.occupation_ms, record.occupation_time_sec * 1000);
    }
    EXPECT_EQ(back, m) << line;
  }
}

TEST(Wire, RejectsMalformedLines) {
  for (const char* bad : {"", "not json", "[]", R"({"seq":1})", R"({"type":"warp"})", R"({"type":"ping"})",
                          R"({"type":"ping","seq":"x"})",
                          R"({"type":"baysUpdate","lotId":"L","bay":{"id":0,"status":"free"}})",
                          R"({"type":"baysUpdate","lotId":"L","bay":{"id":3,"status":"unknown"}})",
                          R"({"type":"baysUpdate","lotId":"L","bay":{"id":3,"status":"parked"}})"}) {
    EXPECT_THROW(decode(bad), ProtocolError) << bad;
  }
}

TEST(Wire, RejectsRatesOutsideTheUnitInterval) {
  auto line = encode(msg::Rollup{sample_envelope()});
  const auto at = line.find("1.0000");
  ASSERT_NE(at, std::string::npos);
  line.replace(at, 6, "1.5000");
  EXPECT_THROW(decode(line), ProtocolError);
}

TEST(Wire, RecordEncodingSizeIgnoresTheValues) {
  const std::vector<RollupRecord> low{rec(1, 0, kDayMs), rec(2, 5, kDayMs)};
  const std::vector<RollupRecord> high{rec(1, 86'400, kDayMs), rec(2, 43'210, kDayMs)};
  EXPECT_EQ(encode_records(low, kDayMs).size(), encode_records(high, kDayMs).size());
  EXPECT_EQ(encode_records(low, kDayMs),
            R"([{"bayId":1,"occupationTime":    0,"occupationRate":0.0000},)"
            R"({"bayId":2,"occupationTime":    5,"occupationRate":0.0001}])");
}

}  // namespace
}  // namespace edgepark
