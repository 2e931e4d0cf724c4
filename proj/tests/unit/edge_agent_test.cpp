#include <gtest/gtest.h>

#include <functional>

#include "edgepark/csv.hpp"
#include "edgepark/edge_agent.hpp"
#include "edgepark/event_log.hpp"
#include "edgepark/oracle.hpp"
#include "test_support.hpp"

namespace edgepark {
namespace {

constexpr EpochMs kStart = 1'542'499'200'000;

GatewayConfig gw_config(int bays = 22, std::uint64_t seed = 5) {
  GatewayConfig c;
  c.bay_count = bays;
  c.model.seed = seed;
  return c;
}

std::map<std::string, std::string> csv_contents(const std::filesystem::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") {
      out[e.path().filename().string()] = testing::slurp(e.path());
    }
  }
  return out;
}

TEST(Backoff, GrowsGeometricallyUpToTheCap) {
  const Backoff b{1000, 2.0, 30'000};
  EXPECT_EQ(b.delay_after(1), 1000);
  EXPECT_EQ(b.delay_after(2), 2000);
  EXPECT_EQ(b.delay_after(5), 16'000);
  EXPECT_EQ(b.delay_after(6), 30'000);
  EXPECT_EQ(b.delay_after(500), 30'000);
}

TEST(AgentConfig, RejectsNonsense) {
  testing::TempDir dir;
  auto c = testing::test_agent_config(dir.path());
  EXPECT_NO_THROW(c.validate());
  c.poll_interval_sec = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = testing::test_agent_config(dir.path());
  c.rollup_period_sec = 30;
  EXPECT_THROW(c.validate(), ConfigError);
  c = testing::test_agent_config(dir.path());
  c.reconnect_backoff.multiplier = 0.5;
  EXPECT_THROW(c.validate(), ConfigError);
}

// A gateway whose replies the test controls line by line.
class ScriptedGateway {
 public:
  using Reply = std::function<std::optional<std::string>(const WireMessage&)>;
  ScriptedGateway(InProcessNetwork& net, Reply reply) : acceptor_(net.listen("gateway")), reply_(std::move(reply)) {}

  void poll() {
    while (auto c = acceptor_.accept()) conns_.push_back(std::move(c));
    for (auto& c : conns_) {
      while (auto line = c->receive_line()) {
        received.push_back(decode(*line));
        if (auto out = reply_(received.back())) c->send_line(*out);
      }
    }
    std::erase_if(conns_, [](const auto& c) { return !c->is_open(); });
  }
  std::size_t connections() const { return conns_.size(); }

  std::vector<WireMessage> received;

 private:
  Acceptor& acceptor_;
  Reply reply_;
  std::vector<std::unique_ptr<Connection>> conns_;
};

std::string one_bay_snapshot() { return encode(msg::Bays{{LotSnapshot{"lot-1", {{1, BayStatus::free}}}}}); }

class AgentWithScriptedGateway : public ::testing::Test {
 protected:
  void start(ScriptedGateway::Reply reply) {
    gateway_ = std::make_unique<ScriptedGateway>(net_, std::move(reply));
    agent_ = std::make_unique<EdgeAgent>(testing::test_agent_config(dir_.path()), clock_, *gw_conn_, *cloud_conn_);
    step();
  }
  void step() {
    for (int i = 0; i < 4; ++i) {
      agent_->poll();
      gateway_->poll();
    }
  }
  void advance_to(EpochMs t) {
    while (clock_.now_ms() < t) {
      clock_.set(std::min(t, agent_->next_deadline().value_or(t)));
      step();
    }
  }
  std::vector<std::int64_t> ping_seqs() const {
    std::vector<std::int64_t> seqs;
    for (const auto& m : gateway_->received) {
      if (auto* p = std::get_if<msg::Ping>(&m)) seqs.push_back(p->seq);
    }
    return seqs;
  }

  testing::TempDir dir_;
  VirtualClock clock_{kStart};
  InProcessNetwork net_;
  std::unique_ptr<Connector> gw_conn_ = net_.connector("gateway");
  std::unique_ptr<Connector> cloud_conn_ = net_.connector("cloud");
  std::unique_ptr<ScriptedGateway> gateway_;
  std::unique_ptr<EdgeAgent> agent_;
};

TEST_F(AgentWithScriptedGateway, SendsHelloThenOnePingPerInterval) {
  start([](const WireMessage& m) -> std::optional<std::string> {
    if (std::holds_alternative<msg::Hello>(m)) return one_bay_snapshot();
    if (auto* p = std::get_if<msg::Ping>(&m)) return encode(msg::Pong{p->seq});
    return std::nullopt;
  });
  ASSERT_FALSE(gateway_->received.empty());
  EXPECT_TRUE(std::holds_alternative<msg::Hello>(gateway_->received.front()));
  EXPECT_TRUE(agent_->live());
  advance_to(kStart + 300'000);
  EXPECT_EQ(ping_seqs(), (std::vector<std::int64_t>{1, 2, 3, 4, 5}));
  advance_to(kStart + 300'000 + 59'999);
  EXPECT_EQ(ping_seqs().size(), 5u);
}

TEST_F(AgentWithScriptedGateway, ThreeMissedPongsEndTheSession) {
  start([](const WireMessage& m) -> std::optional<std::string> {
    if (std::holds_alternative<msg::Hello>(m)) return one_bay_snapshot();
    if (auto* p = std::get_if<msg::Ping>(&m); p && p->seq <= 10) return encode(msg::Pong{p->seq});
    return std::nullopt;
  });
  advance_to(kStart + 13 * 60'000);
  EXPECT_TRUE(agent_->live());
  EXPECT_EQ(agent_->last_ping_seq(), 13);
  advance_to(kStart + 14 * 60'000);
  EXPECT_EQ(agent_->stats().disconnects, 1);
  const auto seqs = ping_seqs();
  ASSERT_GE(seqs.size(), 13u);
  for (std::size_t i = 0; i < 13; ++i) EXPECT_EQ(seqs[i], static_cast<std::int64_t>(i + 1));
  // The agent reconnected straight away and numbering restarts with the new session.
  EXPECT_TRUE(agent_->live());
  EXPECT_EQ(agent_->stats().sessions, 2);
  const auto log = read_log(testing::test_agent_config(dir_.path()).log_path);
  EXPECT_TRUE(std::any_of(log.entries.begin(), log.entries.end(),
                          [](const LogEntry& e) { return std::holds_alternative<DisconnectMarker>(e); }));
}

TEST_F(AgentWithScriptedGateway, SilentHandshakeTimesOutAfterOnePollInterval) {
  start([](const WireMessage&) -> std::optional<std::string> { return std::nullopt; });
  EXPECT_FALSE(agent_->live());
  advance_to(kStart + 60'000);
  EXPECT_EQ(agent_->stats().connect_failures, 1);
  advance_to(kStart + 61'000);
  int hellos = 0;
  for (const auto& m : gateway_->received) hellos += std::holds_alternative<msg::Hello>(m) ? 1 : 0;
  EXPECT_EQ(hellos, 2);
}

TEST_F(AgentWithScriptedGateway, UpdatesBeforeTheSnapshotAreIgnored) {
  bool sent_update = false;
  start([&](const WireMessage& m) -> std::optional<std::string> {
    if (std::holds_alternative<msg::Hello>(m) && !sent_update) {
      sent_update = true;
      return encode(msg::BaysUpdate{"lot-1", {1, BayStatus::occupied}});
    }
    return std::nullopt;
  });
  EXPECT_TRUE(agent_->table().empty());
  EXPECT_FALSE(agent_->warnings().empty());
}

TEST(AgentRig, UnreachableGatewayBacksOffExponentially) {
  testing::TempDir dir;
  VirtualClock clock(kStart);
  InProcessNetwork net;
  auto gw = net.connector("gateway");
  auto cloud = net.connector("cloud");
  EdgeAgent agent(testing::test_agent_config(dir.path()), clock, *gw, *cloud);
  std::vector<EpochMs> attempts;
  std::int64_t seen = 0;
  while (clock.now_ms() < kStart + 40'000) {
    agent.poll();
    if (agent.stats().connect_failures != seen) {
      seen = agent.stats().connect_failures;
      attempts.push_back(clock.now_ms() - kStart);
    }
    clock.set(*agent.next_deadline());
  }
  EXPECT_EQ(attempts, (std::vector<EpochMs>{0, 1000, 3000, 7000, 15'000, 31'000}));
}

TEST(AgentRig, DailyRollupMatchesTheOracleAndReachesTheHub) {
  testing::TempDir dir;
  const auto gw = gw_config();
  auto trace = generate_trace(gw, 2 * kDayMs);
  testing::Rig rig(gw, trace, testing::test_agent_config(dir.path()));
  rig.run_until(kStart + 2 * kDayMs);
  rig.settle();
  const auto events = trace_events(trace, gw.lot_id, kStart);
  for (int d = 0; d < 2; ++d) {
    const RollupWindow w{kStart + d * kDayMs, kStart + (d + 1) * kDayMs};
    const auto rows = read_csv(dir / ("agent/csv/" + csv_file_name("lot-1", w.start)));
    const auto oracle = oracle_occupancy(events, w);
    ASSERT_EQ(rows.size(), oracle.size());
    for (const auto& row : rows) EXPECT_EQ(row.occupation_time_sec, oracle.at(row.bay_id) / 1000);
    ASSERT_TRUE(rig.store->find("lot-1", w.start));
  }
  EXPECT_EQ(rig.agent->pending_uploads(), 0u);
  EXPECT_EQ(rig.agent->stats().upload_sends, 2);
}

TEST(AgentRig, DuplicatedUpdatesDoNotDoubleCount) {
  testing::TempDir clean_dir, dup_dir;
  auto gw = gw_config();
  const auto trace = generate_trace(gw, kDayMs);
  testing::Rig clean(gw, trace, testing::test_agent_config(clean_dir.path()));
  clean.run_until(kStart + kDayMs);
  gw.faults.duplicate_every = 1;
  testing::Rig dup(gw, trace, testing::test_agent_config(dup_dir.path()));
  dup.run_until(kStart + kDayMs);
  EXPECT_EQ(dup.agent->stats().duplicate_updates, static_cast<std::int64_t>(trace.items.size()));
  EXPECT_EQ(csv_contents(dup_dir / "agent/csv"), csv_contents(clean_dir / "agent/csv"));
}

TEST(AgentRig, LostAcksAreRetriedUntilOneRecordIsStored) {
  testing::TempDir dir;
  const auto gw = gw_config(4);
  testing::Rig rig(gw, generate_trace(gw, kDayMs), testing::test_agent_config(dir.path()), HubFaults{0, 2});
  rig.run_until(kStart + kDayMs + 60'000);
  EXPECT_EQ(rig.agent->stats().upload_sends, 3);
  EXPECT_EQ(rig.agent->stats().upload_acks, 1);
  EXPECT_EQ(rig.hub->stats().duplicates, 2);
  EXPECT_EQ(rig.store->size(), 1u);
  EXPECT_EQ(rig.agent->pending_uploads(), 0u);
  EXPECT_TRUE(std::filesystem::is_empty(dir / "agent/csv/outbox"));
}

TEST(AgentRig, PendingUploadSurvivesARestart) {
  testing::TempDir dir;
  const auto gw = gw_config(4);
  testing::Rig rig(gw, generate_trace(gw, 2 * kDayMs), testing::test_agent_config(dir.path()), HubFaults{1, 0});
  rig.run_until(kStart + kDayMs);
  EXPECT_EQ(rig.agent->pending_uploads(), 1u);
  rig.crash_agent();
  rig.restart_agent();
  EXPECT_EQ(rig.agent->pending_uploads(), 1u);
  rig.run_until(kStart + kDayMs + 60'000);
  EXPECT_EQ(rig.agent->pending_uploads(), 0u);
  EXPECT_TRUE(rig.store->find("lot-1", kStart));
}

TEST(AgentRig, CrashBetweenEventsLeavesTheCsvsUnchanged) {
  const auto gw = gw_config();
  const auto trace = generate_trace(gw, 2 * kDayMs);
  testing::TempDir ref_dir;
  testing::Rig ref(gw, trace, testing::test_agent_config(ref_dir.path()));
  ref.run_until(kStart + 2 * kDayMs);
  for (Millis crash_at : {Millis{1}, trace.items[17].sim_ts, kDayMs - 1, kDayMs, kDayMs + 12'345'678}) {
    testing::TempDir dir;
    testing::Rig rig(gw, trace, testing::test_agent_config(dir.path()));
    rig.run_until(kStart + crash_at);
    rig.crash_agent();
    rig.restart_agent();
    rig.run_until(kStart + 2 * kDayMs);
    EXPECT_EQ(csv_contents(dir / "agent/csv"), csv_contents(ref_dir / "agent/csv")) << "crash at " << crash_at;
  }
}

TEST(AgentRig, CsvFailureGoesToDeadLetterAndStillUploads) {
  testing::TempDir dir;
  const auto gw = gw_config(3);
  auto cfg = testing::test_agent_config(dir.path());
  // A directory squatting on the CSV's name makes the final rename fail.
  std::filesystem::create_directories(cfg.csv_dir / csv_file_name("lot-1", kStart) / "blocker");
  testing::Rig rig(gw, generate_trace(gw, kDayMs), cfg);
  rig.run_until(kStart + kDayMs);
  EXPECT_EQ(rig.agent->stats().csv_failures, 1);
  EXPECT_EQ(std::distance(std::filesystem::directory_iterator(dead_letter_dir(cfg)), {}), 1);
  EXPECT_TRUE(rig.store->find("lot-1", kStart));
}

TEST(AgentRig, DisconnectErrorStaysWithinTheGap) {
  testing::TempDir dir;
  auto gw = gw_config();
  gw.faults.drops.push_back({30'000'000, 600'000});
  const auto trace = generate_trace(gw, kDayMs);
  testing::Rig rig(gw, trace, testing::test_agent_config(dir.path()));
  rig.run_until(kStart + kDayMs);
  const auto& gaps = rig.agent->stats().gaps;
  ASSERT_EQ(gaps.size(), 1u);
  EXPECT_EQ(gaps[0].first, kStart + 30'000'000);
  const Millis gap = gaps[0].second - gaps[0].first;
  EXPECT_GE(gap, 600'000);
  const auto oracle = oracle_occupancy(trace_events(trace, "lot-1", kStart), {kStart, kStart + kDayMs});
  for (const auto& row : read_csv(dir / ("agent/csv/" + csv_file_name("lot-1", kStart)))) {
    EXPECT_LE(std::abs(row.occupation_time_sec * 1000 - oracle.at(row.bay_id) / 1000 * 1000), gap)
        << "bay " << row.bay_id;
  }
}

}  // namespace
}  // namespace edgepark
