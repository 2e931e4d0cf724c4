#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "edgepark/types.hpp"

// Newline-delimited JSON protocol shared by the gateway, the edge agent and
// the cloud hub. encode() never appends the newline; transports do.

namespace edgepark {

inline constexpr int kProtocolVersion = 1;

struct BayReading {
  BayId id = 0;
  BayStatus status = BayStatus::free;
  friend bool operator==(const BayReading&, const BayReading&) = default;
};

struct LotSnapshot {
  std::string lot_id;
  std::vector<BayReading> bays;
  friend bool operator==(const LotSnapshot&, const LotSnapshot&) = default;
};

/// One window's roll-up as shipped from the edge to the cloud.
struct UploadEnvelope {
  std::string lot_id;
  EpochMs window_start = 0;
  EpochMs window_end = 0;
  std::vector<RollupRecord> records;  // sorted by bay id
  std::string idempotency_key;

  friend bool operator==(const UploadEnvelope&, const UploadEnvelope&) = default;
};

/// "<lotId>:<windowStart>".
std::string make_idempotency_key(std::string_view lot_id, EpochMs window_start);
UploadEnvelope make_envelope(std::string lot_id, const RollupWindow& window,
                             std::vector<RollupRecord> records);

struct WeeklyReport {
  std::string lot_id;
  EpochMs week_start = 0;
  // nullopt for days with no stored roll-up.
  std::array<std::optional<double>, 7> per_day_fleet_avg_hours{};
  std::map<BayId, double> per_bay_min_hours;
  std::map<BayId, double> per_bay_max_hours;

  friend bool operator==(const WeeklyReport&, const WeeklyReport&) = default;
};

namespace msg {

struct Hello {
  std::string client;
  int proto = kProtocolVersion;
  friend bool operator==(const Hello&, const Hello&) = default;
};
struct Bays {
  std::vector<LotSnapshot> data;
  friend bool operator==(const Bays&, const Bays&) = default;
};
struct BaysUpdate {
  std::string lot_id;
  BayReading bay;
  friend bool operator==(const BaysUpdate&, const BaysUpdate&) = default;
};
struct Ping {
  std::int64_t seq = 0;
  friend bool operator==(const Ping&, const Ping&) = default;
};
struct Pong {
  std::int64_t seq = 0;
  friend bool operator==(const Pong&, const Pong&) = default;
};
struct Rollup {
  UploadEnvelope envelope;
  friend bool operator==(const Rollup&, const Rollup&) = default;
};
struct Ack {
  std::string key;
  friend bool operator==(const Ack&, const Ack&) = default;
};
struct Error {
  std::string reason;
  friend bool operator==(const Error&, const Error&) = default;
};
struct QueryDaily {
  std::string lot_id;
  EpochMs window_start = 0;
  friend bool operator==(const QueryDaily&, const QueryDaily&) = default;
};
struct Daily {
  std::string lot_id;
  EpochMs window_start = 0;
  EpochMs window_end = 0;
  std::vector<RollupRecord> records;
  friend bool operator==(const Daily&, const Daily&) = default;
};
struct NotFound {
  friend bool operator==(const NotFound&, const NotFound&) = default;
};
struct QueryWeekly {
  std::string lot_id;
  EpochMs week_start = 0;
  friend bool operator==(const QueryWeekly&, const QueryWeekly&) = default;
};
struct Weekly {
  WeeklyReport report;
  friend bool operator==(const Weekly&, const Weekly&) = default;
};

}  // namespace msg

using WireMessage =
    std::variant<msg::Hello, msg::Bays, msg::BaysUpdate, msg::Ping, msg::Pong, msg::Rollup, msg::Ack,
                 msg::Error, msg::QueryDaily, msg::Daily, msg::NotFound, msg::QueryWeekly, msg::Weekly>;

/// Value of the "type" field for a message.
std::string_view type_name(const WireMessage& message);

std::string encode(const WireMessage& message);

/// Parses one line. Throws ProtocolError for invalid JSON, a missing or
/// unknown "type", or fields of the wrong shape.
WireMessage decode(std::string_view line);

/// Roll-up records as a JSON array. Each occupationTime is right-aligned with
/// leading spaces to the digit count of the window length in seconds and each
/// rate is written with exactly four decimals, so the array's size depends on
/// bay ids and window length but not on the values.
std::string encode_records(const std::vector<RollupRecord>& records, Millis window_ms);

}  // namespace edgepark
