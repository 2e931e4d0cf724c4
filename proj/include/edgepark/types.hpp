#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace edgepark {

/// Milliseconds since the Unix epoch (UTC).
using EpochMs = std::int64_t;
/// A duration in milliseconds.
using Millis = std::int64_t;
using BayId = std::int64_t;

inline constexpr Millis kDayMs = 86'400'000;

enum class BayStatus { free, occupied, unknown };

std::string_view to_string(BayStatus status);
/// Parses "free" / "occupied" / "unknown"; nullopt for anything else.
std::optional<BayStatus> parse_bay_status(std::string_view text);

// Errors ---------------------------------------------------------------------

struct ClockRegression : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvariantViolation : std::logic_error {
  using std::logic_error::logic_error;
};

struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Domain types ----------------------------------------------------------------

struct BayState {
  BayId bay_id = 0;
  std::string lot_id;
  BayStatus status = BayStatus::unknown;
  EpochMs last_transition_ts = 0;
  // Closed intervals only; an occupancy in progress is added on flush.
  Millis accumulated_occupation_ms = 0;

  friend bool operator==(const BayState&, const BayState&) = default;
};

/// Bay table keyed (and therefore ordered) by bay id.
using BayTable = std::map<BayId, BayState>;

enum class EventKind { snapshot, update };

struct OccupancyEvent {
  EventKind kind = EventKind::update;
  EpochMs ts = 0;
  std::string lot_id;
  BayId bay_id = 0;
  BayStatus status = BayStatus::unknown;

  friend bool operator==(const OccupancyEvent&, const OccupancyEvent&) = default;
};

struct RollupWindow {
  EpochMs start = 0;
  EpochMs end = 0;

  Millis length() const { return end - start; }
  friend bool operator==(const RollupWindow&, const RollupWindow&) = default;
};

/// Occupied fraction in ten-thousandths, so 0.3125 is stored as 3125.
struct Rate {
  std::int32_t e4 = 0;

  double value() const { return static_cast<double>(e4) / 10'000.0; }
  /// Fixed four-decimal rendering, e.g. "0.3125" or "1.0000".
  std::string to_string() const;
  friend auto operator<=>(const Rate&, const Rate&) = default;
};

struct RollupRecord {
  BayId bay_id = 0;
  std::int64_t occupation_time_sec = 0;
  Rate occupation_rate;
  // Exact total behind occupation_time_sec; never serialized.
  Millis occupation_ms = 0;

  friend bool operator==(const RollupRecord&, const RollupRecord&) = default;
};

}  // namespace edgepark
