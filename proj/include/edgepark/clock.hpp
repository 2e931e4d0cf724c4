#pragma once

#include <chrono>

#include "edgepark/types.hpp"

namespace edgepark {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual EpochMs now_ms() const = 0;
};

/// Wall clock.
class SystemClock final : public Clock {
 public:
  EpochMs now_ms() const override;
};

/// Simulated time running `warp` simulated seconds per real second from `start`.
class WarpedClock final : public Clock {
 public:
  WarpedClock(EpochMs start, double warp);
  EpochMs now_ms() const override;

 private:
  EpochMs start_;
  double warp_;
  std::chrono::steady_clock::time_point origin_;
};

/// Time source stepped explicitly by a test or the simulation harness.
class VirtualClock final : public Clock {
 public:
  explicit VirtualClock(EpochMs start = 0) : now_(start) {}

  EpochMs now_ms() const override { return now_; }
  /// Moves to `t`; throws ClockRegression when t is in the past.
  void set(EpochMs t);
  void advance(Millis delta) { set(now_ + delta); }

 private:
  EpochMs now_;
};

// UTC calendar helpers.

/// "YYYYMMDDTHHMMSSZ".
std::string format_iso_basic(EpochMs ts);
/// "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso_extended(EpochMs ts);
/// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS]" with an optional trailing Z.
/// Throws ConfigError on anything else.
EpochMs parse_iso8601(std::string_view text);
EpochMs utc_midnight(EpochMs ts);

}  // namespace edgepark
