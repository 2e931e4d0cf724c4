#include "edgepark/clock.hpp"

#include <cstdio>
#include <ctime>
#include <string>

namespace edgepark {

EpochMs SystemClock::now_ms() const {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

WarpedClock::WarpedClock(EpochMs start, double warp)
    : start_(start), warp_(warp), origin_(std::chrono::steady_clock::now()) {
  if (!(warp > 0.0)) throw ConfigError("time warp must be positive");
}

EpochMs WarpedClock::now_ms() const {
  using namespace std::chrono;
  const double real_ms = duration<double, std::milli>(steady_clock::now() - origin_).count();
  return start_ + static_cast<EpochMs>(real_ms * warp_);
}

void VirtualClock::set(EpochMs t) {
  if (t < now_) {
    throw ClockRegression("virtual clock moved backwards from " + std::to_string(now_) + " to " +
                          std::to_string(t));
  }
  now_ = t;
}

namespace {

std::tm to_utc(EpochMs ts) {
  std::time_t secs = static_cast<std::time_t>(ts >= 0 ? ts / 1000 : (ts - 999) / 1000);
  std::tm out{};
  gmtime_r(&secs, &out);
  return out;
}

// Days since 1970-01-01 for a proleptic Gregorian date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

}  // namespace

std::string format_iso_basic(EpochMs ts) {
  const std::tm t = to_utc(ts);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d%02d%02dT%02d%02d%02dZ", t.tm_year + 1900, t.tm_mon + 1,
                t.tm_mday, t.tm_hour, t.tm_min, t.tm_sec);
  return buf;
}

std::string format_iso_extended(EpochMs ts) {
  const std::tm t = to_utc(ts);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", t.tm_year + 1900, t.tm_mon + 1,
                t.tm_mday, t.tm_hour, t.tm_min, t.tm_sec);
  return buf;
}

EpochMs parse_iso8601(std::string_view text) {
  std::string s(text);
  if (!s.empty() && s.back() == 'Z') s.pop_back();
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  int consumed = 0;
  const int fields = std::sscanf(s.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed);
  if (fields != 3) throw ConfigError("bad timestamp '" + std::string(text) + "'");
  std::string rest = s.substr(static_cast<std::size_t>(consumed));
  if (!rest.empty()) {
    int n = 0;
    const int tf = std::sscanf(rest.c_str(), "T%2d:%2d%n:%2d%n", &h, &mi, &n, &sec, &n);
    if (tf < 2 || static_cast<std::size_t>(n) != rest.size()) {
      throw ConfigError("bad timestamp '" + std::string(text) + "'");
    }
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60) {
    throw ConfigError("timestamp out of range '" + std::string(text) + "'");
  }
  const std::int64_t days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  return ((days * 24 + h) * 60 + mi) * 60'000 + static_cast<std::int64_t>(sec) * 1000;
}

EpochMs utc_midnight(EpochMs ts) {
  EpochMs offset = ts % kDayMs;
  if (offset < 0) offset += kDayMs;
  return ts - offset;
}

}  // namespace edgepark
