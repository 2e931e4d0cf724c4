#include "edgepark/types.hpp"

#include <cstdio>

namespace edgepark {

std::string_view to_string(BayStatus status) {
  switch (status) {
    case BayStatus::free:
      return "free";
    case BayStatus::occupied:
      return "occupied";
    case BayStatus::unknown:
      return "unknown";
  }
  return "unknown";
}

std::optional<BayStatus> parse_bay_status(std::string_view text) {
  if (text == "free") return BayStatus::free;
  if (text == "occupied") return BayStatus::occupied;
  if (text == "unknown") return BayStatus::unknown;
  return std::nullopt;
}

std::string Rate::to_string() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%d.%04d", e4 / 10'000, e4 % 10'000);
  return buf;
}

}  // namespace edgepark
