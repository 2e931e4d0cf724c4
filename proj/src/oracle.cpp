#include "edgepark/oracle.hpp"

#include <algorithm>
#include <unordered_map>
#include <vector>

namespace edgepark {

std::map<BayId, Millis> oracle_occupancy(std::span<const OccupancyEvent> trace,
                                         const RollupWindow& window) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i].ts < trace[i - 1].ts) throw PreconditionError("oracle trace is not sorted by ts");
  }

  struct Point {
    EpochMs ts;
    bool occupied;
  };
  std::unordered_map<BayId, std::vector<Point>> timelines;
  for (const auto& ev : trace) {
    if (ev.ts >= window.end) break;
    timelines[ev.bay_id].push_back({ev.ts, ev.status == BayStatus::occupied});
  }

  std::map<BayId, Millis> totals;
  for (const auto& [bay, points] : timelines) {
    Millis total = 0;
    // Each point holds until the next one (or window.end); clip to the window.
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (!points[i].occupied) continue;
      const EpochMs from = std::max(points[i].ts, window.start);
      const EpochMs to = std::min(i + 1 < points.size() ? points[i + 1].ts : window.end, window.end);
      if (to > from) total += to - from;
    }
    totals[bay] = total;
  }
  return totals;
}

}  // namespace edgepark
