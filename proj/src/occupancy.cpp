#include "edgepark/occupancy.hpp"

#include <string>

namespace edgepark {
namespace {

[[noreturn]] void throw_regression(BayId bay, EpochMs ts, EpochMs last) {
  throw ClockRegression("bay " + std::to_string(bay) + ": timestamp " + std::to_string(ts) +
                        " precedes last transition " + std::to_string(last));
}

// Moves a known bay to `status` at `ts`, closing an occupied interval.
void transition(BayState& bay, BayStatus status, EpochMs ts) {
  if (bay.status == BayStatus::occupied) {
    bay.accumulated_occupation_ms += ts - bay.last_transition_ts;
  }
  bay.status = status;
  bay.last_transition_ts = ts;
}

}  // namespace

bool is_clock_regression(const BayTable& table, const OccupancyEvent& event) {
  auto it = table.find(event.bay_id);
  return it != table.end() && event.ts < it->second.last_transition_ts;
}

ApplyOutcome apply_event(BayTable& table, const OccupancyEvent& event) {
  auto it = table.find(event.bay_id);
  if (it == table.end()) {
    table.emplace(event.bay_id, BayState{event.bay_id, event.lot_id, event.status, event.ts, 0});
    return event.kind == EventKind::update ? ApplyOutcome::created_unknown_bay
                                           : ApplyOutcome::applied;
  }

  BayState& bay = it->second;
  if (event.ts < bay.last_transition_ts) throw_regression(bay.bay_id, event.ts, bay.last_transition_ts);

  if (bay.status == event.status) {
    return event.kind == EventKind::update ? ApplyOutcome::duplicate_ignored
                                           : ApplyOutcome::applied;
  }
  if (event.kind == EventKind::snapshot) bay.lot_id = event.lot_id;
  transition(bay, event.status, event.ts);
  return ApplyOutcome::applied;
}

void update_occupation_time(BayTable& table, EpochMs now) {
  for (const auto& [id, bay] : table) {
    if (now < bay.last_transition_ts) throw_regression(id, now, bay.last_transition_ts);
  }
  for (auto& [id, bay] : table) {
    if (bay.status == BayStatus::occupied) {
      bay.accumulated_occupation_ms += now - bay.last_transition_ts;
      bay.last_transition_ts = now;
    }
  }
}

void invalidate(BayTable& table, EpochMs now) {
  update_occupation_time(table, now);
  for (auto& [id, bay] : table) {
    if (bay.status != BayStatus::unknown) {
      bay.status = BayStatus::unknown;
      bay.last_transition_ts = now;
    }
  }
}

Rate occupation_rate(Millis occ_ms, Millis window_ms) {
  if (window_ms <= 0) throw InvariantViolation("window length must be positive");
  if (occ_ms < 0 || occ_ms > window_ms) {
    throw InvariantViolation("occupation " + std::to_string(occ_ms) + " ms outside window of " +
                             std::to_string(window_ms) + " ms");
  }
  // Half-up: floor((2 * occ * 10^4 + window) / (2 * window)).
  const std::int64_t e4 = (2 * occ_ms * 10'000 + window_ms) / (2 * window_ms);
  return Rate{static_cast<std::int32_t>(e4)};
}

std::vector<RollupRecord> rollup(BayTable& table, const RollupWindow& window) {
  if (window.end <= window.start) throw PreconditionError("rollup window must have end > start");
  update_occupation_time(table, window.end);

  std::vector<RollupRecord> records;
  records.reserve(table.size());
  for (const auto& [id, bay] : table) {
    const std::int64_t seconds = bay.accumulated_occupation_ms / 1000;
    records.push_back(RollupRecord{id, seconds, occupation_rate(seconds * 1000, window.length()),
                                   bay.accumulated_occupation_ms});
  }
  for (auto& [id, bay] : table) bay.accumulated_occupation_ms = 0;
  return records;
}

RollupWindow window_containing(EpochMs ts, EpochMs anchor, Millis period) {
  if (period <= 0) throw PreconditionError("window period must be positive");
  Millis offset = (ts - anchor) % period;
  if (offset < 0) offset += period;
  const EpochMs start = ts - offset;
  return RollupWindow{start, start + period};
}

}  // namespace edgepark
