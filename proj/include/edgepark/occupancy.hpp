#pragma once

#include <vector>

#include "edgepark/types.hpp"

namespace edgepark {

/// What apply_event did with an event that was not rejected.
enum class ApplyOutcome {
  applied,
  /// Same status as the bay already had; nothing changed.
  duplicate_ignored,
  /// Update for a bay absent from the table; the bay was created.
  created_unknown_bay,
};

/// Feeds one event into the per-bay state machine.
///
/// Occupied to free (or to unknown) closes the running interval into
/// accumulated_occupation_ms. A snapshot for a bay with an unknown status or
/// no entry starts tracking at event.ts. Repeating a bay's current status is
/// a no-op.
///
/// Throws ClockRegression if event.ts precedes the bay's last transition; the
/// table is left untouched in that case.
ApplyOutcome apply_event(BayTable& table, const OccupancyEvent& event);

/// True when apply_event would throw ClockRegression for this event.
bool is_clock_regression(const BayTable& table, const OccupancyEvent& event);

/// Closes every running occupied interval at `now` and restarts it there.
/// Throws ClockRegression (table untouched) if any bay transitioned after now.
void update_occupation_time(BayTable& table, EpochMs now);

/// Flushes at `now` and marks every bay unknown. Used when the event source
/// is lost and nothing can be observed until the next snapshot.
void invalidate(BayTable& table, EpochMs now);

/// occ_ms / window_ms rounded half-up to four decimals.
/// Throws InvariantViolation unless 0 <= occ_ms <= window_ms and window_ms > 0.
Rate occupation_rate(Millis occ_ms, Millis window_ms);

/// Flushes at window.end, emits one record per bay (sorted by bay id), then
/// zeroes the accumulators. Statuses and transition times carry over, so an
/// occupancy spanning window.end continues into the next window.
std::vector<RollupRecord> rollup(BayTable& table, const RollupWindow& window);

/// Window of length `period` containing ts, with boundaries at anchor + k * period.
RollupWindow window_containing(EpochMs ts, EpochMs anchor, Millis period);

}  // namespace edgepark
