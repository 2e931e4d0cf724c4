#pragma once

#include <map>
#include <span>

#include "edgepark/types.hpp"

namespace edgepark {

/// Brute-force reference for occupancy accounting.
///
/// For each bay, measures how much of [window.start, window.end] is covered
/// by instants at which the bay's most recent event (snapshot or update)
/// reported `occupied`. Every bay whose first event is before
/// window.end gets an entry, possibly zero.
///
/// Shares no code with the state machine in occupancy.hpp. Throws
/// PreconditionError if the trace is not sorted by ts.
std::map<BayId, Millis> oracle_occupancy(std::span<const OccupancyEvent> trace,
                                         const RollupWindow& window);

}  // namespace edgepark
