#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "edgepark/types.hpp"

namespace edgepark {

inline constexpr std::string_view kCsvHeader = "bayId,occupationTime,occupationRate";

/// Header plus one "<bayId>,<seconds>,<rate>" row per record, LF endings.
/// Throws PreconditionError if records are not sorted by bay id.
std::string render_csv(const std::vector<RollupRecord>& records);

/// "rollup_<lotId>_<YYYYMMDDTHHMMSSZ>.csv" for the window start in UTC.
std::string csv_file_name(std::string_view lot_id, EpochMs window_start);

/// Writes the CSV for a window into csv_dir (created if needed) through a
/// temporary file and rename. Returns the final path. Throws std::runtime_error
/// on I/O failure.
std::filesystem::path write_csv(const std::vector<RollupRecord>& records, const RollupWindow& window,
                                std::string_view lot_id, const std::filesystem::path& csv_dir);

struct CsvRow {
  BayId bay_id = 0;
  std::int64_t occupation_time_sec = 0;
  Rate occupation_rate;
  friend bool operator==(const CsvRow&, const CsvRow&) = default;
};

/// Strict parser for files produced by render_csv. Throws ProtocolError.
std::vector<CsvRow> parse_csv(std::string_view text);
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

}  // namespace edgepark
