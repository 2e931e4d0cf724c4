#include "edgepark/csv.hpp"

#include <algorithm>

#include <charconv>
#include <fstream>
#include <sstream>

#include "edgepark/clock.hpp"

namespace edgepark {

std::string render_csv(const std::vector<RollupRecord>& records) {
  std::string out(kCsvHeader);
  out.push_back('\n');
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (i > 0 && records[i - 1].bay_id >= r.bay_id) {
      throw PreconditionError("CSV records must be sorted by bay id");
    }
    out += std::to_string(r.bay_id);
    out.push_back(',');
    out += std::to_string(r.occupation_time_sec);
    out.push_back(',');
    out += r.occupation_rate.to_string();
    out.push_back('\n');
  }
  return out;
}

std::string csv_file_name(std::string_view lot_id, EpochMs window_start) {
  return "rollup_" + std::string(lot_id) + "_" + format_iso_basic(window_start) + ".csv";
}

std::filesystem::path write_csv(const std::vector<RollupRecord>& records, const RollupWindow& window,
                                std::string_view lot_id, const std::filesystem::path& csv_dir) {
  const std::string body = render_csv(records);
  std::error_code ec;
  std::filesystem::create_directories(csv_dir, ec);
  const auto path = csv_dir / csv_file_name(lot_id, window.start);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot place " + path.string() + ": " + ec.message());
  }
  return path;
}

namespace {

std::int64_t parse_int(std::string_view field, std::size_t line_no) {
  std::int64_t v = 0;
  const bool digits_only =
      std::all_of(field.begin(), field.end(), [](char c) { return c >= '0' && c <= '9'; });
  const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (!digits_only || ec != std::errc{} || p != field.data() + field.size() || field.empty()) {
    throw ProtocolError("CSV line " + std::to_string(line_no) + ": bad integer '" +
                        std::string(field) + "'");
  }
  return v;
}

Rate parse_rate(std::string_view field, std::size_t line_no) {
  // Exactly D.DDDD.
  if (field.size() != 6 || field[1] != '.') {
    throw ProtocolError("CSV line " + std::to_string(line_no) + ": bad rate '" + std::string(field) + "'");
  }
  const auto whole = parse_int(field.substr(0, 1), line_no);
  const auto frac = parse_int(field.substr(2), line_no);
  if (whole * 10'000 + frac > 10'000) {
    throw ProtocolError("CSV line " + std::to_string(line_no) + ": rate above 1");
  }
  return Rate{static_cast<std::int32_t>(whole * 10'000 + frac)};
}

}  // namespace

std::vector<CsvRow> parse_csv(std::string_view text) {
  std::vector<CsvRow> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) throw ProtocolError("CSV does not end with LF");
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find('\r') != std::string_view::npos) throw ProtocolError("CSV contains CR");
    if (line_no == 1) {
      if (line != kCsvHeader) throw ProtocolError("CSV header mismatch");
      continue;
    }
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string_view::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string_view::npos || line.find(',', c2 + 1) != std::string_view::npos) {
      throw ProtocolError("CSV line " + std::to_string(line_no) + " does not have 3 fields");
    }
    CsvRow row{parse_int(line.substr(0, c1), line_no),
               parse_int(line.substr(c1 + 1, c2 - c1 - 1), line_no),
               parse_rate(line.substr(c2 + 1), line_no)};
    if (!rows.empty() && rows.back().bay_id >= row.bay_id) {
      throw ProtocolError("CSV bay ids not strictly ascending at line " + std::to_string(line_no));
    }
    rows.push_back(row);
  }
  if (line_no == 0) throw ProtocolError("CSV is empty");
  return rows;
}

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

}  // namespace edgepark
