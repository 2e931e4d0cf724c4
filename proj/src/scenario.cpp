#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "edgepark/harness.hpp"

namespace edgepark {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
}

std::int64_t to_int(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const long long n = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::logic_error&) {
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  }
}

// "<sec>[+<sec>]" in seconds to {at, duration} in ms.
std::pair<Millis, Millis> to_span(const std::string& v, const std::string& key) {
  const auto plus = v.find('+');
  const Millis at = std::llround(to_double(v.substr(0, plus), key) * 1000.0);
  const Millis dur = plus == std::string::npos ? 0 : std::llround(to_double(v.substr(plus + 1), key) * 1000.0);
  if (at < 0 || dur < 0) throw ConfigError("'" + key + "' must not be negative");
  return {at, dur};
}

}  // namespace

void ScenarioConfig::validate() const {
  gateway.validate();
  if (simulated_days < 1) throw ConfigError("simulated-days must be at least 1");
  AgentConfig probe;
  probe.poll_interval_sec = poll_interval_sec;
  probe.rollup_period_sec = rollup_period_sec;
  probe.reconnect_backoff = reconnect_backoff;
  probe.ack_timeout_ms = ack_timeout_ms;
  probe.validate();
  if (hub_faults.drop_rollups < 0 || hub_faults.lose_acks < 0) {
    throw ConfigError("hub fault counts must not be negative");
  }
}

ScenarioConfig parse_scenario(std::string_view text, const std::filesystem::path& base_dir) {
  ScenarioConfig sc;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("scenario line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "name") {
        sc.name = value;
      } else if (key == "seed") {
        sc.gateway.model.seed = static_cast<std::uint64_t>(to_int(value, key));
      } else if (key == "bays") {
        sc.gateway.bay_count = static_cast<int>(to_int(value, key));
      } else if (key == "lot-id") {
        sc.gateway.lot_id = value;
      } else if (key == "mean-occupied-min") {
        sc.gateway.model.mean_occupied_min = to_double(value, key);
      } else if (key == "mean-free-min") {
        sc.gateway.model.mean_free_min = to_double(value, key);
      } else if (key == "simulated-days") {
        sc.simulated_days = static_cast<int>(to_int(value, key));
      } else if (key == "start") {
        sc.start = parse_iso8601(value);
      } else if (key == "poll-interval-sec") {
        sc.poll_interval_sec = static_cast<int>(to_int(value, key));
      } else if (key == "rollup-period-sec") {
        sc.rollup_period_sec = static_cast<int>(to_int(value, key));
      } else if (key == "ack-timeout-ms") {
        sc.ack_timeout_ms = to_int(value, key);
      } else if (key == "backoff-initial-ms") {
        sc.reconnect_backoff.initial_ms = to_int(value, key);
      } else if (key == "backoff-multiplier") {
        sc.reconnect_backoff.multiplier = to_double(value, key);
      } else if (key == "backoff-cap-ms") {
        sc.reconnect_backoff.cap_ms = to_int(value, key);
      } else if (key == "inject") {
        add_gateway_fault(sc.gateway.faults, value);
      } else if (key == "hub-drop-rollups") {
        sc.hub_faults.drop_rollups = static_cast<int>(to_int(value, key));
      } else if (key == "hub-lose-acks") {
        sc.hub_faults.lose_acks = static_cast<int>(to_int(value, key));
      } else if (key == "hub-down") {
        auto [at, dur] = to_span(value, key);
        sc.hub_outages.push_back({at, dur});
      } else if (key == "crash") {
        auto [at, dur] = to_span(value, key);
        sc.crashes.push_back({at, dur});
      } else if (key == "trace-file") {
        std::filesystem::path p(value);
        sc.trace_file = p.is_absolute() ? p : base_dir / p;
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      throw ConfigError("scenario line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  sc.validate();
  return sc;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.parent_path());
}

void write_trace_file(const std::filesystem::path& path, const TraceFile& file) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  nlohmann::ordered_json header;
  header["lotId"] = file.lot_id;
  header["start"] = file.start;
  header["durationMs"] = file.trace.duration_ms;
  auto initial = nlohmann::ordered_json::array();
  for (auto s : file.trace.initial) initial.push_back(std::string(to_string(s)));
  header["initial"] = initial;
  out << header.dump() << '\n';
  for (const auto& item : file.trace.items) {
    out << nlohmann::ordered_json{{"simTs", item.sim_ts},
                                  {"bayId", item.bay_id},
                                  {"status", std::string(to_string(item.new_status))}}
               .dump()
        << '\n';
  }
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

TraceFile read_trace_file(const std::filesystem::path& path, int bay_count, Millis duration_ms) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read trace file " + path.string());
  TraceFile tf;
  tf.trace.duration_ms = duration_ms;
  tf.trace.initial.assign(static_cast<std::size_t>(std::max(bay_count, 0)), BayStatus::free);

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (j.is_discarded() || !j.is_object()) throw ConfigError(where + ": not a JSON object");
    try {
      if (j.contains("initial")) {
        const auto& init = j.at("initial");
        if (init.size() > tf.trace.initial.size()) tf.trace.initial.resize(init.size(), BayStatus::free);
        for (std::size_t i = 0; i < init.size(); ++i) {
          auto s = parse_bay_status(init[i].get<std::string>());
          if (!s || *s == BayStatus::unknown) throw ConfigError(where + ": bad initial status");
          tf.trace.initial[i] = *s;
        }
        tf.lot_id = j.value("lotId", "");
        tf.start = j.value("start", EpochMs{0});
        if (j.contains("durationMs")) tf.trace.duration_ms = j.at("durationMs").get<Millis>();
        continue;
      }
      auto status = parse_bay_status(j.at("status").get<std::string>());
      if (!status || *status == BayStatus::unknown) throw ConfigError(where + ": bad status");
      tf.trace.items.push_back({j.at("simTs").get<Millis>(), j.at("bayId").get<BayId>(), *status});
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }

  auto& items = tf.trace.items;
  std::stable_sort(items.begin(), items.end(), [](const TraceItem& a, const TraceItem& b) {
    return a.sim_ts != b.sim_ts ? a.sim_ts < b.sim_ts : a.bay_id < b.bay_id;
  });
  std::vector<BayStatus> status = tf.trace.initial;
  std::vector<Millis> last(status.size(), -1);
  for (const auto& item : items) {
    if (item.bay_id < 1 || item.bay_id > static_cast<BayId>(status.size())) {
      throw ConfigError(path.string() + ": bay " + std::to_string(item.bay_id) + " outside 1.." +
                        std::to_string(status.size()));
    }
    if (item.sim_ts < 0 || item.sim_ts > tf.trace.duration_ms) {
      throw ConfigError(path.string() + ": item at " + std::to_string(item.sim_ts) + " outside the run");
    }
    const auto idx = static_cast<std::size_t>(item.bay_id - 1);
    if (item.new_status == status[idx] || item.sim_ts <= last[idx]) {
      throw ConfigError(path.string() + ": bay " + std::to_string(item.bay_id) +
                        " must alternate status at strictly increasing times");
    }
    status[idx] = item.new_status;
    last[idx] = item.sim_ts;
  }
  return tf;
}

}  // namespace edgepark
