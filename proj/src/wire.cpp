#include "edgepark/wire.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>

namespace edgepark {

using ojson = nlohmann::ordered_json;
using nlohmann::json;

std::string make_idempotency_key(std::string_view lot_id, EpochMs window_start) {
  return std::string(lot_id) + ":" + std::to_string(window_start);
}

UploadEnvelope make_envelope(std::string lot_id, const RollupWindow& window,
                             std::vector<RollupRecord> records) {
  UploadEnvelope env;
  env.idempotency_key = make_idempotency_key(lot_id, window.start);
  env.lot_id = std::move(lot_id);
  env.window_start = window.start;
  env.window_end = window.end;
  env.records = std::move(records);
  return env;
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string json_string(std::string_view s) { return json(std::string(s)).dump(); }

int digits(std::int64_t v) {
  int n = 1;
  while (v >= 10) {
    v /= 10;
    ++n;
  }
  return n;
}

[[noreturn]] void bad(const std::string& what) { throw ProtocolError(what); }

const json& field(const json& obj, const char* name) {
  auto it = obj.find(name);
  if (it == obj.end()) bad(std::string("missing field '") + name + "'");
  return *it;
}

std::int64_t int_field(const json& obj, const char* name) {
  const json& v = field(obj, name);
  if (!v.is_number_integer()) bad(std::string("field '") + name + "' must be an integer");
  return v.get<std::int64_t>();
}

std::string string_field(const json& obj, const char* name) {
  const json& v = field(obj, name);
  if (!v.is_string()) bad(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

BayReading parse_reading(const json& j) {
  if (!j.is_object()) bad("bay entry must be an object");
  auto status = parse_bay_status(string_field(j, "status"));
  if (!status || *status == BayStatus::unknown) bad("bay status must be 'occupied' or 'free'");
  const BayId id = int_field(j, "id");
  if (id <= 0) bad("bay id must be positive");
  return BayReading{id, *status};
}

ojson reading_json(const BayReading& r) {
  return ojson{{"id", r.id}, {"status", std::string(to_string(r.status))}};
}

std::vector<RollupRecord> parse_records(const json& arr) {
  if (!arr.is_array()) bad("records must be an array");
  std::vector<RollupRecord> out;
  out.reserve(arr.size());
  for (const auto& r : arr) {
    if (!r.is_object()) bad("record must be an object");
    RollupRecord rec;
    rec.bay_id = int_field(r, "bayId");
    rec.occupation_time_sec = int_field(r, "occupationTime");
    const json& rate = field(r, "occupationRate");
    if (!rate.is_number()) bad("occupationRate must be a number");
    const double v = rate.get<double>();
    if (!(v >= 0.0 && v <= 1.0)) bad("occupationRate outside [0, 1]");
    rec.occupation_rate = Rate{static_cast<std::int32_t>(std::llround(v * 10'000.0))};
    rec.occupation_ms = rec.occupation_time_sec * 1000;
    out.push_back(rec);
  }
  return out;
}

std::string encode_envelope_fields(const UploadEnvelope& env) {
  std::string out;
  out += "\"key\":" + json_string(env.idempotency_key);
  out += ",\"lotId\":" + json_string(env.lot_id);
  out += ",\"windowStart\":" + std::to_string(env.window_start);
  out += ",\"windowEnd\":" + std::to_string(env.window_end);
  out += ",\"records\":" + encode_records(env.records, env.window_end - env.window_start);
  return out;
}

ojson weekly_json(const WeeklyReport& rep) {
  ojson days = ojson::array();
  for (const auto& d : rep.per_day_fleet_avg_hours) days.push_back(d ? ojson(*d) : ojson(nullptr));
  ojson mins = ojson::object();
  for (const auto& [bay, h] : rep.per_bay_min_hours) mins[std::to_string(bay)] = h;
  ojson maxs = ojson::object();
  for (const auto& [bay, h] : rep.per_bay_max_hours) maxs[std::to_string(bay)] = h;
  return ojson{{"type", "weekly"},
               {"lotId", rep.lot_id},
               {"weekStart", rep.week_start},
               {"perDayFleetAvgHours", days},
               {"perBayMinHours", mins},
               {"perBayMaxHours", maxs}};
}

std::map<BayId, double> parse_hours_map(const json& obj) {
  if (!obj.is_object()) bad("per-bay hours must be an object");
  std::map<BayId, double> out;
  for (const auto& [k, v] : obj.items()) {
    if (!v.is_number()) bad("per-bay hours must be numbers");
    try {
      out[std::stoll(k)] = v.get<double>();
    } catch (const std::logic_error&) {
      bad("per-bay hours keyed by non-integer '" + k + "'");
    }
  }
  return out;
}

}  // namespace

std::string encode_records(const std::vector<RollupRecord>& records, Millis window_ms) {
  const int width = digits(std::max<Millis>(window_ms / 1000, 0));
  std::string out = "[";
  char buf[64];
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (i) out += ',';
    std::snprintf(buf, sizeof buf, "%*lld", width, static_cast<long long>(r.occupation_time_sec));
    out += "{\"bayId\":" + std::to_string(r.bay_id) + ",\"occupationTime\":" + buf +
           ",\"occupationRate\":" + r.occupation_rate.to_string() + "}";
  }
  out += ']';
  return out;
}

std::string_view type_name(const WireMessage& message) {
  return std::visit(overloaded{
                        [](const msg::Hello&) { return "hello"; },
                        [](const msg::Bays&) { return "bays"; },
                        [](const msg::BaysUpdate&) { return "baysUpdate"; },
                        [](const msg::Ping&) { return "ping"; },
                        [](const msg::Pong&) { return "pong"; },
                        [](const msg::Rollup&) { return "rollup"; },
                        [](const msg::Ack&) { return "ack"; },
                        [](const msg::Error&) { return "error"; },
                        [](const msg::QueryDaily&) { return "queryDaily"; },
                        [](const msg::Daily&) { return "daily"; },
                        [](const msg::NotFound&) { return "notFound"; },
                        [](const msg::QueryWeekly&) { return "queryWeekly"; },
                        [](const msg::Weekly&) { return "weekly"; },
                    },
                    message);
}

std::string encode(const WireMessage& message) {
  return std::visit(
      overloaded{
          [](const msg::Hello& m) {
            return ojson{{"type", "hello"}, {"client", m.client}, {"proto", m.proto}}.dump();
          },
          [](const msg::Bays& m) {
            ojson data = ojson::array();
            for (const auto& lot : m.data) {
              ojson bays = ojson::array();
              for (const auto& b : lot.bays) bays.push_back(reading_json(b));
              data.push_back(ojson{{"lotId", lot.lot_id}, {"bays", bays}});
            }
            return ojson{{"type", "bays"}, {"data", data}}.dump();
          },
          [](const msg::BaysUpdate& m) {
            return ojson{{"type", "baysUpdate"}, {"lotId", m.lot_id}, {"bay", reading_json(m.bay)}}
                .dump();
          },
          [](const msg::Ping& m) { return ojson{{"type", "ping"}, {"seq", m.seq}}.dump(); },
          [](const msg::Pong& m) { return ojson{{"type", "pong"}, {"seq", m.seq}}.dump(); },
          [](const msg::Rollup& m) {
            return "{\"type\":\"rollup\"," + encode_envelope_fields(m.envelope) + "}";
          },
          [](const msg::Ack& m) { return ojson{{"type", "ack"}, {"key", m.key}}.dump(); },
          [](const msg::Error& m) { return ojson{{"type", "error"}, {"reason", m.reason}}.dump(); },
          [](const msg::QueryDaily& m) {
            return ojson{{"type", "queryDaily"}, {"lotId", m.lot_id}, {"windowStart", m.window_start}}
                .dump();
          },
          [](const msg::Daily& m) {
            return "{\"type\":\"daily\",\"lotId\":" + json_string(m.lot_id) +
                   ",\"windowStart\":" + std::to_string(m.window_start) +
                   ",\"windowEnd\":" + std::to_string(m.window_end) +
                   ",\"records\":" + encode_records(m.records, m.window_end - m.window_start) + "}";
          },
          [](const msg::NotFound&) { return ojson{{"type", "notFound"}}.dump(); },
          [](const msg::QueryWeekly& m) {
            return ojson{{"type", "queryWeekly"}, {"lotId", m.lot_id}, {"weekStart", m.week_start}}
                .dump();
          },
          [](const msg::Weekly& m) { return weekly_json(m.report).dump(); },
      },
      message);
}

WireMessage decode(std::string_view line) {
  json j = json::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) bad("invalid JSON");
  if (!j.is_object()) bad("message must be a JSON object");
  const std::string type = string_field(j, "type");

  if (type == "hello") {
    msg::Hello m;
    m.client = string_field(j, "client");
    m.proto = static_cast<int>(int_field(j, "proto"));
    return m;
  }
  if (type == "bays") {
    const json& data = field(j, "data");
    if (!data.is_array()) bad("'data' must be an array");
    msg::Bays m;
    for (const auto& lot : data) {
      if (!lot.is_object()) bad("lot entry must be an object");
      LotSnapshot snap;
      snap.lot_id = string_field(lot, "lotId");
      const json& bays = field(lot, "bays");
      if (!bays.is_array()) bad("'bays' must be an array");
      for (const auto& b : bays) snap.bays.push_back(parse_reading(b));
      m.data.push_back(std::move(snap));
    }
    return m;
  }
  if (type == "baysUpdate") {
    return msg::BaysUpdate{string_field(j, "lotId"), parse_reading(field(j, "bay"))};
  }
  if (type == "ping") return msg::Ping{int_field(j, "seq")};
  if (type == "pong") return msg::Pong{int_field(j, "seq")};
  if (type == "rollup") {
    UploadEnvelope env;
    env.idempotency_key = string_field(j, "key");
    env.lot_id = string_field(j, "lotId");
    env.window_start = int_field(j, "windowStart");
    env.window_end = int_field(j, "windowEnd");
    env.records = parse_records(field(j, "records"));
    return msg::Rollup{std::move(env)};
  }
  if (type == "ack") return msg::Ack{string_field(j, "key")};
  if (type == "error") return msg::Error{string_field(j, "reason")};
  if (type == "queryDaily") return msg::QueryDaily{string_field(j, "lotId"), int_field(j, "windowStart")};
  if (type == "daily") {
    msg::Daily m;
    m.lot_id = string_field(j, "lotId");
    m.window_start = int_field(j, "windowStart");
    m.window_end = int_field(j, "windowEnd");
    m.records = parse_records(field(j, "records"));
    return m;
  }
  if (type == "notFound") return msg::NotFound{};
  if (type == "queryWeekly") return msg::QueryWeekly{string_field(j, "lotId"), int_field(j, "weekStart")};
  if (type == "weekly") {
    WeeklyReport rep;
    rep.lot_id = string_field(j, "lotId");
    rep.week_start = int_field(j, "weekStart");
    const json& days = field(j, "perDayFleetAvgHours");
    if (!days.is_array() || days.size() != 7) bad("perDayFleetAvgHours must have 7 entries");
    for (std::size_t d = 0; d < 7; ++d) {
      if (days[d].is_null()) continue;
      if (!days[d].is_number()) bad("perDayFleetAvgHours entries must be numbers or null");
      rep.per_day_fleet_avg_hours[d] = days[d].get<double>();
    }
    rep.per_bay_min_hours = parse_hours_map(field(j, "perBayMinHours"));
    rep.per_bay_max_hours = parse_hours_map(field(j, "perBayMaxHours"));
    return msg::Weekly{std::move(rep)};
  }
  bad("unknown message type '" + type + "'");
}

}  // namespace edgepark
