#include "busdep/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "busdep/csv.hpp"
#include "busdep/numtext.hpp"

namespace busdep {

std::string_view to_string(Direction d) {
  return d == Direction::inbound ? "inbound" : "outbound";
}

std::string_view to_string(PointType p) {
  switch (p) {
    case PointType::startpoint: return "startpoint";
    case PointType::midpoint: return "midpoint";
    default: return "endpoint";
  }
}

std::string_view to_string(StandardType s) {
  return s == StandardType::schedule ? "schedule" : "headway";
}

std::string_view to_string(WeatherCondition c) {
  switch (c) {
    case WeatherCondition::cloudy: return "cloudy";
    case WeatherCondition::rainy: return "rainy";
    case WeatherCondition::clear: return "clear";
    case WeatherCondition::snowy: return "snowy";
    default: return "windy";
  }
}

namespace {

/// lowercase with spaces, underscores and dashes removed
std::string normalize_token(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == ' ' || c == '_' || c == '-') continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

}  // namespace

std::optional<Direction> parse_direction(std::string_view s) {
  const std::string t = normalize_token(s);
  if (t == "inbound") return Direction::inbound;
  if (t == "outbound") return Direction::outbound;
  return std::nullopt;
}

std::optional<PointType> parse_point_type(std::string_view s) {
  const std::string t = normalize_token(s);
  if (t == "startpoint") return PointType::startpoint;
  if (t == "midpoint") return PointType::midpoint;
  if (t == "endpoint") return PointType::endpoint;
  return std::nullopt;
}

std::optional<StandardType> parse_standard_type(std::string_view s) {
  const std::string t = normalize_token(s);
  if (t == "schedule") return StandardType::schedule;
  if (t == "headway") return StandardType::headway;
  return std::nullopt;
}

std::optional<WeatherCondition> map_condition(std::string_view raw) {
  const std::string t = to_lower(raw);
  const auto has = [&t](std::string_view kw) {
    return t.find(kw) != std::string::npos;
  };
  if (has("snow") || has("flurr") || has("sleet")) return WeatherCondition::snowy;
  if (has("rain") || has("drizzle") || has("shower")) return WeatherCondition::rainy;
  if (has("wind") || has("breez")) return WeatherCondition::windy;
  if (has("cloud") || has("overcast")) return WeatherCondition::cloudy;
  if (has("clear") || has("sun") || has("fair")) return WeatherCondition::clear;
  return std::nullopt;
}

namespace {

struct HeaderIndex {
  std::vector<int> columns;  // canonical slot -> field index, -1 if absent

  int at(std::size_t slot) const { return columns[slot]; }

  static HeaderIndex build(const std::vector<std::string>& header,
                           const std::vector<std::vector<std::string_view>>& aliases) {
    HeaderIndex idx;
    idx.columns.assign(aliases.size(), -1);
    for (std::size_t f = 0; f < header.size(); ++f) {
      const std::string norm = normalize_token(header[f]);
      for (std::size_t slot = 0; slot < aliases.size(); ++slot) {
        if (idx.columns[slot] >= 0) continue;
        for (const auto alias : aliases[slot]) {
          if (norm == alias) {
            idx.columns[slot] = static_cast<int>(f);
            break;
          }
        }
      }
    }
    return idx;
  }
};

std::string_view field_at(const CsvRow& row, int index) {
  if (index < 0 || static_cast<std::size_t>(index) >= row.fields.size()) return {};
  return row.fields[index];
}

}  // namespace

DepartureParseResult parse_departures(std::istream& in, const ParseConfig& config) {
  // canonical departure columns, in the order of the 13-field layout
  enum Slot {
    kServiceDate, kRouteId, kDirection, kHalfTripId, kStopId, kTimepointId,
    kTimepointOrder, kPointType, kStandardType, kScheduledTime, kActualTime,
    kScheduledHeadway, kHeadway
  };
  static const std::vector<std::vector<std::string_view>> kAliases = {
      {"servicedate"},
      {"routeid", "route"},
      {"direction", "directionid"},
      {"halftripid"},
      {"stopid"},
      {"timepointid"},
      {"timepointorder"},
      {"pointtype"},
      {"standardtype"},
      {"scheduledtime", "scheduled"},
      {"actualtime", "actual"},
      {"scheduledheadway"},
      {"headway", "actualheadway"},
  };
  static const std::array<std::string_view, 13> kCanonical = {
      "service_date", "route_id", "direction", "half_trip_id", "stop_id",
      "timepoint_id", "timepoint_order", "point_type", "standard_type",
      "scheduled_time", "actual_time", "scheduled_headway", "headway"};

  CsvReader reader(in, config.delimiter);
  CsvRow row;
  if (!reader.next(row)) {
    throw std::runtime_error("departures input is empty: header row required");
  }
  const HeaderIndex header = HeaderIndex::build(row.fields, kAliases);
  for (std::size_t slot = 0; slot < kCanonical.size(); ++slot) {
    if (header.at(slot) < 0) {
      throw std::runtime_error("departures header is missing required column: " +
                               std::string(kCanonical[slot]));
    }
  }

  DepartureParseResult result;
  const auto reject = [&](const CsvRow& r, std::string reason) {
    result.rejects.push_back({r.line_no, std::move(reason), r.raw});
  };

  while (reader.next(row)) {
    DepartureRecord rec;

    const auto service_date = parse_date(trim(field_at(row, header.at(kServiceDate))));
    if (!service_date) {
      reject(row, "bad_service_date");
      continue;
    }
    rec.service_date = *service_date;

    rec.route_id = trim(field_at(row, header.at(kRouteId)));
    rec.half_trip_id = trim(field_at(row, header.at(kHalfTripId)));

    rec.stop_id = trim(field_at(row, header.at(kStopId)));
    if (rec.stop_id.empty()) {
      reject(row, "empty_stop_id");
      continue;
    }
    rec.timepoint_id = trim(field_at(row, header.at(kTimepointId)));

    const auto direction = parse_direction(field_at(row, header.at(kDirection)));
    if (!direction) {
      reject(row, "bad_direction");
      continue;
    }
    rec.direction = *direction;

    const auto order = parse_int(field_at(row, header.at(kTimepointOrder)));
    if (!order) {
      reject(row, "bad_timepoint_order");
      continue;
    }
    if (*order < 1) {
      reject(row, "timepoint_order_below_one");
      continue;
    }
    rec.timepoint_order = static_cast<int>(*order);

    const auto point_type = parse_point_type(field_at(row, header.at(kPointType)));
    if (!point_type) {
      reject(row, "bad_point_type");
      continue;
    }
    rec.point_type = *point_type;

    const auto standard = parse_standard_type(field_at(row, header.at(kStandardType)));
    if (!standard) {
      reject(row, "bad_standard_type");
      continue;
    }
    rec.standard_type = *standard;

    const auto sched_text = trim(field_at(row, header.at(kScheduledTime)));
    if (sched_text.empty()) {
      reject(row, "missing_scheduled_time");
      continue;
    }
    const auto scheduled = parse_timestamp(sched_text);
    if (!scheduled) {
      reject(row, "bad_scheduled_time");
      continue;
    }
    rec.scheduled_time = *scheduled;

    const auto actual_text = trim(field_at(row, header.at(kActualTime)));
    if (actual_text.empty()) {
      reject(row, "missing_actual_time");
      continue;
    }
    const auto actual = parse_timestamp(actual_text);
    if (!actual) {
      reject(row, "bad_actual_time");
      continue;
    }
    rec.actual_time = *actual;

    // headways are optional; unparseable values degrade to missing
    rec.scheduled_headway = parse_double(field_at(row, header.at(kScheduledHeadway)));
    rec.headway = parse_double(field_at(row, header.at(kHeadway)));

    result.records.push_back(std::move(rec));
  }
  return result;
}

WeatherParseResult parse_weather(std::istream& in, const ParseConfig& config) {
  enum Slot { kTimestamp, kCondition, kTemperature, kHumidity, kWindSpeed };
  static const std::vector<std::vector<std::string_view>> kAliases = {
      {"timestamp", "datetime", "time"},
      {"condition", "conditions"},
      {"temperature", "temp"},
      {"humidity"},
      {"windspeed", "wind"},
  };

  CsvReader reader(in, config.delimiter);
  CsvRow row;
  if (!reader.next(row)) {
    throw std::runtime_error("weather input is empty: header row required");
  }
  const HeaderIndex header = HeaderIndex::build(row.fields, kAliases);
  if (header.at(kTimestamp) < 0) {
    throw std::runtime_error("weather header is missing required column: timestamp");
  }
  if (header.at(kCondition) < 0) {
    throw std::runtime_error("weather header is missing required column: condition");
  }

  WeatherParseResult result;
  while (reader.next(row)) {
    const auto ts = parse_timestamp(trim(field_at(row, header.at(kTimestamp))));
    if (!ts) {
      result.rejects.push_back({row.line_no, "bad_timestamp", row.raw});
      continue;
    }
    const std::string_view raw_condition = field_at(row, header.at(kCondition));
    const auto condition = map_condition(raw_condition);
    if (!condition) {
      result.rejects.push_back(
          {row.line_no, "unmappable_condition: " + std::string(trim(raw_condition)),
           row.raw});
      continue;
    }
    WeatherObservation obs;
    obs.timestamp = *ts;
    obs.condition = *condition;
    obs.temperature = parse_double(field_at(row, header.at(kTemperature))).value_or(0.0);
    obs.humidity = parse_double(field_at(row, header.at(kHumidity))).value_or(0.0);
    obs.wind_speed = parse_double(field_at(row, header.at(kWindSpeed))).value_or(0.0);
    result.observations.push_back(obs);
  }
  return result;
}

StopsParseResult parse_stops(std::istream& in, const ParseConfig& config) {
  enum Slot { kStopId, kX, kY, kName };
  static const std::vector<std::vector<std::string_view>> kAliases = {
      {"stopid"},
      {"x", "lon", "longitude", "stoplon"},
      {"y", "lat", "latitude", "stoplat"},
      {"name", "stopname"},
  };

  CsvReader reader(in, config.delimiter);
  CsvRow row;
  if (!reader.next(row)) {
    throw std::runtime_error("stops input is empty: header row required");
  }
  const HeaderIndex header = HeaderIndex::build(row.fields, kAliases);
  if (header.at(kStopId) < 0) {
    throw std::runtime_error("stops header is missing required column: stop_id");
  }
  if (header.at(kX) < 0 || header.at(kY) < 0) {
    throw std::runtime_error("stops header is missing required column: x/y");
  }

  StopsParseResult result;
  std::map<std::string, std::size_t> first_line;
  while (reader.next(row)) {
    StopLocation stop;
    stop.stop_id = trim(field_at(row, header.at(kStopId)));
    if (stop.stop_id.empty()) {
      result.rejects.push_back({row.line_no, "empty_stop_id", row.raw});
      continue;
    }
    const auto x = parse_double(field_at(row, header.at(kX)));
    const auto y = parse_double(field_at(row, header.at(kY)));
    if (!x || !std::isfinite(*x)) {
      result.rejects.push_back({row.line_no, "bad_x", row.raw});
      continue;
    }
    if (!y || !std::isfinite(*y)) {
      result.rejects.push_back({row.line_no, "bad_y", row.raw});
      continue;
    }
    stop.x = *x;
    stop.y = *y;
    stop.name = trim(field_at(row, header.at(kName)));

    const auto it = result.stops.find(stop.stop_id);
    if (it != result.stops.end()) {
      if (it->second.x == stop.x && it->second.y == stop.y) {
        continue;  // exact duplicate
      }
      throw std::runtime_error(
          "conflicting coordinates for stop_id " + stop.stop_id + ": line " +
          format_int(static_cast<std::int64_t>(first_line[stop.stop_id])) + " has (" +
          format_double(it->second.x) + ", " + format_double(it->second.y) +
          "), line " + format_int(static_cast<std::int64_t>(row.line_no)) + " has (" +
          format_double(stop.x) + ", " + format_double(stop.y) + ")");
    }
    first_line[stop.stop_id] = row.line_no;
    result.stops.emplace(stop.stop_id, std::move(stop));
  }
  return result;
}

void write_rejects(std::ostream& out, const std::vector<Reject>& rejects,
                   char delimiter) {
  out << csv_join({"line_no", "reason", "raw_row"}, delimiter) << '\n';
  for (const auto& r : rejects) {
    out << csv_join({format_int(static_cast<std::int64_t>(r.line_no)), r.reason,
                     r.raw_row},
                    delimiter)
        << '\n';
  }
}

}  // namespace busdep
