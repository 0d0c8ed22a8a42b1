#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "busdep/timeutil.hpp"

namespace busdep {

enum class Direction { inbound, outbound };
enum class PointType { startpoint, midpoint, endpoint };
enum class StandardType { schedule, headway };
enum class WeatherCondition { cloudy, rainy, clear, snowy, windy };
inline constexpr int kWeatherConditionCount = 5;

std::string_view to_string(Direction d);
std::string_view to_string(PointType p);
std::string_view to_string(StandardType s);
std::string_view to_string(WeatherCondition c);

std::optional<Direction> parse_direction(std::string_view s);
std::optional<PointType> parse_point_type(std::string_view s);
std::optional<StandardType> parse_standard_type(std::string_view s);

/// Raw weather descriptions map onto the five categories with precedence
/// snowy > rainy > windy > cloudy > clear; the first matching keyword wins.
std::optional<WeatherCondition> map_condition(std::string_view raw);

/// One row of the 13-field transit-operations dataset.
struct DepartureRecord {
  Date service_date{};
  std::string route_id;
  Direction direction = Direction::inbound;
  std::string half_trip_id;
  std::string stop_id;
  std::string timepoint_id;
  int timepoint_order = 1;
  PointType point_type = PointType::midpoint;
  StandardType standard_type = StandardType::schedule;
  Timestamp scheduled_time{};
  Timestamp actual_time{};
  std::optional<double> scheduled_headway;  // seconds
  std::optional<double> headway;            // seconds
};

struct WeatherObservation {
  Timestamp timestamp{};
  WeatherCondition condition = WeatherCondition::clear;
  // carried through but unused by the feature encoder
  double temperature = 0;
  double humidity = 0;
  double wind_speed = 0;
};

struct StopLocation {
  std::string stop_id;
  double x = 0;  // longitude degrees or projected meters, per config
  double y = 0;
  std::string name;
};

using StopsMap = std::map<std::string, StopLocation>;

struct Reject {
  std::size_t line_no = 0;
  std::string reason;
  std::string raw_row;
};

struct ParseConfig {
  char delimiter = ',';
};

struct DepartureParseResult {
  std::vector<DepartureRecord> records;
  std::vector<Reject> rejects;
};

struct WeatherParseResult {
  std::vector<WeatherObservation> observations;
  std::vector<Reject> rejects;
};

struct StopsParseResult {
  StopsMap stops;
  std::vector<Reject> rejects;
};

/// Header row is required; canonical column names are matched
/// case-insensitively, ignoring spaces/underscores, with the common
/// aliases of the source datasets accepted. A missing required column is
/// fatal; a malformed row becomes a Reject, never an abort.
DepartureParseResult parse_departures(std::istream& in, const ParseConfig& config = {});

WeatherParseResult parse_weather(std::istream& in, const ParseConfig& config = {});

/// Duplicate stop ids with identical coordinates deduplicate silently;
/// conflicting coordinates for the same id are a fatal error.
StopsParseResult parse_stops(std::istream& in, const ParseConfig& config = {});

void write_rejects(std::ostream& out, const std::vector<Reject>& rejects,
                   char delimiter = ',');

}  // namespace busdep
