#include "busdep/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "busdep/numtext.hpp"
#include "busdep/parallel.hpp"

namespace busdep {

std::string_view to_string(CoordinateMode m) {
  return m == CoordinateMode::geodetic ? "geodetic" : "projected";
}

std::optional<CoordinateMode> parse_coordinate_mode(std::string_view s) {
  if (s == "geodetic") return CoordinateMode::geodetic;
  if (s == "projected") return CoordinateMode::projected;
  return std::nullopt;
}

int FeatureSchema::route_slot(std::string_view route_id) const {
  const auto it = std::lower_bound(route_vocabulary.begin(), route_vocabulary.end(),
                                   route_id);
  if (it == route_vocabulary.end() || *it != route_id) return -1;
  return slot::kRoute + static_cast<int>(it - route_vocabulary.begin());
}

FeatureSchema make_schema(std::vector<std::string> route_ids) {
  std::sort(route_ids.begin(), route_ids.end());
  route_ids.erase(std::unique(route_ids.begin(), route_ids.end()), route_ids.end());
  FeatureSchema schema;
  schema.route_vocabulary = std::move(route_ids);
  return schema;
}

namespace {

constexpr double kEarthRadiusM = 6371000.0;

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

double stop_distance(double ax, double ay, double bx, double by, CoordinateMode mode) {
  if (!std::isfinite(ax) || !std::isfinite(ay) || !std::isfinite(bx) ||
      !std::isfinite(by)) {
    throw std::invalid_argument("stop_distance: non-finite coordinate");
  }
  if (mode == CoordinateMode::projected) {
    const double dx = bx - ax;
    const double dy = by - ay;
    return std::sqrt(dx * dx + dy * dy);
  }
  // x carries longitude, y latitude
  const double lat1 = deg2rad(ay);
  const double lat2 = deg2rad(by);
  const double dlat = deg2rad(by - ay);
  const double dlon = deg2rad(bx - ax);
  const double sin_lat = std::sin(dlat / 2);
  const double sin_lon = std::sin(dlon / 2);
  double a = sin_lat * sin_lat + std::cos(lat1) * std::cos(lat2) * sin_lon * sin_lon;
  a = std::clamp(a, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(a));
}

int day_type(const Date& date) { return is_weekend(date) ? 1 : 0; }

int rush_hour(const Timestamp& t, std::span<const RushWindow> windows) {
  const int minute = second_of_day(t) / 60;
  for (const auto& w : windows) {
    if (minute >= w.start_minute && minute < w.end_minute) return 1;
  }
  return 0;
}

int rush_hour(const Timestamp& t) {
  static const std::vector<RushWindow> kDefault = {{7 * 60, 9 * 60}, {16 * 60, 18 * 60}};
  return rush_hour(t, kDefault);
}

WeatherIndex::WeatherIndex(std::vector<WeatherObservation> observations)
    : observations_(std::move(observations)) {
  std::sort(observations_.begin(), observations_.end(),
            [](const WeatherObservation& a, const WeatherObservation& b) {
              return a.timestamp < b.timestamp;
            });
}

const WeatherObservation* WeatherIndex::nearest(const Timestamp& t,
                                                int max_gap_seconds) const {
  if (observations_.empty()) return nullptr;
  const auto it = std::lower_bound(
      observations_.begin(), observations_.end(), t,
      [](const WeatherObservation& obs, const Timestamp& ts) {
        return obs.timestamp < ts;
      });
  const WeatherObservation* best = nullptr;
  long long best_gap = static_cast<long long>(max_gap_seconds) + 1;
  if (it != observations_.begin()) {
    const auto& prev = *(it - 1);
    const long long gap = (t - prev.timestamp).count();
    if (gap < best_gap) {
      best = &prev;
      best_gap = gap;
    }
  }
  if (it != observations_.end()) {
    const long long gap = (it->timestamp - t).count();
    if (gap < best_gap) {  // strict: earlier observation wins ties
      best = &*it;
      best_gap = gap;
    }
  }
  return best;
}

FeatureVector encode(const TripSegment& segment, const WeatherObservation& weather,
                     const StopsMap& stops, const FeatureSchema& schema) {
  const auto cur_stop = stops.find(segment.current.stop_id);
  if (cur_stop == stops.end()) {
    throw std::runtime_error("encode: unknown stop_id: " + segment.current.stop_id);
  }
  const auto next_stop = stops.find(segment.next.stop_id);
  if (next_stop == stops.end()) {
    throw std::runtime_error("encode: unknown stop_id: " + segment.next.stop_id);
  }
  const int route = schema.route_slot(segment.route_id);
  if (route < 0) {
    throw std::runtime_error("encode: route not in vocabulary: " + segment.route_id);
  }

  FeatureVector vec;
  vec.values.assign(schema.total_dims(), 0.0);
  vec.target = segment.next_deviation;
  vec.route_id = segment.route_id;
  vec.half_trip_id = segment.half_trip_id;
  vec.segment_order = segment.current.timepoint_order;

  auto& v = vec.values;
  v[slot::kDayType] = day_type(segment.service_date);
  v[slot::kRushHour] = rush_hour(segment.current.scheduled_time, schema.rush_windows);
  v[slot::kLateness] = segment.current_deviation > 0 ? 1.0 : 0.0;
  v[slot::kCurrentDeviation] = segment.current_deviation;

  const double distance =
      stop_distance(cur_stop->second.x, cur_stop->second.y, next_stop->second.x,
                    next_stop->second.y, schema.coordinate_mode);
  v[slot::kDistance] = distance;
  v[slot::kFarStatus] = distance > schema.far_threshold_m ? 1.0 : 0.0;

  v[slot::kWeather + static_cast<int>(weather.condition)] = 1.0;
  v[slot::kDirection + (segment.direction == Direction::inbound ? 0 : 1)] = 1.0;

  v[slot::kCurX] = cur_stop->second.x;
  v[slot::kCurY] = cur_stop->second.y;
  v[slot::kNextX] = next_stop->second.x;
  v[slot::kNextY] = next_stop->second.y;

  v[slot::kScheduledHeadway] = segment.current.scheduled_headway.value_or(0.0);
  v[slot::kTimepointOrder] = segment.current.timepoint_order;
  v[slot::kPointType + static_cast<int>(segment.current.point_type)] = 1.0;
  v[route] = 1.0;
  return vec;
}

std::vector<FeatureVector> encode_all(std::span<const TripSegment> segments,
                                      const WeatherIndex& weather,
                                      const StopsMap& stops,
                                      const FeatureSchema& schema, int threads) {
  std::vector<FeatureVector> out(segments.size());
  std::vector<std::string> errors(segments.size());
  parallel_for(segments.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& seg = segments[i];
      const WeatherObservation* obs = weather.nearest(seg.current.scheduled_time);
      if (obs == nullptr) {
        errors[i] = "encode: no weather observation within 1 hour of " +
                    format_timestamp(seg.current.scheduled_time);
        continue;
      }
      try {
        out[i] = encode(seg, *obs, stops, schema);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  });
  for (const auto& err : errors) {
    if (!err.empty()) throw std::runtime_error(err);
  }
  return out;
}

ScalerParams fit_scaler(std::span<const FeatureVector> train_vectors) {
  if (train_vectors.empty()) {
    throw std::invalid_argument("fit_scaler: empty training set");
  }
  const std::size_t dims = train_vectors.front().values.size();
  ScalerParams params;
  params.min = train_vectors.front().values;
  params.max = train_vectors.front().values;
  for (const auto& vec : train_vectors) {
    if (vec.values.size() != dims) {
      throw std::invalid_argument("fit_scaler: inconsistent vector dimensions");
    }
    for (std::size_t i = 0; i < dims; ++i) {
      params.min[i] = std::min(params.min[i], vec.values[i]);
      params.max[i] = std::max(params.max[i], vec.values[i]);
    }
  }
  return params;
}

double scale_value(double x, double min, double max) {
  if (max == min) return 0.0;
  return (x - min) / (max - min);
}

void apply_scaler(FeatureVector& vec, const ScalerParams& params) {
  if (vec.values.size() != params.min.size()) {
    throw std::invalid_argument("apply_scaler: dimension mismatch");
  }
  for (std::size_t i = 0; i < vec.values.size(); ++i) {
    vec.values[i] = scale_value(vec.values[i], params.min[i], params.max[i]);
  }
}

void apply_scaler(std::span<FeatureVector> vecs, const ScalerParams& params) {
  for (auto& vec : vecs) apply_scaler(vec, params);
}

}  // namespace busdep
