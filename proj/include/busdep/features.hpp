#pragma once

#include <span>
#include <string>
#include <vector>

#include "busdep/ingest.hpp"
#include "busdep/preprocess.hpp"

namespace busdep {

enum class CoordinateMode { geodetic, projected };

std::string_view to_string(CoordinateMode m);
std::optional<CoordinateMode> parse_coordinate_mode(std::string_view s);

/// Half-open local-time window in minutes of day: [start, end).
struct RushWindow {
  int start_minute = 0;
  int end_minute = 0;
};

/// Versioned description of the encoded input space. The canonical layout
/// is 22 fixed slots plus one one-hot slot per vocabulary route; with the
/// full 151-route vocabulary that is 173 dimensions.
struct FeatureSchema {
  static constexpr int kBaseDims = 22;

  std::string version = "v1";
  std::vector<std::string> route_vocabulary;  // lexicographically sorted, unique
  double far_threshold_m = 1488.0;
  std::vector<RushWindow> rush_windows = {{7 * 60, 9 * 60}, {16 * 60, 18 * 60}};
  CoordinateMode coordinate_mode = CoordinateMode::geodetic;

  int total_dims() const {
    return kBaseDims + static_cast<int>(route_vocabulary.size());
  }
  /// Index of a route's one-hot slot, or -1 when out of vocabulary.
  int route_slot(std::string_view route_id) const;
};

/// Sorts and dedups the vocabulary.
FeatureSchema make_schema(std::vector<std::string> route_ids);

// fixed slot layout
namespace slot {
inline constexpr int kDayType = 0;
inline constexpr int kRushHour = 1;
inline constexpr int kLateness = 2;
inline constexpr int kCurrentDeviation = 3;
inline constexpr int kDistance = 4;
inline constexpr int kFarStatus = 5;
inline constexpr int kWeather = 6;     // 5 slots: cloudy, rainy, clear, snowy, windy
inline constexpr int kDirection = 11;  // 2 slots: inbound, outbound
inline constexpr int kCurX = 13;
inline constexpr int kCurY = 14;
inline constexpr int kNextX = 15;
inline constexpr int kNextY = 16;
inline constexpr int kScheduledHeadway = 17;
inline constexpr int kTimepointOrder = 18;
inline constexpr int kPointType = 19;  // 3 slots: startpoint, midpoint, endpoint
inline constexpr int kRoute = 22;      // one slot per vocabulary route
}  // namespace slot

/// Encoded segment: layout above, plus the unscaled learning target.
struct FeatureVector {
  std::vector<double> values;
  double target = 0;  // next-stop deviation (s); scaling never touches it
  // segment identity, carried for per-route evaluation and oracle joins
  std::string route_id;
  std::string half_trip_id;
  int segment_order = 0;  // current stop's timepoint_order
};

/// Geodetic mode: haversine on (lat=y, lon=x), Earth radius 6,371,000 m.
/// Projected mode: Euclidean. Meters, symmetric, >= 0.
double stop_distance(double ax, double ay, double bx, double by, CoordinateMode mode);

/// 0 workday, 1 weekend.
int day_type(const Date& date);

int rush_hour(const Timestamp& t, std::span<const RushWindow> windows);
int rush_hour(const Timestamp& t);  // default Boston windows

/// Hourly observations sorted by timestamp; nearest lookup with a bounded
/// gap (ties resolve to the earlier observation).
class WeatherIndex {
 public:
  explicit WeatherIndex(std::vector<WeatherObservation> observations);

  const WeatherObservation* nearest(const Timestamp& t,
                                    int max_gap_seconds = 3600) const;
  std::size_t size() const { return observations_.size(); }

 private:
  std::vector<WeatherObservation> observations_;
};

FeatureVector encode(const TripSegment& segment, const WeatherObservation& weather,
                     const StopsMap& stops, const FeatureSchema& schema);

/// Joins each segment with the nearest weather observation and encodes.
/// Throws if any segment has no observation within the window.
std::vector<FeatureVector> encode_all(std::span<const TripSegment> segments,
                                      const WeatherIndex& weather,
                                      const StopsMap& stops,
                                      const FeatureSchema& schema, int threads = 1);

struct ScalerParams {
  std::vector<double> min;
  std::vector<double> max;
};

/// Per-dimension min/max over the training vectors only.
ScalerParams fit_scaler(std::span<const FeatureVector> train_vectors);

/// x' = (x - min) / (max - min); 0 when max == min; out-of-range inputs
/// are not clipped.
double scale_value(double x, double min, double max);
void apply_scaler(FeatureVector& vec, const ScalerParams& params);
void apply_scaler(std::span<FeatureVector> vecs, const ScalerParams& params);

}  // namespace busdep
