#include "busdep/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>

#include "busdep/csv.hpp"
#include "busdep/features.hpp"
#include "busdep/numtext.hpp"
#include "busdep/rng.hpp"
#include "busdep/timeutil.hpp"

namespace busdep::synth {

namespace {

// Boston bounding box keeps geodetic stop spacing in realistic ranges
constexpr double kLatMin = 42.23;
constexpr double kLatMax = 42.40;
constexpr double kLonMin = -71.19;
constexpr double kLonMax = -70.99;
constexpr double kMetersPerDegLat = 111320.0;

const Date kBaseDate{std::chrono::year{2023}, std::chrono::month{1}, std::chrono::day{1}};
constexpr int kServiceDays = 90;

struct RouteChain {
  std::string route_id;
  double deviation_slope = 0;           // per-route distance coefficient
  std::vector<std::string> stop_ids;    // stops_max entries
  std::vector<double> xs, ys;           // written coordinates
};

std::string route_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "R%03d", index + 1);
  return buf;
}

RouteChain build_route(int index, const SynthConfig& config) {
  RouteChain chain;
  chain.route_id = route_name(index);

  Rng rng(derive_seed(config.seed, "synth.route", static_cast<std::uint64_t>(index)));
  chain.deviation_slope = rng.uniform(-0.02, 0.02);

  double lat = rng.uniform(kLatMin + 0.02, kLatMax - 0.02);
  double lon = rng.uniform(kLonMin + 0.02, kLonMax - 0.02);
  double bearing = rng.uniform(0.0, 2.0 * 3.141592653589793);
  for (int i = 0; i < config.stops_max; ++i) {
    chain.stop_ids.push_back(format_int(10000 + index * 20 + i));
    // formatted-then-reparsed doubles are bit-identical, so distances
    // computed here match the ones the encoder derives from the file
    lat = *parse_double(format_double(lat));
    lon = *parse_double(format_double(lon));
    chain.xs.push_back(lon);
    chain.ys.push_back(lat);

    const double step = std::clamp(rng.normal(1233.0, 420.0), 250.0, 2600.0);
    bearing += rng.normal(0.0, 0.5);
    double dlat = step * std::cos(bearing) / kMetersPerDegLat;
    double dlon = step * std::sin(bearing) /
                  (kMetersPerDegLat * std::cos(lat * 3.141592653589793 / 180.0));
    // bounce off the bounding box
    if (lat + dlat < kLatMin || lat + dlat > kLatMax) dlat = -dlat;
    if (lon + dlon < kLonMin || lon + dlon > kLonMax) dlon = -dlon;
    lat += dlat;
    lon += dlon;
  }
  return chain;
}

double true_next_deviation(const SynthConfig& config, const RouteChain& route,
                           double current_deviation, double distance_m, int rush) {
  double value = 0.8 * current_deviation + 0.02 * distance_m + 60.0 * rush;
  if (config.process == Process::nonlinear) {
    value += route.deviation_slope * distance_m;
    value += 0.08 * rush * distance_m;
  }
  return value;
}

const char* kConditionSamples[] = {
    "Clear",
    "Clear, Sunny",
    "Partially cloudy",
    "Overcast",
    "Rain, Partially cloudy",
    "Light rain",
    "Snow, Overcast",
    "Windy",
};

}  // namespace

SynthFiles generate(const SynthConfig& config, const std::filesystem::path& dir) {
  if (config.n_routes < 1) throw std::invalid_argument("synth: n_routes must be >= 1");
  if (config.n_trips < 1) throw std::invalid_argument("synth: n_trips must be >= 1");
  if (config.stops_min < 2) {
    throw std::invalid_argument("synth: stops_min must be >= 2 (1-stop trips carry no segments)");
  }
  if (config.stops_max < config.stops_min || config.stops_max > 14) {
    throw std::invalid_argument("synth: stops_max must be within [stops_min, 14]");
  }
  if (config.noise_std < 0) throw std::invalid_argument("synth: noise_std must be >= 0");

  std::filesystem::create_directories(dir);
  SynthFiles files{dir / "departures.csv", dir / "weather.csv", dir / "stops.csv",
                   dir / "ground_truth.csv"};

  std::vector<RouteChain> routes;
  routes.reserve(static_cast<std::size_t>(config.n_routes));
  for (int r = 0; r < config.n_routes; ++r) routes.push_back(build_route(r, config));

  {
    std::ofstream out(files.stops);
    if (!out) throw std::runtime_error("cannot write " + files.stops.string());
    out << "stop_id,x,y,name\n";
    for (const auto& route : routes) {
      for (std::size_t i = 0; i < route.stop_ids.size(); ++i) {
        out << csv_join({route.stop_ids[i], format_double(route.xs[i]),
                         format_double(route.ys[i]),
                         route.route_id + " stop " + format_int(static_cast<std::int64_t>(i + 1))})
            << '\n';
      }
    }
  }

  {
    std::ofstream out(files.weather);
    if (!out) throw std::runtime_error("cannot write " + files.weather.string());
    out << "timestamp,condition,temperature,humidity,wind_speed\n";
    Rng rng(derive_seed(config.seed, "synth.weather"));
    const Timestamp start = at_second_of_day(kBaseDate, 0);
    for (int hour = 0; hour <= kServiceDays * 24; ++hour) {
      const Timestamp ts = start + std::chrono::hours{hour};
      const auto condition = kConditionSamples[rng.below(std::size(kConditionSamples))];
      out << csv_join({format_timestamp(ts), condition,
                       format_double(std::round(rng.normal(5.0, 8.0) * 10) / 10),
                       format_double(std::round(rng.uniform(30.0, 95.0) * 10) / 10),
                       format_double(std::round(rng.uniform(0.0, 40.0) * 10) / 10)})
          << '\n';
    }
  }

  std::ofstream dep(files.departures);
  if (!dep) throw std::runtime_error("cannot write " + files.departures.string());
  dep << "service_date,route_id,direction,half_trip_id,stop_id,timepoint_id,"
         "timepoint_order,point_type,standard_type,scheduled_time,actual_time,"
         "scheduled_headway,headway\n";

  std::ofstream truth(files.ground_truth);
  if (!truth) throw std::runtime_error("cannot write " + files.ground_truth.string());
  truth << "half_trip_id,timepoint_order,true_deviation_s\n";

  for (int t = 0; t < config.n_trips; ++t) {
    Rng rng(derive_seed(config.seed, "synth.trip", static_cast<std::uint64_t>(t)));
    const auto& route = routes[rng.below(static_cast<std::uint64_t>(config.n_routes))];
    const bool inbound = rng.below(2) == 0;
    const Date service_date{std::chrono::sys_days{kBaseDate} +
                            std::chrono::days{static_cast<int>(rng.below(kServiceDays))}};

    const int length = config.stops_min +
                       static_cast<int>(rng.below(
                           static_cast<std::uint64_t>(config.stops_max - config.stops_min + 1)));
    const int window =
        static_cast<int>(rng.below(static_cast<std::uint64_t>(config.stops_max - length + 1)));

    char trip_id[16];
    std::snprintf(trip_id, sizeof(trip_id), "T%06d", t + 1);

    // scheduled chain
    std::vector<Timestamp> scheduled(static_cast<std::size_t>(length));
    scheduled[0] = at_second_of_day(service_date,
                                    5 * 3600 + static_cast<int>(rng.below(17 * 3600)));
    for (int i = 1; i < length; ++i) {
      scheduled[i] = scheduled[i - 1] +
                     std::chrono::seconds{120 + static_cast<int>(rng.below(481))};
    }

    // realized deviation chain and noise-free targets
    std::vector<long long> deviations(static_cast<std::size_t>(length));
    std::vector<double> truths(static_cast<std::size_t>(length), 0.0);
    deviations[0] = std::llround(rng.normal(60.0, 120.0));
    for (int i = 0; i + 1 < length; ++i) {
      const int a = window + i;
      const double distance = stop_distance(route.xs[a], route.ys[a], route.xs[a + 1],
                                            route.ys[a + 1], CoordinateMode::geodetic);
      const int rush = rush_hour(scheduled[i]);
      const double truth_value = true_next_deviation(
          config, route, static_cast<double>(deviations[i]), distance, rush);
      truths[static_cast<std::size_t>(i)] = truth_value;
      deviations[i + 1] = std::llround(truth_value + rng.normal(0.0, config.noise_std));
    }

    for (int i = 0; i < length; ++i) {
      const int a = window + i;
      const char* point_type =
          i == 0 ? "Startpoint" : (i == length - 1 ? "Endpoint" : "Midpoint");
      const bool has_headway = rng.below(10) != 0;
      const long long headway_sched = 300 + static_cast<long long>(rng.below(1501));
      const long long headway_actual = headway_sched + deviations[i];
      dep << csv_join({format_date(service_date), route.route_id,
                       inbound ? "Inbound" : "Outbound", trip_id, route.stop_ids[a],
                       "TP" + route.stop_ids[a], format_int(i + 1), point_type,
                       "Schedule", format_timestamp(scheduled[i]),
                       format_timestamp(scheduled[i] + std::chrono::seconds{deviations[i]}),
                       has_headway ? format_int(headway_sched) : std::string(),
                       has_headway ? format_int(headway_actual) : std::string()})
          << '\n';
      if (i + 1 < length) {
        truth << csv_join({trip_id, format_int(i + 1),
                           format_double(truths[static_cast<std::size_t>(i)])})
              << '\n';
      }
    }
  }
  return files;
}

std::vector<GroundTruthRow> read_ground_truth(std::istream& in) {
  CsvReader reader(in);
  CsvRow row;
  if (!reader.next(row)) {
    throw std::runtime_error("ground truth input is empty: header row required");
  }
  std::vector<GroundTruthRow> rows;
  while (reader.next(row)) {
    if (row.fields.size() != 3) {
      throw std::runtime_error("ground truth row " + format_int(static_cast<std::int64_t>(row.line_no)) +
                               ": expected 3 fields");
    }
    const auto order = parse_int(row.fields[1]);
    const auto value = parse_double(row.fields[2]);
    if (!order || !value) {
      throw std::runtime_error("ground truth row " + format_int(static_cast<std::int64_t>(row.line_no)) +
                               ": malformed");
    }
    rows.push_back({row.fields[0], static_cast<int>(*order), *value});
  }
  return rows;
}

std::vector<GroundTruthRow> read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open ground truth file: " + path.string());
  return read_ground_truth(in);
}

double oracle_rmse(std::span<const GroundTruthRow> ground_truth,
                   std::span<const PredictionRow> predictions) {
  if (predictions.empty()) throw std::invalid_argument("oracle_rmse: no predictions");
  std::map<std::pair<std::string, int>, double> truth;
  for (const auto& row : ground_truth) {
    truth[{row.half_trip_id, row.segment_order}] = row.true_deviation;
  }
  long double sum_sq = 0.0L;
  for (const auto& pred : predictions) {
    const auto it = truth.find({pred.half_trip_id, pred.segment_order});
    if (it == truth.end()) {
      throw std::runtime_error("oracle_rmse: prediction for unknown segment " +
                               pred.half_trip_id + "#" + format_int(pred.segment_order));
    }
    const long double e = static_cast<long double>(pred.value) - it->second;
    sum_sq += e * e;
  }
  return static_cast<double>(
      std::sqrt(sum_sq / static_cast<long double>(predictions.size())));
}

}  // namespace busdep::synth
