#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "busdep/ingest.hpp"
#include "busdep/preprocess.hpp"
#include "busdep/rng.hpp"
#include "busdep/synth.hpp"
#include "busdep/train_eval.hpp"
#include "oracles.hpp"

using namespace busdep;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

struct LoadedBundle {
  DepartureParseResult departures;
  WeatherParseResult weather;
  StopsParseResult stops;
};

LoadedBundle load_bundle(const synth::SynthFiles& files) {
  LoadedBundle bundle;
  {
    std::ifstream in(files.departures);
    bundle.departures = parse_departures(in);
  }
  {
    std::ifstream in(files.weather);
    bundle.weather = parse_weather(in);
  }
  {
    std::ifstream in(files.stops);
    bundle.stops = parse_stops(in);
  }
  return bundle;
}

}  // namespace

TEST_CASE("generated bundles survive ingest with zero rejects") {
  const auto dir = fresh_dir("busdep_synth_zero_rejects");
  synth::SynthConfig config;
  config.n_routes = 6;
  config.n_trips = 100;
  config.seed = 5;
  const auto files = synth::generate(config, dir);
  const auto bundle = load_bundle(files);

  CHECK(bundle.departures.rejects.empty());
  CHECK(bundle.weather.rejects.empty());
  CHECK(bundle.stops.rejects.empty());
  CHECK(!bundle.departures.records.empty());
  CHECK(bundle.stops.stops.size() == 6 * 14);

  // 100 trips of 2..14 stops segment into between 100 and 1300 segments
  const auto trips = assemble_trips(bundle.departures.records).trips;
  const auto segments = segment_trips(trips);
  CHECK(segments.size() >= 100);
  CHECK(segments.size() <= 1300);

  // and encode end-to-end without errors
  std::vector<std::string> routes;
  for (const auto& seg : segments) routes.push_back(seg.route_id);
  const auto schema = make_schema(routes);
  const WeatherIndex index(bundle.weather.observations);
  const auto vectors = encode_all(segments, index, bundle.stops.stops, schema);
  CHECK(vectors.size() == segments.size());
  std::filesystem::remove_all(dir);
}

TEST_CASE("identical seeds produce byte-identical bundles") {
  const auto dir_a = fresh_dir("busdep_synth_seed_a");
  const auto dir_b = fresh_dir("busdep_synth_seed_b");
  const auto dir_c = fresh_dir("busdep_synth_seed_c");
  synth::SynthConfig config;
  config.n_routes = 4;
  config.n_trips = 40;
  config.seed = 7;
  const auto a = synth::generate(config, dir_a);
  const auto b = synth::generate(config, dir_b);
  config.seed = 8;
  const auto c = synth::generate(config, dir_c);

  CHECK(slurp(a.departures) == slurp(b.departures));
  CHECK(slurp(a.weather) == slurp(b.weather));
  CHECK(slurp(a.stops) == slurp(b.stops));
  CHECK(slurp(a.ground_truth) == slurp(b.ground_truth));
  CHECK(slurp(a.departures) != slurp(c.departures));
  for (const auto& dir : {dir_a, dir_b, dir_c}) std::filesystem::remove_all(dir);
}

TEST_CASE("config validation") {
  const auto dir = fresh_dir("busdep_synth_validation");
  synth::SynthConfig config;
  config.stops_min = 1;  // single-stop trips carry no segments
  CHECK_THROWS_AS(synth::generate(config, dir), std::invalid_argument);
  config.stops_min = 2;
  config.stops_max = 15;
  CHECK_THROWS_AS(synth::generate(config, dir), std::invalid_argument);
  config.stops_max = 14;
  config.n_trips = 0;
  CHECK_THROWS_AS(synth::generate(config, dir), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST_CASE("noiseless linear process is exactly solvable by least squares") {
  const auto dir = fresh_dir("busdep_synth_linear");
  synth::SynthConfig config;
  config.n_routes = 5;
  config.n_trips = 400;
  config.noise_std = 0.0;
  config.process = synth::Process::linear;
  config.seed = 11;
  const auto files = synth::generate(config, dir);
  const auto bundle = load_bundle(files);
  REQUIRE(bundle.departures.rejects.empty());

  const auto segments = segment_trips(assemble_trips(bundle.departures.records).trips);
  std::vector<std::string> routes;
  for (const auto& seg : segments) routes.push_back(seg.route_id);
  const auto schema = make_schema(routes);
  const WeatherIndex index(bundle.weather.observations);
  auto vectors = encode_all(segments, index, bundle.stops.stops, schema);

  // swap the rounded targets for the exact noise-free ones
  const auto truth = synth::read_ground_truth(files.ground_truth);
  std::map<std::pair<std::string, int>, double> by_key;
  for (const auto& row : truth) {
    by_key[{row.half_trip_id, row.segment_order}] = row.true_deviation;
  }
  REQUIRE(by_key.size() == vectors.size());
  for (auto& vec : vectors) {
    vec.target = by_key.at({vec.half_trip_id, vec.segment_order});
  }

  // held-out fit: train on the first 70%, evaluate the rest
  const std::size_t cut = vectors.size() * 7 / 10;
  const std::vector<FeatureVector> train(vectors.begin(), vectors.begin() + cut);
  const std::vector<FeatureVector> held(vectors.begin() + cut, vectors.end());
  const auto fit = busdep_test::fit_least_squares(train);
  double sse = 0;
  for (const auto& vec : held) {
    const double e = fit.predict(vec) - vec.target;
    sse += e * e;
  }
  const double held_rmse = std::sqrt(sse / static_cast<double>(held.size()));
  CHECK(held_rmse < 1e-6);
  std::filesystem::remove_all(dir);
}

TEST_CASE("oracle rmse") {
  SUBCASE("exact match gives zero, single error passes through") {
    const std::vector<synth::GroundTruthRow> truth = {{"T1", 1, 10.0}, {"T1", 2, -4.0}};
    const std::vector<synth::PredictionRow> exact = {{"T1", 1, 10.0}, {"T1", 2, -4.0}};
    CHECK(synth::oracle_rmse(truth, exact) == 0.0);
    const std::vector<synth::PredictionRow> off = {{"T1", 1, 15.0}};
    CHECK(synth::oracle_rmse(truth, off) == 5.0);
  }
  SUBCASE("misaligned identities are an error") {
    const std::vector<synth::GroundTruthRow> truth = {{"T1", 1, 10.0}};
    const std::vector<synth::PredictionRow> wrong = {{"T9", 1, 10.0}};
    CHECK_THROWS_AS(synth::oracle_rmse(truth, wrong), std::runtime_error);
    CHECK_THROWS_AS(synth::oracle_rmse(truth, {}), std::invalid_argument);
  }
  SUBCASE("cross-checks the evaluation rmse on 1000 random pairs") {
    Rng rng(123);
    std::vector<synth::GroundTruthRow> truth;
    std::vector<synth::PredictionRow> preds;
    std::vector<double> pred_values, actual_values;
    for (int i = 0; i < 1000; ++i) {
      const std::string id = "T" + std::to_string(i / 9);
      const int order = 1 + (i % 9);
      const double actual = rng.normal(100, 150);
      const double predicted = actual + rng.normal(0, 40);
      truth.push_back({id, order, actual});
      preds.push_back({id, order, predicted});
      actual_values.push_back(actual);
      pred_values.push_back(predicted);
    }
    const double via_oracle = synth::oracle_rmse(truth, preds);
    const double via_metrics = rmse(pred_values, actual_values);
    CHECK(via_oracle == doctest::Approx(via_metrics).epsilon(1e-9));
  }
}
