#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "busdep/rng.hpp"
#include "busdep/train_eval.hpp"
#include "oracles.hpp"

using namespace busdep;
using busdep_test::fit_least_squares;

namespace {

FeatureVector make_vec(std::vector<double> values, double target,
                       const std::string& route = "R1") {
  FeatureVector vec;
  vec.values = std::move(values);
  vec.target = target;
  vec.route_id = route;
  return vec;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("split sizes follow the floor rule") {
  SUBCASE("100 -> 70/20/10") {
    const auto idx = split_indices(100, {}, 1);
    CHECK(idx.train.size() == 70);
    CHECK(idx.val.size() == 20);
    CHECK(idx.test.size() == 10);
  }
  SUBCASE("10 -> 7/2/1") {
    const auto idx = split_indices(10, {}, 1);
    CHECK(idx.train.size() == 7);
    CHECK(idx.val.size() == 2);
    CHECK(idx.test.size() == 1);
  }
  SUBCASE("identical seeds give identical partitions") {
    const auto a = split_indices(997, {}, 42);
    const auto b = split_indices(997, {}, 42);
    CHECK(a.train == b.train);
    CHECK(a.val == b.val);
    CHECK(a.test == b.test);
    const auto c = split_indices(997, {}, 43);
    CHECK(a.train != c.train);
  }
  SUBCASE("partitions are disjoint and exhaustive") {
    const auto idx = split_indices(503, {}, 7);
    std::set<std::size_t> seen;
    for (const auto* part : {&idx.train, &idx.val, &idx.test}) {
      for (std::size_t i : *part) {
        CHECK(seen.insert(i).second);
      }
    }
    CHECK(seen.size() == 503);
  }
  SUBCASE("fractions must sum to one") {
    CHECK_THROWS_AS(split_indices(100, {0.5, 0.2, 0.2}, 1), std::invalid_argument);
  }
}

TEST_CASE("rmse, mae and mape reference values") {
  CHECK(rmse(std::vector<double>{1, 2}, std::vector<double>{1, 2}) == 0.0);
  CHECK(rmse(std::vector<double>{0, 4}, std::vector<double>{0, 0}) ==
        doctest::Approx(2.8284271).epsilon(1e-6));
  CHECK_THROWS_AS(rmse(std::vector<double>{1}, std::vector<double>{1, 2}),
                  std::invalid_argument);

  CHECK(mae(std::vector<double>{5, 5}, std::vector<double>{5, 5}) == 0.0);
  CHECK(mae(std::vector<double>{-3, 5}, std::vector<double>{0, 0}) == 4.0);
  CHECK(mae(std::vector<double>{136}, std::vector<double>{95}) == 41.0);

  const auto m1 = mape(std::vector<double>{136}, std::vector<double>{95});
  CHECK(m1.percent == doctest::Approx(43.16).epsilon(2e-4));
  const auto m2 = mape(std::vector<double>{706}, std::vector<double>{726});
  CHECK(m2.percent == doctest::Approx(2.75).epsilon(2e-3));
  const auto m3 = mape(std::vector<double>{17.32}, std::vector<double>{37});
  CHECK(m3.percent == doctest::Approx(53.19).epsilon(2e-4));

  const auto excl = mape(std::vector<double>{1, 2, 3}, std::vector<double>{0, 4, 0});
  CHECK(excl.excluded == 2);
  CHECK(excl.percent == doctest::Approx(50.0));
  CHECK_THROWS_AS(mape(std::vector<double>{1}, std::vector<double>{0}),
                  std::invalid_argument);
}

TEST_CASE("training fits a seeded linear task to the least-squares floor") {
  // target = 3 * x[3] + noise, sigma = 1
  Rng rng(55);
  std::vector<FeatureVector> examples;
  for (int i = 0; i < 4000; ++i) {
    std::vector<double> x(173);
    for (double& v : x) v = rng.uniform01();
    x[3] = rng.uniform(-5, 5);
    examples.push_back(make_vec(std::move(x), 0.0));
    examples.back().target = 3.0 * examples.back().values[3] + rng.normal(0, 1);
  }
  SplitSets sets = split_examples(std::move(examples), {}, 9);

  // the closed-form floor sits at roughly sigma^2
  const auto fit = fit_least_squares(sets.train);
  double oracle_sse = 0;
  for (const auto& vec : sets.train) {
    const double e = fit.predict(vec) - vec.target;
    oracle_sse += e * e;
  }
  const double oracle_mse = oracle_sse / static_cast<double>(sets.train.size());
  CHECK(oracle_mse == doctest::Approx(1.0).epsilon(0.15));

  TrainConfig config;
  config.epochs = 10;
  config.learning_rate = 0.01;
  config.batch_size = 8;
  config.seed = 5;
  const auto result = train(nn::NetworkSpec{173, {}, 1}, sets.train, sets.val, config);
  REQUIRE(result.history.size() == 10);
  CHECK(result.history.back().train_mse < 2.0);

  SUBCASE("identical config and seed reproduce the history") {
    const auto again = train(nn::NetworkSpec{173, {}, 1}, sets.train, sets.val, config);
    REQUIRE(again.history.size() == result.history.size());
    for (std::size_t e = 0; e < again.history.size(); ++e) {
      CHECK(again.history[e].train_mse == result.history[e].train_mse);
      CHECK(again.history[e].val_mse == result.history[e].val_mse);
    }
    for (std::size_t l = 0; l < again.net.layers.size(); ++l) {
      CHECK(again.net.layers[l].w == result.net.layers[l].w);
    }
  }
  SUBCASE("thread count does not change the trained weights") {
    TrainConfig threaded = config;
    threaded.threads = 4;
    const auto par = train(nn::NetworkSpec{173, {}, 1}, sets.train, sets.val, threaded);
    for (std::size_t l = 0; l < par.net.layers.size(); ++l) {
      CHECK(par.net.layers[l].w == result.net.layers[l].w);
      CHECK(par.net.layers[l].b == result.net.layers[l].b);
    }
  }
}

TEST_CASE("training rejects bad configurations") {
  std::vector<FeatureVector> data;
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    data.push_back(make_vec({rng.uniform01(), rng.uniform01()}, rng.uniform01()));
  }
  const nn::NetworkSpec spec{2, {}, 1};
  TrainConfig config;
  config.epochs = 0;
  CHECK_THROWS_AS(train(spec, data, data, config), std::invalid_argument);
  config.epochs = 1;
  CHECK_THROWS_AS(train(spec, {}, data, config), std::invalid_argument);
  config.batch_size = 0;
  CHECK_THROWS_AS(train(spec, data, data, config), std::invalid_argument);
}

TEST_CASE("metric identities hold on random evaluations") {
  Rng rng(77);
  const nn::NetworkSpec spec{6, {5}, 1};
  const nn::Network net = nn::init(spec, 3);
  std::vector<FeatureVector> test;
  const std::vector<std::string> routes = {"R1", "R2", "R3"};
  for (int i = 0; i < 400; ++i) {
    std::vector<double> x(6);
    for (double& v : x) v = rng.uniform(-2, 2);
    test.push_back(make_vec(std::move(x), rng.normal(10, 40),
                            routes[rng.below(routes.size())]));
  }
  const auto report = evaluate(net, test);

  // mae <= rmse (power-mean inequality)
  CHECK(report.mae <= report.rmse + 1e-12);

  // rmse^2 * m == sum of squared errors
  const auto preds = predict_all(net, test);
  double sse = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double e = test[i].target - preds[i];
    sse += e * e;
  }
  CHECK(report.rmse * report.rmse * static_cast<double>(test.size()) ==
        doctest::Approx(sse).epsilon(1e-9));

  // per-route recombination
  double weighted = 0;
  std::size_t total = 0;
  for (const auto& [route, r] : report.per_route) {
    weighted += r.rmse * r.rmse * static_cast<double>(r.n);
    total += r.n;
  }
  CHECK(total == test.size());
  CHECK(weighted / static_cast<double>(total) ==
        doctest::Approx(report.rmse * report.rmse).epsilon(1e-9));

  // predict-zero baseline equals the rms of the targets
  double target_sq = 0;
  for (const auto& vec : test) target_sq += vec.target * vec.target;
  CHECK(report.baseline_rmse ==
        doctest::Approx(std::sqrt(target_sq / test.size())).epsilon(1e-12));

  // histogram covers every test target exactly once
  std::size_t histogram_total = 0;
  for (const auto& bin : report.target_histogram) histogram_total += bin.count;
  CHECK(histogram_total == test.size());
}

TEST_CASE("per-route rmse") {
  const nn::NetworkSpec spec{2, {}, 1};
  nn::Network net = nn::init(spec, 1);
  std::fill(net.layers[0].w.begin(), net.layers[0].w.end(), 0.0);

  SUBCASE("single-route test set matches the global value") {
    std::vector<FeatureVector> test = {make_vec({0, 0}, 3, "R9"),
                                       make_vec({0, 0}, -4, "R9")};
    const auto by_route = per_route_rmse(net, test);
    REQUIRE(by_route.size() == 1);
    const auto preds = predict_all(net, test);
    CHECK(by_route.at("R9").rmse ==
          doctest::Approx(rmse(preds, std::vector<double>{3, -4})).epsilon(1e-12));
    CHECK(by_route.at("R9").n == 2);
  }
  SUBCASE("identical error multisets give identical per-route values") {
    std::vector<FeatureVector> test = {
        make_vec({0, 0}, 5, "A"), make_vec({0, 0}, -2, "A"),
        make_vec({0, 0}, -2, "B"), make_vec({0, 0}, 5, "B")};
    const auto by_route = per_route_rmse(net, test);
    CHECK(by_route.at("A").rmse == by_route.at("B").rmse);
  }
}

TEST_CASE("departure prediction applies the deviation to the schedule") {
  // constant-output model: zero weights, output bias = the predicted deviation
  FeatureSchema schema = make_schema({"66"});
  const int dims = schema.total_dims();
  ScalerParams scaler;
  scaler.min.assign(dims, 0.0);
  scaler.max.assign(dims, 1.0);

  StopsMap stops;
  stops["A"] = {"A", -71.0589, 42.3601, ""};
  stops["B"] = {"B", -71.0589, 42.3701, ""};
  WeatherObservation obs;
  obs.timestamp = *parse_timestamp("2023-01-09 10:00:00");
  obs.condition = WeatherCondition::clear;
  const WeatherIndex weather({obs});

  TripSegment seg;
  seg.half_trip_id = "T";
  seg.route_id = "66";
  seg.direction = Direction::outbound;
  seg.service_date = *parse_date("2023-01-09");
  seg.current = {"A", 1, PointType::startpoint, *parse_timestamp("2023-01-09 09:55:00"),
                 *parse_timestamp("2023-01-09 09:56:00"), std::nullopt};
  seg.next = {"B", 2, PointType::endpoint, *parse_timestamp("2023-01-09 10:00:00"),
              *parse_timestamp("2023-01-09 10:00:00"), std::nullopt};
  seg.current_deviation = 60;
  seg.next_deviation = 0;

  for (const auto& [bias, expected] :
       std::vector<std::pair<double, std::string>>{{120, "2023-01-09 10:02:00"},
                                                   {0, "2023-01-09 10:00:00"},
                                                   {-60, "2023-01-09 09:59:00"}}) {
    nn::ModelArtifact artifact;
    artifact.schema = schema;
    artifact.scaler = scaler;
    artifact.net = nn::init(nn::NetworkSpec{dims, {}, 1}, 1);
    std::fill(artifact.net.layers[0].w.begin(), artifact.net.layers[0].w.end(), 0.0);
    artifact.net.layers[0].b[0] = bias;

    const auto pred = predict_departure(artifact, seg, weather, stops);
    CHECK(pred.d_pred == bias);
    CHECK(format_timestamp(pred.t_pred) == expected);
  }
}

TEST_CASE("ablation presets reproduce the reference accounting") {
  const auto specs = ablation_presets(173);
  REQUIRE(specs.size() == 7);
  const std::vector<long long> expected_params = {44801,  52801,  61057, 163073,
                                                  737921, 263681, 779009};
  const std::vector<long long> expected_macs = {44544,  52512,  60736, 162368,
                                                736288, 262688, 777248};
  for (std::size_t i = 0; i < specs.size(); ++i) {
    CHECK(nn::param_count(specs[i]) == expected_params[i]);
    CHECK(nn::mac_count(specs[i]) == expected_macs[i]);
  }
}

TEST_CASE("ablation trains isolated rows and nonlinear beats linear") {
  // target carries a product term no linear model can express
  Rng rng(88);
  std::vector<FeatureVector> examples;
  for (int i = 0; i < 3000; ++i) {
    std::vector<double> x(8);
    for (double& v : x) v = rng.uniform(-1, 1);
    const double target = 5.0 * x[3] * x[4] + 0.5 * x[1] + rng.normal(0, 0.1);
    examples.push_back(make_vec(std::move(x), target));
  }
  SplitSets sets = split_examples(std::move(examples), {}, 17);

  TrainConfig config;
  config.epochs = 10;
  config.learning_rate = 0.01;
  config.batch_size = 16;
  config.seed = 3;

  const std::vector<nn::NetworkSpec> specs = {{8, {32, 16}, 1}, {8, {}, 1}};
  const auto rows = ablate(specs, sets, config);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].params == nn::param_count(specs[0]));
  CHECK(rows[0].paper_flops == rows[0].macs * 1000);
  CHECK(rows[0].test_rmse < rows[1].test_rmse);  // strict

  SUBCASE("row order does not change the per-spec result") {
    const std::vector<nn::NetworkSpec> reversed = {{8, {}, 1}, {8, {32, 16}, 1}};
    const auto swapped = ablate(reversed, sets, config);
    CHECK(swapped[1].test_rmse == rows[0].test_rmse);
    CHECK(swapped[0].test_rmse == rows[1].test_rmse);
  }
  SUBCASE("single custom spec gives one row") {
    const std::vector<nn::NetworkSpec> one = {{8, {4}, 1}};
    CHECK(ablate(one, sets, config).size() == 1);
  }
  SUBCASE("optimal row selection prefers fewer parameters within tolerance") {
    std::vector<AblationRow> fake(3);
    fake[0].test_rmse = 100.0;
    fake[0].params = 1000;
    fake[1].test_rmse = 99.0;  // best
    fake[1].params = 5000;
    fake[2].test_rmse = 100.3;  // within 1.5% of 99, cheapest
    fake[2].params = 200;
    CHECK(select_optimal_row(fake) == 2);
    fake[2].test_rmse = 101.0;  // outside 1.5%
    CHECK(select_optimal_row(fake) == 0);
  }
}

TEST_CASE("report bundle is complete and byte-stable") {
  Rng rng(99);
  const nn::NetworkSpec spec{4, {3}, 1};
  const nn::Network net = nn::init(spec, 2);
  std::vector<FeatureVector> test;
  const std::vector<std::string> routes = {"R1", "R2", "R3"};
  for (int i = 0; i < 60; ++i) {
    std::vector<double> x(4);
    for (double& v : x) v = rng.uniform01();
    test.push_back(make_vec(std::move(x), rng.normal(0, 50),
                            routes[rng.below(routes.size())]));
  }
  const auto eval = evaluate(net, test);
  std::vector<EpochStats> history(10);
  for (int e = 0; e < 10; ++e) {
    history[e] = {100.0 / (e + 1), 120.0 / (e + 1)};
  }
  std::vector<AblationRow> ablation(1);
  ablation[0].spec = spec;
  ablation[0].test_rmse = eval.rmse;
  ablation[0].params = nn::param_count(spec);
  ablation[0].macs = nn::mac_count(spec);
  ablation[0].paper_flops = ablation[0].macs * 1000;

  const auto base = std::filesystem::temp_directory_path() / "busdep_report_test";
  std::filesystem::remove_all(base);
  write_report_bundle(base / "one", eval, history, ablation);
  write_report_bundle(base / "two", eval, history, ablation);

  for (const char* name : {"per_route_rmse.csv", "histogram.csv", "history.csv",
                           "ablation.csv", "summary.txt"}) {
    CAPTURE(name);
    REQUIRE(std::filesystem::exists(base / "one" / name));
    CHECK(slurp(base / "one" / name) == slurp(base / "two" / name));
  }

  // 3 routes -> 3 data rows; 10 epochs -> 10 loss rows
  const auto count_lines = [&](const std::filesystem::path& p) {
    const std::string text = slurp(p);
    return std::count(text.begin(), text.end(), '\n');
  };
  CHECK(count_lines(base / "one" / "per_route_rmse.csv") == 1 + 3);
  CHECK(count_lines(base / "one" / "history.csv") == 1 + 10);
  CHECK(count_lines(base / "one" / "ablation.csv") == 1 + 1);
  std::filesystem::remove_all(base);
}
