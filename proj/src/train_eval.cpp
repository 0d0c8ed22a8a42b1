#include "busdep/train_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "busdep/csv.hpp"
#include "busdep/numtext.hpp"
#include "busdep/parallel.hpp"
#include "busdep/rng.hpp"

namespace busdep {

SplitIndices split_indices(std::size_t n, const SplitFractions& fractions,
                           std::uint64_t seed) {
  if (fractions.train < 0 || fractions.val < 0 || fractions.test < 0 ||
      std::abs(fractions.train + fractions.val + fractions.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must be non-negative and sum to 1");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(order);

  const auto n_train = static_cast<std::size_t>(fractions.train * static_cast<double>(n));
  const auto n_val = static_cast<std::size_t>(fractions.val * static_cast<double>(n));

  SplitIndices split;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  split.test.assign(order.begin() + n_train + n_val, order.end());
  return split;
}

SplitSets split_examples(std::vector<FeatureVector> examples,
                         const SplitFractions& fractions, std::uint64_t seed) {
  if (examples.size() < 10) {
    throw std::invalid_argument("split_examples: need at least 10 examples");
  }
  const SplitIndices idx = split_indices(examples.size(), fractions, seed);
  SplitSets sets;
  const auto gather = [&](const std::vector<std::size_t>& indices,
                          std::vector<FeatureVector>& out) {
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(std::move(examples[i]));
  };
  gather(idx.train, sets.train);
  gather(idx.val, sets.val);
  gather(idx.test, sets.test);
  return sets;
}

namespace {

double mean_squared_error_of(const nn::Network& net,
                             std::span<const FeatureVector> examples, int threads) {
  std::vector<double> preds(examples.size());
  parallel_for(examples.size(), threads, [&](std::size_t begin, std::size_t end) {
    nn::ForwardCache cache;
    for (std::size_t i = begin; i < end; ++i) {
      preds[i] = nn::forward(net, examples[i].values, cache);
    }
  });
  double sum = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const double e = preds[i] - examples[i].target;
    sum += e * e;
  }
  return sum / static_cast<double>(examples.size());
}

}  // namespace

TrainResult train(const nn::NetworkSpec& spec,
                  const std::vector<FeatureVector>& train_set,
                  const std::vector<FeatureVector>& val_set,
                  const TrainConfig& config) {
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  if (val_set.empty()) throw std::invalid_argument("train: empty validation set");
  if (config.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (config.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  for (const auto& vec : train_set) {
    if (static_cast<int>(vec.values.size()) != spec.input_dim) {
      throw std::invalid_argument("train: example dimension does not match spec");
    }
  }

  TrainResult result;
  result.net = nn::init(spec, derive_seed(config.seed, "init"));
  nn::AdamState adam = nn::make_adam(spec, config.learning_rate);
  nn::Gradients grads = nn::make_gradients(spec);
  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));

  const std::size_t n = train_set.size();
  const std::size_t input_dim = static_cast<std::size_t>(spec.input_dim);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<double> batch_x;
  std::vector<double> batch_y;
  std::vector<double> batch_pred;
  nn::BatchCache cache;

  result.history.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_sse = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t batch = std::min<std::size_t>(config.batch_size, n - start);
      batch_x.resize(batch * input_dim);
      batch_y.resize(batch);
      batch_pred.resize(batch);
      for (std::size_t s = 0; s < batch; ++s) {
        const FeatureVector& vec = train_set[order[start + s]];
        std::copy(vec.values.begin(), vec.values.end(),
                  batch_x.begin() + s * input_dim);
        batch_y[s] = vec.target;
      }
      nn::forward_batch(result.net, batch_x, static_cast<int>(batch), cache,
                        batch_pred, config.threads);
      for (std::size_t s = 0; s < batch; ++s) {
        const double e = batch_pred[s] - batch_y[s];
        epoch_sse += e * e;
      }
      nn::backward_batch(result.net, cache, batch_y, grads, config.threads);
      nn::adam_step(result.net, grads, adam);
    }
    EpochStats stats;
    stats.train_mse = epoch_sse / static_cast<double>(n);
    stats.val_mse = mean_squared_error_of(result.net, val_set, config.threads);
    result.history.push_back(stats);
  }
  return result;
}

double rmse(std::span<const double> predictions, std::span<const double> actuals) {
  if (predictions.size() != actuals.size()) {
    throw std::invalid_argument("rmse: length mismatch");
  }
  if (predictions.empty()) throw std::invalid_argument("rmse: empty input");
  double sum = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = actuals[i] - predictions[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(predictions.size()));
}

double mae(std::span<const double> predictions, std::span<const double> actuals) {
  if (predictions.size() != actuals.size()) {
    throw std::invalid_argument("mae: length mismatch");
  }
  if (predictions.empty()) throw std::invalid_argument("mae: empty input");
  double sum = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    sum += std::abs(actuals[i] - predictions[i]);
  }
  return sum / static_cast<double>(predictions.size());
}

MapeResult mape(std::span<const double> predictions, std::span<const double> actuals) {
  if (predictions.size() != actuals.size()) {
    throw std::invalid_argument("mape: length mismatch");
  }
  MapeResult result;
  double sum = 0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (actuals[i] == 0) {
      ++result.excluded;
      continue;
    }
    sum += std::abs(predictions[i] - actuals[i]) / std::abs(actuals[i]);
    ++counted;
  }
  if (counted == 0) {
    throw std::invalid_argument("mape: undefined, all actuals are zero");
  }
  result.percent = 100.0 * sum / static_cast<double>(counted);
  return result;
}

std::vector<double> predict_all(const nn::Network& net,
                                std::span<const FeatureVector> examples, int threads) {
  std::vector<double> preds(examples.size());
  parallel_for(examples.size(), threads, [&](std::size_t begin, std::size_t end) {
    nn::ForwardCache cache;
    for (std::size_t i = begin; i < end; ++i) {
      preds[i] = nn::forward(net, examples[i].values, cache);
    }
  });
  return preds;
}

namespace {

std::map<std::string, RouteRmse> group_route_rmse(std::span<const double> preds,
                                                  std::span<const FeatureVector> test) {
  struct Acc {
    double sse = 0;
    std::size_t n = 0;
  };
  std::map<std::string, Acc> acc;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double e = test[i].target - preds[i];
    auto& a = acc[test[i].route_id];
    a.sse += e * e;
    a.n += 1;
  }
  std::map<std::string, RouteRmse> out;
  for (const auto& [route, a] : acc) {
    out[route] = {std::sqrt(a.sse / static_cast<double>(a.n)), a.n};
  }
  return out;
}

std::vector<HistogramBin> histogram(std::span<const FeatureVector> test,
                                    double bin_width = 60.0) {
  std::vector<HistogramBin> bins;
  if (test.empty()) return bins;
  double lo = test.front().target;
  double hi = lo;
  for (const auto& vec : test) {
    lo = std::min(lo, vec.target);
    hi = std::max(hi, vec.target);
  }
  const auto first = static_cast<long long>(std::floor(lo / bin_width));
  const auto last = static_cast<long long>(std::floor(hi / bin_width));
  bins.resize(static_cast<std::size_t>(last - first + 1));
  for (std::size_t i = 0; i < bins.size(); ++i) {
    bins[i].low = static_cast<double>(first + static_cast<long long>(i)) * bin_width;
    bins[i].high = bins[i].low + bin_width;
  }
  for (const auto& vec : test) {
    const auto bin = static_cast<std::size_t>(
        static_cast<long long>(std::floor(vec.target / bin_width)) - first);
    bins[bin].count += 1;
  }
  return bins;
}

}  // namespace

std::map<std::string, RouteRmse> per_route_rmse(const nn::Network& net,
                                                std::span<const FeatureVector> test,
                                                int threads) {
  const auto preds = predict_all(net, test, threads);
  return group_route_rmse(preds, test);
}

EvalReport evaluate(const nn::Network& net, std::span<const FeatureVector> test,
                    int threads) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  const auto preds = predict_all(net, test, threads);
  std::vector<double> targets(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) targets[i] = test[i].target;

  EvalReport report;
  report.rmse = rmse(preds, targets);
  report.mae = mae(preds, targets);
  report.mape = mape(preds, targets);
  report.per_route = group_route_rmse(preds, test);
  report.n_test = test.size();

  double sq = 0;
  for (double t : targets) sq += t * t;
  report.baseline_rmse = std::sqrt(sq / static_cast<double>(targets.size()));
  report.target_histogram = histogram(test);
  return report;
}

PredictedDeparture predict_departure(const nn::ModelArtifact& artifact,
                                     const TripSegment& segment,
                                     const WeatherIndex& weather,
                                     const StopsMap& stops) {
  const WeatherObservation* obs = weather.nearest(segment.current.scheduled_time);
  if (obs == nullptr) {
    throw std::runtime_error("predict: no weather observation within 1 hour of " +
                             format_timestamp(segment.current.scheduled_time));
  }
  FeatureVector vec = encode(segment, *obs, stops, artifact.schema);
  apply_scaler(vec, artifact.scaler);

  PredictedDeparture out;
  out.d_pred = nn::forward(artifact.net, vec.values);
  out.t_pred = segment.next.scheduled_time +
               std::chrono::seconds{std::llround(out.d_pred)};
  return out;
}

std::vector<nn::NetworkSpec> ablation_presets(int input_dim) {
  const std::vector<std::vector<int>> hidden_sets = {
      {256},
      {256, 32},
      {256, 64},
      {512, 128, 64},
      {1024, 512, 64, 32},
      {512, 256, 128, 64, 32},
      {1024, 512, 128, 64, 32},
  };
  std::vector<nn::NetworkSpec> specs;
  specs.reserve(hidden_sets.size());
  for (const auto& hidden : hidden_sets) {
    specs.push_back({input_dim, hidden, 1});
  }
  return specs;
}

std::vector<AblationRow> ablate(std::span<const nn::NetworkSpec> specs,
                                const SplitSets& sets, const TrainConfig& config) {
  std::vector<AblationRow> rows;
  rows.reserve(specs.size());
  for (const auto& spec : specs) {
    const TrainResult trained = train(spec, sets.train, sets.val, config);
    const auto preds = predict_all(trained.net, sets.test, config.threads);
    std::vector<double> targets(sets.test.size());
    for (std::size_t i = 0; i < sets.test.size(); ++i) targets[i] = sets.test[i].target;

    AblationRow row;
    row.spec = spec;
    row.test_rmse = rmse(preds, targets);
    row.params = nn::param_count(spec);
    row.macs = nn::mac_count(spec);
    row.paper_flops = row.macs * 1000;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::size_t select_optimal_row(std::span<const AblationRow> rows, double tolerance) {
  if (rows.empty()) throw std::invalid_argument("select_optimal_row: no rows");
  double best_rmse = rows.front().test_rmse;
  for (const auto& row : rows) best_rmse = std::min(best_rmse, row.test_rmse);

  std::size_t best = 0;
  long long best_params = -1;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].test_rmse > best_rmse * (1.0 + tolerance)) continue;
    if (best_params < 0 || rows[i].params < best_params) {
      best = i;
      best_params = rows[i].params;
    }
  }
  return best;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report file: " + path.string());
  return out;
}

}  // namespace

void write_report_bundle(const std::filesystem::path& dir, const EvalReport& eval,
                         std::span<const EpochStats> history,
                         std::span<const AblationRow> ablation) {
  std::filesystem::create_directories(dir);

  {
    auto out = open_out(dir / "per_route_rmse.csv");
    out << "route_id,n,rmse_s\n";
    for (const auto& [route, r] : eval.per_route) {
      out << csv_join({route, format_int(static_cast<std::int64_t>(r.n)),
                       format_double(r.rmse)})
          << '\n';
    }
  }
  {
    auto out = open_out(dir / "histogram.csv");
    out << "bin_low_s,bin_high_s,count\n";
    for (const auto& bin : eval.target_histogram) {
      out << format_double(bin.low) << ',' << format_double(bin.high) << ','
          << format_int(static_cast<std::int64_t>(bin.count)) << '\n';
    }
  }
  {
    auto out = open_out(dir / "history.csv");
    out << "epoch,train_mse,val_mse\n";
    for (std::size_t e = 0; e < history.size(); ++e) {
      out << format_int(static_cast<std::int64_t>(e + 1)) << ','
          << format_double(history[e].train_mse) << ','
          << format_double(history[e].val_mse) << '\n';
    }
  }
  {
    auto out = open_out(dir / "ablation.csv");
    out << "spec,params,macs,flops_paper_convention,test_rmse_s\n";
    for (const auto& row : ablation) {
      out << csv_join({row.spec.hidden_to_string(), format_int(row.params),
                       format_int(row.macs), format_int(row.paper_flops),
                       format_double(row.test_rmse)})
          << '\n';
    }
  }
  {
    auto out = open_out(dir / "summary.txt");
    out << "test examples: " << eval.n_test << '\n';
    out << "rmse_s: " << format_double(eval.rmse) << '\n';
    out << "mae_s: " << format_double(eval.mae) << '\n';
    out << "mape_percent: " << format_double(eval.mape.percent)
        << " (excluded zero-deviation points: " << eval.mape.excluded << ")\n";
    out << "predict_zero_baseline_rmse_s: " << format_double(eval.baseline_rmse)
        << '\n';
    out << "routes evaluated: " << eval.per_route.size() << '\n';
    if (!eval.per_route.empty()) {
      auto worst = eval.per_route.begin();
      for (auto it = eval.per_route.begin(); it != eval.per_route.end(); ++it) {
        if (it->second.rmse > worst->second.rmse) worst = it;
      }
      out << "worst route: " << worst->first << " at "
          << format_double(worst->second.rmse) << " s (n=" << worst->second.n << ")\n";
    }
    if (!history.empty()) {
      out << "epochs: " << history.size() << ", final val mse: "
          << format_double(history.back().val_mse) << '\n';
    }
    if (!ablation.empty()) {
      const std::size_t pick = select_optimal_row(ablation);
      out << "ablation rows: " << ablation.size() << ", selected "
          << ablation[pick].spec.hidden_to_string()
          << " (fewest parameters within 1.5% of best rmse)\n";
    }
  }
}

}  // namespace busdep
