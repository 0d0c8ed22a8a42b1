#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "busdep/features.hpp"
#include "busdep/model_io.hpp"
#include "busdep/nn.hpp"

namespace busdep {

struct SplitFractions {
  double train = 0.70;
  double val = 0.20;
  double test = 0.10;
};

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 0.01;
  int batch_size = 1000;
  std::uint64_t seed = 0;
  SplitFractions split;
  int threads = 1;
};

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

/// Seeded random permutation cut into floor(train*n) / floor(val*n) /
/// remainder. Disjoint and exhaustive.
SplitIndices split_indices(std::size_t n, const SplitFractions& fractions,
                           std::uint64_t seed);

struct SplitSets {
  std::vector<FeatureVector> train, val, test;
};

SplitSets split_examples(std::vector<FeatureVector> examples,
                         const SplitFractions& fractions, std::uint64_t seed);

struct EpochStats {
  double train_mse = 0;  // running mean over the epoch as trained
  double val_mse = 0;    // full pass at epoch end
};

struct TrainResult {
  nn::Network net;
  std::vector<EpochStats> history;
};

/// Mini-batch Adam on MSE; per-epoch shuffling under the config seed; the
/// final-epoch model is returned (no early stopping). Inputs must already
/// be scaled; targets stay in raw seconds.
TrainResult train(const nn::NetworkSpec& spec,
                  const std::vector<FeatureVector>& train_set,
                  const std::vector<FeatureVector>& val_set,
                  const TrainConfig& config);

double rmse(std::span<const double> predictions, std::span<const double> actuals);
double mae(std::span<const double> predictions, std::span<const double> actuals);

struct MapeResult {
  double percent = 0;
  std::size_t excluded = 0;  // pairs with actual == 0
};

/// Mean |pred-actual|/|actual| over nonzero actuals, as a percentage.
MapeResult mape(std::span<const double> predictions, std::span<const double> actuals);

std::vector<double> predict_all(const nn::Network& net,
                                std::span<const FeatureVector> examples,
                                int threads = 1);

struct RouteRmse {
  double rmse = 0;
  std::size_t n = 0;
};

std::map<std::string, RouteRmse> per_route_rmse(const nn::Network& net,
                                                std::span<const FeatureVector> test,
                                                int threads = 1);

struct HistogramBin {
  double low = 0;
  double high = 0;
  std::size_t count = 0;
};

struct EvalReport {
  double rmse = 0;
  double mae = 0;
  MapeResult mape;
  std::map<std::string, RouteRmse> per_route;
  std::size_t n_test = 0;
  double baseline_rmse = 0;  // predict-zero-deviation baseline
  std::vector<HistogramBin> target_histogram;
};

EvalReport evaluate(const nn::Network& net, std::span<const FeatureVector> test,
                    int threads = 1);

struct PredictedDeparture {
  Timestamp t_pred{};   // next scheduled time + d_pred, rounded to seconds
  double d_pred = 0;    // raw predicted deviation, seconds
};

/// Predicted next-stop departure: deviation from the model, added to the
/// next stop's scheduled time.
PredictedDeparture predict_departure(const nn::ModelArtifact& artifact,
                                     const TripSegment& segment,
                                     const WeatherIndex& weather,
                                     const StopsMap& stops);

struct AblationRow {
  nn::NetworkSpec spec;
  double test_rmse = 0;
  long long params = 0;
  long long macs = 0;
  long long paper_flops = 0;  // macs x 1000, the reported-FLOPs convention
};

/// The seven preset hidden-layer configurations of the ablation study.
std::vector<nn::NetworkSpec> ablation_presets(int input_dim);

/// Trains and evaluates every spec on identical (pre-split, pre-scaled)
/// sets with identical seeds.
std::vector<AblationRow> ablate(std::span<const nn::NetworkSpec> specs,
                                const SplitSets& sets, const TrainConfig& config);

/// Picks the cheapest spec whose RMSE is within `tolerance` (relative) of
/// the best row; returns its index.
std::size_t select_optimal_row(std::span<const AblationRow> rows,
                               double tolerance = 0.015);

/// Writes per_route_rmse.csv, histogram.csv, history.csv, ablation.csv and
/// summary.txt under dir. Reruns over identical inputs are byte-identical.
void write_report_bundle(const std::filesystem::path& dir, const EvalReport& eval,
                         std::span<const EpochStats> history,
                         std::span<const AblationRow> ablation);

}  // namespace busdep
