#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "busdep/features.hpp"
#include "busdep/preprocess.hpp"
#include "busdep/synth.hpp"
#include "busdep/train_eval.hpp"

namespace busdep::pipeline {

/// Bad flags or unusable inputs; the CLI maps this to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Throws UsageError naming the path when it does not exist.
void require_input(const std::filesystem::path& path);

struct CommonConfig {
  std::filesystem::path workdir = ".";
  std::uint64_t seed = 0;
  int threads = 1;
  char delimiter = ',';
};

struct PreprocessArgs {
  std::filesystem::path departures;
  std::filesystem::path weather;
  std::filesystem::path stops;
  double k = 2.0;
};

struct PreprocessResult {
  std::filesystem::path segments_file;
  DeviationStats thresholds;
  DatasetStats pre_filter;
  DatasetStats post_filter;
  std::size_t input_rows = 0;
  std::size_t rejected_rows = 0;
  std::size_t dropped_outliers = 0;
  std::size_t trip_count = 0;
  std::size_t one_stop_trips = 0;
  std::size_t segment_count = 0;
  std::size_t duplicate_order_warnings = 0;
};

/// ingest -> thresholds -> outlier filter -> trips -> segments; writes
/// segments.csv, reject reports and stats.txt under the workdir.
PreprocessResult run_preprocess(const CommonConfig& common, const PreprocessArgs& args);

void print_preprocess_summary(std::ostream& out, const PreprocessResult& result);

struct TrainArgs {
  std::filesystem::path segments;
  std::filesystem::path weather;
  std::filesystem::path stops;
  std::vector<int> hidden = {512, 128, 64};
  TrainConfig train;
  double far_threshold_m = 1488.0;
  CoordinateMode coordinate_mode = CoordinateMode::geodetic;
};

struct TrainOutputs {
  std::filesystem::path model_file;
  std::filesystem::path history_file;
  nn::NetworkSpec spec;
  std::vector<EpochStats> history;
};

/// encode -> split -> fit scaler on train -> train -> save artifact and
/// history.csv.
TrainOutputs run_train(const CommonConfig& common, const TrainArgs& args);

struct AblateArgs {
  std::filesystem::path segments;
  std::filesystem::path weather;
  std::filesystem::path stops;
  /// empty = the seven-architecture preset
  std::vector<std::vector<int>> specs;
  TrainConfig train;
  double far_threshold_m = 1488.0;
  CoordinateMode coordinate_mode = CoordinateMode::geodetic;
};

struct AblateOutputs {
  std::filesystem::path ablation_file;
  std::vector<AblationRow> rows;
  std::size_t selected_row = 0;
};

AblateOutputs run_ablate(const CommonConfig& common, const AblateArgs& args);

struct ReportArgs {
  std::filesystem::path model;
  std::filesystem::path segments;
  std::filesystem::path weather;
  std::filesystem::path stops;
  SplitFractions split;  // must match the training split for honest test rows
};

struct ReportOutputs {
  EvalReport eval;
  std::filesystem::path report_dir;
};

/// Re-encodes with the artifact's schema, re-splits under the same seed,
/// evaluates the test split and writes the report bundle.
ReportOutputs run_report(const CommonConfig& common, const ReportArgs& args);

struct PredictArgs {
  std::filesystem::path model;
  std::filesystem::path queries;  // segments-file layout; target columns may be empty
  std::filesystem::path weather;
  std::filesystem::path stops;
};

struct PredictOutputs {
  std::size_t predicted = 0;
  std::size_t failed = 0;
  double mean_latency_us = 0;
};

/// Streams one CSV row per query to `out`; per-row failures go to `err`.
PredictOutputs run_predict(const CommonConfig& common, const PredictArgs& args,
                           std::ostream& out, std::ostream& err);

synth::SynthFiles run_synth(const CommonConfig& common, const synth::SynthConfig& config);

std::vector<EpochStats> read_history_csv(const std::filesystem::path& path);

}  // namespace busdep::pipeline
