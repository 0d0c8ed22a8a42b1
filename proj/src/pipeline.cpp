#include "busdep/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>

#include "busdep/csv.hpp"
#include "busdep/model_io.hpp"
#include "busdep/numtext.hpp"

namespace busdep::pipeline {

void require_input(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw UsageError("input file does not exist: " + path.string());
  }
}

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  require_input(path);
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write output file: " + path.string());
  return out;
}

void write_reject_file(const std::filesystem::path& path,
                       const std::vector<Reject>& rejects, char delimiter) {
  auto out = open_output(path);
  write_rejects(out, rejects, delimiter);
}

struct EncodedDataset {
  FeatureSchema schema;
  std::vector<FeatureVector> vectors;
};

EncodedDataset load_and_encode(const CommonConfig& common,
                               const std::filesystem::path& segments_path,
                               const std::filesystem::path& weather_path,
                               const std::filesystem::path& stops_path,
                               double far_threshold_m, CoordinateMode mode) {
  const ParseConfig parse_config{common.delimiter};

  auto segments_in = open_input(segments_path);
  const auto segments = read_segments(segments_in, parse_config);
  if (!segments.rejects.empty()) {
    throw std::runtime_error("segments file has " +
                             format_int(static_cast<std::int64_t>(segments.rejects.size())) +
                             " malformed rows (first at line " +
                             format_int(static_cast<std::int64_t>(segments.rejects.front().line_no)) +
                             ": " + segments.rejects.front().reason + ")");
  }
  if (segments.segments.empty()) {
    throw std::runtime_error("segments file contains no segments: " +
                             segments_path.string());
  }

  auto weather_in = open_input(weather_path);
  const auto weather = parse_weather(weather_in, parse_config);
  auto stops_in = open_input(stops_path);
  const auto stops = parse_stops(stops_in, parse_config);

  std::vector<std::string> route_ids;
  route_ids.reserve(segments.segments.size());
  for (const auto& seg : segments.segments) route_ids.push_back(seg.route_id);

  EncodedDataset dataset;
  dataset.schema = make_schema(std::move(route_ids));
  dataset.schema.far_threshold_m = far_threshold_m;
  dataset.schema.coordinate_mode = mode;

  const WeatherIndex index(weather.observations);
  dataset.vectors = encode_all(segments.segments, index, stops.stops, dataset.schema,
                               common.threads);
  return dataset;
}

EncodedDataset encode_with_schema(const CommonConfig& common,
                                  const std::filesystem::path& segments_path,
                                  const std::filesystem::path& weather_path,
                                  const std::filesystem::path& stops_path,
                                  const FeatureSchema& schema) {
  const ParseConfig parse_config{common.delimiter};
  auto segments_in = open_input(segments_path);
  const auto segments = read_segments(segments_in, parse_config);
  if (segments.segments.empty()) {
    throw std::runtime_error("segments file contains no segments: " +
                             segments_path.string());
  }
  auto weather_in = open_input(weather_path);
  const auto weather = parse_weather(weather_in, parse_config);
  auto stops_in = open_input(stops_path);
  const auto stops = parse_stops(stops_in, parse_config);

  EncodedDataset dataset;
  dataset.schema = schema;
  const WeatherIndex index(weather.observations);
  dataset.vectors = encode_all(segments.segments, index, stops.stops, dataset.schema,
                               common.threads);
  return dataset;
}

void write_history_csv(const std::filesystem::path& path,
                       std::span<const EpochStats> history) {
  auto out = open_output(path);
  out << "epoch,train_mse,val_mse\n";
  for (std::size_t e = 0; e < history.size(); ++e) {
    out << format_int(static_cast<std::int64_t>(e + 1)) << ','
        << format_double(history[e].train_mse) << ','
        << format_double(history[e].val_mse) << '\n';
  }
}

}  // namespace

PreprocessResult run_preprocess(const CommonConfig& common, const PreprocessArgs& args) {
  const ParseConfig parse_config{common.delimiter};
  std::filesystem::create_directories(common.workdir);

  auto departures_in = open_input(args.departures);
  auto parsed = parse_departures(departures_in, parse_config);
  auto weather_in = open_input(args.weather);
  const auto weather = parse_weather(weather_in, parse_config);
  auto stops_in = open_input(args.stops);
  const auto stops = parse_stops(stops_in, parse_config);

  write_reject_file(common.workdir / "rejects_departures.csv", parsed.rejects,
                    common.delimiter);
  write_reject_file(common.workdir / "rejects_weather.csv", weather.rejects,
                    common.delimiter);
  write_reject_file(common.workdir / "rejects_stops.csv", stops.rejects,
                    common.delimiter);

  if (parsed.records.empty()) {
    throw std::runtime_error("no valid departure records in " +
                             args.departures.string());
  }

  PreprocessResult result;
  result.input_rows = parsed.records.size() + parsed.rejects.size();
  result.rejected_rows = parsed.rejects.size();
  result.pre_filter = dataset_stats(parsed.records);

  std::vector<double> deviations;
  deviations.reserve(parsed.records.size());
  for (const auto& rec : parsed.records) deviations.push_back(deviation(rec));
  result.thresholds = outlier_thresholds(deviations, args.k);

  auto filtered = filter_outliers(std::move(parsed.records), result.thresholds);
  result.dropped_outliers = filtered.dropped;
  if (filtered.kept.empty()) {
    throw std::runtime_error("outlier filter removed every record");
  }
  result.post_filter = dataset_stats(filtered.kept);

  auto assembled = assemble_trips(std::move(filtered.kept));
  result.trip_count = assembled.trips.size();
  result.duplicate_order_warnings = assembled.duplicate_order_warnings;
  for (const auto& trip : assembled.trips) {
    if (trip.records.size() < 2) ++result.one_stop_trips;
  }

  const auto segments = segment_trips(assembled.trips);
  result.segment_count = segments.size();

  result.segments_file = common.workdir / "segments.csv";
  {
    auto out = open_output(result.segments_file);
    write_segments(out, segments, common.delimiter);
  }
  {
    auto out = open_output(common.workdir / "stats.txt");
    print_preprocess_summary(out, result);
  }
  return result;
}

void print_preprocess_summary(std::ostream& out, const PreprocessResult& result) {
  out << "input rows: " << result.input_rows << " (" << result.rejected_rows
      << " rejected)\n";
  out << "valid records: " << result.pre_filter.n << '\n';
  out << "deviation mean_s: " << format_double(result.pre_filter.mean_deviation)
      << ", std_dev_s: " << format_double(result.pre_filter.std_dev) << '\n';
  out << "outlier thresholds (k=" << format_double(result.thresholds.k)
      << "): low_s: " << format_double(result.thresholds.low)
      << ", high_s: " << format_double(result.thresholds.high) << '\n';
  out << "outliers dropped: " << result.dropped_outliers << '\n';
  out << "after filtering: " << result.post_filter.n << " records, "
      << result.post_filter.trips << " trips, " << result.post_filter.routes
      << " routes, " << result.post_filter.stops << " stops\n";
  out << "post-filter mean_s: " << format_double(result.post_filter.mean_deviation)
      << ", std_dev_s: " << format_double(result.post_filter.std_dev)
      << ", delayed fraction: " << format_double(result.post_filter.delayed_fraction)
      << '\n';
  out << "trips assembled: " << result.trip_count << " (" << result.one_stop_trips
      << " single-stop, excluded)\n";
  if (result.duplicate_order_warnings > 0) {
    out << "warning: duplicate timepoint orders: " << result.duplicate_order_warnings
        << " (first occurrence kept)\n";
  }
  out << "segments: " << result.segment_count << '\n';
}

TrainOutputs run_train(const CommonConfig& common, const TrainArgs& args) {
  std::filesystem::create_directories(common.workdir);
  auto dataset = load_and_encode(common, args.segments, args.weather, args.stops,
                                 args.far_threshold_m, args.coordinate_mode);

  TrainConfig config = args.train;
  config.seed = common.seed;
  config.threads = common.threads;

  SplitSets sets = split_examples(std::move(dataset.vectors), config.split, config.seed);
  const ScalerParams scaler = fit_scaler(sets.train);
  apply_scaler(sets.train, scaler);
  apply_scaler(sets.val, scaler);

  nn::NetworkSpec spec{dataset.schema.total_dims(), args.hidden, 1};
  TrainResult trained = train(spec, sets.train, sets.val, config);

  TrainOutputs outputs;
  outputs.spec = spec;
  outputs.model_file = common.workdir / "model.txt";
  outputs.history_file = common.workdir / "history.csv";
  nn::save_model(outputs.model_file, trained.net, scaler, dataset.schema);
  write_history_csv(outputs.history_file, trained.history);
  outputs.history = std::move(trained.history);
  return outputs;
}

AblateOutputs run_ablate(const CommonConfig& common, const AblateArgs& args) {
  std::filesystem::create_directories(common.workdir);
  auto dataset = load_and_encode(common, args.segments, args.weather, args.stops,
                                 args.far_threshold_m, args.coordinate_mode);

  TrainConfig config = args.train;
  config.seed = common.seed;
  config.threads = common.threads;

  SplitSets sets = split_examples(std::move(dataset.vectors), config.split, config.seed);
  const ScalerParams scaler = fit_scaler(sets.train);
  apply_scaler(sets.train, scaler);
  apply_scaler(sets.val, scaler);
  apply_scaler(sets.test, scaler);

  std::vector<nn::NetworkSpec> specs;
  if (args.specs.empty()) {
    specs = ablation_presets(dataset.schema.total_dims());
  } else {
    for (const auto& hidden : args.specs) {
      specs.push_back({dataset.schema.total_dims(), hidden, 1});
    }
  }

  AblateOutputs outputs;
  outputs.rows = ablate(specs, sets, config);
  outputs.selected_row = select_optimal_row(outputs.rows);
  outputs.ablation_file = common.workdir / "ablation.csv";
  {
    auto out = open_output(outputs.ablation_file);
    out << "spec,params,macs,flops_paper_convention,test_rmse_s\n";
    for (const auto& row : outputs.rows) {
      out << csv_join({row.spec.hidden_to_string(), format_int(row.params),
                       format_int(row.macs), format_int(row.paper_flops),
                       format_double(row.test_rmse)},
                      common.delimiter)
          << '\n';
    }
  }
  return outputs;
}

ReportOutputs run_report(const CommonConfig& common, const ReportArgs& args) {
  std::filesystem::create_directories(common.workdir);
  require_input(args.model);
  const nn::ModelArtifact artifact = nn::load_model(args.model);

  auto dataset = encode_with_schema(common, args.segments, args.weather, args.stops,
                                    artifact.schema);

  SplitSets sets = split_examples(std::move(dataset.vectors), args.split, common.seed);
  apply_scaler(sets.test, artifact.scaler);

  ReportOutputs outputs;
  outputs.eval = evaluate(artifact.net, sets.test, common.threads);
  outputs.report_dir = common.workdir;

  std::vector<EpochStats> history;
  const auto history_path = common.workdir / "history.csv";
  if (std::filesystem::exists(history_path)) {
    history = read_history_csv(history_path);
  }
  write_report_bundle(common.workdir, outputs.eval, history, {});
  return outputs;
}

PredictOutputs run_predict(const CommonConfig& common, const PredictArgs& args,
                           std::ostream& out, std::ostream& err) {
  require_input(args.model);
  const nn::ModelArtifact artifact = nn::load_model(args.model);

  const ParseConfig parse_config{common.delimiter};
  auto queries_in = open_input(args.queries);
  const auto queries = read_segments(queries_in, parse_config, SegmentsMode::query);
  for (const auto& reject : queries.rejects) {
    err << "query line " << reject.line_no << ": " << reject.reason << '\n';
  }

  auto weather_in = open_input(args.weather);
  const auto weather = parse_weather(weather_in, parse_config);
  const WeatherIndex index(weather.observations);
  auto stops_in = open_input(args.stops);
  const auto stops = parse_stops(stops_in, parse_config);

  PredictOutputs outputs;
  outputs.failed = queries.rejects.size();
  out << "route_id,next_stop_id,next_scheduled_time,d_pred_s,t_pred\n";
  std::chrono::nanoseconds forward_time{0};
  for (const auto& seg : queries.segments) {
    try {
      const WeatherObservation* obs = index.nearest(seg.current.scheduled_time);
      if (obs == nullptr) {
        throw std::runtime_error("no weather observation within 1 hour of " +
                                 format_timestamp(seg.current.scheduled_time));
      }
      FeatureVector vec = encode(seg, *obs, stops.stops, artifact.schema);
      apply_scaler(vec, artifact.scaler);

      const auto start = std::chrono::steady_clock::now();
      const double d_pred = nn::forward(artifact.net, vec.values);
      forward_time += std::chrono::steady_clock::now() - start;

      const Timestamp t_pred =
          seg.next.scheduled_time + std::chrono::seconds{std::llround(d_pred)};
      out << csv_join({seg.route_id, seg.next.stop_id,
                       format_timestamp(seg.next.scheduled_time),
                       format_double(d_pred), format_timestamp(t_pred)},
                      common.delimiter)
          << '\n';
      ++outputs.predicted;
    } catch (const std::exception& e) {
      err << "query " << seg.half_trip_id << "#" << seg.current.timepoint_order
          << ": " << e.what() << '\n';
      ++outputs.failed;
    }
  }
  if (outputs.predicted > 0) {
    outputs.mean_latency_us =
        std::chrono::duration<double, std::micro>(forward_time).count() /
        static_cast<double>(outputs.predicted);
    err << "mean inference latency: " << format_double(outputs.mean_latency_us)
        << " us per query\n";
  }
  return outputs;
}

synth::SynthFiles run_synth(const CommonConfig& common, const synth::SynthConfig& config) {
  synth::SynthConfig seeded = config;
  seeded.seed = common.seed;
  return synth::generate(seeded, common.workdir);
}

std::vector<EpochStats> read_history_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  CsvReader reader(in);
  CsvRow row;
  if (!reader.next(row)) {
    throw std::runtime_error("history file is empty: " + path.string());
  }
  std::vector<EpochStats> history;
  while (reader.next(row)) {
    if (row.fields.size() != 3) {
      throw std::runtime_error("history file row " +
                               format_int(static_cast<std::int64_t>(row.line_no)) +
                               ": expected 3 fields");
    }
    const auto train_mse = parse_double(row.fields[1]);
    const auto val_mse = parse_double(row.fields[2]);
    if (!train_mse || !val_mse) {
      throw std::runtime_error("history file row " +
                               format_int(static_cast<std::int64_t>(row.line_no)) +
                               ": malformed");
    }
    history.push_back({*train_mse, *val_mse});
  }
  return history;
}

}  // namespace busdep::pipeline
