#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "busdep/numtext.hpp"
#include "busdep/parallel.hpp"
#include "busdep/pipeline.hpp"

namespace {

using busdep::pipeline::CommonConfig;
using busdep::pipeline::UsageError;

std::vector<int> parse_hidden_spec(const std::string& text) {
  if (text.empty() || text == "linear" || text == "none") return {};
  std::vector<int> hidden;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    const auto v = busdep::parse_int(std::string_view(text).substr(pos, end - pos));
    if (!v || *v < 1) {
      throw UsageError("bad --spec value '" + text +
                       "': expected comma-separated layer sizes or 'linear'");
    }
    hidden.push_back(static_cast<int>(*v));
    pos = end + 1;
    if (end == text.size()) break;
  }
  return hidden;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bus departure-time-deviation prediction pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value run configuration");

  CommonConfig common;
  common.threads = busdep::default_threads();
  std::string delimiter = ",";
  app.add_option("--seed", common.seed, "base seed; stages derive their own streams");
  app.add_option("--threads", common.threads, "pipeline parallelism cap")
      ->check(CLI::PositiveNumber);
  app.add_option("--workdir", common.workdir, "directory for stage outputs");
  app.add_option("--delimiter", delimiter, "input/output field delimiter")
      ->check(CLI::Validator(
          [](std::string& v) -> std::string {
            return v.size() == 1 ? "" : "delimiter must be a single character";
          },
          "CHAR"));

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset bundle");
  busdep::synth::SynthConfig synth_config;
  std::string process = "nonlinear";
  synth_cmd->add_option("--routes", synth_config.n_routes, "number of routes")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--trips", synth_config.n_trips, "number of half-trips")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--stops-min", synth_config.stops_min, "minimum stops per trip (>= 2)");
  synth_cmd->add_option("--stops-max", synth_config.stops_max, "maximum stops per trip (<= 14)");
  synth_cmd->add_option("--noise-std", synth_config.noise_std, "deviation noise sigma, seconds");
  synth_cmd->add_option("--process", process, "deviation process: linear|nonlinear")
      ->check(CLI::IsMember({"linear", "nonlinear"}));

  // preprocess
  auto* pre_cmd = app.add_subcommand("preprocess",
                                     "ingest, clean, filter outliers and write segments");
  busdep::pipeline::PreprocessArgs pre_args;
  pre_cmd->add_option("--departures", pre_args.departures, "departures csv")->required();
  pre_cmd->add_option("--weather", pre_args.weather, "weather csv")->required();
  pre_cmd->add_option("--stops", pre_args.stops, "stops csv")->required();
  pre_cmd->add_option("--k", pre_args.k, "outlier threshold multiplier");

  // train
  auto* train_cmd = app.add_subcommand("train", "encode, split, scale and train a model");
  busdep::pipeline::TrainArgs train_args;
  std::string train_spec = "512,128,64";
  std::string coordinate_mode = "geodetic";
  train_cmd->add_option("--segments", train_args.segments, "segments csv")->required();
  train_cmd->add_option("--weather", train_args.weather, "weather csv")->required();
  train_cmd->add_option("--stops", train_args.stops, "stops csv")->required();
  train_cmd->add_option("--spec", train_spec, "hidden layer sizes, e.g. 512,128,64 or linear");
  train_cmd->add_option("--epochs", train_args.train.epochs, "training epochs")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--lr", train_args.train.learning_rate, "learning rate");
  train_cmd->add_option("--batch-size", train_args.train.batch_size, "mini-batch size")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--train-frac", train_args.train.split.train, "train fraction");
  train_cmd->add_option("--val-frac", train_args.train.split.val, "validation fraction");
  train_cmd->add_option("--test-frac", train_args.train.split.test, "test fraction");
  train_cmd->add_option("--far-threshold", train_args.far_threshold_m,
                        "far-status distance threshold, meters");
  train_cmd->add_option("--coordinate-mode", coordinate_mode, "geodetic|projected")
      ->check(CLI::IsMember({"geodetic", "projected"}));

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "train and compare architectures");
  busdep::pipeline::AblateArgs ablate_args;
  std::vector<std::string> ablate_specs;
  std::string ablate_mode = "geodetic";
  ablate_cmd->add_option("--segments", ablate_args.segments, "segments csv")->required();
  ablate_cmd->add_option("--weather", ablate_args.weather, "weather csv")->required();
  ablate_cmd->add_option("--stops", ablate_args.stops, "stops csv")->required();
  ablate_cmd->add_option("--spec", ablate_specs,
                         "hidden layer sizes (repeatable); default: the 7-row preset");
  ablate_cmd->add_option("--epochs", ablate_args.train.epochs, "training epochs")
      ->check(CLI::PositiveNumber);
  ablate_cmd->add_option("--lr", ablate_args.train.learning_rate, "learning rate");
  ablate_cmd->add_option("--batch-size", ablate_args.train.batch_size, "mini-batch size")
      ->check(CLI::PositiveNumber);
  ablate_cmd->add_option("--far-threshold", ablate_args.far_threshold_m,
                         "far-status distance threshold, meters");
  ablate_cmd->add_option("--coordinate-mode", ablate_mode, "geodetic|projected")
      ->check(CLI::IsMember({"geodetic", "projected"}));

  // report
  auto* report_cmd = app.add_subcommand("report", "evaluate a model and write the report bundle");
  busdep::pipeline::ReportArgs report_args;
  report_cmd->add_option("--model", report_args.model, "model artifact")->required();
  report_cmd->add_option("--segments", report_args.segments, "segments csv")->required();
  report_cmd->add_option("--weather", report_args.weather, "weather csv")->required();
  report_cmd->add_option("--stops", report_args.stops, "stops csv")->required();
  report_cmd->add_option("--train-frac", report_args.split.train, "train fraction");
  report_cmd->add_option("--val-frac", report_args.split.val, "validation fraction");
  report_cmd->add_option("--test-frac", report_args.split.test, "test fraction");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "predict next-stop departures for queries");
  busdep::pipeline::PredictArgs predict_args;
  predict_cmd->add_option("--model", predict_args.model, "model artifact")->required();
  predict_cmd->add_option("--queries", predict_args.queries,
                          "query csv (segments layout; target columns may be empty)")
      ->required();
  predict_cmd->add_option("--weather", predict_args.weather, "weather csv")->required();
  predict_cmd->add_option("--stops", predict_args.stops, "stops csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  common.delimiter = delimiter[0];

  try {
    if (*synth_cmd) {
      synth_config.process = process == "linear" ? busdep::synth::Process::linear
                                                 : busdep::synth::Process::nonlinear;
      try {
        const auto files = busdep::pipeline::run_synth(common, synth_config);
        std::cout << "wrote " << files.departures.string() << ", "
                  << files.weather.string() << ", " << files.stops.string() << ", "
                  << files.ground_truth.string() << '\n';
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    } else if (*pre_cmd) {
      const auto result = busdep::pipeline::run_preprocess(common, pre_args);
      busdep::pipeline::print_preprocess_summary(std::cout, result);
      std::cout << "wrote " << result.segments_file.string() << '\n';
    } else if (*train_cmd) {
      train_args.hidden = parse_hidden_spec(train_spec);
      train_args.coordinate_mode = *busdep::parse_coordinate_mode(coordinate_mode);
      const auto outputs = busdep::pipeline::run_train(common, train_args);
      std::cout << "trained " << outputs.spec.hidden_to_string() << " ("
                << busdep::nn::param_count(outputs.spec) << " parameters, "
                << busdep::nn::mac_count(outputs.spec) << " MACs/sample)\n";
      if (!outputs.history.empty()) {
        std::cout << "final train mse: "
                  << busdep::format_double(outputs.history.back().train_mse)
                  << ", final val mse: "
                  << busdep::format_double(outputs.history.back().val_mse) << '\n';
      }
      std::cout << "wrote " << outputs.model_file.string() << " and "
                << outputs.history_file.string() << '\n';
    } else if (*ablate_cmd) {
      for (const auto& text : ablate_specs) {
        ablate_args.specs.push_back(parse_hidden_spec(text));
      }
      ablate_args.coordinate_mode = *busdep::parse_coordinate_mode(ablate_mode);
      const auto outputs = busdep::pipeline::run_ablate(common, ablate_args);
      std::cout << "wrote " << outputs.ablation_file.string() << " ("
                << outputs.rows.size() << " rows)\n";
      std::cout << "selected " << outputs.rows[outputs.selected_row].spec.hidden_to_string()
                << " (fewest parameters within 1.5% of best rmse)\n";
    } else if (*report_cmd) {
      const auto outputs = busdep::pipeline::run_report(common, report_args);
      std::cout << "test rmse_s: " << busdep::format_double(outputs.eval.rmse)
                << ", mae_s: " << busdep::format_double(outputs.eval.mae)
                << ", mape_percent: " << busdep::format_double(outputs.eval.mape.percent)
                << " (excluded " << outputs.eval.mape.excluded << " zero targets)\n";
      std::cout << "wrote report bundle under " << outputs.report_dir.string() << '\n';
    } else if (*predict_cmd) {
      const auto outputs =
          busdep::pipeline::run_predict(common, predict_args, std::cout, std::cerr);
      if (outputs.predicted == 0 && outputs.failed > 0) {
        std::cerr << "all " << outputs.failed << " queries failed\n";
        return 1;
      }
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
