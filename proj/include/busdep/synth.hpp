#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace busdep::synth {

enum class Process { linear, nonlinear };

/// Desk-scale synthetic dataset with a known ground-truth deviation
/// process. The linear process is exactly expressible by a linear model
/// on the encoded features; the nonlinear one adds a route-dependent
/// distance slope and a rush*distance interaction, which are not.
struct SynthConfig {
  int n_routes = 8;
  int stops_min = 2;
  int stops_max = 14;
  int n_trips = 100;
  double noise_std = 30.0;  // seconds
  std::uint64_t seed = 0;
  Process process = Process::nonlinear;
};

struct SynthFiles {
  std::filesystem::path departures;
  std::filesystem::path weather;
  std::filesystem::path stops;
  std::filesystem::path ground_truth;
};

/// Writes departures.csv, weather.csv, stops.csv and ground_truth.csv into
/// dir. Byte-identical for identical (config, dir-independent content).
SynthFiles generate(const SynthConfig& config, const std::filesystem::path& dir);

/// One segment's noise-free target: keyed by the current stop's
/// timepoint_order within its half-trip.
struct GroundTruthRow {
  std::string half_trip_id;
  int segment_order = 0;
  double true_deviation = 0;  // seconds, full precision
};

std::vector<GroundTruthRow> read_ground_truth(std::istream& in);
std::vector<GroundTruthRow> read_ground_truth(const std::filesystem::path& path);

struct PredictionRow {
  std::string half_trip_id;
  int segment_order = 0;
  double value = 0;
};

/// Root-mean-square difference between predictions and the matching
/// ground-truth rows. Independent arithmetic from the evaluation metrics;
/// throws when a prediction has no matching segment identity.
double oracle_rmse(std::span<const GroundTruthRow> ground_truth,
                   std::span<const PredictionRow> predictions);

}  // namespace busdep::synth
