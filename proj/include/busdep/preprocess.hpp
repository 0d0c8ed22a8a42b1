#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "busdep/ingest.hpp"

namespace busdep {

/// Mean/population-sigma band used for outlier detection:
/// low = mean - k*std_dev, high = mean + k*std_dev.
struct DeviationStats {
  double mean = 0;
  double std_dev = 0;  // population (divide by n)
  double k = 0;
  double low = 0;
  double high = 0;
  std::size_t n = 0;
};

/// Signed departure deviation in seconds; positive = late.
double deviation(const DepartureRecord& record);

DeviationStats stats_from_moments(double mean, double std_dev, double k, std::size_t n);
DeviationStats outlier_thresholds(std::span<const double> deviations, double k);

struct FilterResult {
  std::vector<DepartureRecord> kept;
  std::size_t dropped = 0;
};

/// Keeps records with low <= deviation <= high (boundaries inclusive).
FilterResult filter_outliers(std::vector<DepartureRecord> records,
                             const DeviationStats& stats);

struct Trip {
  std::string half_trip_id;
  std::string route_id;
  Direction direction = Direction::inbound;
  std::vector<DepartureRecord> records;  // strictly ascending timepoint_order
};

struct AssembleResult {
  std::vector<Trip> trips;  // ordered by half_trip_id
  std::size_t duplicate_order_warnings = 0;
};

/// Groups by half_trip_id and sorts by timepoint_order. Duplicate
/// (half_trip_id, timepoint_order) pairs keep the first occurrence.
AssembleResult assemble_trips(std::vector<DepartureRecord> records);

struct StopView {
  std::string stop_id;
  int timepoint_order = 1;
  PointType point_type = PointType::midpoint;
  Timestamp scheduled_time{};
  Timestamp actual_time{};
  std::optional<double> scheduled_headway;
};

/// A consecutive (current, next) stop pair within one half-trip; the unit
/// of supervised learning. next_deviation is the target.
struct TripSegment {
  std::string half_trip_id;
  std::string route_id;
  Direction direction = Direction::inbound;
  Date service_date{};
  StopView current;
  StopView next;
  double current_deviation = 0;
  double next_deviation = 0;
  bool order_gap = false;  // consecutive sorted records, non-consecutive orders
};

/// A trip of L >= 2 stops yields L-1 segments; 1-stop trips yield none.
std::vector<TripSegment> segment_trips(const std::vector<Trip>& trips);

struct DatasetStats {
  std::size_t n = 0;
  std::size_t trips = 0;
  std::size_t routes = 0;
  std::size_t stops = 0;
  double mean_deviation = 0;
  double std_dev = 0;
  double delayed_fraction = 0;  // share with deviation > 0
};

DatasetStats dataset_stats(std::span<const DepartureRecord> records);

void write_segments(std::ostream& out, std::span<const TripSegment> segments,
                    char delimiter = ',');

struct SegmentsParseResult {
  std::vector<TripSegment> segments;
  std::vector<Reject> rejects;
};

/// strict: every column must be present (the preprocess-stage contract).
/// query: prediction inputs — next actual time and the deviation columns
/// may be empty (the next stop has not departed yet).
enum class SegmentsMode { strict, query };

SegmentsParseResult read_segments(std::istream& in, const ParseConfig& config = {},
                                  SegmentsMode mode = SegmentsMode::strict);

}  // namespace busdep
