#include "busdep/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>

#include "busdep/csv.hpp"
#include "busdep/numtext.hpp"

namespace busdep {

double deviation(const DepartureRecord& record) {
  return static_cast<double>((record.actual_time - record.scheduled_time).count());
}

DeviationStats stats_from_moments(double mean, double std_dev, double k, std::size_t n) {
  if (std_dev < 0) throw std::invalid_argument("std_dev must be non-negative");
  DeviationStats s;
  s.mean = mean;
  s.std_dev = std_dev;
  s.k = k;
  s.low = mean - k * std_dev;
  s.high = mean + k * std_dev;
  s.n = n;
  return s;
}

DeviationStats outlier_thresholds(std::span<const double> deviations, double k) {
  if (deviations.empty()) {
    throw std::invalid_argument("outlier_thresholds: empty deviation list");
  }
  double sum = 0;
  for (double d : deviations) sum += d;
  const double mean = sum / static_cast<double>(deviations.size());
  double sq = 0;
  for (double d : deviations) sq += (d - mean) * (d - mean);
  const double var = sq / static_cast<double>(deviations.size());
  return stats_from_moments(mean, std::sqrt(var), k, deviations.size());
}

FilterResult filter_outliers(std::vector<DepartureRecord> records,
                             const DeviationStats& stats) {
  FilterResult result;
  result.kept.reserve(records.size());
  for (auto& rec : records) {
    const double d = deviation(rec);
    if (d >= stats.low && d <= stats.high) {
      result.kept.push_back(std::move(rec));
    } else {
      ++result.dropped;
    }
  }
  return result;
}

AssembleResult assemble_trips(std::vector<DepartureRecord> records) {
  std::map<std::string, std::vector<DepartureRecord>> groups;
  for (auto& rec : records) {
    groups[rec.half_trip_id].push_back(std::move(rec));
  }

  AssembleResult result;
  result.trips.reserve(groups.size());
  for (auto& [half_trip_id, group] : groups) {
    std::stable_sort(group.begin(), group.end(),
                     [](const DepartureRecord& a, const DepartureRecord& b) {
                       return a.timepoint_order < b.timepoint_order;
                     });
    Trip trip;
    trip.half_trip_id = half_trip_id;
    trip.route_id = group.front().route_id;
    trip.direction = group.front().direction;
    trip.records.reserve(group.size());
    for (auto& rec : group) {
      if (!trip.records.empty() &&
          trip.records.back().timepoint_order == rec.timepoint_order) {
        ++result.duplicate_order_warnings;  // keep the first occurrence
        continue;
      }
      trip.records.push_back(std::move(rec));
    }
    result.trips.push_back(std::move(trip));
  }
  return result;
}

namespace {

StopView stop_view(const DepartureRecord& rec) {
  return StopView{rec.stop_id,        rec.timepoint_order, rec.point_type,
                  rec.scheduled_time, rec.actual_time,     rec.scheduled_headway};
}

}  // namespace

std::vector<TripSegment> segment_trips(const std::vector<Trip>& trips) {
  std::vector<TripSegment> segments;
  for (const auto& trip : trips) {
    if (trip.records.size() < 2) continue;
    for (std::size_t i = 0; i + 1 < trip.records.size(); ++i) {
      const auto& cur = trip.records[i];
      const auto& nxt = trip.records[i + 1];
      TripSegment seg;
      seg.half_trip_id = trip.half_trip_id;
      seg.route_id = trip.route_id;
      seg.direction = trip.direction;
      seg.service_date = cur.service_date;
      seg.current = stop_view(cur);
      seg.next = stop_view(nxt);
      seg.current_deviation = deviation(cur);
      seg.next_deviation = deviation(nxt);
      seg.order_gap = nxt.timepoint_order != cur.timepoint_order + 1;
      segments.push_back(std::move(seg));
    }
  }
  return segments;
}

DatasetStats dataset_stats(std::span<const DepartureRecord> records) {
  if (records.empty()) {
    throw std::invalid_argument("dataset_stats: empty record set");
  }
  DatasetStats stats;
  stats.n = records.size();

  std::set<std::string> trips, routes, stops;
  double sum = 0;
  std::size_t delayed = 0;
  for (const auto& rec : records) {
    trips.insert(rec.half_trip_id);
    routes.insert(rec.route_id);
    stops.insert(rec.stop_id);
    const double d = deviation(rec);
    sum += d;
    if (d > 0) ++delayed;
  }
  stats.trips = trips.size();
  stats.routes = routes.size();
  stats.stops = stops.size();
  stats.mean_deviation = sum / static_cast<double>(records.size());

  double sq = 0;
  for (const auto& rec : records) {
    const double d = deviation(rec) - stats.mean_deviation;
    sq += d * d;
  }
  stats.std_dev = std::sqrt(sq / static_cast<double>(records.size()));
  stats.delayed_fraction = static_cast<double>(delayed) / static_cast<double>(records.size());
  return stats;
}

namespace {

constexpr std::array<std::string_view, 19> kSegmentColumns = {
    "half_trip_id",        "route_id",
    "direction",           "service_date",
    "cur_stop_id",         "cur_timepoint_order",
    "cur_point_type",      "cur_scheduled_time",
    "cur_actual_time",     "cur_scheduled_headway",
    "next_stop_id",        "next_timepoint_order",
    "next_point_type",     "next_scheduled_time",
    "next_actual_time",    "next_scheduled_headway",
    "current_deviation_s", "next_deviation_s",
    "order_gap"};

std::string optional_double_text(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

}  // namespace

void write_segments(std::ostream& out, std::span<const TripSegment> segments,
                    char delimiter) {
  std::vector<std::string> fields(kSegmentColumns.begin(), kSegmentColumns.end());
  out << csv_join(fields, delimiter) << '\n';
  for (const auto& seg : segments) {
    fields = {
        seg.half_trip_id,
        seg.route_id,
        std::string(to_string(seg.direction)),
        format_date(seg.service_date),
        seg.current.stop_id,
        format_int(seg.current.timepoint_order),
        std::string(to_string(seg.current.point_type)),
        format_timestamp(seg.current.scheduled_time),
        format_timestamp(seg.current.actual_time),
        optional_double_text(seg.current.scheduled_headway),
        seg.next.stop_id,
        format_int(seg.next.timepoint_order),
        std::string(to_string(seg.next.point_type)),
        format_timestamp(seg.next.scheduled_time),
        format_timestamp(seg.next.actual_time),
        optional_double_text(seg.next.scheduled_headway),
        format_double(seg.current_deviation),
        format_double(seg.next_deviation),
        seg.order_gap ? "1" : "0",
    };
    out << csv_join(fields, delimiter) << '\n';
  }
}

SegmentsParseResult read_segments(std::istream& in, const ParseConfig& config,
                                  SegmentsMode mode) {
  CsvReader reader(in, config.delimiter);
  CsvRow row;
  if (!reader.next(row)) {
    throw std::runtime_error("segments input is empty: header row required");
  }
  // strict header: this file is produced by write_segments
  if (row.fields.size() != kSegmentColumns.size()) {
    throw std::runtime_error("segments header has wrong column count");
  }
  for (std::size_t i = 0; i < kSegmentColumns.size(); ++i) {
    if (row.fields[i] != kSegmentColumns[i]) {
      throw std::runtime_error("segments header mismatch at column " +
                               format_int(static_cast<std::int64_t>(i)) + ": expected " +
                               std::string(kSegmentColumns[i]));
    }
  }

  SegmentsParseResult result;
  const auto reject = [&](const CsvRow& r, std::string reason) {
    result.rejects.push_back({r.line_no, std::move(reason), r.raw});
  };

  while (reader.next(row)) {
    if (row.fields.size() != kSegmentColumns.size()) {
      reject(row, "wrong_field_count");
      continue;
    }
    TripSegment seg;
    seg.half_trip_id = row.fields[0];
    seg.route_id = row.fields[1];

    const auto direction = parse_direction(row.fields[2]);
    const auto service_date = parse_date(row.fields[3]);
    if (!direction || !service_date) {
      reject(row, !direction ? "bad_direction" : "bad_service_date");
      continue;
    }
    seg.direction = *direction;
    seg.service_date = *service_date;

    const auto parse_view = [&](std::size_t base, StopView& view,
                                bool actual_optional) -> const char* {
      view.stop_id = row.fields[base];
      if (view.stop_id.empty()) return "empty_stop_id";
      const auto order = parse_int(row.fields[base + 1]);
      if (!order || *order < 1) return "bad_timepoint_order";
      view.timepoint_order = static_cast<int>(*order);
      const auto pt = parse_point_type(row.fields[base + 2]);
      if (!pt) return "bad_point_type";
      view.point_type = *pt;
      const auto sched = parse_timestamp(row.fields[base + 3]);
      if (!sched) return "bad_scheduled_time";
      view.scheduled_time = *sched;
      if (actual_optional && trim(row.fields[base + 4]).empty()) {
        view.actual_time = *sched;  // placeholder; the target is unknown
      } else {
        const auto actual = parse_timestamp(row.fields[base + 4]);
        if (!actual) return "bad_actual_time";
        view.actual_time = *actual;
      }
      view.scheduled_headway = parse_double(row.fields[base + 5]);
      return nullptr;
    };

    const bool query_mode = mode == SegmentsMode::query;
    if (const char* err = parse_view(4, seg.current, false)) {
      reject(row, err);
      continue;
    }
    if (const char* err = parse_view(10, seg.next, query_mode)) {
      reject(row, err);
      continue;
    }

    const auto cur_dev_text = trim(row.fields[16]);
    if (query_mode && cur_dev_text.empty()) {
      seg.current_deviation = static_cast<double>(
          (seg.current.actual_time - seg.current.scheduled_time).count());
    } else {
      const auto cur_dev = parse_double(cur_dev_text);
      if (!cur_dev) {
        reject(row, "bad_deviation");
        continue;
      }
      seg.current_deviation = *cur_dev;
    }
    const auto next_dev_text = trim(row.fields[17]);
    if (query_mode && next_dev_text.empty()) {
      seg.next_deviation = 0.0;
    } else {
      const auto next_dev = parse_double(next_dev_text);
      if (!next_dev) {
        reject(row, "bad_deviation");
        continue;
      }
      seg.next_deviation = *next_dev;
    }
    seg.order_gap = row.fields[18] == "1";

    result.segments.push_back(std::move(seg));
  }
  return result;
}

}  // namespace busdep
