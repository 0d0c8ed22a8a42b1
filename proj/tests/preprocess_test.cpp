#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "busdep/preprocess.hpp"
#include "busdep/rng.hpp"

using namespace busdep;

namespace {

DepartureRecord record_with(const std::string& half_trip, int order,
                            const std::string& scheduled, const std::string& actual,
                            const std::string& route = "57",
                            const std::string& stop = "101") {
  DepartureRecord rec;
  rec.service_date = *parse_date(scheduled.substr(0, 10));
  rec.route_id = route;
  rec.direction = Direction::inbound;
  rec.half_trip_id = half_trip;
  rec.stop_id = stop;
  rec.timepoint_id = "tp" + stop;
  rec.timepoint_order = order;
  rec.point_type = PointType::midpoint;
  rec.standard_type = StandardType::schedule;
  rec.scheduled_time = *parse_timestamp(scheduled);
  rec.actual_time = *parse_timestamp(actual);
  return rec;
}

DepartureRecord with_deviation(double seconds, const std::string& half_trip = "T",
                               int order = 1) {
  auto rec = record_with(half_trip, order, "2023-01-09 10:00:00", "2023-01-09 10:00:00");
  rec.actual_time = rec.scheduled_time + std::chrono::seconds{static_cast<long long>(seconds)};
  return rec;
}

}  // namespace

TEST_CASE("deviation is a signed difference in seconds") {
  CHECK(deviation(record_with("T", 1, "2023-01-09 10:00:00", "2023-01-09 10:00:00")) == 0);
  CHECK(deviation(record_with("T", 1, "2023-01-09 10:00:00", "2023-01-09 10:02:30")) == 150);
  CHECK(deviation(record_with("T", 1, "2023-01-09 10:00:00", "2023-01-09 09:58:30")) == -90);
}

TEST_CASE("outlier thresholds from moments match the reference numbers") {
  const auto stats = stats_from_moments(261.84, 309.996, 2, 1000);
  CHECK(stats.high == doctest::Approx(881.832).epsilon(1e-9));
  CHECK(stats.low == doctest::Approx(-358.152).epsilon(1e-9));
}

TEST_CASE("outlier thresholds use the population standard deviation") {
  SUBCASE("hand-computed example") {
    const std::vector<double> devs = {0, 10, 20};
    const auto stats = outlier_thresholds(devs, 2);
    CHECK(stats.mean == doctest::Approx(10.0));
    CHECK(stats.std_dev == doctest::Approx(8.16497).epsilon(1e-5));
    CHECK(stats.low == doctest::Approx(-6.32993).epsilon(1e-5));
    CHECK(stats.high == doctest::Approx(26.32993).epsilon(1e-5));
    CHECK(stats.n == 3);
  }
  SUBCASE("zero variance collapses the band") {
    const std::vector<double> devs = {5, 5, 5};
    const auto stats = outlier_thresholds(devs, 2);
    CHECK(stats.mean == 5);
    CHECK(stats.std_dev == 0);
    CHECK(stats.low == 5);
    CHECK(stats.high == 5);
  }
  SUBCASE("empty input is an error") {
    CHECK_THROWS_AS(outlier_thresholds({}, 2), std::invalid_argument);
  }
  SUBCASE("order invariance") {
    std::vector<double> devs;
    Rng rng(11);
    for (int i = 0; i < 500; ++i) devs.push_back(rng.normal(200, 80));
    const auto base = outlier_thresholds(devs, 2);
    std::vector<double> shuffled = devs;
    rng.shuffle(shuffled);
    const auto again = outlier_thresholds(shuffled, 2);
    CHECK(base.mean == doctest::Approx(again.mean).epsilon(1e-12));
    CHECK(base.std_dev == doctest::Approx(again.std_dev).epsilon(1e-12));
  }
}

TEST_CASE("outlier filter keeps boundary values and partitions the input") {
  SUBCASE("boundary inclusive") {
    const auto stats = stats_from_moments(0, 10, 2, 3);  // band [-20, 20]
    std::vector<DepartureRecord> records = {with_deviation(20), with_deviation(-20),
                                            with_deviation(21), with_deviation(-25)};
    const auto result = filter_outliers(records, stats);
    CHECK(result.kept.size() == 2);
    CHECK(result.dropped == 2);
  }
  SUBCASE("planted extremes get dropped, verified by brute force") {
    std::vector<DepartureRecord> records;
    Rng rng(3);
    for (int i = 0; i < 8; ++i) {
      records.push_back(with_deviation(std::round(rng.normal(100, 30)), "T", i + 1));
    }
    records.push_back(with_deviation(5000, "T", 9));
    records.push_back(with_deviation(-4000, "T", 10));

    std::vector<double> devs;
    for (const auto& rec : records) devs.push_back(deviation(rec));
    const auto stats = outlier_thresholds(devs, 2);
    const auto result = filter_outliers(records, stats);

    // brute-force recomputation of the kept set
    std::size_t kept = 0;
    for (double d : devs) {
      if (d >= stats.low && d <= stats.high) ++kept;
    }
    CHECK(result.kept.size() == kept);
    CHECK(result.kept.size() + result.dropped == records.size());
    CHECK(result.kept.size() == 8);  // the two extremes fall outside
    for (const auto& rec : result.kept) {
      const double d = deviation(rec);
      CHECK(d >= stats.low);
      CHECK(d <= stats.high);
    }
  }
}

TEST_CASE("trips assemble sorted by timepoint order") {
  std::vector<DepartureRecord> records = {
      record_with("B", 2, "2023-01-09 10:10:00", "2023-01-09 10:11:00"),
      record_with("B", 1, "2023-01-09 10:00:00", "2023-01-09 10:01:00"),
      record_with("B", 3, "2023-01-09 10:20:00", "2023-01-09 10:21:00"),
      record_with("A", 1, "2023-01-09 09:00:00", "2023-01-09 09:00:30"),
  };
  const auto result = assemble_trips(records);
  REQUIRE(result.trips.size() == 2);
  CHECK(result.trips[0].half_trip_id == "A");
  CHECK(result.trips[1].half_trip_id == "B");
  const auto& orders = result.trips[1].records;
  REQUIRE(orders.size() == 3);
  CHECK(orders[0].timepoint_order == 1);
  CHECK(orders[1].timepoint_order == 2);
  CHECK(orders[2].timepoint_order == 3);
  CHECK(result.duplicate_order_warnings == 0);
}

TEST_CASE("duplicate timepoint orders keep the first occurrence") {
  auto first = record_with("T", 2, "2023-01-09 10:00:00", "2023-01-09 10:01:00", "57", "FIRST");
  auto second = record_with("T", 2, "2023-01-09 10:00:00", "2023-01-09 10:02:00", "57", "SECOND");
  const auto result = assemble_trips({first, second});
  REQUIRE(result.trips.size() == 1);
  REQUIRE(result.trips[0].records.size() == 1);
  CHECK(result.trips[0].records[0].stop_id == "FIRST");
  CHECK(result.duplicate_order_warnings == 1);
}

TEST_CASE("segmentation yields L-1 segments per multi-stop trip") {
  const auto make_trip = [](const std::string& id, int stops) {
    std::vector<DepartureRecord> records;
    for (int i = 1; i <= stops; ++i) {
      auto rec = record_with(id, i, "2023-01-09 10:00:00", "2023-01-09 10:01:00");
      rec.scheduled_time += std::chrono::minutes{5 * i};
      rec.actual_time += std::chrono::minutes{5 * i};
      records.push_back(rec);
    }
    return records;
  };

  std::vector<DepartureRecord> records;
  for (const auto& [id, stops] : std::vector<std::pair<std::string, int>>{
           {"one", 1}, {"three", 3}, {"fourteen", 14}}) {
    auto batch = make_trip(id, stops);
    records.insert(records.end(), batch.begin(), batch.end());
  }
  const auto trips = assemble_trips(records).trips;
  const auto segments = segment_trips(trips);

  // sum over trips of max(L-1, 0)
  std::size_t expected = 0;
  for (const auto& trip : trips) {
    if (trip.records.size() >= 2) expected += trip.records.size() - 1;
  }
  CHECK(expected == 0 + 2 + 13);
  CHECK(segments.size() == expected);

  for (const auto& seg : segments) {
    CHECK(seg.next.timepoint_order == seg.current.timepoint_order + 1);
    CHECK(!seg.order_gap);
    CHECK(seg.current_deviation == 60);
  }
}

TEST_CASE("order gaps still pair consecutive sorted records, flagged") {
  std::vector<DepartureRecord> records = {
      record_with("G", 1, "2023-01-09 10:00:00", "2023-01-09 10:01:00"),
      record_with("G", 3, "2023-01-09 10:10:00", "2023-01-09 10:12:00"),
  };
  const auto segments = segment_trips(assemble_trips(records).trips);
  REQUIRE(segments.size() == 1);
  CHECK(segments[0].order_gap);
  CHECK(segments[0].current.timepoint_order == 1);
  CHECK(segments[0].next.timepoint_order == 3);
  CHECK(segments[0].next_deviation == 120);
}

TEST_CASE("dataset stats") {
  SUBCASE("delayed fraction counts strictly positive deviations") {
    std::vector<DepartureRecord> records = {
        with_deviation(10, "A", 1), with_deviation(20, "A", 2),
        with_deviation(5, "B", 1), with_deviation(-5, "B", 2)};
    const auto stats = dataset_stats(records);
    CHECK(stats.delayed_fraction == doctest::Approx(0.75));
    CHECK(stats.n == 4);
    CHECK(stats.trips == 2);
    CHECK(stats.routes == 1);
    CHECK(stats.mean_deviation == doctest::Approx(7.5));
  }
  SUBCASE("all on time") {
    std::vector<DepartureRecord> records = {with_deviation(0, "A", 1),
                                            with_deviation(0, "A", 2)};
    CHECK(dataset_stats(records).delayed_fraction == 0);
  }
  SUBCASE("empty input is an error") {
    CHECK_THROWS_AS(dataset_stats({}), std::invalid_argument);
  }
}

TEST_CASE("segments file round-trips") {
  std::vector<DepartureRecord> records = {
      record_with("R", 1, "2023-01-09 10:00:00", "2023-01-09 10:01:00", "66", "A"),
      record_with("R", 2, "2023-01-09 10:05:00", "2023-01-09 10:07:00", "66", "B"),
      record_with("R", 3, "2023-01-09 10:10:00", "2023-01-09 10:09:30", "66", "C"),
  };
  records[0].scheduled_headway = 600;
  const auto segments = segment_trips(assemble_trips(records).trips);
  REQUIRE(segments.size() == 2);

  std::ostringstream out;
  write_segments(out, segments);
  std::istringstream in(out.str());
  const auto parsed = read_segments(in);
  CHECK(parsed.rejects.empty());
  REQUIRE(parsed.segments.size() == 2);
  CHECK(parsed.segments[0].current.stop_id == "A");
  CHECK(parsed.segments[0].current.scheduled_headway == 600.0);
  CHECK(!parsed.segments[0].next.scheduled_headway.has_value());
  CHECK(parsed.segments[0].current_deviation == 60);
  CHECK(parsed.segments[0].next_deviation == 120);
  CHECK(parsed.segments[1].next_deviation == -30);
  CHECK(parsed.segments[1].route_id == "66");

  // independent recomputation of current_deviation from the stored times
  for (const auto& seg : parsed.segments) {
    CHECK(seg.current_deviation ==
          static_cast<double>((seg.current.actual_time - seg.current.scheduled_time).count()));
  }
}

TEST_CASE("query-mode segments tolerate unknown targets") {
  std::istringstream in(
      "half_trip_id,route_id,direction,service_date,cur_stop_id,cur_timepoint_order,"
      "cur_point_type,cur_scheduled_time,cur_actual_time,cur_scheduled_headway,"
      "next_stop_id,next_timepoint_order,next_point_type,next_scheduled_time,"
      "next_actual_time,next_scheduled_headway,current_deviation_s,next_deviation_s,"
      "order_gap\n"
      "T1,57,inbound,2023-01-09,A,1,startpoint,2023-01-09 10:00:00,"
      "2023-01-09 10:01:00,,B,2,midpoint,2023-01-09 10:05:00,,,,,0\n");
  const auto strict = [&] {
    std::istringstream copy(in.str());
    return read_segments(copy);
  }();
  CHECK(strict.segments.empty());
  CHECK(strict.rejects.size() == 1);

  std::istringstream again(in.str());
  const auto query = read_segments(again, {}, SegmentsMode::query);
  CHECK(query.rejects.empty());
  REQUIRE(query.segments.size() == 1);
  CHECK(query.segments[0].current_deviation == 60);  // recomputed from times
  CHECK(query.segments[0].next_deviation == 0);
}
