#include <doctest.h>

#include <atomic>
#include <set>
#include <sstream>

#include "busdep/csv.hpp"
#include "busdep/numtext.hpp"
#include "busdep/parallel.hpp"
#include "busdep/rng.hpp"
#include "busdep/timeutil.hpp"

using namespace busdep;

TEST_CASE("doubles round-trip through text exactly") {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal(0.0, 1e6) * std::pow(10.0, static_cast<double>(rng.below(20)) - 10.0);
    const auto parsed = parse_double(format_double(v));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == v);
  }
  CHECK(*parse_double("-358.152") == -358.152);
  CHECK(!parse_double("12x").has_value());
  CHECK(!parse_double("").has_value());
  CHECK(!parse_int("1.5").has_value());
  CHECK(*parse_int(" 42 ") == 42);
}

TEST_CASE("timestamp parsing and formatting") {
  const auto ts = parse_timestamp("2023-01-07 08:30:15");
  REQUIRE(ts.has_value());
  CHECK(format_timestamp(*ts) == "2023-01-07 08:30:15");
  CHECK(second_of_day(*ts) == 8 * 3600 + 30 * 60 + 15);

  CHECK(parse_timestamp("2023-01-07T08:30:15").has_value());
  CHECK(!parse_timestamp("2023-01-07 25:00:00").has_value());
  CHECK(!parse_timestamp("2023-02-30 10:00:00").has_value());
  CHECK(!parse_timestamp("garbage").has_value());
  CHECK(!parse_timestamp("2023-01-07").has_value());

  const auto date = parse_date("2024-02-29");  // leap day
  REQUIRE(date.has_value());
  CHECK(format_date(*date) == "2024-02-29");
  CHECK(!parse_date("2023-02-29").has_value());

  // midnight spill: actual past midnight is a later absolute timestamp
  const auto sched = parse_timestamp("2023-01-07 23:58:00");
  const auto actual = parse_timestamp("2023-01-08 00:03:00");
  CHECK((*actual - *sched).count() == 300);
}

TEST_CASE("weekend detection") {
  CHECK(is_weekend(*parse_date("2023-01-07")));   // Saturday
  CHECK(is_weekend(*parse_date("2023-01-08")));   // Sunday
  CHECK(!is_weekend(*parse_date("2023-01-09")));  // Monday
  CHECK(!is_weekend(*parse_date("2023-02-20")));  // Monday (holiday, still workday)
}

TEST_CASE("csv reader handles quoting and preserves raw rows") {
  std::istringstream in("a,b,c\n1,\"x,y\",3\n\"he said \"\"hi\"\"\",2,3\n\nlast,,row\n");
  CsvReader reader(in);
  CsvRow row;

  REQUIRE(reader.next(row));
  CHECK(row.fields == std::vector<std::string>{"a", "b", "c"});
  CHECK(row.line_no == 1);

  REQUIRE(reader.next(row));
  CHECK(row.fields == std::vector<std::string>{"1", "x,y", "3"});
  CHECK(row.raw == "1,\"x,y\",3");

  REQUIRE(reader.next(row));
  CHECK(row.fields[0] == "he said \"hi\"");

  REQUIRE(reader.next(row));  // blank line skipped
  CHECK(row.fields == std::vector<std::string>{"last", "", "row"});
  CHECK(row.line_no == 5);

  CHECK(!reader.next(row));
}

TEST_CASE("csv escape round-trips through the reader") {
  Rng rng(7);
  const std::string alphabet = "ab,\"\n x";
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> fields(1 + rng.below(5));
    for (auto& f : fields) {
      const auto len = rng.below(8);
      for (std::size_t i = 0; i < len; ++i) f += alphabet[rng.below(alphabet.size())];
    }
    // a lone empty field would be skipped as a blank line
    if (fields.size() == 1 && fields[0].empty()) continue;
    std::istringstream in(csv_join(fields) + "\n");
    CsvReader reader(in);
    CsvRow row;
    REQUIRE(reader.next(row));
    CHECK(row.fields == fields);
  }
}

TEST_CASE("rng streams are deterministic and seed-derived") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  CHECK(a.next_u64() != c.next_u64());

  CHECK(derive_seed(1, "train") != derive_seed(1, "split"));
  CHECK(derive_seed(1, "train") != derive_seed(2, "train"));
  CHECK(derive_seed(5, "x", 0) != derive_seed(5, "x", 1));

  Rng bounded(9);
  for (int i = 0; i < 1000; ++i) {
    CHECK(bounded.below(7) < 7);
  }
}

TEST_CASE("parallel_for covers every index exactly once") {
  for (int threads : {1, 2, 4, 7}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) hits[i].fetch_add(1);
    });
    for (const auto& h : hits) CHECK(h.load() == 1);
  }
}
