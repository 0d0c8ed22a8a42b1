#include "busdep/timeutil.hpp"

#include <charconv>
#include <cstdio>

namespace busdep {

namespace {

bool parse_fixed_uint(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  const char* first = s.data() + pos;
  const char* last = first + len;
  for (const char* p = first; p != last; ++p) {
    if (*p < '0' || *p > '9') return false;
  }
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && p == last;
}

}  // namespace

std::optional<Date> parse_date(std::string_view s) {
  int y = 0, m = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  if (!parse_fixed_uint(s, 0, 4, y) || !parse_fixed_uint(s, 5, 2, m) ||
      !parse_fixed_uint(s, 8, 2, d)) {
    return std::nullopt;
  }
  const Date ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                 std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
  if (s.size() != 19 || (s[10] != ' ' && s[10] != 'T')) return std::nullopt;
  const auto date = parse_date(s.substr(0, 10));
  if (!date) return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (s[13] != ':' || s[16] != ':') return std::nullopt;
  if (!parse_fixed_uint(s, 11, 2, hh) || !parse_fixed_uint(s, 14, 2, mm) ||
      !parse_fixed_uint(s, 17, 2, ss)) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
  return at_second_of_day(*date, hh * 3600 + mm * 60 + ss);
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

std::string format_timestamp(const Timestamp& t) {
  const int sod = second_of_day(t);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%s %02d:%02d:%02d", format_date(date_of(t)).c_str(),
                sod / 3600, (sod / 60) % 60, sod % 60);
  return buf;
}

bool is_weekend(const Date& d) {
  const std::chrono::weekday wd{std::chrono::sys_days{d}};
  return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

Date date_of(const Timestamp& t) {
  return Date{std::chrono::floor<std::chrono::days>(t)};
}

int second_of_day(const Timestamp& t) {
  const auto midnight = std::chrono::floor<std::chrono::days>(t);
  return static_cast<int>((t - midnight).count());
}

Timestamp at_second_of_day(const Date& d, int seconds) {
  return std::chrono::sys_days{d} + std::chrono::seconds{seconds};
}

}  // namespace busdep
