#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace busdep {

/// Naive local wall-clock second, stored on the sys_seconds axis. No
/// timezone arithmetic anywhere: deviations are differences of same-day
/// timestamp pairs, so plain wall-clock subtraction is the contract.
using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::year_month_day;

/// "YYYY-MM-DD"
std::optional<Date> parse_date(std::string_view s);
/// "YYYY-MM-DD HH:MM:SS" (a 'T' separator is also accepted)
std::optional<Timestamp> parse_timestamp(std::string_view s);

std::string format_date(const Date& d);
std::string format_timestamp(const Timestamp& t);

bool is_weekend(const Date& d);
Date date_of(const Timestamp& t);
int second_of_day(const Timestamp& t);
Timestamp at_second_of_day(const Date& d, int seconds);

}  // namespace busdep
