#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace busdep {

/// Shortest decimal text that parses back to the exact same double.
std::string format_double(double v);
std::string format_int(std::int64_t v);

/// Strict full-string parses; nullopt on trailing junk or empty input.
std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

}  // namespace busdep
