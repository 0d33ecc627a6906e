#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace bnq {

using Day = std::chrono::sys_days;

/// Parses YYYY-MM-DD, optionally followed by a time part (ignored).
/// Throws ParseError(0, ...) on malformed or impossible dates.
Day parse_date(std::string_view text);
std::string format_date(Day day);
inline long long days_since_epoch(Day day) { return day.time_since_epoch().count(); }

}  // namespace bnq
