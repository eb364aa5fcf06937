#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace demand {

using Date = std::chrono::sys_days;
using Days = std::chrono::days;

/// Parses a strict YYYY-MM-DD string. Throws Error(UnparseableDate).
Date parse_date(std::string_view text);
std::string format_date(Date d);

inline Date make_date(int y, unsigned m, unsigned d) {
  return Date{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}};
}

inline long days_between(Date from, Date to) { return (to - from).count(); }

/// ISO-8601 week number (1..53).
int iso_week(Date d);

/// Day of week with Monday = 0 .. Sunday = 6.
int weekday_index(Date d);

/// 1-based ordinal day of the year.
int day_of_year(Date d);

int year_of(Date d);

}  // namespace demand
