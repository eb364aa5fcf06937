#include "demand/date.hpp"

#include <charconv>
#include <cstdio>

#include "demand/error.hpp"

namespace demand {

namespace {

bool parse_fixed(std::string_view s, int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

Date parse_date(std::string_view text) {
  auto fail = [&] { throw Error(ErrorCode::UnparseableDate, "'" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') fail();
  int y = 0, m = 0, d = 0;
  if (!parse_fixed(text.substr(0, 4), y) || !parse_fixed(text.substr(5, 2), m) ||
      !parse_fixed(text.substr(8, 2), d))
    fail();
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                        std::chrono::day{unsigned(d)}};
  if (!ymd.ok()) fail();
  return Date{ymd};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                unsigned(ymd.day()));
  return buf;
}

int weekday_index(Date d) {
  return int(std::chrono::weekday{d}.iso_encoding()) - 1;
}

int year_of(Date d) { return int(std::chrono::year_month_day{d}.year()); }

int day_of_year(Date d) {
  const auto y = std::chrono::year_month_day{d}.year();
  return int((d - Date{y / 1 / 1}).count()) + 1;
}

int iso_week(Date d) {
  // The ISO week belongs to the year containing its Thursday.
  const Date thursday = d + Days{3 - weekday_index(d)};
  const auto y = std::chrono::year_month_day{thursday}.year();
  return int((thursday - Date{y / 1 / 1}).count()) / 7 + 1;
}

}  // namespace demand
