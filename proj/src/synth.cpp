#include "demand/synth.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

#include "demand/csv.hpp"
#include "demand/error.hpp"

namespace demand {

std::vector<FixedHoliday> default_fixed_holidays() {
  return {{1, 1, "New Year's Day"},  {1, 2, "Day after New Year's Day"},
          {2, 6, "Waitangi Day"},    {4, 25, "ANZAC Day"},
          {12, 25, "Christmas Day"}, {12, 26, "Boxing Day"}};
}

std::vector<CovidInterval> default_covid_intervals() {
  return {
      {make_date(2020, 3, 26), make_date(2020, 4, 27), 4},
      {make_date(2020, 4, 28), make_date(2020, 5, 13), 3},
      {make_date(2020, 5, 14), make_date(2020, 6, 8), 2},
      {make_date(2020, 8, 12), make_date(2020, 8, 30), 3},
      {make_date(2020, 8, 31), make_date(2020, 10, 7), 2},
      {make_date(2021, 2, 8), make_date(2021, 3, 7), 4},
      {make_date(2021, 3, 8), make_date(2021, 3, 21), 3},
      {make_date(2021, 8, 18), make_date(2021, 9, 21), 4},
      {make_date(2021, 9, 22), make_date(2021, 12, 2), 3},
      {make_date(2021, 12, 3), make_date(2021, 12, 31), 2},
  };
}

void SynthConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(ErrorCode::InvalidConfig, "synth." + field + ": " + why);
  };
  if (end < start) fail("end", "must not precede start");
  if (!(base_level > 0.0)) fail("base_level", "must be > 0");
  if (!(annual_growth > -1.0)) fail("annual_growth", "must be > -1");
  for (double m : dow_multipliers)
    if (!(m > 0.0)) fail("dow_multipliers", "must be > 0");
  if (!(std::abs(yearly_amplitude) < 1.0)) fail("yearly_amplitude", "must be in (-1, 1)");
  if (!(holiday_uplift > -1.0)) fail("holiday_uplift", "must be > -1");
  if (!(post_holiday_uplift > -1.0)) fail("post_holiday_uplift", "must be > -1");
  for (int level = 1; level <= 4; ++level) {
    const auto it = covid_suppression.find(level);
    if (it == covid_suppression.end()) fail("covid_suppression", "missing level " + std::to_string(level));
    if (!(it->second > 0.0)) fail("covid_suppression", "multipliers must be > 0");
  }
  for (const auto& h : holidays)
    if (h.month < 1 || h.month > 12 || h.day < 1 || h.day > 31)
      fail("holidays", "invalid month/day for " + h.name);
}

SynthResult generate(const SynthConfig& cfg) {
  cfg.validate();
  HolidayCalendar cal;
  for (int y = year_of(cfg.start); y <= year_of(cfg.end); ++y)
    for (const auto& h : cfg.holidays) {
      const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{h.month},
                                            std::chrono::day{h.day}};
      if (!ymd.ok()) continue;
      const Date d{ymd};
      if (d >= cfg.start && d <= cfg.end) cal.add(d, h.name);
    }
  CovidSchedule covid(cfg.covid);

  std::mt19937_64 rng(cfg.seed);
  const long n = days_between(cfg.start, cfg.end) + 1;
  std::vector<double> counts(static_cast<std::size_t>(n));
  std::vector<ComponentRow> rows(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const Date d = cfg.start + Days{i};
    ComponentRow& c = rows[std::size_t(i)];
    c.date = d;
    c.base = cfg.base_level;
    c.growth = std::pow(1.0 + cfg.annual_growth, double(i) / 365.25);
    c.dow = cfg.dow_multipliers[std::size_t(weekday_index(d))];
    c.yearly = 1.0 + cfg.yearly_amplitude *
                         std::cos(2.0 * std::numbers::pi *
                                  (double(day_of_year(d)) - cfg.yearly_peak_day) / 365.25);
    const bool holiday = cal.contains(d);
    c.holiday = holiday ? 1.0 + cfg.holiday_uplift : 1.0;
    c.post_holiday = !holiday && cal.contains(d - Days{1}) ? 1.0 + cfg.post_holiday_uplift : 1.0;
    c.covid = cfg.covid_suppression.at(covid.level_at(d));
    c.expected = c.base * c.growth * c.dow * c.yearly * c.holiday * c.post_holiday * c.covid;
    if (cfg.noise == NoiseModel::Poisson) {
      std::poisson_distribution<long> draw(c.expected);
      c.count = double(draw(rng));
    } else {
      c.count = c.expected;
    }
    counts[std::size_t(i)] = c.count;
  }
  return {DailySeries(cfg.start, std::move(counts)), std::move(cal), std::move(covid),
          std::move(rows)};
}

void write_components_csv(std::ostream& out, const std::vector<ComponentRow>& rows) {
  out << "date,base,growth,dow,yearly,holiday,post_holiday,covid,expected,count\n";
  for (const auto& r : rows) {
    out << format_date(r.date);
    for (double v : {r.base, r.growth, r.dow, r.yearly, r.holiday, r.post_holiday, r.covid,
                     r.expected, r.count})
      out << ',' << csv::format_number(v);
    out << '\n';
  }
}

}  // namespace demand
