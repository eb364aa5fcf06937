#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "demand/core_data.hpp"

namespace demand {

struct FixedHoliday {
  unsigned month = 1;
  unsigned day = 1;
  std::string name;
};

std::vector<FixedHoliday> default_fixed_holidays();
std::vector<CovidInterval> default_covid_intervals();

enum class NoiseModel { Poisson, None };

struct SynthConfig {
  Date start = make_date(2011, 1, 1);
  Date end = make_date(2021, 12, 31);
  double base_level = 120.0;
  double annual_growth = 0.03;
  std::array<double, 7> dow_multipliers{1.10, 0.97, 0.92, 0.92, 0.97, 1.02, 1.10};  // Mon..Sun
  double yearly_amplitude = 0.15;
  double yearly_peak_day = 196.0;  // day of year with the seasonal maximum
  double holiday_uplift = 0.30;
  double post_holiday_uplift = 0.11;
  std::map<int, double> covid_suppression{{1, 1.0}, {2, 0.85}, {3, 0.6}, {4, 0.4}};
  std::vector<FixedHoliday> holidays = default_fixed_holidays();
  std::vector<CovidInterval> covid = default_covid_intervals();
  NoiseModel noise = NoiseModel::Poisson;
  std::uint64_t seed = 1;

  /// Throws InvalidConfig naming the offending field.
  void validate() const;
};

struct ComponentRow {
  Date date;
  double base = 0.0;
  double growth = 1.0;
  double dow = 1.0;
  double yearly = 1.0;
  double holiday = 1.0;
  double post_holiday = 1.0;
  double covid = 1.0;
  double expected = 0.0;  // product of the factors above, in that order
  double count = 0.0;
};

struct SynthResult {
  DailySeries series;
  HolidayCalendar holidays;
  CovidSchedule covid;
  std::vector<ComponentRow> components;
};

SynthResult generate(const SynthConfig& config);

void write_components_csv(std::ostream& out, const std::vector<ComponentRow>& rows);

}  // namespace demand
