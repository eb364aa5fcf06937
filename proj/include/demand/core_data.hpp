#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "demand/date.hpp"

namespace demand {

struct DailyObservation {
  Date date;
  double count = 0.0;
};

/// Gap-free, date-indexed daily demand. Immutable after construction.
class DailySeries {
 public:
  /// Counts for consecutive days starting at `start`. Throws on empty input or
  /// negative / non-finite counts.
  DailySeries(Date start, std::vector<double> counts);

  Date start() const noexcept { return start_; }
  Date end() const noexcept { return start_ + Days{long(counts_.size()) - 1}; }
  std::size_t size() const noexcept { return counts_.size(); }
  std::span<const double> counts() const noexcept { return counts_; }

  bool contains(Date d) const noexcept { return d >= start_ && d <= end(); }
  std::optional<double> find(Date d) const noexcept;
  double at(Date d) const;
  DailyObservation operator[](std::size_t i) const {
    return {start_ + Days{long(i)}, counts_[i]};
  }

  /// Observations dated <= last.
  DailySeries truncated(Date last) const;
  DailySeries slice(Date first, Date last) const;
  DailySeries with_value(Date d, double v) const;

  friend bool operator==(const DailySeries&, const DailySeries&) = default;

 private:
  Date start_;
  std::vector<double> counts_;
};

enum class GapPolicy { Reject, InterpolateLinear };

/// Sorts observations, rejects duplicates and either rejects or fills gaps.
DailySeries make_series(std::vector<DailyObservation> observations, GapPolicy policy);

class HolidayCalendar {
 public:
  HolidayCalendar() = default;
  /// Throws InvalidCalendar when a date appears twice.
  void add(Date d, std::string name);

  bool contains(Date d) const { return entries_.count(d) != 0; }
  const std::string* name_of(Date d) const;
  const std::map<Date, std::string>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

 private:
  std::map<Date, std::string> entries_;
};

int is_public_holiday(const HolidayCalendar& cal, Date d);

struct CovidInterval {
  Date start;
  Date end;  // inclusive
  int level = 1;
};

class CovidSchedule {
 public:
  CovidSchedule() = default;
  /// Validates bounds, levels in 1..4 and non-overlap. Intervals are kept sorted.
  explicit CovidSchedule(std::vector<CovidInterval> intervals);

  /// Level of the interval containing d, 1 outside all intervals.
  int level_at(Date d) const noexcept;
  const std::vector<CovidInterval>& intervals() const noexcept { return intervals_; }

  /// Collapses a per-day level sequence into intervals (level-1 runs are omitted).
  static CovidSchedule from_daily_levels(Date start, std::span<const int> levels);

 private:
  std::vector<CovidInterval> intervals_;
};

int covid_level_at(const CovidSchedule& schedule, Date d);

struct DateRange {
  Date first;
  Date last;  // inclusive
  bool contains(Date d) const noexcept { return d >= first && d <= last; }
};

class ExclusionRanges {
 public:
  ExclusionRanges() = default;
  explicit ExclusionRanges(std::vector<DateRange> ranges);
  bool excluded(Date d) const noexcept;
  const std::vector<DateRange>& ranges() const noexcept { return ranges_; }

 private:
  std::vector<DateRange> ranges_;
};

struct CsvSchema {
  std::string date_column = "date";
  std::string count_column = "count";
  std::string covid_column = "covid_level";  // optional; ignored when absent
  GapPolicy gap_policy = GapPolicy::Reject;
};

struct DemandTable {
  DailySeries series;
  std::optional<CovidSchedule> covid;  // present when the covid column exists
};

DemandTable read_demand_csv(std::istream& in, const CsvSchema& schema = {});
DemandTable read_demand_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
DailySeries ingest_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
void write_demand_csv(std::ostream& out, const DailySeries& series);

HolidayCalendar read_holiday_csv(std::istream& in);
HolidayCalendar read_holiday_csv(const std::filesystem::path& path);
void write_holiday_csv(std::ostream& out, const HolidayCalendar& cal);

CovidSchedule read_covid_csv(std::istream& in);
CovidSchedule read_covid_csv(const std::filesystem::path& path);
void write_covid_csv(std::ostream& out, const CovidSchedule& schedule);

}  // namespace demand
