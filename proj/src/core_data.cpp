#include "demand/core_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include "demand/csv.hpp"
#include "demand/error.hpp"

namespace demand {

namespace {

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

std::size_t column_index(const csv::Record& header, const std::string& name, bool required) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    if (required) throw Error(ErrorCode::MissingColumn, "column '" + name + "' not in header");
    return header.size();
  }
  return std::size_t(it - header.begin());
}

double parse_number(const std::string& text, std::size_t line) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || !std::isfinite(v))
    throw Error(ErrorCode::UnparseableNumber,
                "line " + std::to_string(line) + ": '" + text + "'");
  return v;
}

const std::string& field_at(const csv::Record& rec, std::size_t i, std::size_t line) {
  if (i >= rec.size())
    throw Error(ErrorCode::MissingColumn, "line " + std::to_string(line) + " is short");
  return rec[i];
}

}  // namespace

DailySeries::DailySeries(Date start, std::vector<double> counts)
    : start_(start), counts_(std::move(counts)) {
  if (counts_.empty()) throw Error(ErrorCode::InvalidArgument, "DailySeries must be non-empty");
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (!std::isfinite(counts_[i]) || counts_[i] < 0.0)
      throw Error(ErrorCode::NegativeCount,
                  format_date(start_ + Days{long(i)}) + " has count " +
                      csv::format_number(counts_[i]));
  }
}

std::optional<double> DailySeries::find(Date d) const noexcept {
  if (!contains(d)) return std::nullopt;
  return counts_[std::size_t((d - start_).count())];
}

double DailySeries::at(Date d) const {
  if (!contains(d)) throw Error(ErrorCode::InvalidArgument, format_date(d) + " outside series");
  return counts_[std::size_t((d - start_).count())];
}

DailySeries DailySeries::truncated(Date last) const { return slice(start_, last); }

DailySeries DailySeries::slice(Date first, Date last) const {
  first = std::max(first, start_);
  last = std::min(last, end());
  if (last < first) throw Error(ErrorCode::InsufficientHistory, "empty slice");
  const auto b = counts_.begin() + (first - start_).count();
  const auto e = counts_.begin() + (last - start_).count() + 1;
  return DailySeries(first, std::vector<double>(b, e));
}

DailySeries DailySeries::with_value(Date d, double v) const {
  std::vector<double> copy = counts_;
  copy.at(std::size_t((d - start_).count())) = v;
  return DailySeries(start_, std::move(copy));
}

DailySeries make_series(std::vector<DailyObservation> obs, GapPolicy policy) {
  if (obs.empty()) throw Error(ErrorCode::InvalidArgument, "no observations");
  std::sort(obs.begin(), obs.end(), [](auto& a, auto& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < obs.size(); ++i) {
    if (obs[i].date == obs[i - 1].date)
      throw Error(ErrorCode::DuplicateDate, format_date(obs[i].date));
  }
  const Date start = obs.front().date;
  std::vector<double> counts;
  counts.reserve(std::size_t(days_between(start, obs.back().date)) + 1);
  counts.push_back(obs.front().count);
  for (std::size_t i = 1; i < obs.size(); ++i) {
    const long gap = days_between(obs[i - 1].date, obs[i].date);
    if (gap > 1) {
      if (policy == GapPolicy::Reject)
        throw Error(ErrorCode::GapInSeries, "missing " + format_date(obs[i - 1].date + Days{1}) +
                                                " .. " + format_date(obs[i].date - Days{1}));
      const double a = obs[i - 1].count, b = obs[i].count;
      for (long k = 1; k < gap; ++k) counts.push_back(a + (b - a) * double(k) / double(gap));
    }
    counts.push_back(obs[i].count);
  }
  return DailySeries(start, std::move(counts));
}

void HolidayCalendar::add(Date d, std::string name) {
  if (!entries_.emplace(d, std::move(name)).second)
    throw Error(ErrorCode::InvalidCalendar, "holiday date repeated: " + format_date(d));
}

const std::string* HolidayCalendar::name_of(Date d) const {
  const auto it = entries_.find(d);
  return it == entries_.end() ? nullptr : &it->second;
}

int is_public_holiday(const HolidayCalendar& cal, Date d) { return cal.contains(d) ? 1 : 0; }

CovidSchedule::CovidSchedule(std::vector<CovidInterval> intervals)
    : intervals_(std::move(intervals)) {
  std::sort(intervals_.begin(), intervals_.end(),
            [](auto& a, auto& b) { return a.start < b.start; });
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    const auto& iv = intervals_[i];
    if (iv.end < iv.start)
      throw Error(ErrorCode::InvalidCalendar, "interval ends before it starts: " +
                                                  format_date(iv.start));
    if (iv.level < 1 || iv.level > 4)
      throw Error(ErrorCode::InvalidCalendar,
                  "level " + std::to_string(iv.level) + " outside 1..4");
    if (i > 0 && iv.start <= intervals_[i - 1].end)
      throw Error(ErrorCode::InvalidCalendar, "overlapping intervals at " + format_date(iv.start));
  }
}

int CovidSchedule::level_at(Date d) const noexcept {
  auto it = std::upper_bound(intervals_.begin(), intervals_.end(), d,
                             [](Date x, const CovidInterval& iv) { return x < iv.start; });
  if (it == intervals_.begin()) return 1;
  --it;
  return d <= it->end ? it->level : 1;
}

CovidSchedule CovidSchedule::from_daily_levels(Date start, std::span<const int> levels) {
  std::vector<CovidInterval> out;
  for (std::size_t i = 0; i < levels.size();) {
    std::size_t j = i;
    while (j + 1 < levels.size() && levels[j + 1] == levels[i]) ++j;
    if (levels[i] != 1)
      out.push_back({start + Days{long(i)}, start + Days{long(j)}, levels[i]});
    i = j + 1;
  }
  return CovidSchedule(std::move(out));
}

int covid_level_at(const CovidSchedule& schedule, Date d) { return schedule.level_at(d); }

ExclusionRanges::ExclusionRanges(std::vector<DateRange> ranges) : ranges_(std::move(ranges)) {
  for (const auto& r : ranges_)
    if (r.last < r.first)
      throw Error(ErrorCode::InvalidArgument, "exclusion range ends before it starts");
}

bool ExclusionRanges::excluded(Date d) const noexcept {
  return std::any_of(ranges_.begin(), ranges_.end(), [d](auto& r) { return r.contains(d); });
}

DemandTable read_demand_csv(std::istream& in, const CsvSchema& schema) {
  const auto records = csv::read_all(in);
  if (records.empty()) throw Error(ErrorCode::MissingColumn, "empty demand file");
  const auto& header = records.front();
  const std::size_t date_i = column_index(header, schema.date_column, true);
  const std::size_t count_i = column_index(header, schema.count_column, true);
  const std::size_t covid_i = column_index(header, schema.covid_column, false);
  const bool has_covid = covid_i < header.size();

  std::vector<DailyObservation> obs;
  std::vector<std::pair<Date, int>> levels;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const std::size_t line = r + 1;
    const Date d = parse_date(field_at(records[r], date_i, line));
    const double count = parse_number(field_at(records[r], count_i, line), line);
    if (count < 0.0)
      throw Error(ErrorCode::NegativeCount, "line " + std::to_string(line) + ": " +
                                                records[r][count_i]);
    if (count != std::floor(count))
      throw Error(ErrorCode::UnparseableNumber,
                  "line " + std::to_string(line) + ": count must be an integer");
    obs.push_back({d, count});
    if (has_covid) {
      const double lvl = parse_number(field_at(records[r], covid_i, line), line);
      levels.emplace_back(d, int(lvl));
    }
  }
  if (obs.empty()) throw Error(ErrorCode::InvalidArgument, "demand file has no rows");
  DemandTable table{make_series(std::move(obs), schema.gap_policy), std::nullopt};
  if (has_covid) {
    std::vector<int> daily(table.series.size(), 1);
    for (auto [d, lvl] : levels) {
      if (lvl < 1 || lvl > 4)
        throw Error(ErrorCode::InvalidCalendar, format_date(d) + ": covid level out of range");
      daily[std::size_t((d - table.series.start()).count())] = lvl;
    }
    table.covid = CovidSchedule::from_daily_levels(table.series.start(), daily);
  }
  return table;
}

DemandTable read_demand_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  auto in = open_input(path);
  return read_demand_csv(in, schema);
}

DailySeries ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  return read_demand_csv(path, schema).series;
}

void write_demand_csv(std::ostream& out, const DailySeries& series) {
  out << "date,count\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto o = series[i];
    out << format_date(o.date) << ',' << csv::format_number(o.count) << '\n';
  }
}

HolidayCalendar read_holiday_csv(std::istream& in) {
  const auto records = csv::read_all(in);
  if (records.empty()) throw Error(ErrorCode::MissingColumn, "empty holiday file");
  const std::size_t date_i = column_index(records[0], "date", true);
  const std::size_t name_i = column_index(records[0], "name", true);
  HolidayCalendar cal;
  for (std::size_t r = 1; r < records.size(); ++r)
    cal.add(parse_date(field_at(records[r], date_i, r + 1)), field_at(records[r], name_i, r + 1));
  return cal;
}

HolidayCalendar read_holiday_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_holiday_csv(in);
}

void write_holiday_csv(std::ostream& out, const HolidayCalendar& cal) {
  out << "date,name\n";
  for (const auto& [d, name] : cal.entries()) out << format_date(d) << ',' << csv::escape(name) << '\n';
}

CovidSchedule read_covid_csv(std::istream& in) {
  const auto records = csv::read_all(in);
  if (records.empty()) throw Error(ErrorCode::MissingColumn, "empty covid schedule file");
  const std::size_t s_i = column_index(records[0], "start", true);
  const std::size_t e_i = column_index(records[0], "end", true);
  const std::size_t l_i = column_index(records[0], "level", true);
  std::vector<CovidInterval> intervals;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const std::size_t line = r + 1;
    const double lvl = parse_number(field_at(records[r], l_i, line), line);
    if (lvl != std::floor(lvl))
      throw Error(ErrorCode::InvalidCalendar, "line " + std::to_string(line) + ": level not integer");
    intervals.push_back({parse_date(field_at(records[r], s_i, line)),
                         parse_date(field_at(records[r], e_i, line)), int(lvl)});
  }
  return CovidSchedule(std::move(intervals));
}

CovidSchedule read_covid_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_covid_csv(in);
}

void write_covid_csv(std::ostream& out, const CovidSchedule& schedule) {
  out << "start,end,level\n";
  for (const auto& iv : schedule.intervals())
    out << format_date(iv.start) << ',' << format_date(iv.end) << ',' << iv.level << '\n';
}

}  // namespace demand
