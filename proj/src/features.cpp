#include "demand/features.hpp"

#include <cmath>
#include <ostream>

#include "demand/csv.hpp"
#include "demand/error.hpp"

namespace demand {

FeatureMatrix::FeatureMatrix(std::vector<FeatureRow> rows) : rows_(std::move(rows)) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (!rows_[i].target)
      throw Error(ErrorCode::InvalidArgument,
                  "training row without target at " + format_date(rows_[i].date));
    if (i > 0 && rows_[i].date <= rows_[i - 1].date)
      throw Error(ErrorCode::InvalidArgument, "feature rows must be strictly increasing by date");
  }
}

std::vector<double> FeatureMatrix::targets() const {
  std::vector<double> y;
  y.reserve(rows_.size());
  for (const auto& r : rows_) y.push_back(*r.target);
  return y;
}

std::vector<double> FeatureMatrix::column(std::size_t j) const {
  std::vector<double> c;
  c.reserve(rows_.size());
  for (const auto& r : rows_) c.push_back(r.x[j]);
  return c;
}

FeatureMatrix FeatureMatrix::prefix(std::size_t count) const { return range(0, count); }

FeatureMatrix FeatureMatrix::range(std::size_t first, std::size_t last) const {
  last = std::min(last, rows_.size());
  first = std::min(first, last);
  FeatureMatrix out;
  out.rows_.assign(rows_.begin() + long(first), rows_.begin() + long(last));
  return out;
}

std::optional<double> ObservedLags::lag(Date d, int offset) const {
  const Date at = d - Days{offset};
  if (cutoff_ && at > *cutoff_) return std::nullopt;
  return series_.find(at);
}

std::optional<double> RecursiveLags::lag(Date d, int offset) const {
  const Date at = d - Days{offset};
  if (at <= train_end_) return observed_.find(at);
  if (offset != 7 && offset != 14) return std::nullopt;
  const long i = days_between(train_end_, at) - 1;
  if (i < 0 || std::size_t(i) >= predictions_.size()) return std::nullopt;
  return predictions_[std::size_t(i)];
}

int week_number(Date d) { return iso_week(d); }

FeatureRow build_row(const LagSource& history, const HolidayCalendar& cal,
                     const CovidSchedule& covid, Date d) {
  FeatureRow row;
  row.date = d;
  for (std::size_t k = 0; k < kNumLags; ++k) {
    const auto v = history.lag(d, kLagOffsets[k]);
    if (!v)
      throw Error(ErrorCode::MissingLag, "offset " + std::to_string(kLagOffsets[k]) + " for " +
                                             format_date(d));
    if (!std::isfinite(*v) || *v < 0.0)
      throw Error(ErrorCode::InvalidArgument, "lag value must be finite and non-negative");
    row.x[k] = *v;
  }
  row[Feature::PublicHoliday] = is_public_holiday(cal, d);
  row[Feature::Week] = week_number(d);
  row[Feature::CovidLevel] = covid_level_at(covid, d);
  return row;
}

FeatureMatrix build_training_matrix(const DailySeries& series, const HolidayCalendar& cal,
                                    const CovidSchedule& covid, const DateRange& window) {
  if (window.last < window.first)
    throw Error(ErrorCode::InvalidArgument, "training window ends before it starts");
  if (window.first - Days{kMaxLag} < series.start())
    throw Error(ErrorCode::InsufficientHistory,
                "training window starts " + format_date(window.first) +
                    " but lag history requires data from " +
                    format_date(window.first - Days{kMaxLag}));
  if (window.last > series.end())
    throw Error(ErrorCode::InsufficientHistory,
                "training window ends after the series (" + format_date(series.end()) + ")");
  ObservedLags lags(series);
  std::vector<FeatureRow> rows(std::size_t(days_between(window.first, window.last)) + 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Date d = window.first + Days{long(i)};
    rows[i] = build_row(lags, cal, covid, d);
    rows[i].target = series.at(d);
  }
  return FeatureMatrix(std::move(rows));
}

void write_feature_csv(std::ostream& out, std::span<const FeatureRow> rows) {
  out << "date";
  for (auto name : kFeatureNames) out << ',' << name;
  out << ",target\n";
  for (const auto& r : rows) {
    out << format_date(r.date);
    for (double v : r.x) out << ',' << csv::format_number(v);
    out << ',' << (r.target ? csv::format_number(*r.target) : std::string("NA")) << '\n';
  }
}

}  // namespace demand
