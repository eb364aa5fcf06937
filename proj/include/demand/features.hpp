#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "demand/core_data.hpp"

namespace demand {

/// Column order of every feature vector and exported matrix.
enum class Feature : std::size_t {
  Lag7d,
  Lag14d,
  Lag1,  // t-364
  Lag2,  // t-728
  Lag3,  // t-1092
  PublicHoliday,
  Week,
  CovidLevel,
};

inline constexpr std::size_t kNumFeatures = 8;
inline constexpr std::size_t kNumLags = 5;
inline constexpr std::array<int, kNumLags> kLagOffsets{7, 14, 364, 728, 1092};
inline constexpr int kMaxLag = 1092;
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames{
    "lag7d", "lag14d", "lag1", "lag2", "lag3", "public_holiday", "week", "covid_level"};

using FeatureVector = std::array<double, kNumFeatures>;

struct FeatureRow {
  Date date{};
  FeatureVector x{};
  std::optional<double> target;

  double operator[](Feature f) const noexcept { return x[std::size_t(f)]; }
  double& operator[](Feature f) noexcept { return x[std::size_t(f)]; }
};

/// Rows sorted by date, unique, every row carrying a target.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::vector<FeatureRow> rows);

  std::size_t size() const noexcept { return rows_.size(); }
  bool empty() const noexcept { return rows_.empty(); }
  const FeatureRow& operator[](std::size_t i) const { return rows_[i]; }
  const std::vector<FeatureRow>& rows() const noexcept { return rows_; }
  auto begin() const noexcept { return rows_.begin(); }
  auto end() const noexcept { return rows_.end(); }

  std::vector<double> targets() const;
  std::vector<double> column(std::size_t j) const;
  /// Rows [first, last).
  FeatureMatrix prefix(std::size_t count) const;
  FeatureMatrix range(std::size_t first, std::size_t last) const;

 private:
  std::vector<FeatureRow> rows_;
};

/// Resolves the demand value `offset` days before `d`.
class LagSource {
 public:
  virtual ~LagSource() = default;
  virtual std::optional<double> lag(Date d, int offset) const = 0;
};

/// Observed values only, optionally restricted to dates <= cutoff.
class ObservedLags final : public LagSource {
 public:
  explicit ObservedLags(const DailySeries& series, std::optional<Date> cutoff = std::nullopt)
      : series_(series), cutoff_(cutoff) {}
  std::optional<double> lag(Date d, int offset) const override;

 private:
  const DailySeries& series_;
  std::optional<Date> cutoff_;
};

/// Lookups for a recursive horizon: 7/14-day lags landing after `train_end` read
/// the model's own predictions, everything else reads observed history <= train_end.
class RecursiveLags final : public LagSource {
 public:
  RecursiveLags(const DailySeries& observed, Date train_end, std::span<const double> predictions)
      : observed_(observed), train_end_(train_end), predictions_(predictions) {}
  std::optional<double> lag(Date d, int offset) const override;

 private:
  const DailySeries& observed_;
  Date train_end_;
  std::span<const double> predictions_;  // predictions_[i] is for train_end + 1 + i
};

int week_number(Date d);

FeatureRow build_row(const LagSource& history, const HolidayCalendar& cal,
                     const CovidSchedule& covid, Date d);

/// One row per day in `window`; lags read from the full series.
FeatureMatrix build_training_matrix(const DailySeries& series, const HolidayCalendar& cal,
                                    const CovidSchedule& covid, const DateRange& window);

void write_feature_csv(std::ostream& out, std::span<const FeatureRow> rows);

}  // namespace demand
