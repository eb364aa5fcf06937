#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "demand/core_data.hpp"
#include "demand/dm_test.hpp"
#include "demand/features.hpp"
#include "demand/models.hpp"
#include "demand/parallel.hpp"

namespace demand {

inline constexpr int kHorizonDays = 91;  // 13 weeks

struct Vintage {
  int index = 0;
  Date train_end;
  Date horizon_start;
  Date horizon_end;
};

using VintageSchedule = std::vector<Vintage>;

/// Maximal run of consecutive 91-day horizons, the first starting the day after
/// first_train_end, none ending after last_horizon_end. Throws EmptySchedule.
VintageSchedule make_schedule(Date first_train_end, Date last_horizon_end);

struct ForecastRecord {
  Date date;
  int horizon_day = 0;  // 1-based
  double predicted = 0.0;
  double actual = 0.0;

  double residual() const noexcept { return actual - predicted; }
};

struct ForecastVintage {
  std::string model;
  int vintage = 0;
  std::vector<ForecastRecord> records;
  std::vector<FeatureRow> rows;  // the recursive feature rows, one per horizon day
};

struct HorizonForecast {
  std::vector<FeatureRow> rows;
  std::vector<double> predictions;  // clamped at 0
};

/// Day-by-day recursive prediction for `days` days after train_end. Short lags inside
/// the horizon read earlier predictions; all other lags read `observed` (<= train_end).
HorizonForecast forecast_horizon(const FittedModel& model, const DailySeries& observed,
                                 const HolidayCalendar& cal, const CovidSchedule& covid,
                                 Date train_end, int days = kHorizonDays);

struct BacktestOptions {
  std::optional<Date> train_start;  // default: first date with full lag history
  ExclusionRanges exclusions;
  std::uint64_t seed = 0;
  int dm_horizon = 1;
  DmLoss dm_loss = DmLoss::Squared;
};

/// Training rows and history strictly from data dated <= train_end.
struct TrainingWindow {
  DailySeries history;
  FeatureMatrix matrix;
};

TrainingWindow training_window(const DailySeries& series, const HolidayCalendar& cal,
                               const CovidSchedule& covid, Date train_end,
                               std::optional<Date> train_start = std::nullopt);

std::uint64_t vintage_seed(std::uint64_t root, const Vintage& v) noexcept;

ForecastVintage recursive_forecast(const ForecastModel& model, const DailySeries& series,
                                   const HolidayCalendar& cal, const CovidSchedule& covid,
                                   const Vintage& vintage, const BacktestOptions& options = {},
                                   FitCache* cache = nullptr);

struct Metrics {
  double rmse = 0.0;
  double mae = 0.0;
  std::optional<double> mape;  // undefined when every actual is zero
  std::size_t n = 0;
  std::size_t mape_dropped = 0;  // zero-actual days left out of MAPE
};

Metrics metrics(std::span<const double> predictions, std::span<const double> actuals);
Metrics metrics(const ForecastVintage& v);

/// Ranks ascending with average ranks for ties.
std::vector<double> rank_with_ties(std::span<const double> scores);

/// scores[model][vintage]; NaN marks a missing cell (MissingCell).
std::vector<double> mean_ranks(const std::vector<std::vector<double>>& scores);

struct StabilityRow {
  int horizon_day = 0;
  std::size_t count = 0;
  double median = 0.0, q1 = 0.0, q3 = 0.0, min = 0.0, max = 0.0;
};

/// Residual (actual - predicted) distribution per horizon day pooled over vintages.
std::vector<StabilityRow> stability_profile(std::span<const ForecastVintage> vintages);

struct ModelSummary {
  std::string model;
  double mean_rmse = 0.0;
  double mean_mae = 0.0;
  std::optional<double> mean_mape;
  double mean_rank = 0.0;
};

struct DmComparison {
  std::string model_a;
  std::string model_b;
  std::optional<DmResult> result;
  std::string status;  // "ok" or the error name
};

struct BacktestReport {
  std::vector<std::string> models;
  VintageSchedule vintages;                      // evaluated vintages only
  std::vector<std::vector<ForecastVintage>> cells;  // [model][vintage]
  std::vector<std::vector<Metrics>> metrics;        // [model][vintage]
  std::vector<std::vector<double>> ranks;           // [model][vintage]
  std::vector<ModelSummary> summary;
  std::vector<DmComparison> dm;
  std::vector<std::vector<StabilityRow>> stability;  // [model]

  std::size_t model_index(const std::string& name) const;
  /// actual - predicted over all vintages in order.
  std::vector<double> concatenated_errors(std::size_t model) const;
};

/// Runs every model on every vintage. Vintages whose horizon is fully excluded are
/// skipped. The parallel path distributes vintages over OpenMP workers; both paths
/// produce identical reports.
BacktestReport run_backtest(std::span<const ModelPtr> models, const DailySeries& series,
                            const HolidayCalendar& cal, const CovidSchedule& covid,
                            const VintageSchedule& schedule, const BacktestOptions& options,
                            Execution exec = Execution::Parallel);

/// Assembles ranks, summaries, DM comparisons and stability from finished cells.
BacktestReport assemble_report(std::vector<std::string> models, VintageSchedule vintages,
                               std::vector<std::vector<ForecastVintage>> cells,
                               const BacktestOptions& options);

}  // namespace demand
