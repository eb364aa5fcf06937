#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "demand/backtest.hpp"
#include "demand/config.hpp"
#include "demand/explain.hpp"

namespace demand {

struct InputData {
  DailySeries series;
  HolidayCalendar holidays;
  CovidSchedule covid;
};

/// Reads the demand, holiday and covid files named by the config. Covid levels come
/// from the covid file when given, else from a covid_level column, else level 1.
InputData load_inputs(const RunConfig& config);

/// The configured schedule; missing bounds default to twelve vintages ending at the
/// last observation.
VintageSchedule resolve_schedule(const RunConfig& config, const DailySeries& series);

/// The model a command should use: `requested` when given, else voting when
/// configured, else the first model. Throws UnknownModel listing the choices.
ModelPtr select_model(const RunConfig& config, const std::string& requested);

/// Writes demand.csv, holidays.csv, covid.csv and components.csv under `dir`.
SynthResult cmd_synth(const RunConfig& config, const std::filesystem::path& dir);

struct IngestSummary {
  std::size_t days = 0;
  Date first, last;
  std::size_t feature_rows = 0;
};

/// Validates the inputs and writes the canonical demand.csv and features.csv.
IngestSummary cmd_ingest(const RunConfig& config, const std::filesystem::path& dir);

BacktestReport cmd_backtest(const RunConfig& config, const std::filesystem::path& dir,
                            Execution exec = Execution::Parallel);

/// Fits on data <= as_of (default: last observation) and writes forecast.csv.
HorizonForecast cmd_forecast(const RunConfig& config, const std::filesystem::path& dir,
                             std::optional<Date> as_of, const std::string& model);

struct ExplainOutput {
  std::vector<Attribution> shapley;
  std::vector<SurrogateExplanation> surrogate;
  std::vector<ImportanceReport> permutation;  // one per training window used
  std::array<double, kNumFeatures> mean_abs_shapley{};
  double max_efficiency_gap = 0.0;
};

/// Each date must fall inside a backtest horizon or the forecast horizon after the
/// last observation. Writes shapley.{json,csv}, surrogate.{json,csv}, importance.csv.
ExplainOutput cmd_explain(const RunConfig& config, const std::filesystem::path& dir,
                          const std::string& model, const std::vector<Date>& dates);

/// DM comparison of two models read back from a predictions.csv.
DmResult cmd_dmtest(const std::filesystem::path& predictions, const std::string& model_a,
                    const std::string& model_b, int h, DmLoss loss,
                    const std::filesystem::path& dir);

}  // namespace demand
