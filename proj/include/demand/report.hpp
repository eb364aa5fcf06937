#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "demand/backtest.hpp"
#include "demand/explain.hpp"

namespace demand {

inline constexpr const char* kVersion = "0.1.0";

/// Writes metrics.csv, ranks.csv, dm.csv, stability.csv, predictions.csv and report.json.
void write_backtest_outputs(const std::filesystem::path& dir, const BacktestReport& report,
                            const std::string& stability_model);

nlohmann::json report_to_json(const BacktestReport& report);

void write_forecast_csv(const std::filesystem::path& path, std::span<const Date> dates,
                        std::span<const double> predictions);

nlohmann::json attribution_to_json(const Attribution& a);
nlohmann::json surrogate_to_json(const SurrogateExplanation& s);
void write_attribution_csv(const std::filesystem::path& path, std::span<const Attribution> rows);
void write_surrogate_csv(const std::filesystem::path& path,
                         std::span<const SurrogateExplanation> rows);

struct CommandStatus {
  std::string command;
  int exit_status = 0;
  std::string started;   // UTC timestamps, ISO-8601
  std::string finished;
};

/// Creates or updates `dir`/manifest.json: config hash, seed, version and one status
/// entry per command run against the directory.
void update_manifest(const std::filesystem::path& dir, const std::string& config_hash,
                     std::uint64_t seed, const CommandStatus& status);

std::string utc_timestamp();

/// Writes text, creating parent directories; throws Error(Io) on failure.
void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace demand
