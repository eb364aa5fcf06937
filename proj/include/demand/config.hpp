#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "demand/backtest.hpp"
#include "demand/models.hpp"
#include "demand/synth.hpp"

namespace demand {

/// One entry of the model list. `kind` selects the implementation; `params` holds the
/// kind-specific hyperparameters (and `bases` for ensembles).
struct ModelSpec {
  std::string name;
  std::string kind;
  nlohmann::json params = nlohmann::json::object();
};

struct ExplainOptions {
  std::string model = "voting";
  std::vector<Date> dates;
  std::size_t background_rows = 256;
  int surrogate_samples = 1000;
  double kernel_width = 0.0;
  int permutation_repeats = 5;
};

struct RunConfig {
  std::filesystem::path demand_csv;
  std::filesystem::path holidays_csv;
  std::filesystem::path covid_csv;
  GapPolicy gap_policy = GapPolicy::Reject;

  std::optional<Date> train_start;
  std::optional<Date> first_train_end;
  std::optional<Date> last_horizon_end;
  std::vector<DateRange> exclude;

  std::vector<ModelSpec> models;
  std::vector<std::string> evaluate;  // models reported by backtest; empty = all
  std::string stability_model;        // default: voting if present, else the first model

  int dm_horizon = 1;
  DmLoss dm_loss = DmLoss::Squared;
  ExplainOptions explain;
  SynthConfig synth;

  std::uint64_t seed = 42;
  int workers = 0;
  std::filesystem::path output_dir = "out";

  nlohmann::json source;  // the document as loaded, after defaults are applied

  /// Content hash (FNV-1a, hex) of the canonical source document.
  std::string hash() const;
};

/// Name of the environment variable naming a default config file.
inline constexpr const char* kConfigEnvVar = "DEMAND_CONFIG";

/// Relative paths resolve against `base_dir`. Throws InvalidConfig / UnknownModel.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// The sixteen-model catalogue: benchmarks, individual learners, ensembles and the
/// residual-corrected variants.
std::vector<ModelSpec> default_model_specs();

/// Instantiates every spec; ensemble bases are looked up by name within `specs`.
std::vector<ModelPtr> build_models(const std::vector<ModelSpec>& specs);

SynthConfig parse_synth_config(const nlohmann::json& doc);
BacktestOptions backtest_options(const RunConfig& config);

}  // namespace demand
