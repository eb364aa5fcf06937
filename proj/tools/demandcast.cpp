#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "demand/commands.hpp"
#include "demand/error.hpp"
#include "demand/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace demand;

namespace {

enum Exit { kOk = 0, kConfig = 1, kData = 2, kRuntime = 3 };

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return kConfig;
    case ErrorCategory::Data: return kData;
    case ErrorCategory::Runtime: return kRuntime;
  }
  return kRuntime;
}

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

std::string absolute(const std::string& p) { return fs::absolute(p).lexically_normal().string(); }

// The document is loaded, then command-line scalars are written over it so the
// config hash reflects what actually ran.
RunConfig resolve_config(const Common& common, const std::function<void(json&)>& overrides) {
  std::string path = common.config;
  if (path.empty())
    if (const char* env = std::getenv(kConfigEnvVar)) path = env;
  json doc = json::object();
  fs::path base;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config " + path);
    try {
      doc = json::parse(in, nullptr, true, true);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, path + ": " + e.what());
    }
    base = fs::path(path).parent_path();
  }
  if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "<root>: expected an object");
  if (!common.out.empty()) doc["output_dir"] = absolute(common.out);
  if (common.seed) doc["seed"] = *common.seed;
  if (common.workers) doc["workers"] = *common.workers;
  if (overrides) overrides(doc);
  return parse_config(doc, base);
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config,
                  std::string("JSON config file (default: $") + kConfigEnvVar + ")");
  cmd->add_option("-o,--out", c.out, "output directory (overrides output_dir)");
  cmd->add_option("--seed", c.seed, "root seed (overrides seed)");
  cmd->add_option("--workers", c.workers, "worker threads, 0 = all cores (overrides workers)");
}

json& data_section(json& doc) {
  if (!doc.contains("data")) doc["data"] = json::object();
  return doc["data"];
}

json& schedule_section(json& doc) {
  if (!doc.contains("schedule")) doc["schedule"] = json::object();
  return doc["schedule"];
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Daily demand forecasting and backtesting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  std::string demand_path, holidays_path, covid_path, gap_policy;
  std::string first_train_end, last_horizon_end, as_of, model, dates_arg, predictions;
  std::string model_a, model_b, loss;
  std::optional<int> dm_h;
  bool serial = false, check_efficiency = false;

  auto* synth = app.add_subcommand("synth", "generate a synthetic demand dataset");
  add_common(synth, common);

  auto* ingest = app.add_subcommand("ingest", "validate inputs and export the feature matrix");
  add_common(ingest, common);
  for (auto* cmd : {ingest}) {
    cmd->add_option("--demand", demand_path, "demand CSV (date,count[,covid_level])");
    cmd->add_option("--holidays", holidays_path, "holiday CSV (date,name)");
    cmd->add_option("--covid", covid_path, "covid CSV (start,end,level)");
    cmd->add_option("--gap-policy", gap_policy, "reject | interpolate-linear");
  }

  auto* backtest = app.add_subcommand("backtest", "run the expanding-window model grid");
  add_common(backtest, common);
  backtest->add_option("--first-train-end", first_train_end, "first training boundary");
  backtest->add_option("--last-horizon-end", last_horizon_end, "last date a horizon may cover");
  backtest->add_flag("--serial", serial, "run vintages on one thread");

  auto* forecast = app.add_subcommand("forecast", "forecast the next 91 days");
  add_common(forecast, common);
  forecast->add_option("--as-of", as_of, "training boundary (default: last observation)");
  forecast->add_option("-m,--model", model, "model name (default: voting)");

  auto* explain = app.add_subcommand("explain", "Shapley, surrogate and permutation attributions");
  add_common(explain, common);
  explain->add_option("-m,--model", model, "model name (default: explain.model)");
  explain->add_option("--dates", dates_arg, "comma-separated dates (default: explain.dates)");
  explain->add_flag("--check-efficiency", check_efficiency,
                    "verify base value + contributions equals each prediction");

  auto* dmtest = app.add_subcommand("dmtest", "Diebold-Mariano test between two backtested models");
  add_common(dmtest, common);
  dmtest->add_option("--predictions", predictions, "predictions.csv (default: <out>/predictions.csv)");
  dmtest->add_option("-a,--model-a", model_a, "first model")->required();
  dmtest->add_option("-b,--model-b", model_b, "second model")->required();
  dmtest->add_option("--dm-h", dm_h, "forecast horizon for the variance (overrides dm.h)");
  dmtest->add_option("--loss", loss, "squared | absolute (overrides dm.loss)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  const std::string started = utc_timestamp();
  std::optional<RunConfig> config;
  int rc = kOk;

  try {
    config = resolve_config(common, [&](json& doc) {
      if (!demand_path.empty()) data_section(doc)["demand"] = absolute(demand_path);
      if (!holidays_path.empty()) data_section(doc)["holidays"] = absolute(holidays_path);
      if (!covid_path.empty()) data_section(doc)["covid"] = absolute(covid_path);
      if (!gap_policy.empty()) data_section(doc)["gap_policy"] = gap_policy;
      if (!first_train_end.empty()) schedule_section(doc)["first_train_end"] = first_train_end;
      if (!last_horizon_end.empty()) schedule_section(doc)["last_horizon_end"] = last_horizon_end;
      if (dm_h || !loss.empty()) {
        if (!doc.contains("dm")) doc["dm"] = json::object();
        if (dm_h) doc["dm"]["h"] = *dm_h;
        if (!loss.empty()) doc["dm"]["loss"] = loss;
      }
    });
    set_worker_count(config->workers);
    const fs::path dir = config->output_dir;

    if (name == "synth") {
      const SynthResult r = cmd_synth(*config, dir);
      std::cout << "wrote " << r.series.size() << " days (" << format_date(r.series.start())
                << " .. " << format_date(r.series.end()) << ") to " << dir.string() << "\n";
    } else if (name == "ingest") {
      const IngestSummary s = cmd_ingest(*config, dir);
      std::cout << s.days << " days " << format_date(s.first) << " .. " << format_date(s.last)
                << ", " << s.feature_rows << " feature rows\n";
    } else if (name == "backtest") {
      const BacktestReport rep =
          cmd_backtest(*config, dir, serial ? Execution::Serial : Execution::Parallel);
      std::cout << rep.models.size() << " models x " << rep.vintages.size() << " vintages\n";
      std::cout << "model,mean_rank,mean_rmse,mean_mae\n";
      for (const auto& s : rep.summary)
        std::cout << s.model << ',' << s.mean_rank << ',' << s.mean_rmse << ',' << s.mean_mae
                  << "\n";
    } else if (name == "forecast") {
      std::optional<Date> boundary;
      if (!as_of.empty()) {
        try {
          boundary = parse_date(as_of);
        } catch (const Error&) {
          throw Error(ErrorCode::InvalidConfig, "--as-of: unparseable date '" + as_of + "'");
        }
      }
      const HorizonForecast f = cmd_forecast(*config, dir, boundary, model);
      std::cout << "wrote " << f.predictions.size() << " rows to "
                << (dir / "forecast.csv").string() << "\n";
    } else if (name == "explain") {
      std::vector<Date> dates;
      std::stringstream ss(dates_arg);
      for (std::string tok; std::getline(ss, tok, ',');) {
        if (tok.empty()) continue;
        try {
          dates.push_back(parse_date(tok));
        } catch (const Error&) {
          throw Error(ErrorCode::InvalidConfig, "--dates: unparseable date '" + tok + "'");
        }
      }
      const ExplainOutput out =
          cmd_explain(*config, dir, model.empty() ? config->explain.model : model, dates);
      std::cout << "explained " << out.shapley.size() << " dates\n";
      if (check_efficiency) {
        bool ok = true;
        for (const auto& a : out.shapley) {
          const double sum = a.prediction - a.efficiency_gap();
          const double tol = 1e-9 * std::max(1.0, std::abs(a.prediction));
          const bool pass = std::abs(a.efficiency_gap()) <= tol;
          ok = ok && pass;
          std::cout << format_date(a.date) << " base+sum=" << sum
                    << " prediction=" << a.prediction << " gap=" << a.efficiency_gap()
                    << (pass ? " ok" : " FAIL") << "\n";
        }
        std::cout << "efficiency " << (ok ? "verified" : "violated") << "\n";
        if (!ok) rc = kRuntime;
      }
    } else if (name == "dmtest") {
      const fs::path pred = predictions.empty() ? dir / "predictions.csv" : fs::path(predictions);
      const DmResult r =
          cmd_dmtest(pred, model_a, model_b, config->dm_horizon, config->dm_loss, dir);
      std::cout << "DM " << model_a << " vs " << model_b << ": statistic=" << r.statistic
                << " p=" << r.p_value << " n=" << r.n << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    rc = exit_code(e.category());
  } catch (const json::exception& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    rc = kConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    rc = kRuntime;
  }

  if (config) {
    try {
      update_manifest(config->output_dir, config->hash(), config->seed,
                      {name, rc, started, utc_timestamp()});
    } catch (const std::exception& e) {
      std::cerr << "error: manifest: " << e.what() << "\n";
      if (rc == kOk) rc = kRuntime;
    }
  }
  return rc;
}
