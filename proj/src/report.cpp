#include "demand/report.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include "demand/csv.hpp"
#include "demand/error.hpp"

namespace demand {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string optional_cell(const std::optional<double>& v) {
  return v ? csv::format_number(*v) : std::string("NA");
}

json stability_to_json(const std::vector<StabilityRow>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"horizon_day", r.horizon_day}, {"count", r.count}, {"median", r.median},
                   {"q1", r.q1}, {"q3", r.q3}, {"min", r.min}, {"max", r.max}});
  return out;
}

}  // namespace

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << content;
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

json report_to_json(const BacktestReport& rep) {
  json doc;
  doc["models"] = rep.models;
  json vintages = json::array();
  for (const auto& v : rep.vintages)
    vintages.push_back({{"index", v.index},
                        {"train_end", format_date(v.train_end)},
                        {"horizon_start", format_date(v.horizon_start)},
                        {"horizon_end", format_date(v.horizon_end)}});
  doc["vintages"] = vintages;
  json cells = json::array();
  for (std::size_t m = 0; m < rep.models.size(); ++m)
    for (std::size_t v = 0; v < rep.vintages.size(); ++v) {
      const auto& mt = rep.metrics[m][v];
      cells.push_back({{"model", rep.models[m]},
                       {"vintage", rep.vintages[v].index},
                       {"rmse", mt.rmse},
                       {"mae", mt.mae},
                       {"mape", optional_number(mt.mape)},
                       {"mape_dropped_days", mt.mape_dropped},
                       {"days", mt.n},
                       {"rank", rep.ranks[m][v]}});
    }
  doc["cells"] = cells;
  json summary = json::array();
  for (const auto& s : rep.summary)
    summary.push_back({{"model", s.model},
                       {"mean_rmse", s.mean_rmse},
                       {"mean_mae", s.mean_mae},
                       {"mean_mape", optional_number(s.mean_mape)},
                       {"mean_rank", s.mean_rank}});
  doc["summary"] = summary;
  json dm = json::array();
  for (const auto& c : rep.dm) {
    json e = {{"model_a", c.model_a}, {"model_b", c.model_b}, {"status", c.status}};
    if (c.result) {
      e["statistic"] = c.result->statistic;
      e["p_value"] = c.result->p_value;
      e["n"] = c.result->n;
      e["h"] = c.result->h;
    }
    dm.push_back(e);
  }
  doc["dm"] = dm;
  json stability = json::object();
  for (std::size_t m = 0; m < rep.models.size(); ++m)
    stability[rep.models[m]] = stability_to_json(rep.stability[m]);
  doc["stability"] = stability;
  return doc;
}

void write_backtest_outputs(const std::filesystem::path& dir, const BacktestReport& rep,
                            const std::string& stability_model) {
  std::ostringstream metrics_csv, ranks_csv, dm_csv, stability_csv, predictions_csv;
  metrics_csv << "model,vintage,rmse,mae,mape\n";
  for (std::size_t m = 0; m < rep.models.size(); ++m)
    for (std::size_t v = 0; v < rep.vintages.size(); ++v) {
      const auto& mt = rep.metrics[m][v];
      metrics_csv << csv::escape(rep.models[m]) << ',' << rep.vintages[v].index << ','
                  << csv::format_number(mt.rmse) << ',' << csv::format_number(mt.mae) << ','
                  << optional_cell(mt.mape) << '\n';
    }

  ranks_csv << "model,mean_rank,mean_rmse,mean_mae,mean_mape\n";
  for (const auto& s : rep.summary)
    ranks_csv << csv::escape(s.model) << ',' << csv::format_number(s.mean_rank) << ','
              << csv::format_number(s.mean_rmse) << ',' << csv::format_number(s.mean_mae) << ','
              << optional_cell(s.mean_mape) << '\n';

  dm_csv << "model_a,model_b,stat,p\n";
  for (const auto& c : rep.dm)
    dm_csv << csv::escape(c.model_a) << ',' << csv::escape(c.model_b) << ','
           << (c.result ? csv::format_number(c.result->statistic) : "NA") << ','
           << (c.result ? csv::format_number(c.result->p_value) : "NA") << '\n';

  const std::size_t sm = rep.model_index(stability_model);
  stability_csv << "horizon_day,median,q1,q3,min,max\n";
  for (const auto& r : rep.stability[sm])
    stability_csv << r.horizon_day << ',' << csv::format_number(r.median) << ','
                  << csv::format_number(r.q1) << ',' << csv::format_number(r.q3) << ','
                  << csv::format_number(r.min) << ',' << csv::format_number(r.max) << '\n';

  predictions_csv << "model,vintage,date,horizon_day,predicted,actual\n";
  for (std::size_t m = 0; m < rep.models.size(); ++m)
    for (const auto& cell : rep.cells[m])
      for (const auto& r : cell.records)
        predictions_csv << csv::escape(rep.models[m]) << ',' << cell.vintage << ','
                        << format_date(r.date) << ',' << r.horizon_day << ','
                        << csv::format_number(r.predicted) << ',' << csv::format_number(r.actual)
                        << '\n';

  json doc = report_to_json(rep);
  doc["stability_model"] = stability_model;
  write_text(dir / "metrics.csv", metrics_csv.str());
  write_text(dir / "ranks.csv", ranks_csv.str());
  write_text(dir / "dm.csv", dm_csv.str());
  write_text(dir / "stability.csv", stability_csv.str());
  write_text(dir / "predictions.csv", predictions_csv.str());
  write_text(dir / "report.json", doc.dump(2) + "\n");
}

void write_forecast_csv(const std::filesystem::path& path, std::span<const Date> dates,
                        std::span<const double> predictions) {
  std::ostringstream out;
  out << "date,prediction\n";
  for (std::size_t i = 0; i < dates.size(); ++i)
    out << format_date(dates[i]) << ',' << csv::format_number(std::max(0.0, predictions[i])) << '\n';
  write_text(path, out.str());
}

json attribution_to_json(const Attribution& a) {
  json contrib = json::object();
  for (std::size_t j = 0; j < kNumFeatures; ++j)
    contrib[std::string(kFeatureNames[j])] = a.contributions[j];
  return {{"date", format_date(a.date)},
          {"base_value", a.base_value},
          {"contributions", contrib},
          {"prediction", a.prediction}};
}

json surrogate_to_json(const SurrogateExplanation& s) {
  json contrib = json::object(), coef = json::object();
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    contrib[std::string(kFeatureNames[j])] = s.contributions[j];
    coef[std::string(kFeatureNames[j])] = s.coefficients[j];
  }
  return {{"date", format_date(s.date)},
          {"base_value", s.base_value},
          {"intercept", s.intercept},
          {"contributions", contrib},
          {"coefficients", coef},
          {"local_prediction", s.local_prediction},
          {"model_prediction", s.model_prediction},
          {"samples", s.samples}};
}

void write_attribution_csv(const std::filesystem::path& path, std::span<const Attribution> rows) {
  std::ostringstream out;
  out << "date,base_value";
  for (auto n : kFeatureNames) out << ',' << n;
  out << ",prediction\n";
  for (const auto& a : rows) {
    out << format_date(a.date) << ',' << csv::format_number(a.base_value);
    for (double c : a.contributions) out << ',' << csv::format_number(c);
    out << ',' << csv::format_number(a.prediction) << '\n';
  }
  write_text(path, out.str());
}

void write_surrogate_csv(const std::filesystem::path& path,
                         std::span<const SurrogateExplanation> rows) {
  std::ostringstream out;
  out << "date,base_value";
  for (auto n : kFeatureNames) out << ',' << n;
  out << ",local_prediction,model_prediction\n";
  for (const auto& s : rows) {
    out << format_date(s.date) << ',' << csv::format_number(s.base_value);
    for (double c : s.contributions) out << ',' << csv::format_number(c);
    out << ',' << csv::format_number(s.local_prediction) << ','
        << csv::format_number(s.model_prediction) << '\n';
  }
  write_text(path, out.str());
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void update_manifest(const std::filesystem::path& dir, const std::string& config_hash,
                     std::uint64_t seed, const CommandStatus& status) {
  const auto path = dir / "manifest.json";
  json doc = json::object();
  if (std::ifstream in(path); in) {
    try {
      doc = json::parse(in);
    } catch (const json::exception&) {
      doc = json::object();
    }
  }
  doc["artifact_version"] = kVersion;
  doc["config_hash"] = config_hash;
  doc["seed"] = seed;
  if (!doc.contains("commands") || !doc["commands"].is_object()) doc["commands"] = json::object();
  doc["commands"][status.command] = {{"exit_status", status.exit_status},
                                     {"started", status.started},
                                     {"finished", status.finished}};
  write_text(path, doc.dump(2) + "\n");
}

}  // namespace demand
