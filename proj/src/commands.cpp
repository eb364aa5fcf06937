#include "demand/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "demand/csv.hpp"
#include "demand/error.hpp"
#include "demand/report.hpp"

namespace demand {

using nlohmann::json;

namespace {

template <typename Writer>
void write_with(const std::filesystem::path& path, Writer&& writer) {
  std::ostringstream out;
  writer(out);
  write_text(path, out.str());
}

std::vector<std::string> model_names(const RunConfig& c) {
  std::vector<std::string> names;
  for (const auto& s : c.models) names.push_back(s.name);
  return names;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

// Training boundary whose horizon covers `d`.
Date boundary_for(const VintageSchedule& schedule, const DailySeries& series, Date d) {
  for (const auto& v : schedule)
    if (d >= v.horizon_start && d <= v.horizon_end) return v.train_end;
  if (d > series.end() && d <= series.end() + Days{kHorizonDays}) return series.end();
  throw Error(ErrorCode::InvalidConfig,
              "explain.dates: " + format_date(d) +
                  " is not inside a backtest horizon or the forecast horizon after " +
                  format_date(series.end()));
}

}  // namespace

InputData load_inputs(const RunConfig& c) {
  if (c.demand_csv.empty()) throw Error(ErrorCode::InvalidConfig, "data.demand: required");
  CsvSchema schema;
  schema.gap_policy = c.gap_policy;
  DemandTable table = read_demand_csv(c.demand_csv, schema);
  InputData in{std::move(table.series), {}, {}};
  if (!c.holidays_csv.empty()) in.holidays = read_holiday_csv(c.holidays_csv);
  if (!c.covid_csv.empty()) in.covid = read_covid_csv(c.covid_csv);
  else if (table.covid) in.covid = *table.covid;
  return in;
}

VintageSchedule resolve_schedule(const RunConfig& c, const DailySeries& series) {
  const Date last = c.last_horizon_end.value_or(series.end());
  const Date first = c.first_train_end.value_or(last - Days{12 * kHorizonDays});
  return make_schedule(first, last);
}

ModelPtr select_model(const RunConfig& c, const std::string& requested) {
  const auto names = model_names(c);
  std::string name = requested;
  if (name.empty())
    name = std::find(names.begin(), names.end(), "voting") != names.end() ? "voting" : names.front();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw Error(ErrorCode::UnknownModel, "'" + name + "' (available: " + join(names) + ")");
  return build_models(c.models)[std::size_t(it - names.begin())];
}

SynthResult cmd_synth(const RunConfig& c, const std::filesystem::path& dir) {
  SynthResult r = generate(c.synth);
  write_with(dir / "demand.csv", [&](std::ostream& o) { write_demand_csv(o, r.series); });
  write_with(dir / "holidays.csv", [&](std::ostream& o) { write_holiday_csv(o, r.holidays); });
  write_with(dir / "covid.csv", [&](std::ostream& o) { write_covid_csv(o, r.covid); });
  write_with(dir / "components.csv", [&](std::ostream& o) { write_components_csv(o, r.components); });
  return r;
}

IngestSummary cmd_ingest(const RunConfig& c, const std::filesystem::path& dir) {
  const InputData in = load_inputs(c);
  IngestSummary s{in.series.size(), in.series.start(), in.series.end(), 0};
  write_with(dir / "demand.csv", [&](std::ostream& o) { write_demand_csv(o, in.series); });
  const Date first = c.train_start.value_or(in.series.start() + Days{kMaxLag});
  if (first <= in.series.end()) {
    const FeatureMatrix X =
        build_training_matrix(in.series, in.holidays, in.covid, {first, in.series.end()});
    s.feature_rows = X.size();
    write_with(dir / "features.csv", [&](std::ostream& o) { write_feature_csv(o, X.rows()); });
  } else {
    write_with(dir / "features.csv", [&](std::ostream& o) { write_feature_csv(o, {}); });
  }
  return s;
}

BacktestReport cmd_backtest(const RunConfig& c, const std::filesystem::path& dir, Execution exec) {
  const InputData in = load_inputs(c);
  const VintageSchedule schedule = resolve_schedule(c, in.series);
  const auto all = build_models(c.models);
  std::vector<ModelPtr> models;
  if (c.evaluate.empty()) {
    models = all;
  } else {
    for (const auto& name : c.evaluate)
      for (const auto& m : all)
        if (m->name() == name) models.push_back(m);
  }
  BacktestReport rep =
      run_backtest(models, in.series, in.holidays, in.covid, schedule, backtest_options(c), exec);
  std::string stability = c.stability_model;
  if (stability.empty())
    stability = std::find(rep.models.begin(), rep.models.end(), "voting") != rep.models.end()
                    ? "voting"
                    : rep.models.front();
  if (std::find(rep.models.begin(), rep.models.end(), stability) == rep.models.end())
    throw Error(ErrorCode::UnknownModel,
                "report.stability_model '" + stability + "' (evaluated: " + join(rep.models) + ")");
  write_backtest_outputs(dir, rep, stability);
  return rep;
}

HorizonForecast cmd_forecast(const RunConfig& c, const std::filesystem::path& dir,
                             std::optional<Date> as_of, const std::string& model_name) {
  const ModelPtr model = select_model(c, model_name);
  const InputData in = load_inputs(c);
  const Date boundary = as_of.value_or(in.series.end());
  const TrainingWindow w = training_window(in.series, in.holidays, in.covid, boundary, c.train_start);
  FitCache cache;
  const TrainingData data{w.history, w.matrix, in.holidays, in.covid,
                          derive_seed(c.seed, std::uint64_t(boundary.time_since_epoch().count())),
                          &cache};
  const FittedPtr fitted = fit_shared(*model, data);
  HorizonForecast f = forecast_horizon(*fitted, w.history, in.holidays, in.covid, boundary);
  std::vector<Date> dates;
  for (const auto& r : f.rows) dates.push_back(r.date);
  write_forecast_csv(dir / "forecast.csv", dates, f.predictions);
  return f;
}

ExplainOutput cmd_explain(const RunConfig& c, const std::filesystem::path& dir,
                          const std::string& model_name, const std::vector<Date>& requested) {
  const ModelPtr model = select_model(c, model_name);
  const InputData in = load_inputs(c);
  std::vector<Date> dates = requested.empty() ? c.explain.dates : requested;
  if (dates.empty()) throw Error(ErrorCode::InvalidConfig, "explain.dates: no dates requested");
  std::sort(dates.begin(), dates.end());
  dates.erase(std::unique(dates.begin(), dates.end()), dates.end());

  VintageSchedule schedule;
  try {
    schedule = resolve_schedule(c, in.series);
  } catch (const Error&) {
    // forecast-horizon dates remain explainable without a backtest schedule
  }
  std::map<Date, std::vector<Date>> groups;
  for (Date d : dates) groups[boundary_for(schedule, in.series, d)].push_back(d);

  ExplainOutput out;
  json shap_doc = json::array(), surrogate_doc = json::array();
  std::ostringstream importance_csv;
  importance_csv << "train_end,feature,permutation_importance,mean_abs_shapley\n";

  for (const auto& [boundary, group] : groups) {
    const TrainingWindow w =
        training_window(in.series, in.holidays, in.covid, boundary, c.train_start);
    const std::uint64_t seed =
        derive_seed(c.seed, std::uint64_t(boundary.time_since_epoch().count()));
    FitCache cache;
    const TrainingData data{w.history, w.matrix, in.holidays, in.covid, seed, &cache};
    const FittedPtr fitted = fit_shared(*model, data);
    const int days = int(days_between(boundary, group.back()));
    const HorizonForecast horizon =
        forecast_horizon(*fitted, w.history, in.holidays, in.covid, boundary, days);
    const auto background =
        sample_background(w.matrix, c.explain.background_rows, derive_seed(seed, "background"));

    std::vector<Attribution> local;
    for (Date d : group) {
      const FeatureRow& row = horizon.rows[std::size_t(days_between(boundary, d) - 1)];
      Attribution a = shapley_exact(*fitted, row, background);
      out.max_efficiency_gap = std::max(out.max_efficiency_gap, std::abs(a.efficiency_gap()));
      json aj = attribution_to_json(a);
      aj["train_end"] = format_date(boundary);
      shap_doc.push_back(aj);
      local.push_back(a);
      out.shapley.push_back(a);

      SurrogateOptions so;
      so.n_samples = c.explain.surrogate_samples;
      so.kernel_width = c.explain.kernel_width;
      so.seed = derive_seed(seed, std::uint64_t(d.time_since_epoch().count()));
      SurrogateExplanation s = local_surrogate(*fitted, row, w.matrix, so);
      json sj = surrogate_to_json(s);
      sj["train_end"] = format_date(boundary);
      surrogate_doc.push_back(sj);
      out.surrogate.push_back(s);
    }

    ImportanceReport imp = permutation_importance(*fitted, w.matrix, c.explain.permutation_repeats,
                                                  derive_seed(seed, "permutation"));
    const auto local_abs = mean_abs_shapley(local);
    for (std::size_t j = 0; j < kNumFeatures; ++j)
      importance_csv << format_date(boundary) << ',' << kFeatureNames[j] << ','
                     << csv::format_number(imp.importance[j]) << ','
                     << csv::format_number(local_abs[j]) << '\n';
    out.permutation.push_back(std::move(imp));
  }
  out.mean_abs_shapley = mean_abs_shapley(out.shapley);

  json global = json::object();
  for (std::size_t j = 0; j < kNumFeatures; ++j)
    global[std::string(kFeatureNames[j])] = out.mean_abs_shapley[j];
  json doc = {{"model", model->name()},
              {"attributions", shap_doc},
              {"mean_abs_shapley", global},
              {"max_efficiency_gap", out.max_efficiency_gap}};
  write_text(dir / "shapley.json", doc.dump(2) + "\n");
  write_text(dir / "surrogate.json",
             json{{"model", model->name()}, {"explanations", surrogate_doc}}.dump(2) + "\n");
  write_attribution_csv(dir / "shapley.csv", out.shapley);
  write_surrogate_csv(dir / "surrogate.csv", out.surrogate);
  write_text(dir / "importance.csv", importance_csv.str());
  return out;
}

DmResult cmd_dmtest(const std::filesystem::path& predictions, const std::string& model_a,
                    const std::string& model_b, int h, DmLoss loss,
                    const std::filesystem::path& dir) {
  std::ifstream in(predictions);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + predictions.string());
  const auto records = csv::read_all(in);
  if (records.empty()) throw Error(ErrorCode::MissingColumn, "empty " + predictions.string());
  const auto& header = records.front();
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::MissingColumn, name);
    return std::size_t(it - header.begin());
  };
  const std::size_t cm = column("model"), cv = column("vintage"), cd = column("date"),
                    cp = column("predicted"), ca = column("actual");
  using Key = std::pair<int, std::string>;
  std::map<Key, double> ea, eb;
  std::vector<std::string> seen;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.size() < header.size()) throw Error(ErrorCode::MissingColumn, "short row " + std::to_string(i));
    if (std::find(seen.begin(), seen.end(), r[cm]) == seen.end()) seen.push_back(r[cm]);
    if (r[cm] != model_a && r[cm] != model_b) continue;
    double p = 0.0, a = 0.0;
    try {
      p = std::stod(r[cp]);
      a = std::stod(r[ca]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::UnparseableNumber, "row " + std::to_string(i));
    }
    (r[cm] == model_a ? ea : eb)[{std::stoi(r[cv]), r[cd]}] = a - p;
  }
  for (const auto* name : {&model_a, &model_b})
    if (std::find(seen.begin(), seen.end(), *name) == seen.end())
      throw Error(ErrorCode::UnknownModel, "'" + *name + "' (available: " + join(seen) + ")");
  std::vector<double> xa, xb;
  for (const auto& [k, v] : ea) {
    const auto it = eb.find(k);
    if (it == eb.end()) throw Error(ErrorCode::MissingCell, model_b + " lacks " + k.second);
    xa.push_back(v);
    xb.push_back(it->second);
  }
  if (xa.size() != eb.size()) throw Error(ErrorCode::MissingCell, model_a + " lacks forecasts");
  const DmResult r = dm_test(xa, xb, h, loss);
  json doc = {{"model_a", model_a}, {"model_b", model_b}, {"statistic", r.statistic},
              {"p_value", r.p_value}, {"mean_differential", r.mean_differential},
              {"long_run_variance", r.long_run_variance}, {"n", r.n}, {"h", r.h},
              {"loss", loss == DmLoss::Squared ? "squared" : "absolute"}};
  write_text(dir / "dmtest.json", doc.dump(2) + "\n");
  return r;
}

}  // namespace demand
