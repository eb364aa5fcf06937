#include "demand/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "demand/ensembles.hpp"
#include "demand/error.hpp"

namespace demand {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::InvalidConfig, field + ": " + why);
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(where + "." + key, e.what());
  }
}

Date get_date(const json& v, const std::string& field) {
  if (!v.is_string()) config_error(field, "expected an ISO date string");
  try {
    return parse_date(v.get<std::string>());
  } catch (const Error&) {
    config_error(field, "unparseable date '" + v.get<std::string>() + "'");
  }
}

std::optional<Date> get_opt_date(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return get_date(obj.at(key), where + "." + key);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return (path.is_absolute() || base.empty() ? path : base / path).lexically_normal();
}

TreeEnsembleParams tree_params(const json& p, TreeEnsembleParams d, const std::string& where) {
  d.n_trees = get_or(p, "n_trees", d.n_trees, where);
  d.max_depth = get_or(p, "max_depth", d.max_depth, where);
  d.min_samples_leaf = get_or(p, "min_samples_leaf", d.min_samples_leaf, where);
  d.feature_subsample = get_or(p, "feature_subsample", d.feature_subsample, where);
  d.bootstrap = get_or(p, "bootstrap", d.bootstrap, where);
  d.learning_rate = get_or(p, "learning_rate", d.learning_rate, where);
  d.seed = get_or(p, "seed", d.seed, where);
  return d;
}

std::vector<std::string> base_names(const ModelSpec& spec) {
  const std::string where = "models." + spec.name;
  if (!spec.params.contains("bases")) config_error(where + ".bases", "required for " + spec.kind);
  return get_or(spec.params, "bases", std::vector<std::string>{}, where);
}

}  // namespace

std::string RunConfig::hash() const {
  json doc = source;
  if (doc.is_object()) {
    doc.erase("output_dir");
    doc.erase("workers");
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : doc.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<ModelSpec> default_model_specs() {
  const std::vector<std::string> trio{"gbm", "forest", "additive"};
  return {
      {"current", "in_house", {{"uplift", 0.05}}},
      {"naive", "seasonal_naive", json::object()},
      {"arima", "arima", {{"p", 7}, {"d", 1}}},
      {"naive_enhanced", "enhanced_naive",
       {{"weights", std::vector<double>(kDefaultLagWeights.begin(), kDefaultLagWeights.end())}}},
      {"forest", "forest", json::object()},
      {"gbm", "gbm", json::object()},
      {"additive", "additive", json::object()},
      {"voting", "voting", {{"bases", trio}}},
      {"stacking", "stacking", {{"bases", trio}, {"lambda", 1.0}, {"blocks", 5}}},
      {"ridge", "ridge", {{"lambda", 1.0}}},
      {"knn", "knn", {{"k", 5}}},
      {"averaging", "averaging",
       {{"bases", std::vector<std::string>{"forest", "gbm", "additive", "ridge", "naive_enhanced"}}}},
      {"gbm_ar", "residual_correction", {{"base", "gbm"}, {"corrector", "ar"}, {"order", 7}}},
      {"gbm_es", "residual_correction", {{"base", "gbm"}, {"corrector", "es"}, {"alpha", 0.3}}},
      {"additive_ar", "residual_correction", {{"base", "additive"}, {"corrector", "ar"}, {"order", 7}}},
      {"additive_es", "residual_correction",
       {{"base", "additive"}, {"corrector", "es"}, {"alpha", 0.3}}},
  };
}

std::vector<ModelPtr> build_models(const std::vector<ModelSpec>& specs) {
  std::map<std::string, const ModelSpec*> by_name;
  for (const auto& s : specs) {
    if (s.name.empty()) config_error("models", "model without a name");
    if (!by_name.emplace(s.name, &s).second) config_error("models." + s.name, "duplicate name");
  }

  std::map<std::string, ModelPtr> built;
  std::set<std::string> in_progress;
  std::function<ModelPtr(const std::string&)> make = [&](const std::string& name) -> ModelPtr {
    if (auto it = built.find(name); it != built.end()) return it->second;
    const auto spec_it = by_name.find(name);
    if (spec_it == by_name.end()) {
      std::string known;
      for (const auto& [n, _] : by_name) known += (known.empty() ? "" : ", ") + n;
      throw Error(ErrorCode::UnknownModel, "'" + name + "' (available: " + known + ")");
    }
    if (!in_progress.insert(name).second) config_error("models." + name, "cyclic base reference");
    const ModelSpec& s = *spec_it->second;
    const json& p = s.params;
    const std::string where = "models." + s.name;
    auto bases = [&] {
      std::vector<ModelPtr> out;
      for (const auto& b : base_names(s)) out.push_back(make(b));
      return out;
    };

    ModelPtr m;
    try {
      if (s.kind == "in_house") {
        m = std::make_shared<InHouseModel>(s.name, get_or(p, "uplift", 0.05, where));
      } else if (s.kind == "seasonal_naive") {
        m = std::make_shared<SeasonalNaiveModel>(s.name);
      } else if (s.kind == "enhanced_naive") {
        const auto w = get_or(p, "weights",
                              std::vector<double>(kDefaultLagWeights.begin(), kDefaultLagWeights.end()),
                              where);
        if (w.size() != kNumLags) config_error(where + ".weights", "expected 5 weights");
        LagWeights lw{};
        std::copy(w.begin(), w.end(), lw.begin());
        m = std::make_shared<EnhancedNaiveModel>(s.name, lw);
      } else if (s.kind == "arima") {
        m = std::make_shared<ArimaModel>(s.name, get_or(p, "p", 7, where), get_or(p, "d", 1, where));
      } else if (s.kind == "ridge") {
        m = std::make_shared<RidgeModel>(s.name, get_or(p, "lambda", 1.0, where));
      } else if (s.kind == "knn") {
        m = std::make_shared<KnnModel>(s.name, get_or(p, "k", 5, where));
      } else if (s.kind == "forest") {
        m = std::make_shared<ForestModel>(s.name,
                                          tree_params(p, TreeEnsembleParams::forest_defaults(), where));
      } else if (s.kind == "gbm") {
        m = std::make_shared<GbmModel>(s.name,
                                       tree_params(p, TreeEnsembleParams::gbm_defaults(), where));
      } else if (s.kind == "additive") {
        AdditiveConfig c;
        c.fourier_order_yearly = get_or(p, "fourier_order_yearly", c.fourier_order_yearly, where);
        c.holiday_upper_window = get_or(p, "holiday_upper_window", c.holiday_upper_window, where);
        c.trend_changepoints = get_or(p, "trend_changepoints", c.trend_changepoints, where);
        c.changepoint_range = get_or(p, "changepoint_range", c.changepoint_range, where);
        c.changepoint_lambda = get_or(p, "changepoint_lambda", c.changepoint_lambda, where);
        c.lambda = get_or(p, "lambda", c.lambda, where);
        m = std::make_shared<AdditiveModel>(s.name, c);
      } else if (s.kind == "voting") {
        m = std::make_shared<VotingModel>(s.name, bases());
      } else if (s.kind == "averaging") {
        m = std::make_shared<AveragingModel>(s.name, bases());
      } else if (s.kind == "stacking") {
        m = std::make_shared<StackingModel>(s.name, bases(), get_or(p, "lambda", 1.0, where),
                                            get_or(p, "blocks", 5, where));
      } else if (s.kind == "residual_correction") {
        const auto base = get_or(p, "base", std::string{}, where);
        if (base.empty()) config_error(where + ".base", "required");
        ResidualCorrector rc;
        const auto kind = get_or(p, "corrector", std::string("es"), where);
        if (kind == "es") rc.kind = ResidualCorrector::Kind::ExponentialSmoothing;
        else if (kind == "ar") rc.kind = ResidualCorrector::Kind::Autoregressive;
        else config_error(where + ".corrector", "expected 'es' or 'ar'");
        rc.alpha = get_or(p, "alpha", rc.alpha, where);
        rc.order = get_or(p, "order", rc.order, where);
        m = std::make_shared<ResidualCorrectedModel>(s.name, make(base), rc);
      } else {
        config_error(where + ".kind", "unknown kind '" + s.kind + "'");
      }
    } catch (const Error& e) {
      if (e.category() == ErrorCategory::Config) throw;
      config_error(where, e.what());
    }
    in_progress.erase(name);
    built.emplace(name, m);
    return m;
  };

  std::vector<ModelPtr> out;
  for (const auto& s : specs) out.push_back(make(s.name));
  return out;
}

SynthConfig parse_synth_config(const json& doc) {
  SynthConfig c;
  if (doc.is_null()) return c;
  if (!doc.is_object()) config_error("synth", "expected an object");
  const std::string w = "synth";
  if (auto d = get_opt_date(doc, "start", w)) c.start = *d;
  if (auto d = get_opt_date(doc, "end", w)) c.end = *d;
  c.base_level = get_or(doc, "base_level", c.base_level, w);
  c.annual_growth = get_or(doc, "annual_growth", c.annual_growth, w);
  if (doc.contains("dow_multipliers")) {
    const auto v = get_or(doc, "dow_multipliers", std::vector<double>{}, w);
    if (v.size() != 7) config_error("synth.dow_multipliers", "expected 7 values (Mon..Sun)");
    std::copy(v.begin(), v.end(), c.dow_multipliers.begin());
  }
  c.yearly_amplitude = get_or(doc, "yearly_amplitude", c.yearly_amplitude, w);
  c.yearly_peak_day = get_or(doc, "yearly_peak_day", c.yearly_peak_day, w);
  c.holiday_uplift = get_or(doc, "holiday_uplift", c.holiday_uplift, w);
  c.post_holiday_uplift = get_or(doc, "post_holiday_uplift", c.post_holiday_uplift, w);
  if (doc.contains("covid_suppression")) {
    const auto& s = doc.at("covid_suppression");
    if (!s.is_object()) config_error("synth.covid_suppression", "expected {level: multiplier}");
    for (const auto& [k, v] : s.items()) {
      try {
        c.covid_suppression[std::stoi(k)] = v.get<double>();
      } catch (const std::exception&) {
        config_error("synth.covid_suppression", "bad entry '" + k + "'");
      }
    }
  }
  if (doc.contains("holidays")) {
    c.holidays.clear();
    for (const auto& h : doc.at("holidays"))
      c.holidays.push_back({get_or(h, "month", 1u, "synth.holidays"),
                            get_or(h, "day", 1u, "synth.holidays"),
                            get_or(h, "name", std::string("holiday"), "synth.holidays")});
  }
  if (doc.contains("covid")) {
    c.covid.clear();
    for (const auto& iv : doc.at("covid")) {
      if (!iv.is_object()) config_error("synth.covid", "expected {start, end, level}");
      c.covid.push_back({get_date(iv.value("start", json{}), "synth.covid.start"),
                         get_date(iv.value("end", json{}), "synth.covid.end"),
                         get_or(iv, "level", 1, "synth.covid")});
    }
  }
  const auto noise = get_or(doc, "noise", std::string("poisson"), w);
  if (noise == "poisson") c.noise = NoiseModel::Poisson;
  else if (noise == "none") c.noise = NoiseModel::None;
  else config_error("synth.noise", "expected 'poisson' or 'none'");
  c.seed = get_or(doc, "seed", c.seed, w);
  return c;
}

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) config_error("<root>", "expected an object");
  RunConfig c;
  c.source = doc;

  const json data = doc.value("data", json::object());
  c.demand_csv = resolve(base_dir, get_or(data, "demand", std::string{}, "data"));
  c.holidays_csv = resolve(base_dir, get_or(data, "holidays", std::string{}, "data"));
  c.covid_csv = resolve(base_dir, get_or(data, "covid", std::string{}, "data"));
  const auto gap = get_or(data, "gap_policy", std::string("reject"), "data");
  if (gap == "reject") c.gap_policy = GapPolicy::Reject;
  else if (gap == "interpolate-linear") c.gap_policy = GapPolicy::InterpolateLinear;
  else config_error("data.gap_policy", "expected 'reject' or 'interpolate-linear'");

  const json sched = doc.value("schedule", json::object());
  c.train_start = get_opt_date(sched, "train_start", "schedule");
  c.first_train_end = get_opt_date(sched, "first_train_end", "schedule");
  c.last_horizon_end = get_opt_date(sched, "last_horizon_end", "schedule");
  if (sched.contains("exclude")) {
    for (const auto& r : sched.at("exclude")) {
      if (!r.is_array() || r.size() != 2) config_error("schedule.exclude", "expected [first, last] pairs");
      const DateRange dr{get_date(r[0], "schedule.exclude"), get_date(r[1], "schedule.exclude")};
      if (dr.last < dr.first) config_error("schedule.exclude", "range ends before it starts");
      c.exclude.push_back(dr);
    }
  }

  if (doc.contains("models")) {
    for (const auto& m : doc.at("models")) {
      ModelSpec s;
      s.name = get_or(m, "name", std::string{}, "models");
      s.kind = get_or(m, "kind", std::string{}, "models");
      if (s.kind.empty()) config_error("models." + s.name + ".kind", "required");
      s.params = m;
      s.params.erase("name");
      s.params.erase("kind");
      c.models.push_back(std::move(s));
    }
  } else {
    c.models = default_model_specs();
  }
  build_models(c.models);  // validates references eagerly
  c.evaluate = get_or(doc, "evaluate", std::vector<std::string>{}, "<root>");
  for (const auto& e : c.evaluate)
    if (std::none_of(c.models.begin(), c.models.end(), [&](auto& s) { return s.name == e; }))
      throw Error(ErrorCode::UnknownModel, "evaluate lists '" + e + "'");

  const json report = doc.value("report", json::object());
  c.stability_model = get_or(report, "stability_model", std::string{}, "report");
  const json dm = doc.value("dm", json::object());
  c.dm_horizon = get_or(dm, "h", 1, "dm");
  if (c.dm_horizon < 1) config_error("dm.h", "must be >= 1");
  const auto loss = get_or(dm, "loss", std::string("squared"), "dm");
  if (loss == "squared") c.dm_loss = DmLoss::Squared;
  else if (loss == "absolute") c.dm_loss = DmLoss::Absolute;
  else config_error("dm.loss", "expected 'squared' or 'absolute'");

  const json ex = doc.value("explain", json::object());
  c.explain.model = get_or(ex, "model", c.explain.model, "explain");
  if (ex.contains("dates"))
    for (const auto& d : ex.at("dates")) c.explain.dates.push_back(get_date(d, "explain.dates"));
  c.explain.background_rows = get_or(ex, "background_rows", c.explain.background_rows, "explain");
  c.explain.surrogate_samples = get_or(ex, "surrogate_samples", c.explain.surrogate_samples, "explain");
  c.explain.kernel_width = get_or(ex, "kernel_width", c.explain.kernel_width, "explain");
  c.explain.permutation_repeats =
      get_or(ex, "permutation_repeats", c.explain.permutation_repeats, "explain");

  try {
    c.synth = parse_synth_config(doc.value("synth", json{}));
  } catch (const Error& e) {
    if (e.category() == ErrorCategory::Config) throw;
    config_error("synth", e.what());
  }
  c.seed = get_or(doc, "seed", c.seed, "<root>");
  if (!doc.contains("synth") || !doc.at("synth").contains("seed")) c.synth.seed = c.seed;
  c.workers = get_or(doc, "workers", c.workers, "<root>");
  c.output_dir = resolve(base_dir, get_or(doc, "output_dir", std::string("out"), "<root>"));
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

BacktestOptions backtest_options(const RunConfig& c) {
  BacktestOptions o;
  o.train_start = c.train_start;
  o.exclusions = ExclusionRanges(c.exclude);
  o.seed = c.seed;
  o.dm_horizon = c.dm_horizon;
  o.dm_loss = c.dm_loss;
  return o;
}

}  // namespace demand
