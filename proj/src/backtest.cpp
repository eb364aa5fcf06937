#include "demand/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>

#include "demand/error.hpp"

namespace demand {

namespace {

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * double(v.size() - 1);
  const std::size_t lo = std::size_t(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
}

bool fully_excluded(const Vintage& v, const ExclusionRanges& ex) {
  for (Date d = v.horizon_start; d <= v.horizon_end; d += Days{1})
    if (!ex.excluded(d)) return false;
  return true;
}

}  // namespace

VintageSchedule make_schedule(Date first_train_end, Date last_horizon_end) {
  VintageSchedule out;
  for (Date train_end = first_train_end;; train_end += Days{kHorizonDays}) {
    const Date end = train_end + Days{kHorizonDays};
    if (end > last_horizon_end) break;
    out.push_back({int(out.size()), train_end, train_end + Days{1}, end});
  }
  if (out.empty())
    throw Error(ErrorCode::EmptySchedule, "no full " + std::to_string(kHorizonDays) +
                                              "-day horizon between " + format_date(first_train_end) +
                                              " and " + format_date(last_horizon_end));
  return out;
}

HorizonForecast forecast_horizon(const FittedModel& model, const DailySeries& observed,
                                 const HolidayCalendar& cal, const CovidSchedule& covid,
                                 Date train_end, int days) {
  HorizonForecast out;
  out.rows.reserve(std::size_t(days));
  out.predictions.reserve(std::size_t(days));
  for (int i = 0; i < days; ++i) {
    const Date d = train_end + Days{i + 1};
    const RecursiveLags lags(observed, train_end, out.predictions);
    FeatureRow row = build_row(lags, cal, covid, d);
    const double raw = model.predict(row);
    if (!std::isfinite(raw))
      throw Error(ErrorCode::InvalidArgument, "non-finite prediction for " + format_date(d));
    out.predictions.push_back(std::max(0.0, raw));
    out.rows.push_back(std::move(row));
  }
  return out;
}

TrainingWindow training_window(const DailySeries& series, const HolidayCalendar& cal,
                               const CovidSchedule& covid, Date train_end,
                               std::optional<Date> train_start) {
  if (train_end > series.end() || train_end < series.start())
    throw Error(ErrorCode::InsufficientHistory,
                "training boundary " + format_date(train_end) + " outside the series");
  DailySeries history = series.truncated(train_end);
  const Date first = train_start.value_or(history.start() + Days{kMaxLag});
  if (first > train_end)
    throw Error(ErrorCode::InsufficientHistory,
                "no training rows with full lag history before " + format_date(train_end));
  FeatureMatrix matrix = build_training_matrix(history, cal, covid, {first, train_end});
  return {std::move(history), std::move(matrix)};
}

std::uint64_t vintage_seed(std::uint64_t root, const Vintage& v) noexcept {
  return derive_seed(root, std::uint64_t(v.train_end.time_since_epoch().count()));
}

ForecastVintage recursive_forecast(const ForecastModel& model, const DailySeries& series,
                                   const HolidayCalendar& cal, const CovidSchedule& covid,
                                   const Vintage& vintage, const BacktestOptions& options,
                                   FitCache* cache) {
  const TrainingWindow window =
      training_window(series, cal, covid, vintage.train_end, options.train_start);
  const TrainingData data{window.history, window.matrix, cal, covid,
                          vintage_seed(options.seed, vintage), cache};
  const FittedPtr fitted = fit_shared(model, data);
  const int days = int(days_between(vintage.train_end, vintage.horizon_end));
  HorizonForecast horizon = forecast_horizon(*fitted, window.history, cal, covid,
                                             vintage.train_end, days);

  ForecastVintage out;
  out.model = model.name();
  out.vintage = vintage.index;
  for (int i = 0; i < days; ++i) {
    const Date d = horizon.rows[std::size_t(i)].date;
    if (options.exclusions.excluded(d)) continue;
    const auto actual = series.find(d);
    if (!actual)
      throw Error(ErrorCode::InsufficientHistory, "no actual for " + format_date(d));
    out.records.push_back({d, i + 1, horizon.predictions[std::size_t(i)], *actual});
  }
  out.rows = std::move(horizon.rows);
  return out;
}

Metrics metrics(std::span<const double> pred, std::span<const double> actual) {
  if (pred.size() != actual.size() || pred.empty())
    throw Error(ErrorCode::InvalidArgument, "metrics need equal, non-empty inputs");
  Metrics m;
  m.n = pred.size();
  double sq = 0.0, ab = 0.0, pct = 0.0;
  std::size_t pct_n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = actual[i] - pred[i];
    sq += e * e;
    ab += std::abs(e);
    if (actual[i] == 0.0) {
      ++m.mape_dropped;
    } else {
      pct += std::abs(e) / std::abs(actual[i]);
      ++pct_n;
    }
  }
  m.rmse = std::sqrt(sq / double(m.n));
  m.mae = ab / double(m.n);
  if (pct_n > 0) m.mape = 100.0 * pct / double(pct_n);
  return m;
}

Metrics metrics(const ForecastVintage& v) {
  std::vector<double> p, a;
  for (const auto& r : v.records) {
    p.push_back(r.predicted);
    a.push_back(r.actual);
  }
  return metrics(p, a);
}

std::vector<double> rank_with_ties(std::span<const double> scores) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = 0.5 * double(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

std::vector<double> mean_ranks(const std::vector<std::vector<double>>& scores) {
  if (scores.empty()) return {};
  const std::size_t vintages = scores.front().size();
  for (std::size_t m = 0; m < scores.size(); ++m) {
    if (scores[m].size() != vintages)
      throw Error(ErrorCode::MissingCell, "model " + std::to_string(m) + " lacks vintages");
    for (std::size_t v = 0; v < vintages; ++v)
      if (std::isnan(scores[m][v]))
        throw Error(ErrorCode::MissingCell,
                    "model " + std::to_string(m) + " vintage " + std::to_string(v));
  }
  std::vector<double> total(scores.size(), 0.0);
  std::vector<double> column(scores.size());
  for (std::size_t v = 0; v < vintages; ++v) {
    for (std::size_t m = 0; m < scores.size(); ++m) column[m] = scores[m][v];
    const auto r = rank_with_ties(column);
    for (std::size_t m = 0; m < scores.size(); ++m) total[m] += r[m];
  }
  for (double& t : total) t /= double(std::max<std::size_t>(vintages, 1));
  return total;
}

std::vector<StabilityRow> stability_profile(std::span<const ForecastVintage> vintages) {
  if (vintages.empty()) throw Error(ErrorCode::InvalidArgument, "stability needs a vintage");
  int max_day = 0;
  for (const auto& v : vintages)
    for (const auto& r : v.records) max_day = std::max(max_day, r.horizon_day);
  std::vector<std::vector<double>> pools(std::size_t(max_day) + 1);
  for (const auto& v : vintages)
    for (const auto& r : v.records) pools[std::size_t(r.horizon_day)].push_back(r.residual());
  std::vector<StabilityRow> out;
  for (int day = 1; day <= max_day; ++day) {
    auto& pool = pools[std::size_t(day)];
    if (pool.empty()) continue;
    std::sort(pool.begin(), pool.end());
    out.push_back({day, pool.size(), quantile_sorted(pool, 0.5), quantile_sorted(pool, 0.25),
                   quantile_sorted(pool, 0.75), pool.front(), pool.back()});
  }
  return out;
}

std::size_t BacktestReport::model_index(const std::string& name) const {
  const auto it = std::find(models.begin(), models.end(), name);
  if (it == models.end()) throw Error(ErrorCode::UnknownModel, name);
  return std::size_t(it - models.begin());
}

std::vector<double> BacktestReport::concatenated_errors(std::size_t model) const {
  std::vector<double> e;
  for (const auto& v : cells[model])
    for (const auto& r : v.records) e.push_back(r.residual());
  return e;
}

BacktestReport assemble_report(std::vector<std::string> models, VintageSchedule vintages,
                               std::vector<std::vector<ForecastVintage>> cells,
                               const BacktestOptions& options) {
  BacktestReport rep;
  rep.models = std::move(models);
  rep.vintages = std::move(vintages);
  rep.cells = std::move(cells);
  const std::size_t M = rep.models.size(), V = rep.vintages.size();

  rep.metrics.assign(M, std::vector<Metrics>(V));
  std::vector<std::vector<double>> rmse(M, std::vector<double>(V));
  for (std::size_t m = 0; m < M; ++m)
    for (std::size_t v = 0; v < V; ++v) {
      rep.metrics[m][v] = metrics(rep.cells[m][v]);
      rmse[m][v] = rep.metrics[m][v].rmse;
    }

  rep.ranks.assign(M, std::vector<double>(V));
  std::vector<double> column(M);
  for (std::size_t v = 0; v < V; ++v) {
    for (std::size_t m = 0; m < M; ++m) column[m] = rmse[m][v];
    const auto r = rank_with_ties(column);
    for (std::size_t m = 0; m < M; ++m) rep.ranks[m][v] = r[m];
  }
  const auto mr = mean_ranks(rmse);
  for (std::size_t m = 0; m < M; ++m) {
    ModelSummary s;
    s.model = rep.models[m];
    s.mean_rank = mr[m];
    double mape_sum = 0.0;
    std::size_t mape_n = 0;
    for (std::size_t v = 0; v < V; ++v) {
      s.mean_rmse += rep.metrics[m][v].rmse / double(V);
      s.mean_mae += rep.metrics[m][v].mae / double(V);
      if (rep.metrics[m][v].mape) {
        mape_sum += *rep.metrics[m][v].mape;
        ++mape_n;
      }
    }
    if (mape_n) s.mean_mape = mape_sum / double(mape_n);
    rep.summary.push_back(std::move(s));
  }

  std::vector<std::vector<double>> errors(M);
  for (std::size_t m = 0; m < M; ++m) errors[m] = rep.concatenated_errors(m);
  for (std::size_t a = 0; a < M; ++a)
    for (std::size_t b = a + 1; b < M; ++b) {
      DmComparison c{rep.models[a], rep.models[b], std::nullopt, "ok"};
      try {
        c.result = dm_test(errors[a], errors[b], options.dm_horizon, options.dm_loss);
      } catch (const Error& e) {
        c.status = std::string(to_string(e.code()));
      }
      rep.dm.push_back(std::move(c));
    }

  for (std::size_t m = 0; m < M; ++m) rep.stability.push_back(stability_profile(rep.cells[m]));
  return rep;
}

BacktestReport run_backtest(std::span<const ModelPtr> models, const DailySeries& series,
                            const HolidayCalendar& cal, const CovidSchedule& covid,
                            const VintageSchedule& schedule, const BacktestOptions& options,
                            Execution exec) {
  if (models.empty()) throw Error(ErrorCode::InvalidArgument, "backtest needs a model");
  VintageSchedule active;
  for (const auto& v : schedule)
    if (!fully_excluded(v, options.exclusions)) active.push_back(v);
  if (active.empty()) throw Error(ErrorCode::EmptySchedule, "every vintage is excluded");

  const std::size_t M = models.size(), V = active.size();
  std::vector<std::vector<ForecastVintage>> cells(M, std::vector<ForecastVintage>(V));
  std::exception_ptr failure;
  std::optional<Error> context_error;
  const bool parallel = exec == Execution::Parallel;

#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (long vi = 0; vi < long(V); ++vi) {
    FitCache cache;
    for (std::size_t m = 0; m < M; ++m) {
      try {
        cells[m][std::size_t(vi)] = recursive_forecast(*models[m], series, cal, covid,
                                                       active[std::size_t(vi)], options, &cache);
      } catch (const Error& e) {
#pragma omp critical(demand_backtest_failure)
        if (!context_error)
          context_error.emplace(e.code(), "model '" + models[m]->name() + "' vintage " +
                                              std::to_string(active[std::size_t(vi)].index) +
                                              " (train_end " +
                                              format_date(active[std::size_t(vi)].train_end) +
                                              "): " + e.what());
        break;
      } catch (...) {
#pragma omp critical(demand_backtest_failure)
        if (!failure) failure = std::current_exception();
        break;
      }
    }
  }
  if (context_error) throw *context_error;
  if (failure) std::rethrow_exception(failure);

  std::vector<std::string> names;
  for (const auto& m : models) names.push_back(m->name());
  return assemble_report(std::move(names), std::move(active), std::move(cells), options);
}

}  // namespace demand
