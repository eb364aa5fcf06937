#include "demand/models.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <numbers>
#include <numeric>

#include "demand/error.hpp"

namespace demand {

namespace {

class FunctionFit final : public FittedModel {
 public:
  explicit FunctionFit(std::function<double(const FeatureRow&)> fn) : fn_(std::move(fn)) {}
  double predict(const FeatureRow& row) const override { return fn_(row); }

 private:
  std::function<double(const FeatureRow&)> fn_;
};

Eigen::MatrixXd design_of(const FeatureMatrix& X) {
  Eigen::MatrixXd m(Eigen::Index(X.size()), Eigen::Index(kNumFeatures));
  for (std::size_t i = 0; i < X.size(); ++i)
    for (std::size_t j = 0; j < kNumFeatures; ++j) m(Eigen::Index(i), Eigen::Index(j)) = X[i].x[j];
  return m;
}

Eigen::VectorXd targets_of(const FeatureMatrix& X) {
  const auto y = X.targets();
  return Eigen::Map<const Eigen::VectorXd>(y.data(), Eigen::Index(y.size()));
}

SortedColumns columns_of(const FeatureMatrix& X) {
  std::vector<std::vector<double>> cols(kNumFeatures);
  for (std::size_t j = 0; j < kNumFeatures; ++j) cols[j] = X.column(j);
  return SortedColumns(std::move(cols));
}

TreeOptions tree_options(const TreeEnsembleParams& p) {
  TreeOptions o;
  o.max_depth = p.max_depth;
  o.min_samples_leaf = p.min_samples_leaf;
  o.max_features =
      std::max(1, int(std::lround(p.feature_subsample * double(kNumFeatures))));
  if (o.max_features >= int(kNumFeatures)) o.max_features = 0;
  return o;
}

void validate(const TreeEnsembleParams& p) {
  if (p.n_trees < 0 || p.max_depth < 0 || p.min_samples_leaf < 1 ||
      !(p.feature_subsample > 0.0 && p.feature_subsample <= 1.0) ||
      !(p.learning_rate > 0.0 && p.learning_rate <= 1.0))
    throw Error(ErrorCode::InvalidArgument, "tree ensemble parameters out of range");
}

std::vector<int> bootstrap_counts(std::size_t n, std::mt19937_64& rng) {
  std::vector<int> counts(n, 0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t i = 0; i < n; ++i) ++counts[pick(rng)];
  return counts;
}

}  // namespace

FittedPtr FitCache::get_or_fit(const ForecastModel& model, const TrainingData& data) {
  {
    std::lock_guard lock(mutex_);
    if (auto it = fits_.find(model.name()); it != fits_.end()) return it->second;
  }
  FittedPtr fitted = model.fit(data);
  std::lock_guard lock(mutex_);
  return fits_.emplace(model.name(), std::move(fitted)).first->second;
}

FittedPtr fit_shared(const ForecastModel& model, const TrainingData& data) {
  return data.cache ? data.cache->get_or_fit(model, data) : model.fit(data);
}

// ---------------------------------------------------------------------------

double in_house(const FeatureRow& row, double uplift) { return row[Feature::Lag1] * (1.0 + uplift); }

double seasonal_naive(const FeatureRow& row) { return row[Feature::Lag1]; }

double enhanced_naive(const FeatureRow& row, const LagWeights& weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9)
    throw Error(ErrorCode::WeightsNotNormalized, "lag weights sum to " + std::to_string(total));
  double s = 0.0;
  for (std::size_t k = 0; k < kNumLags; ++k) s += weights[k] * row.x[k];
  return s;
}

ArProcess ArProcess::fit(std::span<const double> z, int p) {
  if (p < 0) throw Error(ErrorCode::InvalidArgument, "AR order must be >= 0");
  const std::size_t order = std::size_t(p);
  if (z.size() < order + 2)
    throw Error(ErrorCode::InsufficientHistory, "AR fit needs more than p + 1 values");
  const Eigen::Index rows = Eigen::Index(z.size() - order);
  Eigen::MatrixXd X(rows, Eigen::Index(order));
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t t = std::size_t(r) + order;
    y[r] = z[t];
    for (std::size_t k = 0; k < order; ++k) X(r, Eigen::Index(k)) = z[t - 1 - k];
  }
  ArProcess ar;
  if (order == 0) {
    ar.intercept_ = y.mean();
  } else {
    const LinearFit lf = fit_ridge(X, y, 0.0);
    ar.intercept_ = lf.intercept;
    ar.phi_.assign(lf.coef.data(), lf.coef.data() + lf.coef.size());
  }
  ar.tail_.assign(z.end() - long(order), z.end());
  return ar;
}

std::vector<double> ArProcess::forecast(int h) const {
  std::vector<double> window = tail_;
  std::vector<double> out;
  out.reserve(std::size_t(std::max(h, 0)));
  const std::size_t p = phi_.size();
  for (int s = 0; s < h; ++s) {
    double v = intercept_;
    for (std::size_t k = 0; k < p; ++k) v += phi_[k] * window[window.size() - 1 - k];
    out.push_back(v);
    if (p > 0) {
      window.erase(window.begin());
      window.push_back(v);
    }
  }
  return out;
}

ArimaFit::ArimaFit(const DailySeries& history, int p, int d)
    : history_(history), p_(p), d_(d) {
  if (p < 0 || d < 0) throw Error(ErrorCode::InvalidArgument, "ARIMA orders must be >= 0");
  if (history.size() <= std::size_t(p + d + 10))
    throw Error(ErrorCode::InsufficientHistory, "ARIMA needs more than p + d + 10 observations");
  std::vector<double> z(history.counts().begin(), history.counts().end());
  for (int k = 0; k < d; ++k) {
    last_levels_.push_back(z.back());
    std::vector<double> diff(z.size() - 1);
    for (std::size_t i = 1; i < z.size(); ++i) diff[i - 1] = z[i] - z[i - 1];
    z = std::move(diff);
  }
  ar_ = ArProcess::fit(z, p);
}

std::vector<double> ArimaFit::forecast(int h) const {
  std::vector<double> steps = ar_.forecast(h);
  std::vector<double> last = last_levels_;
  for (double& v : steps) {
    for (int k = d_ - 1; k >= 0; --k) {
      v += last[std::size_t(k)];
      last[std::size_t(k)] = v;
    }
  }
  return steps;
}

double ArimaFit::predict(const FeatureRow& row) const {
  const long h = days_between(history_.end(), row.date);
  if (h >= 1) return forecast(int(h)).back();
  // In-sample: one-step-ahead fit. The level error equals the d-th difference error.
  const auto counts = history_.counts();
  const long t = days_between(history_.start(), row.date);
  if (t < 0) return counts.front();
  if (t < long(p_ + d_)) return counts[std::size_t(t)];
  auto diff_at = [&](long i) {
    std::vector<double> w(counts.begin() + (i - d_), counts.begin() + i + 1);
    for (int k = 0; k < d_; ++k)
      for (std::size_t j = w.size() - 1; j > std::size_t(k); --j) w[j] -= w[j - 1];
    return w.back();
  };
  double zhat = ar_.intercept();
  const auto& phi = ar_.coefficients();
  for (std::size_t k = 0; k < phi.size(); ++k) zhat += phi[k] * diff_at(t - 1 - long(k));
  return counts[std::size_t(t)] - (diff_at(t) - zhat);
}

std::shared_ptr<const ArimaFit> arima_fit(const DailySeries& history, int p, int d) {
  return std::make_shared<const ArimaFit>(history, p, d);
}

std::shared_ptr<const RidgeFit> ridge_fit(const FeatureMatrix& X, double lambda) {
  if (X.size() < 2) throw Error(ErrorCode::InsufficientRows, "ridge needs at least 2 rows");
  return std::make_shared<const RidgeFit>(fit_ridge(design_of(X), targets_of(X), lambda));
}

KnnFit::KnnFit(const FeatureMatrix& X, int k) : k_(k) {
  if (k < 1 || std::size_t(k) > X.size())
    throw Error(ErrorCode::KTooLarge,
                "k = " + std::to_string(k) + " with " + std::to_string(X.size()) + " rows");
  const double n = double(X.size());
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    double m = 0.0;
    for (const auto& r : X) m += r.x[j];
    m /= n;
    double v = 0.0;
    for (const auto& r : X) v += (r.x[j] - m) * (r.x[j] - m);
    v /= n;
    mean_[j] = m;
    scale_[j] = v > 0.0 ? std::sqrt(v) : 1.0;
  }
  points_.reserve(X.size());
  for (const auto& r : X) {
    FeatureVector z;
    for (std::size_t j = 0; j < kNumFeatures; ++j) z[j] = (r.x[j] - mean_[j]) / scale_[j];
    points_.push_back(z);
    targets_.push_back(*r.target);
  }
}

double KnnFit::predict(const FeatureRow& row) const {
  FeatureVector q;
  for (std::size_t j = 0; j < kNumFeatures; ++j) q[j] = (row.x[j] - mean_[j]) / scale_[j];
  std::vector<std::pair<double, std::size_t>> dist(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      const double diff = points_[i][j] - q[j];
      s += diff * diff;
    }
    dist[i] = {s, i};  // rows are date-ordered, so the index breaks ties by date
  }
  std::partial_sort(dist.begin(), dist.begin() + k_, dist.end());
  double sum = 0.0;
  for (int i = 0; i < k_; ++i) sum += targets_[dist[std::size_t(i)].second];
  return sum / double(k_);
}

double knn_predict(const FeatureMatrix& X, const FeatureRow& row, int k) {
  return KnnFit(X, k).predict(row);
}

TreeEnsembleParams TreeEnsembleParams::forest_defaults() {
  TreeEnsembleParams p;
  p.n_trees = 300;
  p.max_depth = 0;
  p.min_samples_leaf = 2;
  p.feature_subsample = 1.0 / 3.0;
  p.bootstrap = true;
  return p;
}

TreeEnsembleParams TreeEnsembleParams::gbm_defaults() {
  TreeEnsembleParams p;
  p.n_trees = 500;
  p.max_depth = 4;
  p.min_samples_leaf = 1;
  p.feature_subsample = 1.0;
  p.bootstrap = false;
  p.learning_rate = 0.05;
  return p;
}

double ForestFit::predict(const FeatureRow& row) const {
  double s = 0.0;
  for (const auto& t : trees_) s += t.predict(row.x);
  return s / double(trees_.size());
}

std::shared_ptr<const ForestFit> forest_fit(const FeatureMatrix& X,
                                            const TreeEnsembleParams& params, Execution exec) {
  validate(params);
  if (params.n_trees < 1) throw Error(ErrorCode::InvalidArgument, "forest needs >= 1 tree");
  if (X.size() < 2 * std::size_t(params.min_samples_leaf))
    throw Error(ErrorCode::InsufficientRows, "forest needs at least 2 * min_samples_leaf rows");
  const SortedColumns data = columns_of(X);
  const std::vector<double> y = X.targets();
  const TreeOptions options = tree_options(params);
  std::vector<RegressionTree> trees(static_cast<std::size_t>(params.n_trees));
  std::exception_ptr failure;
  const bool parallel = exec == Execution::Parallel;

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int t = 0; t < params.n_trees; ++t) {
    try {
      std::mt19937_64 rng(derive_seed(params.seed, std::uint64_t(t)));
      std::vector<int> counts;
      if (params.bootstrap) counts = bootstrap_counts(X.size(), rng);
      trees[std::size_t(t)] = grow_tree(data, y, counts, options, rng);
    } catch (...) {
#pragma omp critical(demand_forest_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return std::make_shared<const ForestFit>(std::move(trees));
}

double GbmFit::predict(const FeatureRow& row) const {
  double s = 0.0;
  for (const auto& t : trees_) s += t.predict(row.x);
  return initial_ + learning_rate_ * s;
}

std::shared_ptr<const GbmFit> gbm_fit(const FeatureMatrix& X, const TreeEnsembleParams& params) {
  validate(params);
  if (X.size() < 2) throw Error(ErrorCode::InsufficientRows, "boosting needs at least 2 rows");
  const SortedColumns data = columns_of(X);
  const std::vector<double> y = X.targets();
  const std::size_t n = y.size();
  const double init = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
  const TreeOptions options = tree_options(params);
  std::mt19937_64 rng(params.seed);

  std::vector<double> fitted(n, init), residual(n);
  std::vector<RegressionTree> trees;
  trees.reserve(std::size_t(params.n_trees));
  for (int m = 0; m < params.n_trees; ++m) {
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - fitted[i];
    std::vector<int> counts;
    if (params.bootstrap) counts = bootstrap_counts(n, rng);
    RegressionTree tree = grow_tree(data, residual, counts, options, rng);
    for (std::size_t i = 0; i < n; ++i) fitted[i] += params.learning_rate * tree.predict(X[i].x);
    trees.push_back(std::move(tree));
  }
  return std::make_shared<const GbmFit>(init, params.learning_rate, std::move(trees));
}

AdditiveFit::AdditiveFit(const DailySeries& history, const HolidayCalendar& cal,
                         const AdditiveConfig& cfg)
    : cfg_(cfg), holidays_(cal), origin_(history.start()) {
  if (history.size() < 730)
    throw Error(ErrorCode::InsufficientHistory, "additive model needs at least 2 years of history");
  if (cfg.fourier_order_yearly < 0 || cfg.holiday_upper_window < 0 || cfg.trend_changepoints < 0 ||
      !(cfg.changepoint_range > 0.0 && cfg.changepoint_range <= 1.0) ||
      cfg.changepoint_lambda < 0.0 || cfg.lambda < 0.0)
    throw Error(ErrorCode::InvalidArgument, "additive configuration out of range");
  span_days_ = double(history.size() - 1);
  for (int k = 1; k <= cfg.trend_changepoints; ++k)
    changepoints_.push_back(cfg.changepoint_range * double(k) / double(cfg.trend_changepoints + 1));
  for (const auto& [d, name] : holidays_.entries())
    if (std::find(holiday_names_.begin(), holiday_names_.end(), name) == holiday_names_.end())
      holiday_names_.push_back(name);
  std::sort(holiday_names_.begin(), holiday_names_.end());
  width_ = design_row(origin_).size();

  const Eigen::Index n = Eigen::Index(history.size());
  Eigen::MatrixXd X(n, Eigen::Index(width_));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = design_row(origin_ + Days{long(i)});
    for (std::size_t j = 0; j < width_; ++j) X(i, Eigen::Index(j)) = row[j];
    y[i] = history.counts()[std::size_t(i)];
  }
  RidgeOptions opt;
  opt.penalty_scale = Eigen::VectorXd::Constant(Eigen::Index(width_), cfg.lambda);
  for (std::size_t k = 0; k < changepoints_.size(); ++k)
    opt.penalty_scale[Eigen::Index(1 + k)] = cfg.changepoint_lambda;
  const bool penalized = cfg.lambda > 0.0 || cfg.changepoint_lambda > 0.0;
  fit_ = fit_ridge(X, y, penalized ? 1.0 : 0.0, opt);
}

std::vector<double> AdditiveFit::design_row(Date d) const {
  std::vector<double> row;
  const double t = double(days_between(origin_, d)) / span_days_;
  row.push_back(t);
  for (double c : changepoints_) row.push_back(std::max(0.0, t - c));
  const int dow = weekday_index(d);
  for (int k = 1; k < 7; ++k) row.push_back(dow == k ? 1.0 : 0.0);
  const double years = double(d.time_since_epoch().count()) / 365.25;
  for (int k = 1; k <= cfg_.fourier_order_yearly; ++k) {
    const double a = 2.0 * std::numbers::pi * double(k) * years;
    row.push_back(std::sin(a));
    row.push_back(std::cos(a));
  }
  for (const auto& name : holiday_names_) {
    for (int o = 0; o <= cfg_.holiday_upper_window; ++o) {
      const std::string* h = holidays_.name_of(d - Days{o});
      row.push_back(h && *h == name ? 1.0 : 0.0);
    }
  }
  return row;
}

double AdditiveFit::predict_date(Date d) const { return fit_.predict(design_row(d)); }

std::shared_ptr<const AdditiveFit> additive_fit(const DailySeries& history,
                                                const HolidayCalendar& cal,
                                                const AdditiveConfig& config) {
  return std::make_shared<const AdditiveFit>(history, cal, config);
}

// ---------------------------------------------------------------------------

InHouseModel::InHouseModel(std::string name, double uplift)
    : ForecastModel(std::move(name)), uplift_(uplift) {}

FittedPtr InHouseModel::fit(const TrainingData&) const {
  const double u = uplift_;
  return std::make_shared<const FunctionFit>([u](const FeatureRow& r) { return in_house(r, u); });
}

SeasonalNaiveModel::SeasonalNaiveModel(std::string name) : ForecastModel(std::move(name)) {}

FittedPtr SeasonalNaiveModel::fit(const TrainingData&) const {
  return std::make_shared<const FunctionFit>(seasonal_naive);
}

EnhancedNaiveModel::EnhancedNaiveModel(std::string name, LagWeights weights)
    : ForecastModel(std::move(name)), weights_(weights) {
  enhanced_naive(FeatureRow{}, weights_);  // validates the weights eagerly
}

FittedPtr EnhancedNaiveModel::fit(const TrainingData&) const {
  const LagWeights w = weights_;
  return std::make_shared<const FunctionFit>(
      [w](const FeatureRow& r) { return enhanced_naive(r, w); });
}

ArimaModel::ArimaModel(std::string name, int p, int d)
    : ForecastModel(std::move(name)), p_(p), d_(d) {}

FittedPtr ArimaModel::fit(const TrainingData& data) const {
  return arima_fit(data.history, p_, d_);
}

RidgeModel::RidgeModel(std::string name, double lambda)
    : ForecastModel(std::move(name)), lambda_(lambda) {}

FittedPtr RidgeModel::fit(const TrainingData& data) const { return ridge_fit(data.matrix, lambda_); }

KnnModel::KnnModel(std::string name, int k) : ForecastModel(std::move(name)), k_(k) {}

FittedPtr KnnModel::fit(const TrainingData& data) const {
  return std::make_shared<const KnnFit>(data.matrix, k_);
}

ForestModel::ForestModel(std::string name, TreeEnsembleParams params)
    : ForecastModel(std::move(name)), params_(params) {
  validate(params_);
}

FittedPtr ForestModel::fit(const TrainingData& data) const {
  TreeEnsembleParams p = params_;
  p.seed = derive_seed(model_seed(data), params_.seed);
  return forest_fit(data.matrix, p);
}

GbmModel::GbmModel(std::string name, TreeEnsembleParams params)
    : ForecastModel(std::move(name)), params_(params) {
  validate(params_);
}

FittedPtr GbmModel::fit(const TrainingData& data) const {
  TreeEnsembleParams p = params_;
  p.seed = derive_seed(model_seed(data), params_.seed);
  return gbm_fit(data.matrix, p);
}

AdditiveModel::AdditiveModel(std::string name, AdditiveConfig config)
    : ForecastModel(std::move(name)), config_(config) {}

FittedPtr AdditiveModel::fit(const TrainingData& data) const {
  return additive_fit(data.history, data.holidays, config_);
}

}  // namespace demand
