#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "demand/core_data.hpp"
#include "demand/features.hpp"
#include "demand/linalg.hpp"
#include "demand/parallel.hpp"
#include "demand/tree.hpp"

namespace demand {

class FitCache;

/// Everything a model may learn from: observed history up to the training boundary,
/// the training matrix built from it, calendars (known in advance) and the cell seed.
struct TrainingData {
  const DailySeries& history;
  const FeatureMatrix& matrix;
  const HolidayCalendar& holidays;
  const CovidSchedule& covid;
  std::uint64_t seed = 0;
  FitCache* cache = nullptr;
};

class FittedModel {
 public:
  virtual ~FittedModel() = default;
  virtual double predict(const FeatureRow& row) const = 0;
};

using FittedPtr = std::shared_ptr<const FittedModel>;

class ForecastModel {
 public:
  explicit ForecastModel(std::string name) : name_(std::move(name)) {}
  virtual ~ForecastModel() = default;

  const std::string& name() const noexcept { return name_; }
  /// Deterministic given data.seed; the model derives its own stream from (seed, name).
  virtual FittedPtr fit(const TrainingData& data) const = 0;

 protected:
  std::uint64_t model_seed(const TrainingData& data) const noexcept {
    return derive_seed(data.seed, name_);
  }

 private:
  std::string name_;
};

using ModelPtr = std::shared_ptr<const ForecastModel>;

/// Per-training-window memo of fitted models, keyed by model name, so ensembles and
/// their bases share one fit. Thread-safe.
class FitCache {
 public:
  FittedPtr get_or_fit(const ForecastModel& model, const TrainingData& data);

 private:
  std::mutex mutex_;
  std::map<std::string, FittedPtr> fits_;
};

/// Fits through the cache when one is attached.
FittedPtr fit_shared(const ForecastModel& model, const TrainingData& data);

// ---------------------------------------------------------------------------
// Benchmarks

double in_house(const FeatureRow& row, double uplift = 0.05);
double seasonal_naive(const FeatureRow& row);

using LagWeights = std::array<double, kNumLags>;
inline constexpr LagWeights kDefaultLagWeights{0.25, 0.15, 0.30, 0.20, 0.10};
/// Throws WeightsNotNormalized unless the weights sum to 1 within 1e-9.
double enhanced_naive(const FeatureRow& row, const LagWeights& weights);

/// Least-squares AR(p) with intercept; forecasts iterate the recursion from the end
/// of the fitted sample.
class ArProcess {
 public:
  static ArProcess fit(std::span<const double> z, int p);

  double intercept() const noexcept { return intercept_; }
  const std::vector<double>& coefficients() const noexcept { return phi_; }
  /// Forecasts 1..h steps past the end of the sample.
  std::vector<double> forecast(int h) const;

 private:
  double intercept_ = 0.0;
  std::vector<double> phi_;
  std::vector<double> tail_;  // last p values, oldest first
};

class ArimaFit final : public FittedModel {
 public:
  ArimaFit(const DailySeries& history, int p, int d);

  double predict(const FeatureRow& row) const override;
  /// Level forecasts for 1..h days past the end of history.
  std::vector<double> forecast(int h) const;
  const ArProcess& process() const noexcept { return ar_; }

 private:
  DailySeries history_;
  int p_;
  int d_;
  ArProcess ar_;
  std::vector<double> last_levels_;  // last value of the k-times differenced series, k < d
};

std::shared_ptr<const ArimaFit> arima_fit(const DailySeries& history, int p = 7, int d = 1);

class RidgeFit final : public FittedModel {
 public:
  explicit RidgeFit(LinearFit fit) : fit_(std::move(fit)) {}
  double predict(const FeatureRow& row) const override { return fit_.predict(row.x); }
  const LinearFit& linear() const noexcept { return fit_; }

 private:
  LinearFit fit_;
};

std::shared_ptr<const RidgeFit> ridge_fit(const FeatureMatrix& X, double lambda);

/// Mean target of the k nearest rows in standardized feature space; ties go to the
/// earlier date.
double knn_predict(const FeatureMatrix& X, const FeatureRow& row, int k);

class KnnFit final : public FittedModel {
 public:
  KnnFit(const FeatureMatrix& X, int k);
  double predict(const FeatureRow& row) const override;

 private:
  int k_;
  FeatureVector mean_{};
  FeatureVector scale_{};
  std::vector<FeatureVector> points_;
  std::vector<double> targets_;
};

struct TreeEnsembleParams {
  int n_trees = 300;
  int max_depth = 0;  // 0 = unlimited
  int min_samples_leaf = 2;
  double feature_subsample = 1.0 / 3.0;
  bool bootstrap = true;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;

  static TreeEnsembleParams forest_defaults();
  static TreeEnsembleParams gbm_defaults();
};

class ForestFit final : public FittedModel {
 public:
  explicit ForestFit(std::vector<RegressionTree> trees) : trees_(std::move(trees)) {}
  double predict(const FeatureRow& row) const override;
  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }

 private:
  std::vector<RegressionTree> trees_;
};

/// Bagged CART trees. The parallel path grows trees concurrently; each tree draws
/// from its own seeded stream so both paths give identical forests.
std::shared_ptr<const ForestFit> forest_fit(const FeatureMatrix& X,
                                            const TreeEnsembleParams& params,
                                            Execution exec = Execution::Parallel);

class GbmFit final : public FittedModel {
 public:
  GbmFit(double initial, double learning_rate, std::vector<RegressionTree> trees)
      : initial_(initial), learning_rate_(learning_rate), trees_(std::move(trees)) {}
  double predict(const FeatureRow& row) const override;
  double initial() const noexcept { return initial_; }
  const std::vector<RegressionTree>& trees() const noexcept { return trees_; }

 private:
  double initial_;
  double learning_rate_;
  std::vector<RegressionTree> trees_;
};

/// Squared-loss boosting from mean(y) with shrinkage.
std::shared_ptr<const GbmFit> gbm_fit(const FeatureMatrix& X, const TreeEnsembleParams& params);

struct AdditiveConfig {
  int fourier_order_yearly = 10;
  int holiday_upper_window = 1;
  int trend_changepoints = 25;
  double changepoint_range = 0.8;   // changepoints spread over this leading share of history
  double changepoint_lambda = 10.0; // penalty on trend slope changes
  double lambda = 1e-6;             // penalty on seasonal and holiday terms
};

/// Piecewise-linear trend + weekday + yearly Fourier + holiday-window regression.
class AdditiveFit final : public FittedModel {
 public:
  AdditiveFit(const DailySeries& history, const HolidayCalendar& cal, const AdditiveConfig& cfg);

  double predict(const FeatureRow& row) const override { return predict_date(row.date); }
  double predict_date(Date d) const;
  std::size_t design_width() const noexcept { return width_; }

 private:
  std::vector<double> design_row(Date d) const;

  AdditiveConfig cfg_;
  HolidayCalendar holidays_;
  std::vector<std::string> holiday_names_;
  Date origin_{};
  double span_days_ = 1.0;
  std::vector<double> changepoints_;
  std::size_t width_ = 0;
  LinearFit fit_;
};

std::shared_ptr<const AdditiveFit> additive_fit(const DailySeries& history,
                                                const HolidayCalendar& cal,
                                                const AdditiveConfig& config = {});

// ---------------------------------------------------------------------------
// ForecastModel adapters

class InHouseModel final : public ForecastModel {
 public:
  explicit InHouseModel(std::string name = "current", double uplift = 0.05);
  FittedPtr fit(const TrainingData& data) const override;

 private:
  double uplift_;
};

class SeasonalNaiveModel final : public ForecastModel {
 public:
  explicit SeasonalNaiveModel(std::string name = "naive");
  FittedPtr fit(const TrainingData& data) const override;
};

class EnhancedNaiveModel final : public ForecastModel {
 public:
  explicit EnhancedNaiveModel(std::string name = "naive_enhanced",
                              LagWeights weights = kDefaultLagWeights);
  FittedPtr fit(const TrainingData& data) const override;

 private:
  LagWeights weights_;
};

class ArimaModel final : public ForecastModel {
 public:
  explicit ArimaModel(std::string name = "arima", int p = 7, int d = 1);
  FittedPtr fit(const TrainingData& data) const override;

 private:
  int p_, d_;
};

class RidgeModel final : public ForecastModel {
 public:
  explicit RidgeModel(std::string name = "ridge", double lambda = 1.0);
  FittedPtr fit(const TrainingData& data) const override;

 private:
  double lambda_;
};

class KnnModel final : public ForecastModel {
 public:
  explicit KnnModel(std::string name = "knn", int k = 5);
  FittedPtr fit(const TrainingData& data) const override;

 private:
  int k_;
};

class ForestModel final : public ForecastModel {
 public:
  explicit ForestModel(std::string name = "forest",
                       TreeEnsembleParams params = TreeEnsembleParams::forest_defaults());
  FittedPtr fit(const TrainingData& data) const override;

 private:
  TreeEnsembleParams params_;
};

class GbmModel final : public ForecastModel {
 public:
  explicit GbmModel(std::string name = "gbm",
                    TreeEnsembleParams params = TreeEnsembleParams::gbm_defaults());
  FittedPtr fit(const TrainingData& data) const override;

 private:
  TreeEnsembleParams params_;
};

class AdditiveModel final : public ForecastModel {
 public:
  explicit AdditiveModel(std::string name = "additive", AdditiveConfig config = {});
  FittedPtr fit(const TrainingData& data) const override;

 private:
  AdditiveConfig config_;
};

}  // namespace demand
