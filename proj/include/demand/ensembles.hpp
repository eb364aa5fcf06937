#pragma once

#include <span>
#include <string>
#include <vector>

#include "demand/models.hpp"

namespace demand {

double voting_predict(std::span<const double> base_predictions);
/// Mean after dropping one maximum and one minimum. Throws TooFewBases below 3 values.
double trimmed_average_predict(std::span<const double> base_predictions);

class VotingModel final : public ForecastModel {
 public:
  VotingModel(std::string name, std::vector<ModelPtr> bases);
  FittedPtr fit(const TrainingData& data) const override;

 private:
  std::vector<ModelPtr> bases_;
};

class AveragingModel final : public ForecastModel {
 public:
  AveragingModel(std::string name, std::vector<ModelPtr> bases);
  FittedPtr fit(const TrainingData& data) const override;

 private:
  std::vector<ModelPtr> bases_;
};

class StackingFit final : public FittedModel {
 public:
  StackingFit(std::vector<FittedPtr> bases, LinearFit meta, std::vector<Date> meta_dates,
              Eigen::MatrixXd meta_inputs)
      : bases_(std::move(bases)), meta_(std::move(meta)), meta_dates_(std::move(meta_dates)),
        meta_inputs_(std::move(meta_inputs)) {}

  double predict(const FeatureRow& row) const override;
  const LinearFit& meta() const noexcept { return meta_; }
  /// Dates of the out-of-sample rows the meta-learner was trained on.
  const std::vector<Date>& meta_dates() const noexcept { return meta_dates_; }
  /// One column per base, one row per meta date.
  const Eigen::MatrixXd& meta_inputs() const noexcept { return meta_inputs_; }

 private:
  std::vector<FittedPtr> bases_;
  LinearFit meta_;
  std::vector<Date> meta_dates_;
  Eigen::MatrixXd meta_inputs_;
};

/// Ridge meta-learner over forward-chained out-of-sample base predictions: the
/// training rows are cut into blocks + 1 chunks, bases are fit on each expanding
/// prefix and predict the following chunk. Final bases are refit on everything.
class StackingModel final : public ForecastModel {
 public:
  StackingModel(std::string name, std::vector<ModelPtr> bases, double lambda = 1.0,
                int blocks = 5);
  FittedPtr fit(const TrainingData& data) const override;

 private:
  std::vector<ModelPtr> bases_;
  double lambda_;
  int blocks_;
};

std::shared_ptr<const StackingFit> stacking_fit(const std::vector<ModelPtr>& bases,
                                                const TrainingData& data, double lambda,
                                                int blocks = 5);

struct ResidualCorrector {
  enum class Kind { ExponentialSmoothing, Autoregressive };
  Kind kind = Kind::ExponentialSmoothing;
  double alpha = 0.3;  // smoothing weight
  int order = 7;       // AR order
};

class ResidualCorrectedFit final : public FittedModel {
 public:
  ResidualCorrectedFit(FittedPtr base, Date boundary, std::vector<double> corrections)
      : base_(std::move(base)), boundary_(boundary), corrections_(std::move(corrections)) {}

  double predict(const FeatureRow& row) const override;
  /// Correction added h days past the training boundary (0 for h <= 0).
  double correction(long h) const noexcept;

 private:
  FittedPtr base_;
  Date boundary_;
  std::vector<double> corrections_;  // corrections_[h-1]
};

/// Fits the corrector to the in-sample residual series y - base(x). Corrections are
/// tabulated for `horizon` days; later days reuse the last value.
std::shared_ptr<const ResidualCorrectedFit> residual_correct(FittedPtr base,
                                                             const FeatureMatrix& X,
                                                             const ResidualCorrector& corrector,
                                                             int horizon = 366);

class ResidualCorrectedModel final : public ForecastModel {
 public:
  ResidualCorrectedModel(std::string name, ModelPtr base, ResidualCorrector corrector);
  FittedPtr fit(const TrainingData& data) const override;

 private:
  ModelPtr base_;
  ResidualCorrector corrector_;
};

}  // namespace demand
