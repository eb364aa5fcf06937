#include "demand/ensembles.hpp"

#include <algorithm>
#include <numeric>

#include "demand/error.hpp"

namespace demand {

namespace {

class CombinedFit final : public FittedModel {
 public:
  CombinedFit(std::vector<FittedPtr> bases, double (*combine)(std::span<const double>))
      : bases_(std::move(bases)), combine_(combine) {}

  double predict(const FeatureRow& row) const override {
    std::vector<double> p(bases_.size());
    for (std::size_t i = 0; i < bases_.size(); ++i) p[i] = bases_[i]->predict(row);
    return combine_(p);
  }

 private:
  std::vector<FittedPtr> bases_;
  double (*combine_)(std::span<const double>);
};

std::vector<FittedPtr> fit_bases(const std::vector<ModelPtr>& bases, const TrainingData& data) {
  std::vector<FittedPtr> out;
  out.reserve(bases.size());
  for (const auto& b : bases) out.push_back(fit_shared(*b, data));
  return out;
}

void require_bases(const std::vector<ModelPtr>& bases, std::size_t minimum, const std::string& who) {
  if (bases.size() < minimum)
    throw Error(ErrorCode::TooFewBases,
                who + " needs at least " + std::to_string(minimum) + " base models");
  for (const auto& b : bases)
    if (!b) throw Error(ErrorCode::InvalidArgument, who + ": null base model");
}

}  // namespace

double voting_predict(std::span<const double> p) {
  if (p.size() < 2) throw Error(ErrorCode::TooFewBases, "voting needs at least 2 predictions");
  // Summing in sorted order makes the mean independent of base order.
  std::vector<double> v(p.begin(), p.end());
  std::sort(v.begin(), v.end());
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double trimmed_average_predict(std::span<const double> p) {
  if (p.size() < 3)
    throw Error(ErrorCode::TooFewBases, "trimmed average needs at least 3 predictions");
  std::vector<double> v(p.begin(), p.end());
  std::sort(v.begin(), v.end());
  return std::accumulate(v.begin() + 1, v.end() - 1, 0.0) / double(v.size() - 2);
}

VotingModel::VotingModel(std::string name, std::vector<ModelPtr> bases)
    : ForecastModel(std::move(name)), bases_(std::move(bases)) {
  require_bases(bases_, 2, "voting");
}

FittedPtr VotingModel::fit(const TrainingData& data) const {
  return std::make_shared<const CombinedFit>(fit_bases(bases_, data), voting_predict);
}

AveragingModel::AveragingModel(std::string name, std::vector<ModelPtr> bases)
    : ForecastModel(std::move(name)), bases_(std::move(bases)) {
  require_bases(bases_, 3, "averaging");
}

FittedPtr AveragingModel::fit(const TrainingData& data) const {
  return std::make_shared<const CombinedFit>(fit_bases(bases_, data), trimmed_average_predict);
}

double StackingFit::predict(const FeatureRow& row) const {
  std::vector<double> p(bases_.size());
  for (std::size_t i = 0; i < bases_.size(); ++i) p[i] = bases_[i]->predict(row);
  return meta_.predict(p);
}

std::shared_ptr<const StackingFit> stacking_fit(const std::vector<ModelPtr>& bases,
                                                const TrainingData& data, double lambda,
                                                int blocks) {
  require_bases(bases, 2, "stacking");
  const FeatureMatrix& X = data.matrix;
  const std::size_t n = X.size();
  if (n < 60 || blocks < 1)
    throw Error(ErrorCode::InsufficientRows,
                "stacking needs >= 60 training rows, got " + std::to_string(n));
  const std::size_t chunks = std::size_t(blocks) + 1;
  auto boundary = [&](std::size_t k) { return k * n / chunks; };

  const std::size_t meta_rows = n - boundary(1);
  Eigen::MatrixXd inputs = Eigen::MatrixXd::Zero(Eigen::Index(meta_rows), Eigen::Index(bases.size()));
  Eigen::VectorXd target = Eigen::VectorXd::Zero(Eigen::Index(meta_rows));
  std::vector<Date> dates;
  dates.reserve(meta_rows);
  for (std::size_t k = 1; k < chunks; ++k) {
    const std::size_t lo = boundary(k), hi = boundary(k + 1);
    const FeatureMatrix prefix = X.prefix(lo);
    const DailySeries history = data.history.truncated(X[lo - 1].date);
    const TrainingData fold{history, prefix, data.holidays, data.covid, data.seed, nullptr};
    for (std::size_t b = 0; b < bases.size(); ++b) {
      const FittedPtr fitted = bases[b]->fit(fold);
      for (std::size_t i = lo; i < hi; ++i)
        inputs(Eigen::Index(i - boundary(1)), Eigen::Index(b)) = fitted->predict(X[i]);
    }
    for (std::size_t i = lo; i < hi; ++i) {
      target[Eigen::Index(i - boundary(1))] = *X[i].target;
      dates.push_back(X[i].date);
    }
  }
  LinearFit meta = fit_ridge(inputs, target, lambda);
  return std::make_shared<const StackingFit>(fit_bases(bases, data), std::move(meta),
                                             std::move(dates), std::move(inputs));
}

StackingModel::StackingModel(std::string name, std::vector<ModelPtr> bases, double lambda,
                             int blocks)
    : ForecastModel(std::move(name)), bases_(std::move(bases)), lambda_(lambda), blocks_(blocks) {
  require_bases(bases_, 2, "stacking");
}

FittedPtr StackingModel::fit(const TrainingData& data) const {
  return stacking_fit(bases_, data, lambda_, blocks_);
}

double ResidualCorrectedFit::correction(long h) const noexcept {
  if (h <= 0 || corrections_.empty()) return 0.0;
  const std::size_t i = std::min<std::size_t>(std::size_t(h), corrections_.size()) - 1;
  return corrections_[i];
}

double ResidualCorrectedFit::predict(const FeatureRow& row) const {
  return base_->predict(row) + correction(days_between(boundary_, row.date));
}

std::shared_ptr<const ResidualCorrectedFit> residual_correct(FittedPtr base,
                                                             const FeatureMatrix& X,
                                                             const ResidualCorrector& corrector,
                                                             int horizon) {
  if (X.empty()) throw Error(ErrorCode::InsufficientRows, "residual correction needs rows");
  std::vector<double> residuals(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) residuals[i] = *X[i].target - base->predict(X[i]);

  std::vector<double> corrections;
  if (corrector.kind == ResidualCorrector::Kind::ExponentialSmoothing) {
    if (!(corrector.alpha > 0.0 && corrector.alpha <= 1.0))
      throw Error(ErrorCode::InvalidArgument, "smoothing alpha must be in (0, 1]");
    double level = residuals.front();
    for (std::size_t i = 1; i < residuals.size(); ++i)
      level = corrector.alpha * residuals[i] + (1.0 - corrector.alpha) * level;
    corrections.assign(std::size_t(horizon), level);
  } else {
    corrections = ArProcess::fit(residuals, corrector.order).forecast(horizon);
  }
  return std::make_shared<const ResidualCorrectedFit>(std::move(base), X.rows().back().date,
                                                      std::move(corrections));
}

ResidualCorrectedModel::ResidualCorrectedModel(std::string name, ModelPtr base,
                                               ResidualCorrector corrector)
    : ForecastModel(std::move(name)), base_(std::move(base)), corrector_(corrector) {
  if (!base_) throw Error(ErrorCode::InvalidArgument, "residual correction: null base");
}

FittedPtr ResidualCorrectedModel::fit(const TrainingData& data) const {
  return residual_correct(fit_shared(*base_, data), data.matrix, corrector_);
}

}  // namespace demand
