#include "demand/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "demand/error.hpp"
#include "demand/linalg.hpp"

namespace demand {

namespace {

/// |S|!(d-|S|-1)!/d! indexed by |S|.
std::vector<double> coalition_weights(std::size_t d) {
  std::vector<double> w(d);
  for (std::size_t s = 0; s < d; ++s)
    w[s] = std::exp(std::lgamma(double(s) + 1.0) + std::lgamma(double(d - s)) -
                    std::lgamma(double(d) + 1.0));
  return w;
}

void check_inputs(std::span<const double> x, std::span<const double> background, std::size_t d) {
  if (d > kMaxShapleyFeatures)
    throw Error(ErrorCode::TooManyFeatures,
                std::to_string(d) + " features; exact enumeration supports at most 16");
  if (d == 0 || x.size() != d) throw Error(ErrorCode::InvalidArgument, "shapley: bad dimension");
  if (background.empty() || background.size() % d != 0)
    throw Error(ErrorCode::InvalidArgument, "shapley: background must be a non-empty rows x d");
}

double coalition_value(const VectorFunction& f, std::span<const double> x,
                       std::span<const double> background, std::size_t d, std::uint32_t mask,
                       std::vector<double>& scratch) {
  const std::size_t rows = background.size() / d;
  double sum = 0.0, first = 0.0;
  bool identical = true;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < d; ++j)
      scratch[j] = (mask >> j) & 1u ? x[j] : background[r * d + j];
    const double v = f(scratch);
    if (r == 0) first = v;
    identical = identical && v == first;
    sum += v;
  }
  // Identical outputs are returned as-is.
  return identical ? first : sum / double(rows);
}

}  // namespace

ShapleyValues shapley_values(const VectorFunction& f, std::span<const double> x,
                             std::span<const double> background, std::size_t d, Execution exec) {
  check_inputs(x, background, d);
  const std::uint32_t full = (1u << d) - 1u;
  const long count = long(full) + 1;
  std::vector<double> value(static_cast<std::size_t>(count));
  const bool parallel = exec == Execution::Parallel;

#pragma omp parallel if (parallel)
  {
    std::vector<double> scratch(d);
#pragma omp for schedule(static)
    for (long m = 0; m < count - 1; ++m)
      value[std::size_t(m)] = coalition_value(f, x, background, d, std::uint32_t(m), scratch);
  }
  ShapleyValues out;
  out.prediction = f(x);
  value[full] = out.prediction;
  out.base_value = value[0];

  const auto w = coalition_weights(d);
  out.phi.assign(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    const std::uint32_t bit = 1u << i;
    double acc = 0.0;
    for (std::uint32_t s = 0; s <= full; ++s) {
      if (s & bit) continue;
      acc += w[std::size_t(std::popcount(s))] * (value[s | bit] - value[s]);
    }
    out.phi[i] = acc;
  }
  return out;
}

ShapleyValues shapley_values_reference(const VectorFunction& f, std::span<const double> x,
                                       std::span<const double> background, std::size_t d) {
  check_inputs(x, background, d);
  const std::uint32_t full = (1u << d) - 1u;
  std::vector<double> scratch(d);
  auto v = [&](std::uint32_t mask) {
    if (mask == full) return f(x);
    return coalition_value(f, x, background, d, mask, scratch);
  };
  ShapleyValues out;
  out.prediction = f(x);
  out.base_value = v(0);
  out.phi.assign(d, 0.0);
  const double dfact = std::tgamma(double(d) + 1.0);
  for (std::size_t i = 0; i < d; ++i) {
    const std::uint32_t bit = 1u << i;
    for (std::uint32_t s = 0; s <= full; ++s) {
      if (s & bit) continue;
      const int k = std::popcount(s);
      const double weight =
          std::tgamma(double(k) + 1.0) * std::tgamma(double(d) - double(k)) / dfact;
      out.phi[i] += weight * (v(s | bit) - v(s));
    }
  }
  return out;
}

double Attribution::efficiency_gap() const noexcept {
  const double total = std::accumulate(contributions.begin(), contributions.end(), base_value);
  return total - prediction;
}

Attribution shapley_exact(const FittedModel& model, const FeatureRow& row,
                          std::span<const FeatureRow> background, Execution exec) {
  if (background.empty()) throw Error(ErrorCode::InvalidArgument, "empty Shapley background");
  std::vector<double> bg;
  bg.reserve(background.size() * kNumFeatures);
  for (const auto& b : background) bg.insert(bg.end(), b.x.begin(), b.x.end());
  const Date date = row.date;
  const VectorFunction f = [&model, date](std::span<const double> v) {
    FeatureRow r;
    r.date = date;
    std::copy(v.begin(), v.end(), r.x.begin());
    return model.predict(r);
  };
  const ShapleyValues s = shapley_values(f, row.x, bg, kNumFeatures, exec);
  Attribution a;
  a.date = row.date;
  a.base_value = s.base_value;
  a.prediction = s.prediction;
  std::copy(s.phi.begin(), s.phi.end(), a.contributions.begin());
  return a;
}

std::vector<FeatureRow> sample_background(const FeatureMatrix& X, std::size_t max_rows,
                                          std::uint64_t seed) {
  if (X.empty()) throw Error(ErrorCode::InvalidArgument, "empty matrix for background");
  if (X.size() <= max_rows) return X.rows();
  std::vector<std::size_t> idx(X.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < max_rows; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(max_rows);
  std::sort(idx.begin(), idx.end());
  std::vector<FeatureRow> out;
  out.reserve(max_rows);
  for (std::size_t i : idx) out.push_back(X[i]);
  return out;
}

std::array<double, kNumFeatures> mean_abs_shapley(std::span<const Attribution> attributions) {
  std::array<double, kNumFeatures> out{};
  if (attributions.empty()) return out;
  for (const auto& a : attributions)
    for (std::size_t j = 0; j < kNumFeatures; ++j) out[j] += std::abs(a.contributions[j]);
  for (double& v : out) v /= double(attributions.size());
  return out;
}

namespace {

double rmse_of(const FittedModel& model, std::span<const FeatureRow> rows) {
  double s = 0.0;
  for (const auto& r : rows) {
    const double e = *r.target - model.predict(r);
    s += e * e;
  }
  return std::sqrt(s / double(rows.size()));
}

}  // namespace

ImportanceReport permutation_importance(const FittedModel& model, const FeatureMatrix& X,
                                        int repeats, std::uint64_t seed, Execution exec) {
  if (repeats < 1) throw Error(ErrorCode::InvalidArgument, "repeats must be >= 1");
  if (X.empty()) throw Error(ErrorCode::InvalidArgument, "permutation importance needs rows");
  ImportanceReport rep;
  rep.repeats = repeats;
  rep.seed = seed;
  rep.baseline = rmse_of(model, X.rows());
  rep.per_repeat.assign(std::size_t(repeats), {});
  const long cells = long(repeats) * long(kNumFeatures);
  const bool parallel = exec == Execution::Parallel;

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long c = 0; c < cells; ++c) {
    const std::size_t r = std::size_t(c) / kNumFeatures;
    const std::size_t j = std::size_t(c) % kNumFeatures;
    std::vector<FeatureRow> rows = X.rows();
    std::vector<double> col = X.column(j);
    std::mt19937_64 rng(derive_seed(derive_seed(seed, std::uint64_t(r)), std::uint64_t(j)));
    std::shuffle(col.begin(), col.end(), rng);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].x[j] = col[i];
    rep.per_repeat[r][j] = rmse_of(model, rows) - rep.baseline;
  }
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    double s = 0.0;
    for (const auto& pr : rep.per_repeat) s += pr[j];
    rep.importance[j] = s / double(repeats);
  }
  return rep;
}

SurrogateExplanation local_surrogate(const FittedModel& model, const FeatureRow& row,
                                     const FeatureMatrix& X, const SurrogateOptions& opt) {
  if (opt.n_samples < 50) throw Error(ErrorCode::InvalidArgument, "surrogate needs >= 50 samples");
  if (X.empty()) throw Error(ErrorCode::InvalidArgument, "surrogate needs training rows");
  constexpr std::size_t d = kNumFeatures;
  std::array<double, d> sd{};
  for (std::size_t j = 0; j < d; ++j) {
    const auto c = X.column(j);
    const double m = std::accumulate(c.begin(), c.end(), 0.0) / double(c.size());
    double v = 0.0;
    for (double x : c) v += (x - m) * (x - m);
    sd[j] = std::sqrt(v / double(c.size()));
  }
  const double width = opt.kernel_width > 0.0 ? opt.kernel_width : 0.75 * std::sqrt(double(d));

  const Eigen::Index n = opt.n_samples;
  Eigen::MatrixXd Z(n, Eigen::Index(d));
  Eigen::VectorXd y(n), w(n);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::bernoulli_distribution flip(opt.flip_probability);
  for (Eigen::Index i = 0; i < n; ++i) {
    FeatureRow s = row;
    double dist2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const auto f = Feature(j);
      double v = row.x[j];
      if (f == Feature::PublicHoliday) {
        if (flip(rng)) v = 1.0 - v;
      } else {
        v += sd[j] * gauss(rng);
        if (f == Feature::Week) v = std::clamp(std::round(v), 1.0, 53.0);
        else if (f == Feature::CovidLevel) v = std::clamp(std::round(v), 1.0, 4.0);
        else v = std::max(0.0, v);
      }
      s.x[j] = v;
      Z(i, Eigen::Index(j)) = v;
      const double scale = f == Feature::PublicHoliday ? 1.0 : sd[j];
      if (scale > 0.0) dist2 += (v - row.x[j]) * (v - row.x[j]) / (scale * scale);
    }
    w[i] = std::exp(-dist2 / (width * width));
    y[i] = model.predict(s);
  }
  if (!(w.sum() > 0.0))
    throw Error(ErrorCode::DegenerateSamples, "all perturbations received zero kernel weight");

  RidgeOptions ro;
  ro.weights = w;
  const LinearFit lf = fit_ridge(Z, y, opt.lambda, ro);

  SurrogateExplanation out;
  out.date = row.date;
  out.samples = std::size_t(n);
  out.intercept = lf.intercept;
  out.model_prediction = model.predict(row);
  const Eigen::VectorXd mean = Z.colwise().mean();
  out.base_value = lf.intercept;
  for (std::size_t j = 0; j < d; ++j) {
    out.coefficients[j] = lf.coef[Eigen::Index(j)];
    out.base_value += out.coefficients[j] * mean[Eigen::Index(j)];
    out.contributions[j] = out.coefficients[j] * (row.x[j] - mean[Eigen::Index(j)]);
  }
  out.local_prediction =
      std::accumulate(out.contributions.begin(), out.contributions.end(), out.base_value);
  return out;
}

}  // namespace demand
