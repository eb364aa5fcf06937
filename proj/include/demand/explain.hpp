#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "demand/features.hpp"
#include "demand/models.hpp"
#include "demand/parallel.hpp"

namespace demand {

inline constexpr std::size_t kMaxShapleyFeatures = 16;

/// Generic value function over a d-dimensional input.
using VectorFunction = std::function<double(std::span<const double>)>;

struct ShapleyValues {
  double base_value = 0.0;  // v(empty coalition)
  double prediction = 0.0;  // f(x)
  std::vector<double> phi;
};

/// Interventional Shapley values by exact enumeration of all 2^d coalitions, where
/// `background` is row-major (rows x d). The parallel kernel evaluates coalition
/// values concurrently; the serial reference recomputes every marginal difference
/// directly. Throws TooManyFeatures for d > 16.
ShapleyValues shapley_values(const VectorFunction& f, std::span<const double> x,
                             std::span<const double> background, std::size_t d,
                             Execution exec = Execution::Parallel);
ShapleyValues shapley_values_reference(const VectorFunction& f, std::span<const double> x,
                                       std::span<const double> background, std::size_t d);

struct Attribution {
  Date date;
  double base_value = 0.0;
  std::array<double, kNumFeatures> contributions{};
  double prediction = 0.0;

  double efficiency_gap() const noexcept;
};

/// Coalition rows keep the explained row's date, so date-driven models contribute
/// through the base value only.
Attribution shapley_exact(const FittedModel& model, const FeatureRow& row,
                          std::span<const FeatureRow> background,
                          Execution exec = Execution::Parallel);

/// Seeded uniform downsample without replacement (keeps date order).
std::vector<FeatureRow> sample_background(const FeatureMatrix& X, std::size_t max_rows,
                                          std::uint64_t seed);

/// Mean |phi| per feature.
std::array<double, kNumFeatures> mean_abs_shapley(std::span<const Attribution> attributions);

struct ImportanceReport {
  std::string method = "permutation_rmse";
  std::array<double, kNumFeatures> importance{};
  std::vector<std::array<double, kNumFeatures>> per_repeat;
  double baseline = 0.0;
  int repeats = 0;
  std::uint64_t seed = 0;
};

/// RMSE increase when one column is shuffled; repeat r of feature j always uses the
/// stream derive_seed(seed, r, j), so the first repeats agree across repeat counts.
ImportanceReport permutation_importance(const FittedModel& model, const FeatureMatrix& X,
                                        int repeats, std::uint64_t seed,
                                        Execution exec = Execution::Parallel);

struct SurrogateExplanation {
  Date date;
  double intercept = 0.0;    // surrogate intercept in original units
  double base_value = 0.0;   // surrogate value at the perturbation mean
  std::array<double, kNumFeatures> coefficients{};
  std::array<double, kNumFeatures> contributions{};
  double local_prediction = 0.0;  // base_value + sum(contributions)
  double model_prediction = 0.0;
  std::size_t samples = 0;
};

struct SurrogateOptions {
  int n_samples = 1000;
  double kernel_width = 0.0;  // <= 0 : 0.75 * sqrt(d)
  double flip_probability = 0.1;
  double lambda = 1e-3;
  std::uint64_t seed = 0;
};

/// Weighted ridge fitted to perturbations around `row`. Numeric features are
/// drawn from N(value, training std); the holiday flag is flipped with
/// flip_probability; week and covid level are rounded back to their domains.
SurrogateExplanation local_surrogate(const FittedModel& model, const FeatureRow& row,
                                     const FeatureMatrix& X, const SurrogateOptions& options);

}  // namespace demand
