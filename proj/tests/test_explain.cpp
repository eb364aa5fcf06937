#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "demand/error.hpp"
#include "demand/explain.hpp"
#include "support.hpp"

using namespace demand;

namespace {

class LinearModel final : public FittedModel {
 public:
  LinearModel(FeatureVector w, double b) : w_(w), b_(b) {}
  double predict(const FeatureRow& r) const override {
    double s = b_;
    for (std::size_t j = 0; j < kNumFeatures; ++j) s += w_[j] * r.x[j];
    return s;
  }

 private:
  FeatureVector w_;
  double b_;
};

class FirstFeature final : public FittedModel {
 public:
  double predict(const FeatureRow& r) const override { return r.x[0]; }
};

class ConstantFit final : public FittedModel {
 public:
  double predict(const FeatureRow&) const override { return 33.0; }
};

std::vector<double> flatten(std::span<const FeatureRow> rows) {
  std::vector<double> out;
  for (const auto& r : rows) out.insert(out.end(), r.x.begin(), r.x.end());
  return out;
}

std::shared_ptr<const ForestFit> small_forest(const FeatureMatrix& X, int trees = 30) {
  auto p = TreeEnsembleParams::forest_defaults();
  p.n_trees = trees;
  p.seed = 4;
  return forest_fit(X, p);
}

}  // namespace

TEST(Shapley, EfficiencyOnNonlinearModel) {
  const FeatureMatrix X = fixture::random_matrix(300, 1, 10.0);
  const auto forest = small_forest(X);
  const auto bg = sample_background(X, 32, 9);
  const FeatureMatrix Q = fixture::random_matrix(100, 2);
  for (const auto& q : Q) {
    const Attribution a = shapley_exact(*forest, q, bg);
    ASSERT_LE(std::abs(a.efficiency_gap()), 1e-9);
    ASSERT_EQ(a.prediction, forest->predict(q));
  }
}

TEST(Shapley, SymmetryForDuplicatedColumns) {
  const VectorFunction f = [](std::span<const double> x) {
    return std::sin(0.01 * (x[0] + x[1])) * x[2] + 0.001 * x[0] * x[1] * x[3] + x[4] * x[5];
  };
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<double> bg(40 * kNumFeatures);
  for (std::size_t r = 0; r < 40; ++r) {
    for (std::size_t j = 0; j < kNumFeatures; ++j) bg[r * kNumFeatures + j] = u(rng);
    bg[r * kNumFeatures + 1] = bg[r * kNumFeatures];
  }
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x(kNumFeatures);
    for (auto& v : x) v = u(rng);
    x[1] = x[0];
    const auto s = shapley_values(f, x, bg, kNumFeatures);
    ASSERT_NEAR(s.phi[0], s.phi[1], 1e-9);
  }
}

TEST(Shapley, DummyFeatureIsExactlyZero) {
  const FeatureMatrix X = fixture::random_matrix(300, 4, 10.0);
  const auto forest = small_forest(X);
  const auto bg = sample_background(X, 24, 1);
  std::vector<std::size_t> unused;
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    bool used = false;
    for (const auto& t : forest->trees()) used = used || t.uses_feature(int(j));
    if (!used) unused.push_back(j);
  }
  const VectorFunction g = [](std::span<const double> x) { return x[0] * x[2] + std::sqrt(x[3]); };
  const auto flat = flatten(bg);
  for (const auto& q : fixture::random_matrix(100, 5)) {
    const Attribution a = shapley_exact(*forest, q, bg);
    for (std::size_t j : unused) ASSERT_EQ(a.contributions[j], 0.0);
    const auto s = shapley_values(g, q.x, flat, kNumFeatures);
    for (std::size_t j : {1u, 4u, 5u, 6u, 7u}) ASSERT_EQ(s.phi[j], 0.0);
  }
}

TEST(Shapley, LinearModelClosedForm) {
  const FeatureVector w{0.5, -1.25, 2.0, 0.1, 0.0, 7.5, -0.3, 4.0};
  const LinearModel model(w, 12.0);
  const FeatureMatrix X = fixture::random_matrix(200, 6);
  const auto bg = sample_background(X, 50, 2);
  FeatureVector mean{};
  for (const auto& b : bg)
    for (std::size_t j = 0; j < kNumFeatures; ++j) mean[j] += b.x[j] / double(bg.size());
  for (const auto& q : fixture::random_matrix(100, 7)) {
    const Attribution a = shapley_exact(model, q, bg);
    for (std::size_t j = 0; j < kNumFeatures; ++j)
      ASSERT_NEAR(a.contributions[j], w[j] * (q.x[j] - mean[j]), 1e-9);
  }
}

TEST(Shapley, ParallelKernelMatchesSerialReference) {
  const FeatureMatrix X = fixture::random_matrix(300, 8, 10.0);
  const auto forest = small_forest(X, 10);
  const auto flat = flatten(sample_background(X, 16, 3));
  const VectorFunction f = [&](std::span<const double> v) {
    FeatureRow r;
    std::copy(v.begin(), v.end(), r.x.begin());
    return forest->predict(r);
  };
  for (const auto& q : fixture::random_matrix(10, 9)) {
    const auto par = shapley_values(f, q.x, flat, kNumFeatures, Execution::Parallel);
    const auto ser = shapley_values(f, q.x, flat, kNumFeatures, Execution::Serial);
    const auto ref = shapley_values_reference(f, q.x, flat, kNumFeatures);
    EXPECT_EQ(par.phi, ser.phi);
    EXPECT_EQ(par.base_value, ref.base_value);
    for (std::size_t j = 0; j < kNumFeatures; ++j) ASSERT_NEAR(par.phi[j], ref.phi[j], 1e-9);
  }
}

TEST(Shapley, TooManyFeatures) {
  const VectorFunction f = [](std::span<const double>) { return 0.0; };
  std::vector<double> x(17, 1.0), bg(17, 0.0);
  try {
    shapley_values(f, x, bg, 17);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooManyFeatures);
  }
  EXPECT_THROW(shapley_exact(ConstantFit{}, FeatureRow{}, {}), Error);
}

TEST(Shapley, EightFeaturesWith64RowBackgroundIsFast) {
  const auto s = fixture::small_synth(make_date(2016, 12, 31));
  const TrainingWindow w = training_window(s.series, s.holidays, s.covid, s.series.end());
  const auto forest = forest_fit(w.matrix, TreeEnsembleParams::forest_defaults());
  const auto bg = sample_background(w.matrix, 64, 1);
  const auto t0 = std::chrono::steady_clock::now();
  const Attribution a = shapley_exact(*forest, w.matrix[100], bg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 5.0);
  EXPECT_LE(std::abs(a.efficiency_gap()), 1e-9);
}

TEST(Background, SeededDownsampleKeepsOrder) {
  const FeatureMatrix X = fixture::random_matrix(500, 10);
  const auto a = sample_background(X, 256, 5), b = sample_background(X, 256, 5);
  ASSERT_EQ(a.size(), 256u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].date, b[i].date);
    if (i > 0) ASSERT_LT(a[i - 1].date, a[i].date);
  }
  EXPECT_EQ(sample_background(X, 1000, 5).size(), 500u);
}

TEST(Permutation, UnusedFeatureHasZeroImportance) {
  const FeatureMatrix X = fixture::random_matrix(300, 11, 10.0);
  const auto forest = small_forest(X);
  const auto rep = permutation_importance(*forest, X, 3, 7);
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    bool used = false;
    for (const auto& t : forest->trees()) used = used || t.uses_feature(int(j));
    if (!used) EXPECT_EQ(rep.importance[j], 0.0);
  }
  EXPECT_EQ(rep.repeats, 3);
  EXPECT_EQ(rep.seed, 7u);
}

TEST(Permutation, SingleFeatureModelMatchesAnalyticIncrease) {
  // y = x0 exactly, so the shuffled RMSE is sqrt(E[(x_pi - x)^2]) = sqrt(2 n/(n-1) var).
  std::vector<FeatureRow> rows = fixture::random_matrix(2000, 12).rows();
  for (auto& r : rows) r.target = r.x[0];
  const FeatureMatrix X(rows);
  const auto rep = permutation_importance(FirstFeature{}, X, 20, 3);
  const auto c = X.column(0);
  const double m = std::accumulate(c.begin(), c.end(), 0.0) / double(c.size());
  double var = 0.0;
  for (double v : c) var += (v - m) * (v - m) / double(c.size());
  const double n = double(c.size());
  EXPECT_EQ(rep.baseline, 0.0);
  EXPECT_NEAR(rep.importance[0], std::sqrt(2.0 * n / (n - 1.0) * var), 0.03 * std::sqrt(2.0 * var));
  for (std::size_t j = 1; j < kNumFeatures; ++j) EXPECT_EQ(rep.importance[j], 0.0);
}

TEST(Permutation, RepeatScheduleAndVarianceShrinkage) {
  std::vector<FeatureRow> rows = fixture::random_matrix(150, 13).rows();
  for (auto& r : rows) r.target = r.x[0];
  const FeatureMatrix X(rows);
  const auto one = permutation_importance(FirstFeature{}, X, 1, 77);
  const auto many = permutation_importance(FirstFeature{}, X, 50, 77);
  EXPECT_EQ(one.importance[0], many.per_repeat[0][0]);
  EXPECT_NE(one.importance[0], many.importance[0]);
  auto spread = [&](int repeats) {
    std::vector<double> v;
    for (std::uint64_t seed = 0; seed < 30; ++seed)
      v.push_back(permutation_importance(FirstFeature{}, X, repeats, seed * 1000 + 1).importance[0]);
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s;
  };
  EXPECT_LT(spread(50), spread(1));
  EXPECT_THROW(permutation_importance(FirstFeature{}, X, 0, 1), Error);
}

TEST(Permutation, SerialAndParallelAgree) {
  const FeatureMatrix X = fixture::random_matrix(200, 14, 10.0);
  const auto forest = small_forest(X, 10);
  const auto a = permutation_importance(*forest, X, 4, 9, Execution::Serial);
  const auto b = permutation_importance(*forest, X, 4, 9, Execution::Parallel);
  EXPECT_EQ(a.importance, b.importance);
}

TEST(Surrogate, RecoversGlobalLinearCoefficients) {
  const FeatureVector w{0.5, -1.25, 2.0, 0.1, 0.8, 7.5, -0.3, 4.0};
  const LinearModel model(w, 12.0);
  const FeatureMatrix X = fixture::random_matrix(300, 15);
  SurrogateOptions opt;
  opt.kernel_width = 1e3;
  opt.n_samples = 2000;
  opt.seed = 3;
  // A row away from the clamping bounds of week and covid level.
  FeatureRow row = X[10];
  row.x = {100, 100, 100, 100, 100, 0, 26, 2};
  const auto s = local_surrogate(model, row, X, opt);
  for (std::size_t j = 0; j < kNumFeatures; ++j)
    EXPECT_NEAR(s.coefficients[j], w[j], 0.05 * std::abs(w[j])) << kFeatureNames[j];
  EXPECT_NEAR(s.local_prediction, s.model_prediction, 1e-4 * std::abs(s.model_prediction));
}

TEST(Surrogate, ConstantModelHasZeroContributions) {
  const FeatureMatrix X = fixture::random_matrix(100, 16);
  SurrogateOptions opt;
  opt.seed = 1;
  const auto s = local_surrogate(ConstantFit{}, X[3], X, opt);
  for (double c : s.contributions) EXPECT_EQ(c, 0.0);
  EXPECT_EQ(s.local_prediction, 33.0);
}

TEST(Surrogate, DeterministicForFixedSeed) {
  const FeatureMatrix X = fixture::random_matrix(300, 17, 10.0);
  const auto forest = small_forest(X, 10);
  SurrogateOptions opt;
  opt.seed = 21;
  const auto a = local_surrogate(*forest, X[5], X, opt);
  const auto b = local_surrogate(*forest, X[5], X, opt);
  EXPECT_EQ(a.coefficients, b.coefficients);
  EXPECT_EQ(a.contributions, b.contributions);
  EXPECT_EQ(a.intercept, b.intercept);
  opt.n_samples = 49;
  EXPECT_THROW(local_surrogate(*forest, X[5], X, opt), Error);
}

TEST(Surrogate, ZeroKernelWeightIsDegenerate) {
  const FeatureMatrix X = fixture::random_matrix(100, 18);
  SurrogateOptions opt;
  opt.kernel_width = 1e-200;
  try {
    local_surrogate(ConstantFit{}, X[0], X, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateSamples);
  }
}
