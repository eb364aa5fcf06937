#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "demand/features.hpp"

// Deliberately naive reference computations shared by the unit and acceptance tests.
namespace demand::oracle {

// Dense Gaussian elimination with partial pivoting; the independent ridge oracle.
inline std::vector<double> solve_dense(std::vector<std::vector<double>> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
    x[i] = s / A[i][i];
  }
  return x;
}

struct RidgeSolution {
  double intercept;
  std::vector<double> coef;
};

// Standardize with population moments, solve (Z'Z + lambda I) b = Z'(y - ybar), map back.
inline RidgeSolution ridge(const FeatureMatrix& X, double lambda) {
  const std::size_t n = X.size(), d = kNumFeatures;
  const auto y = X.targets();
  const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    for (const auto& r : X) mean[j] += r.x[j];
    mean[j] /= double(n);
    for (const auto& r : X) sd[j] += (r.x[j] - mean[j]) * (r.x[j] - mean[j]);
    sd[j] = std::sqrt(sd[j] / double(n));
  }
  std::vector<std::vector<double>> A(d, std::vector<double>(d, 0.0));
  std::vector<double> b(d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> z(d);
    for (std::size_t j = 0; j < d; ++j) z[j] = (X[i].x[j] - mean[j]) / sd[j];
    for (std::size_t j = 0; j < d; ++j) {
      b[j] += z[j] * (y[i] - ybar);
      for (std::size_t k = 0; k < d; ++k) A[j][k] += z[j] * z[k];
    }
  }
  for (std::size_t j = 0; j < d; ++j) A[j][j] += lambda;
  const auto beta = solve_dense(A, b);
  RidgeSolution f{ybar, std::vector<double>(d)};
  for (std::size_t j = 0; j < d; ++j) {
    f.coef[j] = beta[j] / sd[j];
    f.intercept -= f.coef[j] * mean[j];
  }
  return f;
}

inline double knn(const FeatureMatrix& X, const FeatureRow& q, int k) {
  const std::size_t n = X.size();
  std::vector<double> mean(kNumFeatures, 0.0), sd(kNumFeatures, 0.0);
  for (std::size_t j = 0; j < kNumFeatures; ++j) {
    for (const auto& r : X) mean[j] += r.x[j];
    mean[j] /= double(n);
    for (const auto& r : X) sd[j] += (r.x[j] - mean[j]) * (r.x[j] - mean[j]);
    sd[j] = std::sqrt(sd[j] / double(n));
    if (sd[j] == 0.0) sd[j] = 1.0;
  }
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < kNumFeatures; ++j) {
      const double a = (X[i].x[j] - mean[j]) / sd[j], b = (q.x[j] - mean[j]) / sd[j];
      s += (a - b) * (a - b);
    }
    dist.emplace_back(s, i);
  }
  std::sort(dist.begin(), dist.end());
  double sum = 0.0;
  for (int i = 0; i < k; ++i) sum += *X[dist[std::size_t(i)].second].target;
  return sum / double(k);
}

struct Stump {
  int feature = -1;
  double threshold = 0.0;
  double left = 0.0;
  double right = 0.0;
};

// Scores every midpoint split of every column by the SSE of mean-centred targets.
inline Stump best_stump(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys) {
  const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / double(ys.size());
  double best_sse = std::numeric_limits<double>::infinity();
  Stump best;
  for (std::size_t j = 0; j < xs[0].size(); ++j) {
    std::vector<double> vals;
    for (const auto& x : xs) vals.push_back(x[j]);
    std::sort(vals.begin(), vals.end());
    for (std::size_t s = 0; s + 1 < vals.size(); ++s) {
      if (vals[s] == vals[s + 1]) continue;
      const double thr = 0.5 * (vals[s] + vals[s + 1]);
      double sl = 0, sr = 0;
      int nl = 0, nr = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i][j] <= thr) {
          sl += ys[i] - mean;
          ++nl;
        } else {
          sr += ys[i] - mean;
          ++nr;
        }
      }
      const double ml = sl / nl, mr = sr / nr;
      double sse = 0;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - mean - (xs[i][j] <= thr ? ml : mr);
        sse += r * r;
      }
      if (sse < best_sse - 1e-12) {
        best_sse = sse;
        best = {int(j), thr, ml, mr};
      }
    }
  }
  return best;
}

// Mean rank by counting, per vintage, strictly smaller and equal scores.
inline std::vector<double> mean_ranks(const std::vector<std::vector<double>>& scores) {
  const std::size_t M = scores.size(), V = scores[0].size();
  std::vector<double> out(M, 0.0);
  for (std::size_t v = 0; v < V; ++v)
    for (std::size_t m = 0; m < M; ++m) {
      int less = 0, equal = 0;
      for (std::size_t o = 0; o < M; ++o) {
        less += scores[o][v] < scores[m][v];
        equal += scores[o][v] == scores[m][v];
      }
      out[m] += 1.0 + less + 0.5 * (equal - 1);
    }
  for (auto& o : out) o /= double(V);
  return out;
}

inline double trimmed_mean(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) sum += v[i];
  return sum / double(v.size() - 2);
}

}  // namespace demand::oracle
