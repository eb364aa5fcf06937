#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace demand {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  int samples = 0;

  bool is_leaf() const noexcept { return feature < 0; }
};

/// CART regression tree; samples with x[feature] <= threshold go left.
class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes);

  double predict(std::span<const double> x) const noexcept;
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  bool uses_feature(int j) const noexcept;
  int depth() const noexcept;

 private:
  // Prediction layout: preorder, left child adjacent; a leaf stores its value in `split`.
  struct Packed {
    double split;
    std::int32_t feature;
    std::int32_t right;
  };

  std::vector<TreeNode> nodes_;
  std::vector<Packed> packed_;
};

struct TreeOptions {
  int max_depth = 0;  // 0 = unlimited
  int min_samples_leaf = 1;
  int max_features = 0;  // per-split candidates; 0 = all
};

/// Column-major training data with per-feature sample orders computed once and
/// reused by every tree grown on the same columns.
class SortedColumns {
 public:
  explicit SortedColumns(std::vector<std::vector<double>> columns);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t features() const noexcept { return columns_.size(); }
  const std::vector<double>& column(std::size_t j) const noexcept { return columns_[j]; }
  const std::vector<int>& order(std::size_t j) const noexcept { return orders_[j]; }

 private:
  std::size_t rows_ = 0;
  std::vector<std::vector<double>> columns_;
  std::vector<std::vector<int>> orders_;
};

/// Grows one tree on targets `y`. `multiplicity[i]` is how many times row i enters
/// the sample (bootstrap); empty means every row once. Split search maximizes the
/// variance reduction; ties keep the first candidate in feature-visit order, then the
/// lowest threshold.
RegressionTree grow_tree(const SortedColumns& data, std::span<const double> y,
                         std::span<const int> multiplicity, const TreeOptions& options,
                         std::mt19937_64& rng);

}  // namespace demand
