#include "demand/tree.hpp"

#include <algorithm>
#include <numeric>

#include "demand/error.hpp"

namespace demand {

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  // Remap to preorder so every left child directly follows its parent.
  std::vector<int> order;
  order.reserve(nodes_.size());
  std::vector<int> stack;
  if (!nodes_.empty()) stack.push_back(0);
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    order.push_back(i);
    const auto& n = nodes_[std::size_t(i)];
    if (!n.is_leaf()) {
      stack.push_back(n.right);
      stack.push_back(n.left);
    }
  }
  std::vector<int> position(nodes_.size());
  for (std::size_t k = 0; k < order.size(); ++k) position[std::size_t(order[k])] = int(k);
  packed_.resize(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& n = nodes_[std::size_t(order[k])];
    packed_[k] = n.is_leaf() ? Packed{n.value, -1, -1}
                             : Packed{n.threshold, n.feature, position[std::size_t(n.right)]};
  }
}

double RegressionTree::predict(std::span<const double> x) const noexcept {
  std::size_t i = 0;
  const Packed* p = packed_.data();
  while (p[i].feature >= 0)
    i = x[std::size_t(p[i].feature)] <= p[i].split ? i + 1 : std::size_t(p[i].right);
  return p[i].split;
}

bool RegressionTree::uses_feature(int j) const noexcept {
  return std::any_of(nodes_.begin(), nodes_.end(), [j](auto& n) { return n.feature == j; });
}

int RegressionTree::depth() const noexcept {
  if (nodes_.empty()) return 0;
  std::vector<int> level(nodes_.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    best = std::max(best, level[i]);
    if (!n.is_leaf()) {
      level[std::size_t(n.left)] = level[i] + 1;
      level[std::size_t(n.right)] = level[i] + 1;
    }
  }
  return best;
}

SortedColumns::SortedColumns(std::vector<std::vector<double>> columns)
    : columns_(std::move(columns)) {
  rows_ = columns_.empty() ? 0 : columns_.front().size();
  orders_.resize(columns_.size());
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].size() != rows_)
      throw Error(ErrorCode::InvalidArgument, "ragged training columns");
    auto& ord = orders_[j];
    ord.resize(rows_);
    std::iota(ord.begin(), ord.end(), 0);
    const auto& c = columns_[j];
    std::stable_sort(ord.begin(), ord.end(), [&c](int a, int b) { return c[std::size_t(a)] < c[std::size_t(b)]; });
  }
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;
  std::size_t left_count = 0;
};

class Grower {
 public:
  Grower(const SortedColumns& data, std::span<const double> y, const TreeOptions& opt,
         std::mt19937_64& rng)
      : data_(data), y_(y), opt_(opt), rng_(rng), d_(data.features()) {
    feature_order_.resize(d_);
    std::iota(feature_order_.begin(), feature_order_.end(), 0);
  }

  RegressionTree grow(std::span<const int> multiplicity) {
    const std::size_t n = data_.rows();
    lists_.assign(d_, {});
    for (std::size_t j = 0; j < d_; ++j) {
      auto& list = lists_[j];
      list.reserve(n);
      for (int idx : data_.order(j)) {
        const int times = multiplicity.empty() ? 1 : multiplicity[std::size_t(idx)];
        for (int t = 0; t < times; ++t) list.push_back(idx);
      }
    }
    const std::size_t total = lists_.empty() ? 0 : lists_[0].size();
    if (total == 0) throw Error(ErrorCode::InsufficientRows, "tree: no samples");
    goes_left_.assign(n, 0);
    scratch_.resize(total);
    nodes_.clear();
    build(0, total, 0);
    return RegressionTree(std::move(nodes_));
  }

 private:
  int build(std::size_t begin, std::size_t end, int depth) {
    const int id = int(nodes_.size());
    nodes_.emplace_back();
    const std::size_t count = end - begin;
    const auto& base = lists_[0];
    double sum = 0.0;
    bool pure = true;
    const double first_y = y_[std::size_t(base[begin])];
    for (std::size_t i = begin; i < end; ++i) {
      const double v = y_[std::size_t(base[i])];
      sum += v;
      pure = pure && v == first_y;
    }
    nodes_[std::size_t(id)].value = sum / double(count);
    nodes_[std::size_t(id)].samples = int(count);

    const std::size_t min_leaf = std::size_t(std::max(1, opt_.min_samples_leaf));
    if (pure || count < 2 * min_leaf || (opt_.max_depth > 0 && depth >= opt_.max_depth))
      return id;

    const Split split = best_split(begin, end, sum);
    if (split.feature < 0) return id;

    const auto& col = data_.column(std::size_t(split.feature));
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t idx = std::size_t(lists_[std::size_t(split.feature)][i]);
      goes_left_[idx] = col[idx] <= split.threshold ? 1 : 0;
    }
    for (auto& list : lists_) {
      std::size_t l = begin, r = 0;
      for (std::size_t i = begin; i < end; ++i) {
        const int idx = list[i];
        if (goes_left_[std::size_t(idx)]) list[l++] = idx;
        else scratch_[r++] = idx;
      }
      std::copy(scratch_.begin(), scratch_.begin() + long(r), list.begin() + long(l));
    }
    const std::size_t mid = begin + split.left_count;
    nodes_[std::size_t(id)].feature = split.feature;
    nodes_[std::size_t(id)].threshold = split.threshold;
    const int left = build(begin, mid, depth + 1);
    const int right = build(mid, end, depth + 1);
    nodes_[std::size_t(id)].left = left;
    nodes_[std::size_t(id)].right = right;
    return id;
  }

  Split best_split(std::size_t begin, std::size_t end, double total_sum) {
    const std::size_t count = end - begin;
    const std::size_t min_leaf = std::size_t(std::max(1, opt_.min_samples_leaf));
    const std::size_t wanted =
        opt_.max_features <= 0 ? d_ : std::min<std::size_t>(d_, std::size_t(opt_.max_features));
    if (wanted < d_) std::shuffle(feature_order_.begin(), feature_order_.end(), rng_);

    const double parent = total_sum * total_sum / double(count);
    Split best;
    best.score = parent;
    std::size_t visited = 0;
    for (std::size_t f = 0; f < d_ && visited < wanted; ++f) {
      const std::size_t j = std::size_t(feature_order_[f]);
      const auto& list = lists_[j];
      const auto& col = data_.column(j);
      if (col[std::size_t(list[begin])] == col[std::size_t(list[end - 1])]) continue;
      bool feasible = false;
      double left_sum = 0.0;
      for (std::size_t i = begin; i + 1 < end; ++i) {
        left_sum += y_[std::size_t(list[i])];
        const double xa = col[std::size_t(list[i])];
        const double xb = col[std::size_t(list[i + 1])];
        const std::size_t nl = i + 1 - begin;
        if (nl < min_leaf) continue;
        if (count - nl < min_leaf) break;
        if (xa == xb) continue;
        feasible = true;
        const double right_sum = total_sum - left_sum;
        const double score =
            left_sum * left_sum / double(nl) + right_sum * right_sum / double(count - nl);
        if (score > best.score) {
          double thr = 0.5 * (xa + xb);
          if (!(thr < xb)) thr = xa;
          best = {int(j), thr, score, nl};
        }
      }
      if (feasible) ++visited;
    }
    return best;
  }

  const SortedColumns& data_;
  std::span<const double> y_;
  const TreeOptions& opt_;
  std::mt19937_64& rng_;
  std::size_t d_;
  std::vector<int> feature_order_;
  std::vector<std::vector<int>> lists_;
  std::vector<char> goes_left_;
  std::vector<int> scratch_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

RegressionTree grow_tree(const SortedColumns& data, std::span<const double> y,
                         std::span<const int> multiplicity, const TreeOptions& options,
                         std::mt19937_64& rng) {
  if (y.size() != data.rows()) throw Error(ErrorCode::InvalidArgument, "tree: target size");
  Grower g(data, y, options, rng);
  return g.grow(multiplicity);
}

}  // namespace demand
