#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "flagsel/error.hpp"
#include "flagsel/labeling.hpp"
#include "flagsel/models/training_matrix.hpp"

namespace flagsel {

struct DecisionTreeParams {
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_samples_leaf = 1;

  friend bool operator==(const DecisionTreeParams&, const DecisionTreeParams&) = default;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  int left = -1;  // taken when x[feature] <= threshold
  int right = -1;
  int label = 0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Binary CART classifier. Node 0 is the root.
struct DecisionTree {
  std::vector<TreeNode> nodes;
  /// Set when some leaf holds identical inputs with conflicting labels.
  bool degenerate = false;

  int predict(std::span<const double> x) const {
    int at = 0;
    while (!nodes[at].is_leaf()) at = x[nodes[at].feature] <= nodes[at].threshold ? nodes[at].left : nodes[at].right;
    return nodes[at].label;
  }

  std::size_t depth() const {
    std::size_t best = 0;
    std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto [n, d] = stack.back();
      stack.pop_back();
      best = std::max(best, d);
      if (!nodes[n].is_leaf()) {
        stack.push_back({nodes[n].left, d + 1});
        stack.push_back({nodes[n].right, d + 1});
      }
    }
    return best;
  }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

namespace detail {

using ClassWeights = std::array<double, kClassCount>;

// Weighted Gini impurity scaled by the node weight: W - sum_c W_c^2 / W.
inline double scaled_gini(const ClassWeights& w) {
  double total = 0, sq = 0;
  for (double v : w) {
    total += v;
    sq += v * v;
  }
  return total > 0 ? total - sq / total : 0.0;
}

inline int weighted_majority(const ClassWeights& w) {
  int best = 0;
  for (int c = 1; c < kClassCount; ++c)
    if (w[c] > w[best]) best = c;
  return best;
}

class TreeBuilder {
 public:
  TreeBuilder(const TrainingMatrix& m, const DecisionTreeParams& p) : m_(m), p_(p) {}

  DecisionTree build() {
    std::vector<std::size_t> all(m_.rows());
    std::iota(all.begin(), all.end(), 0);
    grow(all, 0);
    return std::move(tree_);
  }

 private:
  struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0;
    double impurity = 0;
  };

  ClassWeights class_weights(const std::vector<std::size_t>& idx) const {
    ClassWeights w{};
    for (auto i : idx) w[m_.y[i]] += m_.w[i];
    return w;
  }

  // Lowest summed child impurity; ties keep the lowest feature and, within
  // it, the lowest threshold.
  Split best_split(std::vector<std::size_t> idx) const {
    Split best;
    const std::size_t n = idx.size();
    const ClassWeights total = class_weights(idx);
    for (std::size_t f = 0; f < m_.dims; ++f) {
      auto value = [&](std::size_t i) { return m_.x[i * m_.dims + f]; };
      std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const double va = value(a), vb = value(b);
        return va < vb || (va == vb && a < b);
      });
      ClassWeights left{};
      for (std::size_t k = 0; k + 1 < n; ++k) {
        left[m_.y[idx[k]]] += m_.w[idx[k]];
        const double lo = value(idx[k]), hi = value(idx[k + 1]);
        if (!(lo < hi)) continue;
        if (k + 1 < p_.min_samples_leaf || n - (k + 1) < p_.min_samples_leaf) continue;
        ClassWeights right{};
        for (int c = 0; c < kClassCount; ++c) right[c] = total[c] - left[c];
        const double impurity = scaled_gini(left) + scaled_gini(right);
        if (!best.found || impurity < best.impurity) {
          double threshold = lo + (hi - lo) / 2;
          if (!(threshold < hi)) threshold = lo;
          best = {true, f, threshold, impurity};
        }
      }
    }
    return best;
  }

  int grow(const std::vector<std::size_t>& idx, std::size_t depth) {
    const ClassWeights w = class_weights(idx);
    const int node = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{-1, 0, -1, -1, weighted_majority(w)});

    const std::size_t present = static_cast<std::size_t>(std::count_if(w.begin(), w.end(), [](double v) { return v > 0; }));
    if (present <= 1) return node;
    if (p_.max_depth != 0 && depth >= p_.max_depth) return node;
    if (idx.size() < 2 * p_.min_samples_leaf) return node;

    const Split s = best_split(idx);
    if (!s.found) {
      if (all_rows_identical(idx)) tree_.degenerate = true;
      return node;
    }

    std::vector<std::size_t> left, right;
    for (auto i : idx) (m_.x[i * m_.dims + s.feature] <= s.threshold ? left : right).push_back(i);
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    TreeNode& n = tree_.nodes[node];
    n.feature = static_cast<int>(s.feature);
    n.threshold = s.threshold;
    n.left = l;
    n.right = r;
    return node;
  }

  bool all_rows_identical(const std::vector<std::size_t>& idx) const {
    for (auto i : idx)
      for (std::size_t d = 0; d < m_.dims; ++d)
        if (m_.x[i * m_.dims + d] != m_.x[idx.front() * m_.dims + d]) return false;
    return true;
  }

  const TrainingMatrix& m_;
  const DecisionTreeParams& p_;
  DecisionTree tree_;
};

}  // namespace detail

/// Grows a CART tree by weighted-Gini minimization over axis-aligned
/// thresholds (midpoints between consecutive distinct values). A node is
/// split whenever it is impure and a legal split exists, even one that
/// does not lower impurity, so XOR-like data is still separated. Leaves
/// predict the weighted-majority class, ties to the lower class. If a
/// leaf's rows are identical but disagree, `degenerate` is set.
inline DecisionTree train_decision_tree(const TrainingMatrix& data, const DecisionTreeParams& params = {}) {
  data.validate();
  if (params.min_samples_leaf == 0) throw Error(ErrorCode::InvalidArgument, "min_samples_leaf must be >= 1");
  for (int y : data.y)
    if (y < 0 || y >= kClassCount) throw Error(ErrorCode::InvalidArgument, "class label outside 0..5");
  return detail::TreeBuilder(data, params).build();
}

}  // namespace flagsel
