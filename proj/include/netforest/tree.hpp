#pragma once

// Probability-emitting CART trees (Gini impurity) with minimal
// cost-complexity pruning.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "netforest/core.hpp"

namespace netforest {

enum class SplitMode {
  exhaustive,       ///< best Gini split over every feature
  random_subspace,  ///< best Gini split over ceil(sqrt(d)) random features
  fully_random      ///< one random feature, uniform threshold; labels unused
};

struct TreeParams {
  std::optional<int> max_depth;
  int min_samples_split = 2;
  double ccp_alpha = 0.0;
  SplitMode split_mode = SplitMode::exhaustive;
  int features_per_split = 0;  ///< random_subspace only; 0 means ceil(sqrt(d))

  void validate() const {
    if (max_depth && *max_depth < 0) throw Error("max_depth must be >= 0");
    if (min_samples_split < 2) throw Error("min_samples_split must be >= 2");
    if (!(ccp_alpha >= 0)) throw Error("ccp_alpha must be >= 0");
    if (features_per_split < 0) throw Error("features_per_split must be >= 0");
  }

  /// Decision-tree baseline: max_depth=4, min_samples_split=10, ccp_alpha=0.01.
  static TreeParams baseline() {
    TreeParams p;
    p.max_depth = 4;
    p.min_samples_split = 10;
    p.ccp_alpha = 0.01;
    return p;
  }
};

inline double gini(const Proba& counts) {
  const double n = counts[0] + counts[1];
  if (n <= 0) return 0.0;
  const double p0 = counts[0] / n, p1 = counts[1] / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

struct TreeNode {
  int feature = -1;        ///< -1 marks a leaf
  double threshold = 0.0;  ///< rows with x[feature] < threshold go left
  int left = -1;
  int right = -1;
  Proba class_weight{};    ///< training class counts reaching this node
  double impurity = 0.0;   ///< Gini of class_weight

  bool is_leaf() const { return feature < 0; }
  double weight() const { return class_weight[0] + class_weight[1]; }
  Proba proba() const {
    const double w = weight();
    return w > 0 ? Proba{class_weight[0] / w, class_weight[1] / w} : Proba{0.5, 0.5};
  }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Node arena in preorder: children always follow their parent.
class DecisionTree {
 public:
  DecisionTree() = default;

  DecisionTree(std::vector<TreeNode> nodes, std::size_t n_features)
      : nodes_(std::move(nodes)), n_features_(n_features) {
    if (nodes_.empty()) throw Error("decision tree needs at least one node");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const auto& n = nodes_[i];
      if (n.is_leaf()) {
        if (!(n.weight() > 0)) throw Error("tree leaf " + std::to_string(i) + " has no training weight");
        continue;
      }
      if (static_cast<std::size_t>(n.feature) >= n_features_) throw Error("tree split feature out of range");
      if (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) ||
          static_cast<std::size_t>(n.left) >= nodes_.size() || static_cast<std::size_t>(n.right) >= nodes_.size())
        throw Error("tree node " + std::to_string(i) + " has invalid children");
    }
  }

  bool fitted() const { return !nodes_.empty(); }
  std::size_t n_features() const { return n_features_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }

  std::size_t leaf_index(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes_[i].is_leaf())
      i = static_cast<std::size_t>(row[static_cast<std::size_t>(nodes_[i].feature)] < nodes_[i].threshold
                                       ? nodes_[i].left
                                       : nodes_[i].right);
    return i;
  }

  Proba predict_proba(std::span<const double> row) const {
    if (row.size() != n_features_)
      throw Error("tree expects " + std::to_string(n_features_) + " features, got " + std::to_string(row.size()));
    return nodes_[leaf_index(row)].proba();
  }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](auto& n) { return n.is_leaf(); }));
  }

  std::size_t depth() const {
    std::vector<std::size_t> d(nodes_.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      best = std::max(best, d[i]);
      if (!nodes_[i].is_leaf()) {
        d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
        d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
      }
    }
    return best;
  }

  /// Cost-complexity risk of node i alone: weight share times impurity.
  double node_risk(std::size_t i) const { return nodes_[i].weight() / nodes_[0].weight() * nodes_[i].impurity; }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::vector<TreeNode> nodes_;
  std::size_t n_features_ = 0;
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& ds, const TreeParams& params, std::vector<std::uint32_t> samples)
      : ds_(ds), params_(params), samples_(std::move(samples)) {
    const std::size_t d = ds.cols();
    subspace_ = params.features_per_split > 0
                    ? std::min<std::size_t>(static_cast<std::size_t>(params.features_per_split), d)
                    : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))));
    features_.resize(d);
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  std::vector<TreeNode> build(RandomSeed seed) {
    grow(0, samples_.size(), 0, seed);
    return std::move(nodes_);
  }

 private:
  struct Split {
    std::size_t feature;
    double threshold;
  };

  int grow(std::size_t begin, std::size_t end, int depth, RandomSeed seed) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    {
      TreeNode& node = nodes_.back();
      for (std::size_t i = begin; i < end; ++i) node.class_weight[code(ds_.label(samples_[i]))] += 1.0;
      node.impurity = gini(node.class_weight);
    }
    const TreeNode& node = nodes_[static_cast<std::size_t>(index)];
    const bool pure = node.class_weight[0] == 0 || node.class_weight[1] == 0;
    const bool too_deep = params_.max_depth && depth >= *params_.max_depth;
    const bool too_small = end - begin < static_cast<std::size_t>(params_.min_samples_split);
    if (pure || too_deep || too_small) return index;

    Rng rng(seed);
    auto split = params_.split_mode == SplitMode::fully_random ? random_split(begin, end, rng)
                                                                : best_split(begin, end, rng);
    if (!split) return index;

    auto mid = std::partition(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                              samples_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::uint32_t r) {
                                return ds_.at(r, split->feature) < split->threshold;
                              });
    const auto split_at = static_cast<std::size_t>(mid - samples_.begin());
    const int left = grow(begin, split_at, depth + 1, derive_seed(seed, {0}));
    const int right = grow(split_at, end, depth + 1, derive_seed(seed, {1}));
    TreeNode& n = nodes_[static_cast<std::size_t>(index)];
    n.feature = static_cast<int>(split->feature);
    n.threshold = split->threshold;
    n.left = left;
    n.right = right;
    return index;
  }

  // Each node starts from the identity order so its draws depend only on
  // its own seed.
  void shuffle_features(Rng& rng) {
    std::iota(features_.begin(), features_.end(), std::size_t{0});
    rng.shuffle(features_);
  }

  std::optional<Split> random_split(std::size_t begin, std::size_t end, Rng& rng) {
    shuffle_features(rng);
    for (std::size_t f : features_) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (std::size_t i = begin; i < end; ++i) {
        const double x = ds_.at(samples_[i], f);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      if (lo < hi) {
        // (lo, hi]: the minimum always goes left, the maximum right.
        double t = hi - rng.uniform() * (hi - lo);
        if (!(t > lo)) t = hi;
        return Split{f, t};
      }
    }
    return std::nullopt;
  }

  std::optional<Split> best_split(std::size_t begin, std::size_t end, Rng& rng) {
    const bool subspace = params_.split_mode == SplitMode::random_subspace;
    if (subspace) shuffle_features(rng);
    const std::size_t want = subspace ? subspace_ : features_.size();
    const double n = static_cast<double>(end - begin);
    Proba total{};
    for (std::size_t i = begin; i < end; ++i) total[code(ds_.label(samples_[i]))] += 1.0;

    std::optional<Split> best;
    double best_score = std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
    for (std::size_t fi = 0; fi < features_.size() && evaluated < want; ++fi) {
      const std::size_t f = subspace ? features_[fi] : fi;
      scratch_.clear();
      for (std::size_t i = begin; i < end; ++i)
        scratch_.emplace_back(ds_.at(samples_[i], f), static_cast<std::uint8_t>(code(ds_.label(samples_[i]))));
      std::sort(scratch_.begin(), scratch_.end());
      if (scratch_.front().first == scratch_.back().first) continue;
      ++evaluated;
      Proba left{};
      for (std::size_t i = 0; i + 1 < scratch_.size(); ++i) {
        left[scratch_[i].second] += 1.0;
        if (scratch_[i].first == scratch_[i + 1].first) continue;
        const double nl = static_cast<double>(i + 1), nr = n - nl;
        const double r0 = total[0] - left[0], r1 = total[1] - left[1];
        // Weighted child Gini times n, up to the constant n.
        const double score = -(left[0] * left[0] + left[1] * left[1]) / nl - (r0 * r0 + r1 * r1) / nr;
        if (score < best_score) {
          best_score = score;
          const double a = scratch_[i].first, b = scratch_[i + 1].first;
          double t = a + (b - a) / 2;
          if (!(t > a)) t = b;
          best = Split{f, t};
        }
      }
    }
    return best;
  }

  const Dataset& ds_;
  const TreeParams& params_;
  std::vector<std::uint32_t> samples_;
  std::vector<TreeNode> nodes_;
  std::vector<std::size_t> features_;
  std::vector<std::pair<double, std::uint8_t>> scratch_;
  std::size_t subspace_ = 1;
};

}  // namespace detail

DecisionTree ccp_prune(const DecisionTree& tree, double alpha);

/// Fits on the given sample rows (duplicates allowed, as in a bootstrap).
inline DecisionTree fit_tree(const Dataset& ds, std::span<const std::size_t> sample_rows, const TreeParams& params,
                             RandomSeed seed) {
  params.validate();
  if (ds.empty() || sample_rows.empty()) throw Error("cannot fit a decision tree on an empty dataset");
  std::vector<std::uint32_t> samples(sample_rows.begin(), sample_rows.end());
  detail::TreeBuilder builder(ds, params, std::move(samples));
  DecisionTree tree(builder.build(derive_seed(seed, {0x7eee})), ds.cols());
  return params.ccp_alpha > 0 ? ccp_prune(tree, params.ccp_alpha) : tree;
}

inline DecisionTree fit_tree(const Dataset& ds, const TreeParams& params, RandomSeed seed) {
  std::vector<std::size_t> all(ds.rows());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return fit_tree(ds, all, params, seed);
}

/// Minimal cost-complexity pruning: repeatedly collapse the internal node
/// with the smallest effective alpha g(t) = (R(t) - R(T_t)) / (|leaves(T_t)| - 1)
/// while g(t) <= alpha (lowest index on ties). alpha = 0 leaves the tree as is.
inline DecisionTree ccp_prune(const DecisionTree& tree, double alpha) {
  if (!tree.fitted()) throw Error("cannot prune an unfitted tree");
  if (alpha < 0 || std::isnan(alpha)) throw Error("ccp alpha must be >= 0");
  if (alpha == 0) return tree;
  const auto& nodes = tree.nodes();
  const std::size_t n = nodes.size();
  std::vector<bool> collapsed(n, false);
  std::vector<double> subtree_risk(n);
  std::vector<std::size_t> leaves(n);
  std::vector<bool> reachable(n);

  for (;;) {
    std::fill(reachable.begin(), reachable.end(), false);
    reachable[0] = true;
    for (std::size_t i = 0; i < n; ++i) {
      if (!reachable[i] || nodes[i].is_leaf() || collapsed[i]) continue;
      reachable[static_cast<std::size_t>(nodes[i].left)] = true;
      reachable[static_cast<std::size_t>(nodes[i].right)] = true;
    }
    for (std::size_t i = n; i-- > 0;) {
      if (nodes[i].is_leaf() || collapsed[i]) {
        subtree_risk[i] = tree.node_risk(i);
        leaves[i] = 1;
      } else {
        const auto l = static_cast<std::size_t>(nodes[i].left), r = static_cast<std::size_t>(nodes[i].right);
        subtree_risk[i] = subtree_risk[l] + subtree_risk[r];
        leaves[i] = leaves[l] + leaves[r];
      }
    }
    std::optional<std::size_t> weakest;
    double weakest_g = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!reachable[i] || nodes[i].is_leaf() || collapsed[i]) continue;
      const double g = (tree.node_risk(i) - subtree_risk[i]) / static_cast<double>(leaves[i] - 1);
      if (!weakest || g < weakest_g) {
        weakest = i;
        weakest_g = g;
      }
    }
    if (!weakest || weakest_g > alpha) break;
    collapsed[*weakest] = true;
  }

  std::vector<TreeNode> out;
  auto copy = [&](auto&& self, std::size_t i) -> int {
    const int index = static_cast<int>(out.size());
    out.push_back(nodes[i]);
    if (nodes[i].is_leaf() || collapsed[i]) {
      out.back().feature = -1;
      out.back().threshold = 0.0;
      out.back().left = out.back().right = -1;
      return index;
    }
    const int l = self(self, static_cast<std::size_t>(nodes[i].left));
    const int r = self(self, static_cast<std::size_t>(nodes[i].right));
    out[static_cast<std::size_t>(index)].left = l;
    out[static_cast<std::size_t>(index)].right = r;
    return index;
  };
  copy(copy, 0);
  return DecisionTree(std::move(out), tree.n_features());
}

/// Per-feature Gini decrease weighted by node share, unnormalized.
inline std::vector<double> gini_decrease(const DecisionTree& tree) {
  std::vector<double> imp(tree.n_features(), 0.0);
  const auto& nodes = tree.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    const auto l = static_cast<std::size_t>(nodes[i].left), r = static_cast<std::size_t>(nodes[i].right);
    imp[static_cast<std::size_t>(nodes[i].feature)] +=
        tree.node_risk(i) - tree.node_risk(l) - tree.node_risk(r);
  }
  return imp;
}

}  // namespace netforest
