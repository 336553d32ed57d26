#pragma once

// Random and completely-random forests of probability trees, plus impurity
// and permutation feature importances.

#include <concepts>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netforest/core.hpp"
#include "netforest/parallel.hpp"
#include "netforest/tree.hpp"

namespace netforest {

enum class ForestMode {
  random,            ///< bootstrap + best split over sqrt(d) random features
  completely_random  ///< bootstrap + random feature and threshold per node
};

inline const char* forest_mode_name(ForestMode m) {
  return m == ForestMode::random ? "random" : "completely_random";
}

struct ForestOptions {
  bool bootstrap = true;
  bool out_of_bag = false;  ///< compute out-of-bag accuracy (needs bootstrap)
};

class Forest {
 public:
  Forest() = default;
  Forest(std::vector<DecisionTree> trees, ForestMode mode, std::optional<double> oob_accuracy = std::nullopt)
      : trees_(std::move(trees)), mode_(mode), oob_accuracy_(oob_accuracy) {
    if (trees_.empty()) throw Error("forest needs at least one tree");
    for (const auto& t : trees_)
      if (t.n_features() != trees_.front().n_features()) throw Error("forest trees disagree on feature count");
  }

  bool fitted() const { return !trees_.empty(); }
  std::size_t n_trees() const { return trees_.size(); }
  std::size_t n_features() const { return trees_.empty() ? 0 : trees_.front().n_features(); }
  ForestMode mode() const { return mode_; }
  std::optional<double> oob_accuracy() const { return oob_accuracy_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  /// Mean of the member trees' probability vectors.
  Proba predict_proba(std::span<const double> row) const {
    if (!fitted()) throw Error("forest is not fitted");
    Proba sum{};
    for (const auto& t : trees_) {
      const auto p = t.predict_proba(row);
      sum[0] += p[0];
      sum[1] += p[1];
    }
    const double n = static_cast<double>(trees_.size());
    return {sum[0] / n, sum[1] / n};
  }

  friend bool operator==(const Forest&, const Forest&) = default;

 private:
  std::vector<DecisionTree> trees_;
  ForestMode mode_ = ForestMode::random;
  std::optional<double> oob_accuracy_;
};

inline SplitMode split_mode_for(ForestMode mode) {
  return mode == ForestMode::random ? SplitMode::random_subspace : SplitMode::fully_random;
}

/// Tree t uses seed derive(seed, t); its bootstrap draws come from a
/// separate stream of the same derived seed.
inline Forest forest_fit(const Dataset& ds, ForestMode mode, std::size_t n_trees, TreeParams params, RandomSeed seed,
                         ForestOptions options = {}) {
  if (n_trees < 1) throw Error("forest needs n_trees >= 1");
  if (ds.empty()) throw Error("cannot fit a forest on an empty dataset");
  params.split_mode = split_mode_for(mode);
  const std::size_t n = ds.rows();
  std::vector<DecisionTree> trees(n_trees);
  std::vector<std::vector<std::size_t>> samples(n_trees);
  parallel_for(n_trees, [&](std::size_t t) {
    const RandomSeed tree_seed = derive_seed(seed, {t});
    auto& rows = samples[t];
    rows.resize(n);
    if (options.bootstrap) {
      Rng rng(derive_seed(tree_seed, {0xb007}));
      for (auto& r : rows) r = rng.below(n);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    trees[t] = fit_tree(ds, rows, params, tree_seed);
  });

  std::optional<double> oob;
  if (options.out_of_bag && options.bootstrap) {
    std::vector<Proba> votes(n, Proba{});
    std::vector<std::size_t> voters(n, 0);
    std::vector<char> in_bag(n);
    for (std::size_t t = 0; t < n_trees; ++t) {
      std::fill(in_bag.begin(), in_bag.end(), 0);
      for (auto r : samples[t]) in_bag[r] = 1;
      for (std::size_t i = 0; i < n; ++i) {
        if (in_bag[i]) continue;
        const auto p = trees[t].predict_proba(ds.row(i));
        votes[i][0] += p[0];
        votes[i][1] += p[1];
        ++voters[i];
      }
    }
    std::size_t scored = 0, correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (voters[i] == 0) continue;
      ++scored;
      correct += argmax(votes[i]) == ds.label(i);
    }
    if (scored > 0) oob = static_cast<double>(correct) / static_cast<double>(scored);
  }
  return Forest(std::move(trees), mode, oob);
}

/// Anything that maps a feature row to a class-probability vector.
template <class M>
concept ProbabilisticClassifier = requires(const M& m, std::span<const double> row) {
  { m.predict_proba(row) } -> std::convertible_to<Proba>;
  { m.n_features() } -> std::convertible_to<std::size_t>;
};

template <ProbabilisticClassifier M>
double accuracy(const M& model, const Dataset& ds) {
  if (ds.empty()) throw Error("accuracy of an empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.rows(); ++i) correct += argmax(model.predict_proba(ds.row(i))) == ds.label(i);
  return static_cast<double>(correct) / static_cast<double>(ds.rows());
}

/// Total Gini decrease per feature (each tree weighted by its own root),
/// normalized to sum 1. All zeros when no tree splits.
inline std::vector<double> impurity_importance(const Forest& forest) {
  if (!forest.fitted()) throw Error("impurity importance of an unfitted forest");
  std::vector<double> total(forest.n_features(), 0.0);
  for (const auto& t : forest.trees()) {
    const auto imp = gini_decrease(t);
    for (std::size_t j = 0; j < total.size(); ++j) total[j] += imp[j];
  }
  double sum = 0;
  for (double v : total) sum += v;
  if (sum > 0)
    for (double& v : total) v /= sum;
  return total;
}

/// Mean accuracy drop over `repeats` independent shuffles of each column.
template <ProbabilisticClassifier M>
std::vector<double> permutation_importance(const M& model, const Dataset& ds, RandomSeed seed,
                                           std::size_t repeats = 5) {
  if (model.n_features() == 0) throw Error("permutation importance of an unfitted model");
  if (model.n_features() != ds.cols()) throw Error("permutation importance: model/dataset dimension mismatch");
  if (repeats < 1) throw Error("permutation importance needs at least one repeat");
  const double base = accuracy(model, ds);
  std::vector<double> importance(ds.cols(), 0.0);
  parallel_for(ds.cols(), [&](std::size_t j) {
    std::vector<double> row(ds.cols());
    double drop = 0;
    for (std::size_t rep = 0; rep < repeats; ++rep) {
      Rng rng(derive_seed(seed, {j, rep}));
      std::vector<std::size_t> perm(ds.rows());
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      rng.shuffle(perm);
      std::size_t correct = 0;
      for (std::size_t i = 0; i < ds.rows(); ++i) {
        auto r = ds.row(i);
        std::copy(r.begin(), r.end(), row.begin());
        row[j] = ds.at(perm[i], j);
        correct += argmax(model.predict_proba(row)) == ds.label(i);
      }
      drop += base - static_cast<double>(correct) / static_cast<double>(ds.rows());
    }
    importance[j] = drop / static_cast<double>(repeats);
  });
  return importance;
}

inline std::map<std::string, double> name_importances(const std::vector<std::string>& names,
                                                      const std::vector<double>& values) {
  if (names.size() != values.size()) throw Error("importance/name length mismatch");
  std::map<std::string, double> out;
  for (std::size_t j = 0; j < names.size(); ++j) out.emplace(names[j], values[j]);
  return out;
}

}  // namespace netforest
