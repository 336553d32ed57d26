#include <gtest/gtest.h>

#include "support.hpp"

using namespace netforest;
using nf_test::make_dataset;

namespace {

double accuracy_of(const DecisionTree& t, const Dataset& ds) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < ds.rows(); ++i) ok += argmax(t.predict_proba(ds.row(i))) == ds.label(i);
  return double(ok) / double(ds.rows());
}

// Hand-built 7-node tree (preorder): root splits into a pure-ish left
// subtree and a mixed right subtree.
DecisionTree seven_node_tree() {
  auto node = [](int f, int l, int r, double c0, double c1) {
    TreeNode n;
    n.feature = f;
    n.threshold = 0.5;
    n.left = l;
    n.right = r;
    n.class_weight = {c0, c1};
    n.impurity = gini(n.class_weight);
    return n;
  };
  return DecisionTree({node(0, 1, 4, 60, 40), node(1, 2, 3, 45, 5), node(-1, -1, -1, 44, 1),
                       node(-1, -1, -1, 1, 4), node(1, 5, 6, 15, 35), node(-1, -1, -1, 10, 5),
                       node(-1, -1, -1, 5, 30)},
                      2);
}

double subtree_cost(const nf_test::PrunedSubtree& s, double alpha) { return s.risk + alpha * double(s.leaves); }

}  // namespace

TEST(Gini, Values) {
  EXPECT_DOUBLE_EQ(gini({5, 5}), 0.5);
  EXPECT_DOUBLE_EQ(gini({4, 0}), 0.0);
  EXPECT_DOUBLE_EQ(gini({0, 0}), 0.0);
}

TEST(FitTree, SingleClassIsOneLeaf) {
  const auto ds = make_dataset({{1}, {2}, {3}}, {1, 1, 1});
  const auto t = fit_tree(ds, TreeParams{}, RandomSeed{0});
  ASSERT_EQ(t.nodes().size(), 1u);
  EXPECT_EQ(t.predict_proba(std::vector<double>{9.0})[1], 1.0);
}

TEST(FitTree, OneSplitSeparatesSigns) {
  const auto ds = make_dataset({{-2}, {-1}, {1}, {2}}, {0, 0, 1, 1});
  const auto t = fit_tree(ds, TreeParams{}, RandomSeed{0});
  EXPECT_EQ(t.depth(), 1u);
  EXPECT_EQ(accuracy_of(t, ds), 1.0);
  EXPECT_DOUBLE_EQ(t.nodes()[0].threshold, 0.0);
  EXPECT_EQ(argmax(t.predict_proba(std::vector<double>{0.0})), ClassLabel::Malicious);
}

TEST(FitTree, MaxDepthZeroGivesPrior) {
  const auto ds = make_dataset({{-2}, {-1}, {1}, {2}}, {0, 0, 0, 1});
  TreeParams p;
  p.max_depth = 0;
  const auto t = fit_tree(ds, p, RandomSeed{0});
  ASSERT_EQ(t.nodes().size(), 1u);
  EXPECT_DOUBLE_EQ(t.predict_proba(std::vector<double>{0.0})[0], 0.75);
}

TEST(FitTree, MinSamplesSplitStopsGrowth) {
  const auto ds = make_dataset({{-2}, {-1}, {1}, {2}}, {0, 0, 1, 1});
  TreeParams p;
  p.min_samples_split = 5;
  EXPECT_EQ(fit_tree(ds, p, RandomSeed{0}).nodes().size(), 1u);
}

TEST(FitTree, EmptyDatasetIsAnError) {
  EXPECT_THROW(fit_tree(Dataset({}, {}, {"x"}), TreeParams{}, RandomSeed{0}), Error);
}

TEST(FitTree, LeafProbabilitiesSumToOne) {
  const auto ds = nf_test::gaussian_clusters(200, 80, 4, 1.0, 3);
  for (auto mode : {SplitMode::exhaustive, SplitMode::random_subspace, SplitMode::fully_random}) {
    TreeParams p;
    p.split_mode = mode;
    const auto t = fit_tree(ds, p, RandomSeed{5});
    for (const auto& n : t.nodes()) {
      const auto pr = n.proba();
      EXPECT_NEAR(pr[0] + pr[1], 1.0, 1e-9);
      EXPECT_GE(pr[0], 0.0);
    }
    if (mode != SplitMode::fully_random) { EXPECT_EQ(accuracy_of(t, ds), 1.0); }
  }
}

TEST(FitTree, DepthLimitRespected) {
  const auto ds = nf_test::gaussian_clusters(200, 80, 4, 1.0, 4);
  const auto t = fit_tree(ds, TreeParams::baseline(), RandomSeed{1});
  EXPECT_LE(t.depth(), 4u);
}

TEST(FitTree, FullyRandomIgnoresLabels) {
  const auto ds = nf_test::gaussian_clusters(150, 150, 3, 1.0, 6);
  std::vector<ClassLabel> shuffled(ds.labels().begin(), ds.labels().end());
  Rng rng(RandomSeed{99});
  rng.shuffle(shuffled);
  const Dataset other(std::vector<double>(ds.values().begin(), ds.values().end()), shuffled, ds.feature_names());
  TreeParams p;
  p.split_mode = SplitMode::fully_random;
  const auto a = fit_tree(ds, p, RandomSeed{12});
  const auto b = fit_tree(other, p, RandomSeed{12});
  // Purity stops differ, but every node reached in both trees splits identically.
  std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t i, std::size_t j) {
    const auto& x = a.nodes()[i];
    const auto& y = b.nodes()[j];
    if (x.is_leaf() || y.is_leaf()) return;
    ASSERT_EQ(x.feature, y.feature);
    ASSERT_EQ(x.threshold, y.threshold);
    walk(std::size_t(x.left), std::size_t(y.left));
    walk(std::size_t(x.right), std::size_t(y.right));
  };
  walk(0, 0);
  EXPECT_FALSE(a.nodes()[0].is_leaf());
}

TEST(FitTree, FullyRandomThresholdWithinObservedRange) {
  const auto ds = nf_test::gaussian_clusters(50, 50, 2, 1.0, 7);
  TreeParams p;
  p.split_mode = SplitMode::fully_random;
  const auto t = fit_tree(ds, p, RandomSeed{3});
  const auto& root = t.nodes()[0];
  ASSERT_FALSE(root.is_leaf());
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    lo = std::min(lo, ds.at(i, std::size_t(root.feature)));
    hi = std::max(hi, ds.at(i, std::size_t(root.feature)));
  }
  EXPECT_GT(root.threshold, lo);
  EXPECT_LE(root.threshold, hi);
}

TEST(FitTree, Deterministic) {
  const auto ds = nf_test::gaussian_clusters(100, 40, 5, 1.0, 8);
  TreeParams p;
  p.split_mode = SplitMode::random_subspace;
  EXPECT_EQ(fit_tree(ds, p, RandomSeed{4}), fit_tree(ds, p, RandomSeed{4}));
}

TEST(DecisionTree, DimensionMismatchAndValidation) {
  const auto t = seven_node_tree();
  EXPECT_THROW(t.predict_proba(std::vector<double>{0.0}), Error);
  TreeNode bad;
  bad.feature = 0;
  bad.left = 0;
  bad.right = 0;
  EXPECT_THROW(DecisionTree({bad}, 1), Error);
}

TEST(CcpPrune, AlphaZeroIsIdentity) {
  const auto t = seven_node_tree();
  EXPECT_EQ(ccp_prune(t, 0.0), t);
}

TEST(CcpPrune, InfiniteAlphaCollapsesToRoot) {
  const auto p = ccp_prune(seven_node_tree(), std::numeric_limits<double>::infinity());
  ASSERT_EQ(p.nodes().size(), 1u);
  EXPECT_DOUBLE_EQ(p.predict_proba(std::vector<double>{0, 0})[0], 0.6);
}

TEST(CcpPrune, SevenNodeTreeMatchesBruteForce) {
  const auto t = seven_node_tree();
  const auto all = nf_test::enumerate_prunings(t);
  EXPECT_EQ(all.size(), 5u);
  for (double alpha : {0.0, 0.005, 0.01, 0.02, 0.03, 0.05, 0.08, 0.1, 0.2, 1.0}) {
    double best = 1e300;
    for (const auto& s : all) best = std::min(best, subtree_cost(s, alpha));
    std::size_t smallest = SIZE_MAX;
    for (const auto& s : all)
      if (subtree_cost(s, alpha) <= best + 1e-12) smallest = std::min(smallest, s.leaves);
    const auto pruned = alpha == 0 ? t : ccp_prune(t, alpha);
    nf_test::PrunedSubtree got{nf_test::surviving_splits(t, pruned), 0, pruned.leaf_count()};
    for (std::size_t i = 0; i < pruned.nodes().size(); ++i)
      if (pruned.nodes()[i].is_leaf()) got.risk += pruned.node_risk(i);
    EXPECT_NEAR(subtree_cost(got, alpha), best, 1e-12) << "alpha " << alpha;
    if (alpha > 0) { EXPECT_EQ(got.leaves, smallest) << "alpha " << alpha; }
  }
}

TEST(CcpPrune, Monotone) {
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 30; ++trial) {
    const auto t = nf_test::random_fixture_tree(gen, 15);
    for (double a1 : {0.001, 0.01, 0.03})
      for (double a2 : {0.01, 0.05, 0.2}) {
        if (a2 < a1) continue;
        EXPECT_EQ(ccp_prune(ccp_prune(t, a1), a2), ccp_prune(t, a2));
      }
  }
}

TEST(CcpPrune, BaselineTreeIsPruned) {
  const auto ds = nf_test::gaussian_clusters(300, 100, 3, 0.7, 9);
  TreeParams unpruned = TreeParams::baseline();
  unpruned.ccp_alpha = 0;
  const auto full = fit_tree(ds, unpruned, RandomSeed{1});
  const auto pruned = fit_tree(ds, TreeParams::baseline(), RandomSeed{1});
  EXPECT_LE(pruned.leaf_count(), full.leaf_count());
  EXPECT_EQ(pruned, ccp_prune(full, 0.01));
}

TEST(GiniDecrease, SingleSplitAttributedToItsFeature) {
  const auto ds = make_dataset({{5, -2}, {5, -1}, {5, 1}, {5, 2}}, {0, 0, 1, 1});
  const auto imp = gini_decrease(fit_tree(ds, TreeParams{}, RandomSeed{0}));
  EXPECT_EQ(imp[0], 0.0);
  EXPECT_DOUBLE_EQ(imp[1], 0.5);
}
