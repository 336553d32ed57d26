#include <gtest/gtest.h>

#include "support.hpp"

using namespace netforest;

namespace {

ScanParams small_scan(std::size_t window) {
  ScanParams p;
  p.window = window;
  p.n_trees = 5;
  return p;
}

}  // namespace

TEST(WindowSlices, CountsAndLabelBroadcast) {
  const auto ds = nf_test::gaussian_clusters(4, 3, 10, 1.0, 1);
  const auto slices = window_slices(ds, 2, 1);
  EXPECT_EQ(slices.rows(), 9u * 7u);
  EXPECT_EQ(slices.cols(), 2u);
  EXPECT_EQ(slices.at(1, 0), ds.at(0, 1));
  EXPECT_EQ(slices.label(9 * 5), ds.label(5));

  const auto one = nf_test::make_dataset({{1, 2, 3}}, {1});
  const auto s = window_slices(one, 2, 1);
  ASSERT_EQ(s.rows(), 2u);
  EXPECT_EQ(s.label(0), ClassLabel::Malicious);
  EXPECT_EQ(s.label(1), ClassLabel::Malicious);
  EXPECT_EQ(s.at(1, 0), 2.0);

  EXPECT_EQ(window_slices(ds, 10, 1).rows(), ds.rows());
}

TEST(WindowCount, FormulaAndErrors) {
  EXPECT_EQ(window_count(10, 2, 1), 9u);
  EXPECT_EQ(window_count(10, 3, 2), 4u);
  EXPECT_EQ(window_count(5, 5, 1), 1u);
  EXPECT_THROW(window_count(3, 4, 1), Error);
}

TEST(Scanner, OutputShapeD10W2) {
  const auto ds = nf_test::gaussian_clusters(30, 30, 10, 1.0, 2);
  const auto s = scan_fit(ds, small_scan(2), RandomSeed{1});
  EXPECT_EQ(s.output_dim(), 36u);
  const auto t = s.transform(ds.row(0));
  EXPECT_EQ(t.size(), 36u);
  for (std::size_t b = 0; b < t.size(); b += 2) {
    EXPECT_NEAR(t[b] + t[b + 1], 1.0, 1e-9);
    EXPECT_GE(t[b], 0.0);
    EXPECT_LE(t[b], 1.0);
  }
}

TEST(Scanner, SingleWindowGivesFourOutputs) {
  const auto ds = nf_test::gaussian_clusters(20, 20, 3, 1.0, 3);
  const auto s = scan_fit(ds, small_scan(3), RandomSeed{1});
  EXPECT_EQ(s.transform(ds.row(0)).size(), 4u);
}

TEST(Scanner, OrderIsWindowThenForestThenClass) {
  const auto ds = nf_test::gaussian_clusters(20, 20, 4, 1.0, 4);
  const auto s = scan_fit(ds, small_scan(2), RandomSeed{2});
  const auto row = ds.row(3);
  const auto t = s.transform(row);
  for (std::size_t w = 0; w < 3; ++w) {
    const auto rf = s.random_forest().predict_proba(row.subspan(w, 2));
    const auto crf = s.completely_random_forest().predict_proba(row.subspan(w, 2));
    EXPECT_EQ(t[w * 4 + 0], rf[0]);
    EXPECT_EQ(t[w * 4 + 1], rf[1]);
    EXPECT_EQ(t[w * 4 + 2], crf[0]);
    EXPECT_EQ(t[w * 4 + 3], crf[1]);
  }
  EXPECT_EQ(s.output_names()[2], "scan0_crf_p0");
}

TEST(Scanner, IdenticalRowsIdenticalTransforms) {
  const auto ds = nf_test::gaussian_clusters(20, 20, 5, 1.0, 5);
  const auto s = scan_fit(ds, small_scan(2), RandomSeed{3});
  EXPECT_EQ(s.transform(ds.row(7)), s.transform(ds.row(7)));
  EXPECT_THROW(s.transform(std::vector<double>(4, 0.0)), Error);
}

TEST(Scanner, WindowLargerThanDimension) {
  const auto ds = nf_test::gaussian_clusters(5, 5, 2, 1.0, 6);
  EXPECT_THROW(scan_fit(ds, small_scan(3), RandomSeed{0}), Error);
}

TEST(Scanner, DatasetTransformMatchesRowTransform) {
  const auto ds = nf_test::gaussian_clusters(15, 15, 4, 1.0, 7);
  const auto s = scan_fit(ds, small_scan(2), RandomSeed{4});
  const auto t = s.transform(ds);
  ASSERT_EQ(t.cols(), s.output_dim());
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    const auto r = s.transform(ds.row(i));
    for (std::size_t j = 0; j < r.size(); ++j) ASSERT_EQ(t.at(i, j), r[j]);
  }
}
