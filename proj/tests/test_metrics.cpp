#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"

using namespace netforest;

namespace {

std::vector<ClassLabel> labels(std::initializer_list<int> codes) {
  std::vector<ClassLabel> out;
  for (int c : codes) out.push_back(label_from_code(c));
  return out;
}

}  // namespace

TEST(Confusion, CellByCell) {
  const auto cm = confusion(labels({1, 1, 0, 0}), labels({1, 0, 0, 1}));
  EXPECT_EQ(cm, (ConfusionMatrix{1, 1, 1, 1}));
  const auto perfect = confusion(labels({1, 0, 1}), labels({1, 0, 1}));
  EXPECT_EQ(perfect.fp + perfect.fn, 0u);
  const auto positive = confusion(labels({1, 0, 0}), labels({1, 1, 1}));
  EXPECT_EQ(positive.tn + positive.fn, 0u);
  EXPECT_THROW(confusion(labels({1}), labels({1, 0})), Error);
}

TEST(Metrics, HandEvaluated) {
  const auto m = metrics(ConfusionMatrix{2, 2, 1, 0});
  EXPECT_DOUBLE_EQ(m.accuracy, 0.8);
  EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_DOUBLE_EQ(m.f1, 0.8);
}

TEST(Metrics, KnownPrecisionRecallPairF1) {
  EXPECT_NEAR(f1_score(0.88906, 0.99999), 0.94127, 5e-4);
}

TEST(Metrics, PerfectClassifier) {
  const auto m = metrics(ConfusionMatrix{5, 7, 0, 0});
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.f1, 1.0);
}

TEST(Metrics, ZeroDenominatorsWarnAndReportZero) {
  nf_test::WarningCapture capture;
  const auto m = metrics(ConfusionMatrix{0, 5, 0, 0});
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
  EXPECT_EQ(capture.messages.size(), 2u);
  EXPECT_THROW(metrics(ConfusionMatrix{}), Error);
}

TEST(RocAuc, DocumentedExamples) {
  EXPECT_DOUBLE_EQ(roc_auc(labels({1, 0, 0, 1}), std::vector<double>{0.9, 0.2, 0.8, 0.3}), 0.75);
  EXPECT_DOUBLE_EQ(roc_auc(labels({0, 0, 1, 1}), std::vector<double>{0.1, 0.2, 0.3, 0.4}), 1.0);
  EXPECT_DOUBLE_EQ(roc_auc(labels({0, 1, 1, 0}), std::vector<double>{0.5, 0.5, 0.5, 0.5}), 0.5);
  EXPECT_THROW(roc_auc(labels({1, 1}), std::vector<double>{0.1, 0.2}), Error);
}

TEST(RocAuc, ComplementAndMonotoneInvariance) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<ClassLabel> l;
  std::vector<double> s, neg, cubed;
  for (int i = 0; i < 150; ++i) {
    l.push_back(u(gen) < 0.3 ? ClassLabel::Malicious : ClassLabel::Benign);
    s.push_back(u(gen));
    neg.push_back(-s.back());
    cubed.push_back(std::exp(3 * s.back()));
  }
  EXPECT_NEAR(roc_auc(l, s) + roc_auc(l, neg), 1.0, 1e-12);
  EXPECT_EQ(roc_auc(l, s), roc_auc(l, cubed));
}

TEST(RocAuc, MatchesPairCountingWithTies) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ClassLabel> l;
    std::vector<double> s;
    for (int i = 0; i < 60; ++i) {
      l.push_back(i % 3 == 0 ? ClassLabel::Malicious : ClassLabel::Benign);
      s.push_back(double(gen() % 5) / 4);
    }
    EXPECT_EQ(roc_auc(l, s), nf_test::brute_auc(l, s));
  }
}

TEST(Report, EmptyHasHeaderOnly) {
  const auto r = build_report({});
  EXPECT_EQ(r.to_csv(), "model,sampling,accuracy,f1,precision,recall,roc_auc\n");
}

TEST(Report, GroupedByModelAndSortedByAuc) {
  const auto r = build_report({{"Deep Forest", "Original", 0.9, 0.8, 0.7, 0.9, 0.91},
                               {"Logistic Regression", "SMOTE", 0.9, 0.8, 0.7, 0.9, 0.95},
                               {"Deep Forest", "SMOTEENN", 0.9, 0.8, 0.7, 0.9, 0.99}});
  ASSERT_EQ(r.rows().size(), 3u);
  EXPECT_EQ(r.rows()[0].sampling, "SMOTEENN");
  EXPECT_EQ(r.rows()[1].sampling, "Original");
  EXPECT_EQ(r.rows()[2].model, "Logistic Regression");
}

TEST(Report, TwentyExperiments) {
  std::vector<MetricsRow> rows;
  for (const char* m : {"A", "B", "C", "D", "E"})
    for (const char* s : {"Original", "SMOTE", "Hybrid Sampling", "SMOTEENN"}) rows.push_back({m, s, 1, 1, 1, 1, 1});
  EXPECT_EQ(build_report(rows).rows().size(), 20u);
}

TEST(Report, CsvRoundTripAndText) {
  const auto r = build_report({{"Decision Tree", "SMOTE", 0.96894, 0.89018, 0.81179, 0.98531, 0.97529}});
  EXPECT_EQ(r.to_csv(),
            "model,sampling,accuracy,f1,precision,recall,roc_auc\n"
            "Decision Tree,SMOTE,0.968940,0.890180,0.811790,0.985310,0.975290\n");
  std::istringstream in(r.to_csv());
  const auto rows = parse_report_csv(in);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].recall, 0.98531);
  const auto text = r.to_text();
  EXPECT_NE(text.find("Decision Tree  SMOTE"), std::string::npos);
  std::istringstream bad("nope\n");
  EXPECT_THROW(parse_report_csv(bad), Error);
}

TEST(MetricsRow, F1IdentityAndThreshold) {
  const auto l = labels({1, 1, 0, 0, 1});
  const std::vector<double> s{0.9, 0.5, 0.2, 0.7, 0.51};
  const auto row = make_metrics_row("m", "s", l, s);
  // 0.5 is not above the threshold.
  EXPECT_DOUBLE_EQ(row.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(row.precision, 2.0 / 3.0);
  EXPECT_NEAR(row.f1, 2 * row.precision * row.recall / (row.precision + row.recall), 1e-12);
}
