#pragma once

// Confusion-matrix metrics, rank-based ROC AUC and the per-(model, sampling)
// results report. The positive class is Malicious.

#include <algorithm>
#include <cstdio>
#include <map>
#include <istream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "netforest/core.hpp"
#include "netforest/diagnostics.hpp"

namespace netforest {

struct ConfusionMatrix {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(std::span<const ClassLabel> labels, std::span<const ClassLabel> predictions) {
  if (labels.size() != predictions.size())
    throw Error("confusion: " + std::to_string(labels.size()) + " labels vs " + std::to_string(predictions.size()) +
                " predictions");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool actual = labels[i] == ClassLabel::Malicious;
    const bool predicted = predictions[i] == ClassLabel::Malicious;
    if (actual && predicted) ++cm.tp;
    else if (actual) ++cm.fn;
    else if (predicted) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

struct ClassificationMetrics {
  double accuracy = 0, precision = 0, recall = 0, f1 = 0;
};

/// Harmonic mean of precision and recall; 0 when both are 0.
inline double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0 ? 2 * (precision * recall) / s : 0.0;
}

/// Zero denominators yield 0 with a warning instead of an error.
inline ClassificationMetrics metrics(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw Error("metrics of an empty confusion matrix");
  ClassificationMetrics m;
  const auto tp = static_cast<double>(cm.tp), tn = static_cast<double>(cm.tn), fp = static_cast<double>(cm.fp),
             fn = static_cast<double>(cm.fn);
  m.accuracy = (tp + tn) / (tp + tn + fp + fn);
  if (cm.tp + cm.fp == 0)
    warn("precision undefined (no positive predictions); reporting 0");
  else
    m.precision = tp / (tp + fp);
  if (cm.tp + cm.fn == 0)
    warn("recall undefined (no positive labels); reporting 0");
  else
    m.recall = tp / (tp + fn);
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

/// Normalized Mann-Whitney U from rank sums with average ranks for ties:
/// (concordant pairs + 0.5 tied pairs) / (P N).
inline double roc_auc(std::span<const ClassLabel> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) throw Error("roc_auc: label/score length mismatch");
  const auto counts = class_counts(labels);
  if (counts[0] == 0 || counts[1] == 0) throw Error("roc_auc needs both classes present");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the average rank keeps every value an integer.
  double positive_rank_sum_x2 = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double rank_x2 = static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == ClassLabel::Malicious) positive_rank_sum_x2 += rank_x2;
    i = j;
  }
  const double p = static_cast<double>(counts[1]), n = static_cast<double>(counts[0]);
  const double u = positive_rank_sum_x2 / 2 - p * (p + 1) / 2;
  return u / (p * n);
}

struct MetricsRow {
  std::string model;
  std::string sampling;
  double accuracy = 0, f1 = 0, precision = 0, recall = 0, roc_auc = 0;
};

inline MetricsRow make_metrics_row(std::string model, std::string sampling, std::span<const ClassLabel> labels,
                                   std::span<const double> malicious_scores) {
  std::vector<ClassLabel> predicted(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i)
    predicted[i] = malicious_scores[i] > 0.5 ? ClassLabel::Malicious : ClassLabel::Benign;
  const auto m = metrics(confusion(labels, predicted));
  return {std::move(model), std::move(sampling), m.accuracy, m.f1, m.precision, m.recall, roc_auc(labels, malicious_scores)};
}

class MetricsReport {
 public:
  static constexpr const char* kColumns[] = {"model", "sampling", "accuracy", "f1", "precision", "recall", "roc_auc"};

  MetricsReport() = default;
  explicit MetricsReport(std::vector<MetricsRow> rows) : rows_(std::move(rows)) {}

  const std::vector<MetricsRow>& rows() const { return rows_; }

  std::string to_csv() const {
    std::ostringstream out;
    out << "model,sampling,accuracy,f1,precision,recall,roc_auc\n";
    for (const auto& r : rows_)
      out << r.model << ',' << r.sampling << ',' << fixed(r.accuracy) << ',' << fixed(r.f1) << ','
          << fixed(r.precision) << ',' << fixed(r.recall) << ',' << fixed(r.roc_auc) << '\n';
    return out.str();
  }

  /// Aligned table; the model name is printed once per group.
  std::string to_text() const {
    std::vector<std::vector<std::string>> cells;
    cells.emplace_back(std::begin(kColumns), std::end(kColumns));
    std::string previous;
    for (const auto& r : rows_) {
      cells.push_back({r.model == previous ? "" : r.model, r.sampling, fixed(r.accuracy), fixed(r.f1),
                       fixed(r.precision), fixed(r.recall), fixed(r.roc_auc)});
      previous = r.model;
    }
    std::vector<std::size_t> width(std::size(kColumns), 0);
    for (const auto& row : cells)
      for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    std::ostringstream out;
    for (const auto& row : cells) {
      std::string line;
      for (std::size_t c = 0; c < row.size(); ++c) {
        std::string cell = row[c];
        if (c >= 2)
          cell.insert(0, width[c] - cell.size(), ' ');
        else
          cell.append(width[c] - cell.size(), ' ');
        line += (c ? "  " : "") + cell;
      }
      while (!line.empty() && line.back() == ' ') line.pop_back();
      out << line << '\n';
    }
    return out.str();
  }

 private:
  static std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
  }

  std::vector<MetricsRow> rows_;
};

/// Groups rows by model (in order of first appearance) and sorts each group
/// by ROC AUC descending; the sort is stable.
inline MetricsReport build_report(std::vector<MetricsRow> rows) {
  std::map<std::string, std::size_t> first_seen;
  for (const auto& r : rows) first_seen.emplace(r.model, first_seen.size());
  std::stable_sort(rows.begin(), rows.end(), [&](const MetricsRow& a, const MetricsRow& b) {
    const auto ga = first_seen.at(a.model), gb = first_seen.at(b.model);
    if (ga != gb) return ga < gb;
    return a.roc_auc > b.roc_auc;
  });
  return MetricsReport(std::move(rows));
}

/// Parses the CSV written by MetricsReport::to_csv.
inline std::vector<MetricsRow> parse_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("model,sampling,", 0) != 0) throw Error("report CSV lacks its header");
  std::vector<MetricsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 7) throw Error("report CSV line " + std::to_string(line_no) + " has " + std::to_string(f.size()) + " fields");
    try {
      rows.push_back({f[0], f[1], std::stod(f[2]), std::stod(f[3]), std::stod(f[4]), std::stod(f[5]), std::stod(f[6])});
    } catch (const std::exception&) {
      throw Error("report CSV line " + std::to_string(line_no) + " has a non-numeric metric");
    }
  }
  return rows;
}

}  // namespace netforest
