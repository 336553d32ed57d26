#pragma once

// Shared fixtures and brute-force oracles for the unit and acceptance tests.
// The oracles deliberately avoid the library's algorithms: they enumerate.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "netforest/netforest.hpp"

namespace nf_test {

using namespace netforest;

inline std::vector<std::string> names(std::size_t d, const std::string& prefix = "f") {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < d; ++j) out.push_back(prefix + std::to_string(j));
  return out;
}

inline Dataset make_dataset(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels) {
  std::vector<double> v;
  std::vector<ClassLabel> l;
  for (const auto& r : rows) v.insert(v.end(), r.begin(), r.end());
  for (int c : labels) l.push_back(label_from_code(c));
  return Dataset(std::move(v), std::move(l), names(rows.empty() ? 1 : rows.front().size()));
}

/// Two Gaussian clusters in d dimensions; class c is centred at c * shift
/// on every axis.
inline Dataset gaussian_clusters(std::size_t n_benign, std::size_t n_malicious, std::size_t d, double shift,
                                 std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> v;
  std::vector<ClassLabel> l;
  for (std::size_t i = 0; i < n_benign + n_malicious; ++i) {
    const bool bad = i >= n_benign;
    for (std::size_t j = 0; j < d; ++j) v.push_back(noise(gen) + (bad ? shift : 0.0));
    l.push_back(bad ? ClassLabel::Malicious : ClassLabel::Benign);
  }
  return Dataset(std::move(v), std::move(l), names(d));
}

/// Captures warnings for the lifetime of the object.
class WarningCapture {
 public:
  WarningCapture() {
    previous_ = set_warning_handler([this](const std::string& m) { messages.push_back(m); });
  }
  ~WarningCapture() { set_warning_handler(previous_); }
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;

  std::vector<std::string> messages;

 private:
  WarningHandler previous_;
};

/// Replays fixed draws; `below` returns the scripted index modulo n.
struct ScriptedDraws {
  std::vector<std::uint64_t> indices;
  std::vector<double> uniforms;
  std::size_t next_index = 0, next_uniform = 0;

  std::uint64_t below(std::uint64_t n) { return indices.at(next_index++ % indices.size()) % n; }
  double uniform() { return uniforms.at(next_uniform++ % uniforms.size()); }
};

// ---------------------------------------------------------------- oracles

struct BruteMetrics {
  double accuracy, precision, recall, f1;
};

inline BruteMetrics brute_metrics(std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
  BruteMetrics m{};
  m.accuracy = double(tp + tn) / double(tp + tn + fp + fn);
  m.precision = tp + fp ? double(tp) / double(tp + fp) : 0.0;
  m.recall = tp + fn ? double(tp) / double(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * (m.precision * m.recall) / (m.precision + m.recall) : 0.0;
  return m;
}

/// (#concordant + 0.5 #tied) / (P N) by enumerating every pair.
inline double brute_auc(const std::vector<ClassLabel>& labels, const std::vector<double>& scores) {
  double wins2 = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != ClassLabel::Malicious) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j] != ClassLabel::Benign) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins2 += 2;
      else if (scores[i] == scores[j]) wins2 += 1;
    }
  }
  return wins2 / 2 / double(pairs);
}

/// Full sort of all other rows by (distance, index), then majority vote.
inline std::vector<bool> brute_enn(const Dataset& ds, std::size_t k) {
  std::vector<bool> flagged(ds.rows(), false);
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t j = 0; j < ds.rows(); ++j) {
      if (j == i) continue;
      double s = 0;
      for (std::size_t c = 0; c < ds.cols(); ++c) s += (ds.at(i, c) - ds.at(j, c)) * (ds.at(i, c) - ds.at(j, c));
      d.emplace_back(s, j);
    }
    std::sort(d.begin(), d.end());
    const std::size_t kk = std::min(k, d.size());
    std::size_t same = 0;
    for (std::size_t t = 0; t < kk; ++t) same += ds.label(d[t].second) == ds.label(i);
    flagged[i] = kk - same > same;
  }
  return flagged;
}

/// A pruned subtree is the set of internal nodes kept as splits.
struct PrunedSubtree {
  std::vector<bool> kept_split;
  double risk = 0;
  std::size_t leaves = 0;
};

/// Every pruned subtree of `tree` rooted at node 0.
inline std::vector<PrunedSubtree> enumerate_prunings(const DecisionTree& tree) {
  const auto& nodes = tree.nodes();
  const double total = nodes[0].class_weight[0] + nodes[0].class_weight[1];
  auto risk = [&](std::size_t i) {
    const auto& n = nodes[i];
    const double w = n.class_weight[0] + n.class_weight[1];
    const double p0 = n.class_weight[0] / w, p1 = n.class_weight[1] / w;
    return w / total * (1 - p0 * p0 - p1 * p1);
  };
  std::function<std::vector<PrunedSubtree>(std::size_t)> rec = [&](std::size_t i) {
    std::vector<PrunedSubtree> out;
    PrunedSubtree leaf{std::vector<bool>(nodes.size(), false), risk(i), 1};
    out.push_back(leaf);
    if (nodes[i].feature < 0) return out;
    const auto ls = rec(static_cast<std::size_t>(nodes[i].left));
    const auto rs = rec(static_cast<std::size_t>(nodes[i].right));
    for (const auto& a : ls)
      for (const auto& b : rs) {
        PrunedSubtree s{std::vector<bool>(nodes.size(), false), a.risk + b.risk, a.leaves + b.leaves};
        for (std::size_t t = 0; t < nodes.size(); ++t) s.kept_split[t] = a.kept_split[t] || b.kept_split[t];
        s.kept_split[i] = true;
        out.push_back(std::move(s));
      }
    return out;
  };
  return rec(0);
}

/// Internal nodes of the original tree that survive as splits in `pruned`,
/// found by walking both trees in lockstep.
inline std::vector<bool> surviving_splits(const DecisionTree& original, const DecisionTree& pruned) {
  std::vector<bool> kept(original.nodes().size(), false);
  std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t o, std::size_t p) {
    const auto& on = original.nodes()[o];
    const auto& pn = pruned.nodes()[p];
    if (pn.feature < 0) return;
    kept[o] = true;
    walk(static_cast<std::size_t>(on.left), static_cast<std::size_t>(pn.left));
    walk(static_cast<std::size_t>(on.right), static_cast<std::size_t>(pn.right));
  };
  walk(0, 0);
  return kept;
}

/// Random tree of at most `max_nodes` nodes with consistent integer class
/// counts (children partition their parent's counts).
inline DecisionTree random_fixture_tree(std::mt19937_64& gen, std::size_t max_nodes, std::size_t n_features = 3) {
  std::vector<TreeNode> nodes;
  std::uniform_int_distribution<int> count(1, 40);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::function<void(Proba, std::size_t)> grow = [&](Proba w, std::size_t budget) {
    const std::size_t index = nodes.size();
    TreeNode n;
    n.class_weight = w;
    n.impurity = gini(w);
    nodes.push_back(n);
    const bool can_split = budget >= 3 && w[0] + w[1] >= 2 && unit(gen) < 0.8;
    if (!can_split) return;
    // Split each class count between the children, keeping both non-empty.
    Proba l{}, r{};
    do {
      for (int c = 0; c < 2; ++c) {
        std::uniform_int_distribution<int> part(0, static_cast<int>(w[c]));
        l[c] = part(gen);
        r[c] = w[c] - l[c];
      }
    } while (l[0] + l[1] == 0 || r[0] + r[1] == 0);
    nodes[index].feature = static_cast<int>(gen() % n_features);
    nodes[index].threshold = unit(gen);
    const std::size_t rest = budget - 1;
    const std::size_t left_budget = 1 + (rest - 1) / 2;
    nodes[index].left = static_cast<int>(nodes.size());
    grow(l, left_budget);
    nodes[index].right = static_cast<int>(nodes.size());
    grow(r, rest - (nodes.size() - nodes[index].left));
  };
  grow(Proba{double(count(gen)), double(count(gen))}, max_nodes);
  return DecisionTree(std::move(nodes), n_features);
}

/// Central finite-difference gradient of the logistic objective.
inline std::vector<double> numeric_gradient(const Dataset& ds, std::vector<double> w, double b, double lambda,
                                            double h = 1e-6) {
  std::vector<double> g(w.size() + 1);
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double keep = w[j];
    w[j] = keep + h;
    const double up = logistic_objective(ds, w, b, lambda);
    w[j] = keep - h;
    const double down = logistic_objective(ds, w, b, lambda);
    w[j] = keep;
    g[j] = (up - down) / (2 * h);
  }
  g[w.size()] = (logistic_objective(ds, w, b + h, lambda) - logistic_objective(ds, w, b - h, lambda)) / (2 * h);
  return g;
}

/// Reference importances plus unlisted features filling the ranks the
/// table skips (XGBoost 9-12, random forest 9).
inline std::map<std::string, double> reference_xgboost() {
  return {{"protocol", 0.6095},         {"connection_state", 0.2604}, {"response_host_binary", 0.0505},
          {"origin_port", 0.0321},      {"original_ip_bytes", 0.0186}, {"response_port", 0.0149},
          {"hour", 0.0042},             {"service", 0.0032},           {"duration", 0.0028},
          {"orig_pkts", 0.0021},        {"resp_bytes", 0.0015},        {"missed_bytes", 0.0011},
          {"history", 0.0008}};
}

inline std::map<std::string, double> reference_random_forest() {
  return {{"protocol", 0.3464},          {"origin_port", 0.2335},       {"response_port", 0.077},
          {"connection_state", 0.073},   {"response_host_binary", 0.0695}, {"original_ip_bytes", 0.0628},
          {"history", 0.0464},           {"hour", 0.0378},              {"missed_bytes", 0.0201},
          {"service", 0.0127}};
}

/// Expected fused order of the reference importances, top to bottom.
inline std::vector<std::string> reference_final_order() {
  return {"protocol",          "origin_port", "connection_state", "response_host_binary", "response_port",
          "original_ip_bytes", "hour",        "service",          "history"};
}

}  // namespace nf_test
