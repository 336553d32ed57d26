#pragma once

// Class-balance resampling: SMOTE, edited nearest neighbours, SMOTE+ENN and
// hybrid over/under sampling. Distances are Euclidean on the feature matrix
// as given (callers scale first).

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "netforest/core.hpp"
#include "netforest/diagnostics.hpp"
#include "netforest/parallel.hpp"

namespace netforest {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

/// The k nearest rows to `query` among `candidates` (excluding `query`
/// itself), nearest first; equal distances resolve to the lower row index.
inline std::vector<std::size_t> nearest_neighbors(const Dataset& ds, std::size_t query,
                                                  std::span<const std::size_t> candidates, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(candidates.size());
  const auto q = ds.row(query);
  for (std::size_t c : candidates)
    if (c != query) dist.emplace_back(squared_distance(q, ds.row(c)), c);
  k = std::min(k, dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
  return out;
}

enum class SamplingStrategy { none, smote, hybrid, smoteenn };

inline const char* strategy_name(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::none: return "none";
    case SamplingStrategy::smote: return "smote";
    case SamplingStrategy::hybrid: return "hybrid";
    case SamplingStrategy::smoteenn: return "smoteenn";
  }
  return "?";
}

inline SamplingStrategy parse_strategy(std::string_view s) {
  for (auto v : {SamplingStrategy::none, SamplingStrategy::smote, SamplingStrategy::hybrid, SamplingStrategy::smoteenn})
    if (s == strategy_name(v)) return v;
  throw Error("unknown sampling strategy '" + std::string(s) + "' (expected none|smote|hybrid|smoteenn)");
}

struct ResampleConfig {
  SamplingStrategy strategy = SamplingStrategy::none;
  std::size_t smote_k = 5;
  std::size_t enn_k = 3;
  std::size_t hybrid_target = 12000;
  RandomSeed seed{};

  void validate() const {
    if (smote_k < 1) throw Error("smote_k must be >= 1");
    if (enn_k < 1 || enn_k % 2 == 0) throw Error("enn_k must be odd and >= 1");
    if (hybrid_target < 1) throw Error("hybrid_target must be >= 1");
  }
};

/// Interpolation step of SMOTE: x + u (x_nn - x).
inline std::vector<double> smote_interpolate(std::span<const double> x, std::span<const double> x_nn, double u) {
  std::vector<double> s(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) s[j] = x[j] + u * (x_nn[j] - x[j]);
  return s;
}

/// Oversamples each class up to `target[c]` rows. Original rows keep their
/// positions; synthetic rows (origin kSyntheticOrigin) are appended, class 0
/// first. A synthetic row interpolates a uniformly chosen row of the class
/// toward one of its k nearest same-class neighbours.
template <UniformSource Source>
Dataset smote(const Dataset& ds, const ClassCounts& target, std::size_t k, Source& draws) {
  if (k < 1) throw Error("smote k must be >= 1");
  const auto counts = class_counts(ds);
  std::vector<double> values(ds.values().begin(), ds.values().end());
  std::vector<ClassLabel> labels(ds.labels().begin(), ds.labels().end());
  std::vector<std::uint64_t> origins(ds.origins().begin(), ds.origins().end());

  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto label = static_cast<ClassLabel>(c);
    if (target[c] < counts[c])
      throw Error(std::string("smote target for class ") + label_name(label) + " is below its current count");
    const std::size_t needed = target[c] - counts[c];
    if (needed == 0) continue;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < ds.rows(); ++i)
      if (ds.label(i) == label) members.push_back(i);
    if (members.size() < 2)
      throw Error(std::string("smote needs at least 2 rows of class ") + label_name(label) + ", found " +
                  std::to_string(members.size()));
    std::size_t k_eff = k;
    if (k_eff > members.size() - 1) {
      k_eff = members.size() - 1;
      warn("smote k=" + std::to_string(k) + " exceeds class " + label_name(label) + " size - 1; using k=" +
           std::to_string(k_eff));
    }
    std::vector<std::vector<std::size_t>> neighbors(members.size());
    parallel_for(members.size(), [&](std::size_t m) {
      neighbors[m] = nearest_neighbors(ds, members[m], members, k_eff);
    });
    for (std::size_t s = 0; s < needed; ++s) {
      const std::size_t m = draws.below(members.size());
      const std::size_t nn = neighbors[m][draws.below(k_eff)];
      const double u = draws.uniform();
      auto row = smote_interpolate(ds.row(members[m]), ds.row(nn), u);
      values.insert(values.end(), row.begin(), row.end());
      labels.push_back(label);
      origins.push_back(kSyntheticOrigin);
    }
  }
  return Dataset(std::move(values), std::move(labels), ds.feature_names(), std::move(origins));
}

inline Dataset smote(const Dataset& ds, const ClassCounts& target, std::size_t k, RandomSeed seed) {
  Rng rng(derive_seed(seed, {0x5307e}));
  return smote(ds, target, k, rng);
}

/// Balances both classes to the larger class count.
inline Dataset smote_balance(const Dataset& ds, std::size_t k, RandomSeed seed) {
  const auto counts = class_counts(ds);
  const std::size_t top = std::max(counts[0], counts[1]);
  return smote(ds, ClassCounts{top, top}, k, seed);
}

/// Rows whose label disagrees with the strict majority of their k nearest
/// neighbours (self excluded). All votes use the input dataset.
inline std::vector<bool> enn_flags(const Dataset& ds, std::size_t k) {
  std::vector<bool> flagged(ds.rows(), false);
  if (ds.rows() < 2 || k == 0) return flagged;
  std::vector<std::size_t> all(ds.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<char> out(ds.rows(), 0);
  parallel_for(ds.rows(), [&](std::size_t i) {
    const auto nn = nearest_neighbors(ds, i, all, k);
    std::size_t disagree = 0;
    for (std::size_t j : nn) disagree += ds.label(j) != ds.label(i);
    out[i] = 2 * disagree > nn.size();
  });
  for (std::size_t i = 0; i < out.size(); ++i) flagged[i] = out[i] != 0;
  return flagged;
}

inline Dataset enn_filter(const Dataset& ds, std::size_t k) {
  if (k >= ds.rows() && ds.rows() > 0)
    warn("enn k=" + std::to_string(k) + " is not below the row count " + std::to_string(ds.rows()));
  const auto flagged = enn_flags(ds, k);
  std::vector<std::size_t> keep;
  keep.reserve(ds.rows());
  for (std::size_t i = 0; i < ds.rows(); ++i)
    if (!flagged[i]) keep.push_back(i);
  return ds.select(keep);
}

inline Dataset smote_enn(const Dataset& ds, const ResampleConfig& cfg) {
  cfg.validate();
  return enn_filter(smote_balance(ds, cfg.smote_k, cfg.seed), cfg.enn_k);
}

/// The smaller class is SMOTE'd up to the target and the larger class is
/// undersampled without replacement down to it; each step is skipped when
/// its class is already on the right side of the target. Equal counts
/// treat Malicious as the minority.
inline Dataset hybrid_sample(const Dataset& ds, const ResampleConfig& cfg) {
  cfg.validate();
  const auto counts = class_counts(ds);
  const std::size_t minority = counts[1] <= counts[0] ? 1 : 0;
  const std::size_t majority = 1 - minority;
  const std::size_t target = cfg.hybrid_target;

  std::vector<std::size_t> keep;
  keep.reserve(ds.rows());
  std::vector<std::size_t> major_rows;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if (code(ds.label(i)) == majority)
      major_rows.push_back(i);
    else
      keep.push_back(i);
  }
  if (major_rows.size() > target) {
    Rng rng(derive_seed(cfg.seed, {0x0d5a}));
    for (std::size_t i = 0; i < target; ++i)
      std::swap(major_rows[i], major_rows[i + rng.below(major_rows.size() - i)]);
    major_rows.resize(target);
  }
  keep.insert(keep.end(), major_rows.begin(), major_rows.end());
  std::sort(keep.begin(), keep.end());
  Dataset reduced = ds.select(keep);

  if (counts[minority] >= target) return reduced;
  ClassCounts goal = class_counts(reduced);
  goal[minority] = target;
  return smote(reduced, goal, cfg.smote_k, cfg.seed);
}

inline Dataset resample(const Dataset& ds, const ResampleConfig& cfg) {
  cfg.validate();
  switch (cfg.strategy) {
    case SamplingStrategy::none: return ds;
    case SamplingStrategy::smote: return smote_balance(ds, cfg.smote_k, cfg.seed);
    case SamplingStrategy::hybrid: return hybrid_sample(ds, cfg);
    case SamplingStrategy::smoteenn: return smote_enn(ds, cfg);
  }
  throw Error("unhandled sampling strategy");
}

}  // namespace netforest
