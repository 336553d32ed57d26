#pragma once

// Multi-grained scanning over tabular rows: a window slides along the
// feature vector, window slices train one random and one completely-random
// forest, and their class vectors for every window are concatenated.

#include <string>
#include <vector>

#include "netforest/core.hpp"
#include "netforest/forest.hpp"

namespace netforest {

struct ScanParams {
  std::size_t window = 2;
  std::size_t stride = 1;
  std::size_t n_trees = 30;
  TreeParams tree{};
};

inline std::size_t window_count(std::size_t dim, std::size_t window, std::size_t stride) {
  if (window < 1 || stride < 1) throw Error("scan window and stride must be >= 1");
  if (window > dim)
    throw Error("scan window " + std::to_string(window) + " exceeds feature dimension " + std::to_string(dim));
  return (dim - window) / stride + 1;
}

/// Every window slice of every row, labeled with its source row's label;
/// row-major (all slices of row 0 first).
inline Dataset window_slices(const Dataset& ds, std::size_t window, std::size_t stride) {
  const std::size_t n_windows = window_count(ds.cols(), window, stride);
  std::vector<double> values;
  values.reserve(ds.rows() * n_windows * window);
  std::vector<ClassLabel> labels;
  std::vector<std::uint64_t> origins;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    auto r = ds.row(i);
    for (std::size_t w = 0; w < n_windows; ++w) {
      values.insert(values.end(), r.begin() + static_cast<std::ptrdiff_t>(w * stride),
                    r.begin() + static_cast<std::ptrdiff_t>(w * stride + window));
      labels.push_back(ds.label(i));
      origins.push_back(ds.origin(i));
    }
  }
  std::vector<std::string> names;
  for (std::size_t k = 0; k < window; ++k) names.push_back("slice_" + std::to_string(k));
  return Dataset(std::move(values), std::move(labels), std::move(names), std::move(origins));
}

class Scanner {
 public:
  Scanner() = default;
  Scanner(std::size_t input_dim, std::size_t window, std::size_t stride, Forest random, Forest completely_random)
      : input_dim_(input_dim),
        window_(window),
        stride_(stride),
        n_windows_(window_count(input_dim, window, stride)),
        random_(std::move(random)),
        completely_random_(std::move(completely_random)) {
    if (random_.n_features() != window || completely_random_.n_features() != window)
      throw Error("scanner forests must be trained on window-sized slices");
  }

  std::size_t input_dim() const { return input_dim_; }
  std::size_t window() const { return window_; }
  std::size_t stride() const { return stride_; }
  std::size_t n_windows() const { return n_windows_; }
  std::size_t output_dim() const { return n_windows_ * 2 * kNumClasses; }
  const Forest& random_forest() const { return random_; }
  const Forest& completely_random_forest() const { return completely_random_; }

  /// Window position major, forest (random, completely random) minor,
  /// class index innermost.
  std::vector<double> transform(std::span<const double> row) const {
    if (row.size() != input_dim_)
      throw Error("scanner expects rows of length " + std::to_string(input_dim_) + ", got " +
                  std::to_string(row.size()));
    std::vector<double> out;
    out.reserve(output_dim());
    for (std::size_t w = 0; w < n_windows_; ++w) {
      auto slice = row.subspan(w * stride_, window_);
      for (const Forest* f : {&random_, &completely_random_}) {
        const auto p = f->predict_proba(slice);
        out.insert(out.end(), p.begin(), p.end());
      }
    }
    return out;
  }

  std::vector<std::string> output_names() const {
    std::vector<std::string> names;
    names.reserve(output_dim());
    for (std::size_t w = 0; w < n_windows_; ++w)
      for (const char* f : {"rf", "crf"})
        for (std::size_t c = 0; c < kNumClasses; ++c)
          names.push_back("scan" + std::to_string(w) + "_" + f + "_p" + std::to_string(c));
    return names;
  }

  Dataset transform(const Dataset& ds) const {
    std::vector<double> values(ds.rows() * output_dim());
    parallel_for(ds.rows(), [&](std::size_t i) {
      auto t = transform(ds.row(i));
      std::copy(t.begin(), t.end(), values.begin() + static_cast<std::ptrdiff_t>(i * output_dim()));
    });
    return ds.with_features(std::move(values), output_names());
  }

  friend bool operator==(const Scanner&, const Scanner&) = default;

 private:
  std::size_t input_dim_ = 0;
  std::size_t window_ = 0;
  std::size_t stride_ = 1;
  std::size_t n_windows_ = 0;
  Forest random_;
  Forest completely_random_;
};

inline Scanner scan_fit(const Dataset& ds, const ScanParams& params, RandomSeed seed) {
  if (ds.empty()) throw Error("cannot fit a scanner on an empty dataset");
  const Dataset slices = window_slices(ds, params.window, params.stride);
  Forest rf = forest_fit(slices, ForestMode::random, params.n_trees, params.tree, derive_seed(seed, {0}));
  Forest crf = forest_fit(slices, ForestMode::completely_random, params.n_trees, params.tree, derive_seed(seed, {1}));
  return Scanner(ds.cols(), params.window, params.stride, std::move(rf), std::move(crf));
}

}  // namespace netforest
