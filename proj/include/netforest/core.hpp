#pragma once

// Dataset abstraction, class labels, seeded randomness and stratified
// splitting shared by every other part of the library.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace netforest {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ClassLabel : std::uint8_t { Benign = 0, Malicious = 1 };

inline constexpr std::size_t kNumClasses = 2;

/// Class-probability vector indexed by ClassLabel code.
using Proba = std::array<double, kNumClasses>;

using ClassCounts = std::array<std::size_t, kNumClasses>;

constexpr std::size_t code(ClassLabel label) { return static_cast<std::size_t>(label); }

inline ClassLabel label_from_code(long long c) {
  if (c != 0 && c != 1) throw Error("class label code must be 0 or 1, got " + std::to_string(c));
  return static_cast<ClassLabel>(c);
}

inline const char* label_name(ClassLabel label) {
  return label == ClassLabel::Malicious ? "Malicious" : "Benign";
}

/// Ties go to class 0.
inline ClassLabel argmax(const Proba& p) {
  return p[1] > p[0] ? ClassLabel::Malicious : ClassLabel::Benign;
}

struct RandomSeed {
  std::uint64_t value = 0;
  friend bool operator==(RandomSeed, RandomSeed) = default;
};

namespace detail {
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Stable hash of a root seed and a path of unit indices (layer, forest,
/// tree, ...). Every parallel unit draws from its own derived seed, so
/// results do not depend on scheduling.
inline RandomSeed derive_seed(RandomSeed root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = detail::splitmix64(root.value ^ 0x6a09e667f3bcc908ULL);
  for (std::uint64_t p : path) h = detail::splitmix64(h ^ detail::splitmix64(p + 0x3c6ef372fe94f82bULL));
  return RandomSeed{h};
}

/// mt19937_64 with portable mappings to [0,1) and [0,n); the standard
/// distributions are implementation-defined, so they are not used.
class Rng {
 public:
  explicit Rng(RandomSeed seed) : engine_(seed.value) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), n > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

/// Source of uniform draws used by the resamplers; Rng models it and tests
/// can pin the draws.
template <class R>
concept UniformSource = requires(R r, std::uint64_t n) {
  { r.uniform() } -> std::convertible_to<double>;
  { r.below(n) } -> std::convertible_to<std::uint64_t>;
};

/// Origin marker for rows that do not come from the ingested input
/// (e.g. SMOTE output).
inline constexpr std::uint64_t kSyntheticOrigin = std::numeric_limits<std::uint64_t>::max();

/// Immutable numeric feature matrix (row-major) with labels, feature names
/// and per-row provenance. All transformations build new datasets.
class Dataset {
 public:
  Dataset() = default;

  /// `origins` defaults to 0..n-1.
  Dataset(std::vector<double> features, std::vector<ClassLabel> labels,
          std::vector<std::string> feature_names, std::vector<std::uint64_t> origins = {})
      : values_(std::move(features)),
        labels_(std::move(labels)),
        names_(std::move(feature_names)),
        origins_(std::move(origins)) {
    const std::size_t d = names_.size();
    if (d == 0 && !labels_.empty()) throw Error("dataset with rows must have at least one feature");
    if (values_.size() != labels_.size() * d)
      throw Error("dataset shape mismatch: " + std::to_string(values_.size()) + " values for " +
                  std::to_string(labels_.size()) + " rows x " + std::to_string(d) + " features");
    std::unordered_set<std::string> seen;
    for (const auto& n : names_)
      if (!seen.insert(n).second) throw Error("duplicate feature name '" + n + "'");
    for (std::size_t i = 0; i < values_.size(); ++i)
      if (!std::isfinite(values_[i]))
        throw Error("non-finite value at row " + std::to_string(i / d) + ", column '" + names_[i % d] + "'");
    for (auto l : labels_)
      if (code(l) >= kNumClasses) throw Error("invalid class label");
    if (origins_.empty()) {
      origins_.resize(labels_.size());
      for (std::size_t i = 0; i < origins_.size(); ++i) origins_[i] = i;
    } else if (origins_.size() != labels_.size()) {
      throw Error("origin vector length does not match row count");
    }
  }

  std::size_t rows() const { return labels_.size(); }
  std::size_t cols() const { return names_.size(); }
  bool empty() const { return labels_.empty(); }

  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols(), cols()}; }
  double at(std::size_t i, std::size_t j) const { return values_[i * cols() + j]; }
  ClassLabel label(std::size_t i) const { return labels_[i]; }
  std::uint64_t origin(std::size_t i) const { return origins_[i]; }

  std::span<const double> values() const { return values_; }
  std::span<const ClassLabel> labels() const { return labels_; }
  std::span<const std::uint64_t> origins() const { return origins_; }
  const std::vector<std::string>& feature_names() const { return names_; }

  /// Rows at `indices`, in the given order (duplicates allowed).
  Dataset select(std::span<const std::size_t> indices) const {
    std::vector<double> v;
    v.reserve(indices.size() * cols());
    std::vector<ClassLabel> l;
    std::vector<std::uint64_t> o;
    l.reserve(indices.size());
    o.reserve(indices.size());
    for (std::size_t i : indices) {
      if (i >= rows()) throw Error("row index out of range");
      auto r = row(i);
      v.insert(v.end(), r.begin(), r.end());
      l.push_back(labels_[i]);
      o.push_back(origins_[i]);
    }
    return Dataset(std::move(v), std::move(l), names_, std::move(o));
  }

  /// Same rows and labels with a replacement feature matrix.
  Dataset with_features(std::vector<double> features, std::vector<std::string> names) const {
    return Dataset(std::move(features), labels_, std::move(names), origins_);
  }

 private:
  std::vector<double> values_;
  std::vector<ClassLabel> labels_;
  std::vector<std::string> names_;
  std::vector<std::uint64_t> origins_;
};

inline ClassCounts class_counts(std::span<const ClassLabel> labels) {
  ClassCounts counts{};
  for (auto l : labels) ++counts[code(l)];
  return counts;
}

inline ClassCounts class_counts(const Dataset& ds) { return class_counts(ds.labels()); }

struct Partition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per class: test size = round(count * fraction), at least 1 and at most
/// count - 1. Both index lists come back sorted.
inline Partition stratified_partition(std::span<const ClassLabel> labels, double test_fraction,
                                      RandomSeed seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error("test fraction must lie in (0, 1), got " + std::to_string(test_fraction));
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[code(labels[i])].push_back(i);

  Partition part;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& idx = by_class[c];
    if (idx.size() < 2)
      throw Error(std::string("class ") + label_name(static_cast<ClassLabel>(c)) + " has " +
                  std::to_string(idx.size()) + " row(s); stratified split needs at least 2");
    Rng rng(derive_seed(seed, {0x5ee7, c}));
    rng.shuffle(idx);
    auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(idx.size()) * test_fraction));
    n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
    part.test.insert(part.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    part.train.insert(part.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  }
  std::sort(part.train.begin(), part.train.end());
  std::sort(part.test.begin(), part.test.end());
  return part;
}

inline std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double test_fraction, RandomSeed seed) {
  auto part = stratified_partition(ds.labels(), test_fraction, seed);
  return {ds.select(part.train), ds.select(part.test)};
}

/// Stratified k-fold assignment: within each class, shuffled rows are dealt
/// to folds round-robin. Returns the fold index of every row.
inline std::vector<std::size_t> stratified_folds(std::span<const ClassLabel> labels, std::size_t n_folds,
                                                 RandomSeed seed) {
  if (n_folds < 2) throw Error("need at least 2 folds");
  std::vector<std::size_t> fold(labels.size(), 0);
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[code(labels[i])].push_back(i);
  std::size_t offset = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    Rng rng(derive_seed(seed, {0xf01d, c}));
    auto& idx = by_class[c];
    rng.shuffle(idx);
    for (std::size_t k = 0; k < idx.size(); ++k) fold[idx[k]] = (k + offset) % n_folds;
    offset += idx.size();
  }
  return fold;
}

}  // namespace netforest
