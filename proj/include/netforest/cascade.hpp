#pragma once

// Cascade forest: layers of random and completely-random forests whose
// class vectors are appended to the base features to form the next layer's
// input. Training-row class vectors are cross-fitted; growth stops on
// validation accuracy.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "netforest/core.hpp"
#include "netforest/forest.hpp"
#include "netforest/parallel.hpp"
#include "netforest/scanning.hpp"

namespace netforest {

struct CascadeConfig {
  std::size_t max_layers = 8;
  std::size_t n_cascade_rf = 8;  ///< random forests per layer; as many completely-random ones are added
  std::size_t trees_per_forest = 100;
  std::size_t cv_folds = 3;
  std::size_t early_stop_patience = 1;
  TreeParams tree{};
  RandomSeed seed{};

  void validate() const {
    if (max_layers < 1) throw Error("cascade max_layers must be >= 1");
    if (n_cascade_rf < 1) throw Error("cascade n_cascade_rf must be >= 1");
    if (trees_per_forest < 1) throw Error("cascade trees_per_forest must be >= 1");
    if (cv_folds < 2) throw Error("cascade cv_folds must be >= 2");
    if (early_stop_patience < 1) throw Error("cascade early_stop_patience must be >= 1");
    tree.validate();
  }

  std::size_t forests_per_layer() const { return 2 * n_cascade_rf; }

  /// Reduced profile for desk-scale runs: 30 trees, 2 forests of each kind,
  /// at most 3 layers.
  static CascadeConfig desk_profile() {
    CascadeConfig c;
    c.max_layers = 3;
    c.n_cascade_rf = 2;
    c.trees_per_forest = 30;
    return c;
  }
};

/// Early-stopping rule. Growth stops once accuracy has failed to improve
/// on the best so far for `patience` consecutive layers, or at the cap.
class LayerGrowthMonitor {
 public:
  LayerGrowthMonitor(std::size_t max_layers, std::size_t patience) : max_layers_(max_layers), patience_(patience) {}

  /// Records the next layer's validation accuracy; false means stop growing.
  bool record(double accuracy) {
    history_.push_back(accuracy);
    if (best_layer_ == 0 || accuracy > history_[best_layer_ - 1]) {
      best_layer_ = history_.size();
      stale_ = 0;
    } else {
      ++stale_;
    }
    return stale_ < patience_ && history_.size() < max_layers_;
  }

  /// 1-based; earliest layer on ties. 0 before any record.
  std::size_t best_layer() const { return best_layer_; }
  const std::vector<double>& history() const { return history_; }

 private:
  std::size_t max_layers_;
  std::size_t patience_;
  std::size_t best_layer_ = 0;
  std::size_t stale_ = 0;
  std::vector<double> history_;
};

struct CascadeLayer {
  std::vector<Forest> forests;
  std::size_t input_dim = 0;

  friend bool operator==(const CascadeLayer&, const CascadeLayer&) = default;
};

inline ForestMode cascade_forest_mode(std::size_t forest_index, std::size_t n_cascade_rf) {
  return forest_index < n_cascade_rf ? ForestMode::random : ForestMode::completely_random;
}

/// Seed of forest `forest` in layer `layer` trained on fold-complement
/// `fold`; fold == cv_folds denotes the refit on all rows.
inline RandomSeed cascade_forest_seed(RandomSeed root, std::size_t layer, std::size_t forest, std::size_t fold) {
  return derive_seed(root, {0xca5c, layer, forest, fold});
}

inline Proba mean_proba(const std::vector<Forest>& forests, std::span<const double> row) {
  Proba sum{};
  for (const auto& f : forests) {
    const auto p = f.predict_proba(row);
    sum[0] += p[0];
    sum[1] += p[1];
  }
  const double n = static_cast<double>(forests.size());
  return {sum[0] / n, sum[1] / n};
}

/// [base ‖ class vector of forest 1 ‖ ... ‖ forest 2n], each forest applied
/// to `layer_input`.
inline std::vector<double> layer_features(const CascadeLayer& layer, std::span<const double> layer_input,
                                          std::span<const double> base) {
  if (layer_input.size() != layer.input_dim)
    throw Error("cascade layer expects input of length " + std::to_string(layer.input_dim) + ", got " +
                std::to_string(layer_input.size()));
  std::vector<double> out(base.begin(), base.end());
  out.reserve(base.size() + layer.forests.size() * kNumClasses);
  for (const auto& f : layer.forests) {
    const auto p = f.predict_proba(layer_input);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

class CascadeModel {
 public:
  CascadeModel() = default;
  CascadeModel(std::size_t base_dim, std::vector<CascadeLayer> layers, std::size_t best_layer,
               std::vector<double> validation_accuracy, std::optional<Scanner> scanner = std::nullopt)
      : base_dim_(base_dim),
        layers_(std::move(layers)),
        best_layer_(best_layer),
        validation_accuracy_(std::move(validation_accuracy)),
        scanner_(std::move(scanner)) {
    if (best_layer_ > layers_.size()) throw Error("cascade best_layer exceeds layer count");
    if (!layers_.empty() && best_layer_ == 0) throw Error("cascade best_layer must be >= 1");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const std::size_t expected = l == 0 ? base_dim_ : base_dim_ + layers_[l - 1].forests.size() * kNumClasses;
      if (layers_[l].input_dim != expected) throw Error("cascade layer " + std::to_string(l + 1) + " has wrong input dim");
      if (layers_[l].forests.empty()) throw Error("cascade layer without forests");
      for (const auto& f : layers_[l].forests)
        if (f.n_features() != expected) throw Error("cascade forest dimension mismatch");
    }
    if (scanner_ && scanner_->output_dim() != base_dim_) throw Error("scanner output does not match cascade base dim");
  }

  std::size_t base_dim() const { return base_dim_; }
  /// Dimension of the raw rows accepted by predict_proba.
  std::size_t n_features() const { return scanner_ ? scanner_->input_dim() : base_dim_; }
  const std::vector<CascadeLayer>& layers() const { return layers_; }
  std::size_t best_layer() const { return best_layer_; }
  const std::vector<double>& validation_accuracy() const { return validation_accuracy_; }
  const std::optional<Scanner>& scanner() const { return scanner_; }

  std::vector<double> base_features(std::span<const double> raw) const {
    if (raw.size() != n_features())
      throw Error("cascade expects " + std::to_string(n_features()) + " features, got " + std::to_string(raw.size()));
    if (scanner_) return scanner_->transform(raw);
    return {raw.begin(), raw.end()};
  }

  /// Input of layer `layers + 1`: base features propagated through the
  /// first `layers` layers. Zero layers is the identity.
  std::vector<double> augmented_input(std::span<const double> base, std::size_t layers) const {
    if (base.size() != base_dim_) throw Error("cascade base dimension mismatch");
    if (layers > layers_.size()) throw Error("cascade has fewer layers than requested");
    std::vector<double> input(base.begin(), base.end());
    for (std::size_t l = 0; l < layers; ++l) input = layer_features(layers_[l], input, base);
    return input;
  }

  /// Mean class vector of the best layer's forests.
  Proba predict_proba(std::span<const double> raw) const {
    if (best_layer_ == 0) throw Error("cascade model has no layers");
    const auto base = base_features(raw);
    const auto input = augmented_input(base, best_layer_ - 1);
    return mean_proba(layers_[best_layer_ - 1].forests, input);
  }

  friend bool operator==(const CascadeModel&, const CascadeModel&) = default;

 private:
  std::size_t base_dim_ = 0;
  std::vector<CascadeLayer> layers_;
  std::size_t best_layer_ = 0;
  std::vector<double> validation_accuracy_;
  std::optional<Scanner> scanner_;
};

/// Bookkeeping of one forest's cross-fitting in one layer.
struct CrossFitRecord {
  std::size_t layer = 0;  ///< 0-based
  std::size_t forest = 0;
  std::vector<std::size_t> fold_of_row;
  std::vector<std::vector<std::size_t>> fold_train_rows;
  std::vector<Proba> out_of_fold;  ///< class vector of every training row
};

struct CascadeFitTrace {
  std::vector<CrossFitRecord> cross_fits;
  std::size_t layers_grown = 0;
};

namespace detail {
inline Dataset append_columns(const Dataset& base, const std::vector<std::vector<Proba>>& vectors,
                              std::size_t layer) {
  const std::size_t d = base.cols() + vectors.size() * kNumClasses;
  std::vector<double> values;
  values.reserve(base.rows() * d);
  for (std::size_t i = 0; i < base.rows(); ++i) {
    auto r = base.row(i);
    values.insert(values.end(), r.begin(), r.end());
    for (const auto& v : vectors) values.insert(values.end(), v[i].begin(), v[i].end());
  }
  auto names = base.feature_names();
  for (std::size_t f = 0; f < vectors.size(); ++f)
    for (std::size_t c = 0; c < kNumClasses; ++c)
      names.push_back("layer" + std::to_string(layer + 1) + "_forest" + std::to_string(f) + "_p" + std::to_string(c));
  return base.with_features(std::move(values), std::move(names));
}
}  // namespace detail

inline CascadeModel cascade_fit(const Dataset& train, const Dataset& valid, const CascadeConfig& cfg,
                                CascadeFitTrace* trace = nullptr) {
  cfg.validate();
  if (train.empty()) throw Error("cascade training set is empty");
  if (train.cols() != valid.cols()) throw Error("cascade train/valid dimension mismatch");
  const auto train_counts = class_counts(train);
  if (train_counts[0] == 0 || train_counts[1] == 0) throw Error("cascade training set must contain both classes");
  const auto valid_counts = class_counts(valid);
  if (valid_counts[0] == 0 || valid_counts[1] == 0)
    throw Error("cascade validation set must contain both classes");

  const std::size_t n_forests = cfg.forests_per_layer();
  const std::size_t folds = cfg.cv_folds;
  LayerGrowthMonitor monitor(cfg.max_layers, cfg.early_stop_patience);
  std::vector<CascadeLayer> layers;
  Dataset train_input = train;
  Dataset valid_input = valid;

  for (std::size_t layer = 0;; ++layer) {
    const auto fold_of_row = stratified_folds(train.labels(), folds, derive_seed(cfg.seed, {0xf01d, layer}));
    std::vector<std::vector<std::size_t>> fold_train(folds), fold_test(folds);
    for (std::size_t i = 0; i < train.rows(); ++i)
      for (std::size_t k = 0; k < folds; ++k) (fold_of_row[i] == k ? fold_test[k] : fold_train[k]).push_back(i);

    std::vector<std::vector<Proba>> oof(n_forests, std::vector<Proba>(train.rows()));
    CascadeLayer current;
    current.input_dim = train_input.cols();
    current.forests.resize(n_forests);
    parallel_for(n_forests * (folds + 1), [&](std::size_t unit) {
      const std::size_t f = unit / (folds + 1), k = unit % (folds + 1);
      const ForestMode mode = cascade_forest_mode(f, cfg.n_cascade_rf);
      const RandomSeed seed = cascade_forest_seed(cfg.seed, layer, f, k);
      if (k == folds) {
        current.forests[f] = forest_fit(train_input, mode, cfg.trees_per_forest, cfg.tree, seed);
        return;
      }
      if (fold_train[k].empty()) throw Error("cascade fold " + std::to_string(k) + " has no training rows");
      const Forest fold_model =
          forest_fit(train_input.select(fold_train[k]), mode, cfg.trees_per_forest, cfg.tree, seed);
      for (std::size_t i : fold_test[k]) oof[f][i] = fold_model.predict_proba(train_input.row(i));
    });

    std::vector<std::vector<Proba>> valid_vectors(n_forests, std::vector<Proba>(valid.rows()));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < valid.rows(); ++i) {
      Proba sum{};
      for (std::size_t f = 0; f < n_forests; ++f) {
        const auto p = current.forests[f].predict_proba(valid_input.row(i));
        valid_vectors[f][i] = p;
        sum[0] += p[0];
        sum[1] += p[1];
      }
      correct += argmax(sum) == valid.label(i);
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(valid.rows());

    if (trace) {
      for (std::size_t f = 0; f < n_forests; ++f)
        trace->cross_fits.push_back({layer, f, fold_of_row, fold_train, oof[f]});
    }
    layers.push_back(std::move(current));
    if (!monitor.record(acc)) break;
    train_input = detail::append_columns(train, oof, layer);
    valid_input = detail::append_columns(valid, valid_vectors, layer);
  }

  if (trace) trace->layers_grown = layers.size();
  layers.resize(monitor.best_layer());
  return CascadeModel(train.cols(), std::move(layers), monitor.best_layer(), monitor.history());
}

/// Fits a scanner on `train`, re-represents both sets through it and grows
/// the cascade on the scanned features.
inline CascadeModel deep_forest_fit(const Dataset& train, const Dataset& valid, const CascadeConfig& cfg,
                                    const std::optional<ScanParams>& scan, CascadeFitTrace* trace = nullptr) {
  if (!scan) return cascade_fit(train, valid, cfg, trace);
  Scanner scanner = scan_fit(train, *scan, derive_seed(cfg.seed, {0x5ca9}));
  CascadeModel cascade = cascade_fit(scanner.transform(train), scanner.transform(valid), cfg, trace);
  return CascadeModel(cascade.base_dim(), cascade.layers(), cascade.best_layer(), cascade.validation_accuracy(),
                      std::move(scanner));
}

}  // namespace netforest
