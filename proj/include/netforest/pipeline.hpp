#pragma once

// End-to-end experiments: ingest -> impute -> split -> encode -> scale ->
// resample (training rows only) -> fit -> evaluate -> report, with
// provenance tracking of which rows each fitted component saw.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "netforest/archive.hpp"
#include "netforest/cascade.hpp"
#include "netforest/flow.hpp"
#include "netforest/logistic.hpp"
#include "netforest/metrics.hpp"
#include "netforest/parallel.hpp"
#include "netforest/preprocess.hpp"
#include "netforest/resampling.hpp"

namespace netforest {

inline constexpr const char* kToolVersion = "0.1.0";

/// Failure of one pipeline stage; what() reads "<stage>: <cause>".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause) : Error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

template <class F>
auto run_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

/// Defaults: cascade of at most 8 layers with 8 random + 8 completely-random
/// forests, scanning window 2, decision tree max_depth=4 /
/// min_samples_split=10 / ccp_alpha=0.01, logistic regression max_iter=1000
/// with an L2 penalty.
struct PipelineConfig {
  std::string input_path;
  double test_fraction = 0.2;
  double validation_fraction = 0.2;  ///< of the training split, for cascade early stopping
  RandomSeed seed{42};
  ResampleConfig resample{};
  ModelKind model = ModelKind::deep_forest;
  TreeParams tree = TreeParams::baseline();
  double l2_lambda = 1.0;
  std::size_t logreg_max_iter = 1000;
  CascadeConfig cascade{};
  bool scan = true;
  std::size_t window = 2;
  std::size_t scan_trees = 100;
  std::string out_dir = "out";

  void validate() const {
    if (!(test_fraction > 0 && test_fraction < 1)) throw Error("test fraction must lie in (0, 1)");
    if (!(validation_fraction > 0 && validation_fraction < 1)) throw Error("validation fraction must lie in (0, 1)");
    resample.validate();
    tree.validate();
    cascade.validate();
    if (window < 1) throw Error("scan window must be >= 1");
    if (scan_trees < 1) throw Error("scan trees must be >= 1");
  }

  /// Everything that influences results (paths excluded), key-sorted.
  nlohmann::json to_json() const {
    using nlohmann::json;
    return {{"test_fraction", test_fraction},
            {"validation_fraction", validation_fraction},
            {"seed", seed.value},
            {"sampling",
             {{"strategy", strategy_name(resample.strategy)},
              {"smote_k", resample.smote_k},
              {"enn_k", resample.enn_k},
              {"hybrid_target", resample.hybrid_target}}},
            {"model", model_kind_name(model)},
            {"decision_tree", archive_detail::tree_params_json(tree)},
            {"logreg", {{"l2_lambda", l2_lambda}, {"max_iter", logreg_max_iter}}},
            {"cascade",
             {{"max_layers", cascade.max_layers},
              {"n_cascade_rf", cascade.n_cascade_rf},
              {"trees_per_forest", cascade.trees_per_forest},
              {"cv_folds", cascade.cv_folds},
              {"early_stop_patience", cascade.early_stop_patience},
              {"tree", archive_detail::tree_params_json(cascade.tree)}}},
            {"scan", {{"enabled", scan}, {"window", window}, {"trees", scan_trees}}}};
  }

  std::string digest() const { return config_digest(to_json()); }
};

inline std::string model_display_name(ModelKind k) {
  switch (k) {
    case ModelKind::deep_forest: return "Deep Forest";
    case ModelKind::decision_tree: return "Decision Tree";
    case ModelKind::logreg: return "Logistic Regression";
  }
  return "?";
}

inline std::string sampling_display_name(SamplingStrategy s) {
  switch (s) {
    case SamplingStrategy::none: return "Original";
    case SamplingStrategy::smote: return "SMOTE";
    case SamplingStrategy::hybrid: return "Hybrid Sampling";
    case SamplingStrategy::smoteenn: return "SMOTEENN";
  }
  return "?";
}

/// Origins (row indices in the ingested log, or kSyntheticOrigin) of the
/// rows each stage consumed.
struct ProvenanceTrace {
  std::vector<std::uint64_t> train;
  std::vector<std::uint64_t> test;
  std::vector<std::uint64_t> vocab_fit;
  std::vector<std::uint64_t> scaler_fit;
  std::vector<std::uint64_t> validation;
  std::vector<std::uint64_t> resample_input;
  std::vector<std::uint64_t> model_fit;
  std::vector<std::uint64_t> evaluated;
};

/// Encoded and scaled train/test splits plus the fitted preprocessors.
struct PreparedData {
  Dataset train;
  Dataset test;
  EncoderVocab vocab;
  RobustScaler scaler;
  std::size_t records = 0;
  std::size_t skipped_lines = 0;
  ProvenanceTrace trace;
};

/// Splits raw records before any fitting, so the vocabulary and scaler
/// only ever see training rows.
inline PreparedData prepare_records(std::vector<FlowRecord> records, double test_fraction, RandomSeed seed) {
  for (auto& r : records) r = impute(std::move(r));
  std::vector<ClassLabel> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(r.label);
  const auto part = stratified_partition(labels, test_fraction, derive_seed(seed, {0x5b117}));

  auto gather = [&](const std::vector<std::size_t>& idx) {
    std::vector<FlowRecord> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(records[i]);
    return out;
  };
  const auto train_records = gather(part.train);
  const auto test_records = gather(part.test);
  std::vector<std::uint64_t> train_origins(part.train.begin(), part.train.end());
  std::vector<std::uint64_t> test_origins(part.test.begin(), part.test.end());

  PreparedData out;
  out.records = records.size();
  out.vocab = EncoderVocab::fit(train_records);
  out.trace.vocab_fit = train_origins;
  const Dataset train_raw = encode(train_records, out.vocab, train_origins);
  const Dataset test_raw = encode(test_records, out.vocab, test_origins);
  out.scaler = robust_fit(train_raw);
  out.trace.scaler_fit.assign(train_raw.origins().begin(), train_raw.origins().end());
  out.train = robust_apply(out.scaler, train_raw);
  out.test = robust_apply(out.scaler, test_raw);
  out.trace.train = std::move(train_origins);
  out.trace.test = std::move(test_origins);
  return out;
}

inline ParseResult read_conn_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open input '" + path + "'");
  return parse_conn_log(in);
}

inline PreparedData prepare(const PipelineConfig& cfg) {
  auto parsed = run_stage("ingest", [&] { return read_conn_log(cfg.input_path); });
  const auto skipped = parsed.skipped.size();
  auto data = run_stage("preprocess", [&] { return prepare_records(std::move(parsed.records), cfg.test_fraction, cfg.seed); });
  data.skipped_lines = skipped;
  return data;
}

struct FitOutcome {
  FittedModel model;
  MetricsRow row;
  ProvenanceTrace trace;
};

/// Resamples the training rows, fits the configured model and scores the
/// untouched test rows. For the deep forest a validation split is held out
/// of the training rows before resampling.
inline FitOutcome fit_and_evaluate(const Dataset& train, const Dataset& test, const PipelineConfig& cfg) {
  cfg.validate();
  ResampleConfig rs = cfg.resample;
  rs.seed = derive_seed(cfg.seed, {0x5a3b1e});

  FitOutcome out;
  const Dataset* fit_rows = &train;
  Dataset fit_part, valid_part;
  if (cfg.model == ModelKind::deep_forest) {
    std::tie(fit_part, valid_part) = run_stage("validation-split", [&] {
      return stratified_split(train, cfg.validation_fraction, derive_seed(cfg.seed, {0x7a11d}));
    });
    fit_rows = &fit_part;
    out.trace.validation.assign(valid_part.origins().begin(), valid_part.origins().end());
  }
  out.trace.resample_input.assign(fit_rows->origins().begin(), fit_rows->origins().end());
  const Dataset resampled = run_stage("resample", [&] { return resample(*fit_rows, rs); });
  out.trace.model_fit.assign(resampled.origins().begin(), resampled.origins().end());

  run_stage("fit", [&] {
  switch (cfg.model) {
    case ModelKind::deep_forest: {
      CascadeConfig cc = cfg.cascade;
      cc.seed = derive_seed(cfg.seed, {0xdf});
      std::optional<ScanParams> scan;
      if (cfg.scan) scan = ScanParams{cfg.window, 1, cfg.scan_trees, cc.tree};
      out.model = deep_forest_fit(resampled, valid_part, cc, scan);
      break;
    }
    case ModelKind::decision_tree:
      out.model = fit_tree(resampled, cfg.tree, derive_seed(cfg.seed, {0xd7}));
      break;
    case ModelKind::logreg:
      out.model = logreg_fit(resampled, cfg.l2_lambda, cfg.logreg_max_iter, cfg.seed);
      break;
  }
  });

  run_stage("evaluate", [&] {
    std::vector<double> scores(test.rows());
    parallel_for(test.rows(), [&](std::size_t i) { scores[i] = predict_proba(out.model, test.row(i))[1]; });
    out.trace.evaluated.assign(test.origins().begin(), test.origins().end());
    out.row = make_metrics_row(model_display_name(cfg.model), sampling_display_name(cfg.resample.strategy),
                               test.labels(), scores);
  });
  return out;
}

struct ExperimentResult {
  MetricsRow row;
  ModelArchive archive;
  ProvenanceTrace trace;
};

inline ExperimentResult run_prepared(const PreparedData& data, const PipelineConfig& cfg) {
  auto fit = fit_and_evaluate(data.train, data.test, cfg);
  ExperimentResult result;
  result.row = fit.row;
  result.archive.vocab = data.vocab;
  result.archive.scaler = data.scaler;
  result.archive.model = std::move(fit.model);
  result.archive.meta.seed = cfg.seed;
  result.archive.meta.sampling = strategy_name(cfg.resample.strategy);
  result.archive.meta.config = cfg.to_json();
  result.archive.meta.config_digest = cfg.digest();
  result.archive.meta.metrics = fit.row;
  result.trace = data.trace;
  result.trace.validation = std::move(fit.trace.validation);
  result.trace.resample_input = std::move(fit.trace.resample_input);
  result.trace.model_fit = std::move(fit.trace.model_fit);
  result.trace.evaluated = std::move(fit.trace.evaluated);
  return result;
}

inline ExperimentResult run_experiment(const PipelineConfig& cfg) {
  cfg.validate();
  return run_prepared(prepare(cfg), cfg);
}

/// Cartesian product of models and strategies over one shared split.
/// Experiments run concurrently up to the thread limit; results keep the
/// (model-major) input order.
inline std::vector<ExperimentResult> run_sweep(const PreparedData& data, const PipelineConfig& base,
                                               const std::vector<ModelKind>& models,
                                               const std::vector<SamplingStrategy>& strategies) {
  base.validate();
  std::vector<PipelineConfig> configs;
  for (auto m : models)
    for (auto s : strategies) {
      PipelineConfig c = base;
      c.model = m;
      c.resample.strategy = s;
      configs.push_back(c);
    }
  std::vector<std::optional<ExperimentResult>> results(configs.size());
  parallel_for(configs.size(), [&](std::size_t i) { results[i] = run_prepared(data, configs[i]); });
  std::vector<ExperimentResult> out;
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

inline std::vector<ExperimentResult> run_sweep(const PipelineConfig& base, const std::vector<ModelKind>& models,
                                               const std::vector<SamplingStrategy>& strategies) {
  base.validate();
  return run_sweep(prepare(base), base, models, strategies);
}

inline std::string archive_file_name(ModelKind model, SamplingStrategy strategy) {
  return std::string("model_") + model_kind_name(model) + "_" + strategy_name(strategy) + ".json";
}

inline nlohmann::json run_manifest(const PipelineConfig& cfg, const PreparedData* data,
                                   const std::vector<ExperimentResult>& results) {
  using nlohmann::json;
  json experiments = json::array();
  for (const auto& r : results) {
    experiments.push_back({{"model", model_kind_name(r.archive.kind())},
                           {"sampling", r.archive.meta.sampling},
                           {"config_digest", r.archive.meta.config_digest},
                           {"archive", archive_file_name(r.archive.kind(), parse_strategy(r.archive.meta.sampling))},
                           {"metrics", archive_detail::metrics_row_json(r.row)}});
  }
  json manifest = {{"tool", "netforest"},
                   {"version", kToolVersion},
                   {"archive_format_version", kArchiveFormatVersion},
                   {"seed", cfg.seed.value},
                   {"input", cfg.input_path},
                   {"config", cfg.to_json()},
                   {"config_digest", cfg.digest()},
                   {"experiments", std::move(experiments)}};
  if (data) {
    manifest["records"] = data->records;
    manifest["skipped_lines"] = data->skipped_lines;
    manifest["train_rows"] = data->train.rows();
    manifest["test_rows"] = data->test.rows();
  }
  return manifest;
}

/// Writes report.csv, report.txt, one archive per experiment and
/// manifest.json into the output directory, each file atomically.
inline MetricsReport write_run_outputs(const std::filesystem::path& out_dir, const PipelineConfig& cfg,
                                       const PreparedData* data, const std::vector<ExperimentResult>& results) {
  std::vector<MetricsRow> rows;
  for (const auto& r : results) {
    rows.push_back(r.row);
    save_model(r.archive, out_dir / archive_file_name(r.archive.kind(), parse_strategy(r.archive.meta.sampling)));
  }
  auto report = build_report(std::move(rows));
  write_file_atomic(out_dir / "report.csv", report.to_csv());
  write_file_atomic(out_dir / "report.txt", report.to_text());
  write_file_atomic(out_dir / "manifest.json", run_manifest(cfg, data, results).dump(2) + "\n");
  return report;
}

}  // namespace netforest
