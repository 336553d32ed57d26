// netforest: command-line front end for the flow-classification pipeline.
//
//   netforest ingest --input conn.log --output features.csv
//   netforest train --input conn.log --model deep-forest --sampling smoteenn
//   netforest sweep --input conn.log --out-dir runs/a
//   netforest evaluate --archive runs/a/model_logreg_none.json --input other.log
//   netforest rank-features --importances xgb=xgb.csv --importances rf=rf.csv
//   netforest report runs/a/report.csv runs/b/report.csv
//
// Every flag may also be given in a key = value file passed with --config;
// flags on the command line win.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "netforest/netforest.hpp"

namespace fs = std::filesystem;
using namespace netforest;

namespace {

struct Options {
  PipelineConfig cfg;
  std::string model = "deep-forest";
  std::string sampling = "none";
  std::uint64_t seed = 42;
  std::string profile = "full";
  std::optional<std::size_t> max_depth_dt;
  unsigned jobs = 0;
};

void apply(Options& o, const CLI::App& app) {
  o.cfg.model = parse_model_kind(o.model);
  o.cfg.resample.strategy = parse_strategy(o.sampling);
  o.cfg.seed = RandomSeed{o.seed};
  o.cfg.resample.seed = o.cfg.seed;
  if (app.count("--dt-max-depth")) o.cfg.tree.max_depth = o.max_depth_dt;
  if (o.profile == "desk") {
    auto desk = CascadeConfig::desk_profile();
    if (!app.count("--max-layers")) o.cfg.cascade.max_layers = desk.max_layers;
    if (!app.count("--cascade-rf")) o.cfg.cascade.n_cascade_rf = desk.n_cascade_rf;
    if (!app.count("--trees")) o.cfg.cascade.trees_per_forest = desk.trees_per_forest;
    if (!app.count("--scan-trees")) o.cfg.scan_trees = desk.trees_per_forest;
  } else if (o.profile != "full") {
    throw Error("unknown profile '" + o.profile + "' (expected full or desk)");
  }
  if (o.jobs > 0) set_thread_count(o.jobs);
  o.cfg.validate();
}

void print_skips(const ParseResult& parsed) {
  for (const auto& s : parsed.skipped) std::cerr << "skipped line " << s.line << ": " << s.reason << '\n';
}

int cmd_ingest(const Options& o, const std::string& output) {
  auto parsed = run_stage("ingest", [&] { return read_conn_log(o.cfg.input_path); });
  print_skips(parsed);
  run_stage("encode", [&] {
    for (auto& r : parsed.records) r = impute(std::move(r));
    const auto vocab = EncoderVocab::fit(parsed.records);
    const Dataset ds = encode(parsed.records, vocab);
    std::ostringstream out;
    write_dataset_csv(out, ds);
    write_file_atomic(output, out.str());
    const auto counts = class_counts(ds.labels());
    std::cout << "wrote " << ds.rows() << " rows (" << counts[0] << " benign, " << counts[1] << " malicious, "
              << parsed.skipped.size() << " lines skipped) to " << output << '\n';
  });
  return 0;
}

int cmd_train(const Options& o) {
  const PreparedData data = prepare(o.cfg);
  auto result = run_prepared(data, o.cfg);
  std::vector<ExperimentResult> results;
  results.push_back(std::move(result));
  const auto report = run_stage("write", [&] { return write_run_outputs(o.cfg.out_dir, o.cfg, &data, results); });
  std::cout << report.to_text();
  return 0;
}

int cmd_sweep(const Options& o, const std::vector<std::string>& models, const std::vector<std::string>& samplings) {
  std::vector<ModelKind> kinds;
  for (const auto& m : models) kinds.push_back(parse_model_kind(m));
  std::vector<SamplingStrategy> strategies;
  for (const auto& s : samplings) strategies.push_back(parse_strategy(s));
  const PreparedData data = prepare(o.cfg);
  const auto results = run_sweep(data, o.cfg, kinds, strategies);
  const auto report = run_stage("write", [&] { return write_run_outputs(o.cfg.out_dir, o.cfg, &data, results); });
  std::cout << report.to_text();
  return 0;
}

int cmd_evaluate(const Options& o, const std::string& archive_path) {
  const auto archive = run_stage("load", [&] { return load_model(archive_path); });
  auto parsed = run_stage("ingest", [&] { return read_conn_log(o.cfg.input_path); });
  print_skips(parsed);
  const auto row = run_stage("evaluate", [&] {
    std::vector<ClassLabel> labels(parsed.records.size());
    std::vector<double> scores(parsed.records.size());
    parallel_for(parsed.records.size(), [&](std::size_t i) {
      labels[i] = parsed.records[i].label;
      scores[i] = archive.predict_flow(parsed.records[i])[1];
    });
    return make_metrics_row(model_display_name(archive.kind()),
                            sampling_display_name(parse_strategy(archive.meta.sampling)), labels, scores);
  });
  const auto report = build_report({row});
  run_stage("write", [&] {
    write_file_atomic(fs::path(o.cfg.out_dir) / "report.csv", report.to_csv());
    write_file_atomic(fs::path(o.cfg.out_dir) / "report.txt", report.to_text());
  });
  std::cout << report.to_text();
  return 0;
}

int cmd_rank(const Options& o, const std::vector<std::string>& sources, std::size_t top_k, std::size_t trees) {
  std::vector<ImportanceRanking> rankings;
  for (const auto& spec : sources) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw Error("--importances expects method=path, got '" + spec + "'");
    const std::string method = spec.substr(0, eq), path = spec.substr(eq + 1);
    std::ifstream in(path);
    if (!in) throw Error("cannot open importance file '" + path + "'");
    rankings.push_back(rank_importances(read_importances_csv(in), method));
  }
  if (!o.cfg.input_path.empty()) {
    const PreparedData data = prepare(o.cfg);
    run_stage("importance", [&] {
      const Forest forest = forest_fit(data.train, ForestMode::random, trees, TreeParams{},
                                       derive_seed(o.cfg.seed, {0x1a4}));
      const auto& names = data.train.feature_names();
      rankings.push_back(rank_importances(name_importances(names, impurity_importance(forest)), "impurity"));
      rankings.push_back(rank_importances(
          name_importances(names, permutation_importance(forest, data.test, derive_seed(o.cfg.seed, {0x9e7}))),
          "permutation"));
    });
  }
  const auto fused = run_stage("fuse", [&] { return fuse_ranks(rankings, ranking_universe(rankings)); });
  run_stage("write", [&] { write_file_atomic(fs::path(o.cfg.out_dir) / "feature_ranking.csv", fused.to_csv()); });
  const std::size_t k = top_k ? top_k : fused.entries.size();
  for (const auto& f : select_top_k(fused, k)) std::cout << f << '\n';
  return 0;
}

int cmd_report(const Options& o, const std::vector<std::string>& inputs) {
  std::vector<MetricsRow> rows;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open report '" + path + "'");
    auto part = parse_report_csv(in);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  const auto report = build_report(std::move(rows));
  write_file_atomic(fs::path(o.cfg.out_dir) / "report.csv", report.to_csv());
  write_file_atomic(fs::path(o.cfg.out_dir) / "report.txt", report.to_text());
  std::cout << report.to_text();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Malicious network-flow detection with deep forests under class imbalance", "netforest"};
  app.set_version_flag("--version", kToolVersion);
  app.set_config("--config", "", "key = value file supplying any of the flags below");
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  auto& c = o.cfg;
  app.add_option("--input", c.input_path, "Zeek conn.log (IoT-23 labelled)")->check(CLI::ExistingFile);
  app.add_option("--out-dir", c.out_dir, "Directory for reports, archives and the manifest")->capture_default_str();
  app.add_option("--model", o.model, "deep-forest | decision-tree | logreg")->capture_default_str();
  app.add_option("--sampling", o.sampling, "none | smote | hybrid | smoteenn")->capture_default_str();
  app.add_option("--seed", o.seed, "Root random seed")->capture_default_str();
  app.add_option("--test-fraction", c.test_fraction, "Stratified test share")->capture_default_str();
  app.add_option("--validation-fraction", c.validation_fraction, "Cascade validation share of the training split")
      ->capture_default_str();
  app.add_flag("--scan,!--no-scan", c.scan, "Multi-grained scanning before the cascade")->capture_default_str();
  app.add_option("--window", c.window, "Scanning window width")->capture_default_str();
  app.add_option("--scan-trees", c.scan_trees, "Trees per scanning forest")->capture_default_str();
  app.add_option("--max-layers", c.cascade.max_layers, "Cascade layer cap")->capture_default_str();
  app.add_option("--cascade-rf", c.cascade.n_cascade_rf, "Forests of each kind per cascade layer")
      ->capture_default_str();
  app.add_option("--trees", c.cascade.trees_per_forest, "Trees per cascade forest")->capture_default_str();
  app.add_option("--cv-folds", c.cascade.cv_folds, "Cross-fitting folds inside the cascade")->capture_default_str();
  app.add_option("--patience", c.cascade.early_stop_patience, "Layers without improvement before stopping")
      ->capture_default_str();
  app.add_option("--profile", o.profile, "full, or desk for 3 layers x 2 forests x 30 trees")->capture_default_str();
  app.add_option("--smote-k", c.resample.smote_k, "SMOTE neighbours")->capture_default_str();
  app.add_option("--enn-k", c.resample.enn_k, "ENN neighbours")->capture_default_str();
  app.add_option("--hybrid-target", c.resample.hybrid_target, "Per-class count for hybrid sampling")
      ->capture_default_str();
  app.add_option("--dt-max-depth", o.max_depth_dt, "Decision tree depth limit");
  app.add_option("--dt-min-samples-split", c.tree.min_samples_split, "Decision tree minimum split size")
      ->capture_default_str();
  app.add_option("--dt-ccp-alpha", c.tree.ccp_alpha, "Decision tree pruning strength")->capture_default_str();
  app.add_option("--l2", c.l2_lambda, "Logistic regression L2 penalty")->capture_default_str();
  app.add_option("--max-iter", c.logreg_max_iter, "Logistic regression iteration cap")->capture_default_str();
  app.add_option("--jobs", o.jobs, "Worker threads (0 = hardware concurrency)");

  auto* ingest = app.add_subcommand("ingest", "Parse a conn.log and write the encoded feature table");
  std::string ingest_out;
  ingest->add_option("--output", ingest_out, "CSV destination")->required();

  auto* train = app.add_subcommand("train", "Fit one model and write its report, archive and manifest");

  auto* sweep = app.add_subcommand("sweep", "Run every model x sampling combination on one shared split");
  std::vector<std::string> sweep_models{"deep-forest", "decision-tree", "logreg"};
  std::vector<std::string> sweep_samplings{"none", "smote", "hybrid", "smoteenn"};
  sweep->add_option("--models", sweep_models, "Models to include")->capture_default_str();
  sweep->add_option("--samplings", sweep_samplings, "Sampling strategies to include")->capture_default_str();

  auto* evaluate = app.add_subcommand("evaluate", "Score a labelled conn.log with a saved model archive");
  std::string archive_path;
  evaluate->add_option("--archive", archive_path, "Model archive")->required()->check(CLI::ExistingFile);

  auto* rank = app.add_subcommand("rank-features", "Fuse feature-importance rankings by mean rank");
  std::vector<std::string> sources;
  std::size_t top_k = 0, rank_trees = 100;
  rank->add_option("--importances", sources, "method=path CSV of feature,importance (repeatable)");
  rank->add_option("--top-k", top_k, "Print only the k best features");
  rank->add_option("--rank-trees", rank_trees, "Trees in the forest used with --input")->capture_default_str();

  auto* report = app.add_subcommand("report", "Merge report.csv files into one ordered report");
  std::vector<std::string> report_inputs;
  report->add_option("reports", report_inputs, "report.csv files")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    apply(o, app);
    const bool needs_input = !(app.got_subcommand(report) || app.got_subcommand(rank));
    if (needs_input && c.input_path.empty()) throw Error("--input is required");
    if (app.got_subcommand(ingest)) return cmd_ingest(o, ingest_out);
    if (app.got_subcommand(train)) return cmd_train(o);
    if (app.got_subcommand(sweep)) return cmd_sweep(o, sweep_models, sweep_samplings);
    if (app.got_subcommand(evaluate)) return cmd_evaluate(o, archive_path);
    if (app.got_subcommand(rank)) return cmd_rank(o, sources, top_k, rank_trees);
    if (app.got_subcommand(report)) return cmd_report(o, report_inputs);
  } catch (const StageError& e) {
    std::cerr << "netforest: stage " << e.stage() << " failed: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "netforest: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
