#pragma once

// Versioned, self-describing JSON archives of fitted pipelines: encoder
// vocabulary, scaler, model (with scanner), and training metadata.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "netforest/cascade.hpp"
#include "netforest/logistic.hpp"
#include "netforest/metrics.hpp"
#include "netforest/preprocess.hpp"
#include "netforest/tree.hpp"

namespace netforest {

inline constexpr int kArchiveFormatVersion = 1;
inline constexpr const char* kArchiveMagic = "netforest-model";

enum class ModelKind { deep_forest, decision_tree, logreg };

inline const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::deep_forest: return "deep-forest";
    case ModelKind::decision_tree: return "decision-tree";
    case ModelKind::logreg: return "logreg";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  for (auto k : {ModelKind::deep_forest, ModelKind::decision_tree, ModelKind::logreg})
    if (s == model_kind_name(k)) return k;
  throw Error("unknown model '" + std::string(s) + "' (expected deep-forest|decision-tree|logreg)");
}

using FittedModel = std::variant<CascadeModel, DecisionTree, LogisticModel>;

inline ModelKind kind_of(const FittedModel& m) {
  return static_cast<ModelKind>(m.index());
}

inline Proba predict_proba(const FittedModel& model, std::span<const double> row) {
  return std::visit([&](const auto& m) { return m.predict_proba(row); }, model);
}

inline std::size_t input_dim(const FittedModel& model) {
  return std::visit([](const auto& m) { return m.n_features(); }, model);
}

struct TrainingMetadata {
  RandomSeed seed{};
  std::string sampling;
  std::string config_digest;
  nlohmann::json config = nlohmann::json::object();
  std::optional<MetricsRow> metrics;
};

struct ModelArchive {
  int format_version = kArchiveFormatVersion;
  EncoderVocab vocab;
  RobustScaler scaler;
  FittedModel model;
  TrainingMetadata meta;

  ModelKind kind() const { return kind_of(model); }

  /// Imputes, encodes and scales one flow, then scores it.
  Proba predict_flow(const FlowRecord& record) const {
    const FlowRecord r = impute(record);
    const Dataset ds = robust_apply(scaler, encode(std::span(&r, 1), vocab));
    return netforest::predict_proba(model, ds.row(0));
  }
};

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Digest of the canonical (key-sorted, compact) JSON form.
inline std::string config_digest(const nlohmann::json& config) { return fnv1a_hex(config.dump()); }

namespace archive_detail {

using nlohmann::json;

inline json tree_params_json(const TreeParams& p) {
  return {{"max_depth", p.max_depth ? json(*p.max_depth) : json(nullptr)},
          {"min_samples_split", p.min_samples_split},
          {"ccp_alpha", p.ccp_alpha},
          {"split_mode", static_cast<int>(p.split_mode)},
          {"features_per_split", p.features_per_split}};
}

inline TreeParams tree_params_from(const json& j) {
  TreeParams p;
  if (!j.at("max_depth").is_null()) p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_split = j.at("min_samples_split").get<int>();
  p.ccp_alpha = j.at("ccp_alpha").get<double>();
  const int mode = j.at("split_mode").get<int>();
  if (mode < 0 || mode > 2) throw Error("invalid split mode");
  p.split_mode = static_cast<SplitMode>(mode);
  p.features_per_split = j.at("features_per_split").get<int>();
  return p;
}

inline json tree_json(const DecisionTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes())
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.class_weight[0], n.class_weight[1], n.impurity});
  return {{"n_features", t.n_features()}, {"nodes", std::move(nodes)}};
}

inline DecisionTree tree_from(const json& j) {
  std::vector<TreeNode> nodes;
  for (const auto& a : j.at("nodes")) {
    if (!a.is_array() || a.size() != 7) throw Error("malformed tree node");
    TreeNode n;
    n.feature = a[0].get<int>();
    n.threshold = a[1].get<double>();
    n.left = a[2].get<int>();
    n.right = a[3].get<int>();
    n.class_weight = {a[4].get<double>(), a[5].get<double>()};
    n.impurity = a[6].get<double>();
    nodes.push_back(n);
  }
  return DecisionTree(std::move(nodes), j.at("n_features").get<std::size_t>());
}

inline json forest_json(const Forest& f) {
  json trees = json::array();
  for (const auto& t : f.trees()) trees.push_back(tree_json(t));
  return {{"mode", forest_mode_name(f.mode())},
          {"oob_accuracy", f.oob_accuracy() ? json(*f.oob_accuracy()) : json(nullptr)},
          {"trees", std::move(trees)}};
}

inline Forest forest_from(const json& j) {
  const auto mode_name = j.at("mode").get<std::string>();
  ForestMode mode;
  if (mode_name == "random") mode = ForestMode::random;
  else if (mode_name == "completely_random") mode = ForestMode::completely_random;
  else throw Error("unknown forest mode '" + mode_name + "'");
  std::vector<DecisionTree> trees;
  for (const auto& t : j.at("trees")) trees.push_back(tree_from(t));
  std::optional<double> oob;
  if (!j.at("oob_accuracy").is_null()) oob = j.at("oob_accuracy").get<double>();
  return Forest(std::move(trees), mode, oob);
}

inline json scanner_json(const Scanner& s) {
  return {{"input_dim", s.input_dim()},
          {"window", s.window()},
          {"stride", s.stride()},
          {"random", forest_json(s.random_forest())},
          {"completely_random", forest_json(s.completely_random_forest())}};
}

inline Scanner scanner_from(const json& j) {
  return Scanner(j.at("input_dim").get<std::size_t>(), j.at("window").get<std::size_t>(),
                 j.at("stride").get<std::size_t>(), forest_from(j.at("random")),
                 forest_from(j.at("completely_random")));
}

inline json cascade_json(const CascadeModel& m) {
  json layers = json::array();
  for (const auto& l : m.layers()) {
    json forests = json::array();
    for (const auto& f : l.forests) forests.push_back(forest_json(f));
    layers.push_back({{"input_dim", l.input_dim}, {"forests", std::move(forests)}});
  }
  return {{"base_dim", m.base_dim()},
          {"best_layer", m.best_layer()},
          {"validation_accuracy", m.validation_accuracy()},
          {"layers", std::move(layers)},
          {"scanner", m.scanner() ? scanner_json(*m.scanner()) : json(nullptr)}};
}

inline CascadeModel cascade_from(const json& j) {
  std::vector<CascadeLayer> layers;
  for (const auto& l : j.at("layers")) {
    CascadeLayer layer;
    layer.input_dim = l.at("input_dim").get<std::size_t>();
    for (const auto& f : l.at("forests")) layer.forests.push_back(forest_from(f));
    layers.push_back(std::move(layer));
  }
  std::optional<Scanner> scanner;
  if (!j.at("scanner").is_null()) scanner = scanner_from(j.at("scanner"));
  return CascadeModel(j.at("base_dim").get<std::size_t>(), std::move(layers), j.at("best_layer").get<std::size_t>(),
                      j.at("validation_accuracy").get<std::vector<double>>(), std::move(scanner));
}

inline json logistic_json(const LogisticModel& m) {
  return {{"weights", m.weights}, {"bias", m.bias},         {"l2_lambda", m.l2_lambda},
          {"max_iter", m.max_iter}, {"iterations", m.iterations}};
}

inline LogisticModel logistic_from(const json& j) {
  LogisticModel m;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.bias = j.at("bias").get<double>();
  m.l2_lambda = j.at("l2_lambda").get<double>();
  m.max_iter = j.at("max_iter").get<std::size_t>();
  m.iterations = j.at("iterations").get<std::size_t>();
  return m;
}

inline json vocab_json(const EncoderVocab& v) {
  json out = json::object();
  for (std::size_t c = 0; c < kNumCategorical; ++c) {
    json table = json::object();
    for (const auto& [k, code] : v.tables()[c]) table[k] = code;
    out[categorical_name(static_cast<CategoricalColumn>(c))] = std::move(table);
  }
  return out;
}

inline EncoderVocab vocab_from(const json& j) {
  std::array<EncoderVocab::Table, kNumCategorical> tables;
  for (std::size_t c = 0; c < kNumCategorical; ++c)
    for (const auto& [k, code] : j.at(categorical_name(static_cast<CategoricalColumn>(c))).items())
      tables[c].emplace(k, code.get<std::int64_t>());
  return EncoderVocab(std::move(tables));
}

inline json metrics_row_json(const MetricsRow& r) {
  return {{"model", r.model},         {"sampling", r.sampling}, {"accuracy", r.accuracy}, {"f1", r.f1},
          {"precision", r.precision}, {"recall", r.recall},     {"roc_auc", r.roc_auc}};
}

inline MetricsRow metrics_row_from(const json& j) {
  return {j.at("model").get<std::string>(), j.at("sampling").get<std::string>(), j.at("accuracy").get<double>(),
          j.at("f1").get<double>(),         j.at("precision").get<double>(),     j.at("recall").get<double>(),
          j.at("roc_auc").get<double>()};
}

}  // namespace archive_detail

inline nlohmann::json archive_to_json(const ModelArchive& a) {
  using namespace archive_detail;
  json model;
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, CascadeModel>) model = cascade_json(m);
        else if constexpr (std::is_same_v<M, DecisionTree>) model = tree_json(m);
        else model = logistic_json(m);
      },
      a.model);
  return {{"format", kArchiveMagic},
          {"format_version", a.format_version},
          {"model_kind", model_kind_name(a.kind())},
          {"vocab", vocab_json(a.vocab)},
          {"scaler", {{"medians", a.scaler.medians()}, {"iqrs", a.scaler.iqrs()}}},
          {"model", std::move(model)},
          {"metadata",
           {{"seed", a.meta.seed.value},
            {"sampling", a.meta.sampling},
            {"config_digest", a.meta.config_digest},
            {"config", a.meta.config},
            {"metrics", a.meta.metrics ? metrics_row_json(*a.meta.metrics) : json(nullptr)}}}};
}

inline ModelArchive archive_from_json(const nlohmann::json& j) {
  using namespace archive_detail;
  try {
    if (!j.is_object() || j.value("format", "") != kArchiveMagic) throw Error("not a netforest model archive");
    const int version = j.at("format_version").get<int>();
    if (version != kArchiveFormatVersion)
      throw Error("unsupported archive format version " + std::to_string(version) + " (this build reads version " +
                  std::to_string(kArchiveFormatVersion) + ")");
    ModelArchive a;
    a.format_version = version;
    a.vocab = vocab_from(j.at("vocab"));
    a.scaler = RobustScaler(j.at("scaler").at("medians").get<std::vector<double>>(),
                            j.at("scaler").at("iqrs").get<std::vector<double>>());
    switch (parse_model_kind(j.at("model_kind").get<std::string>())) {
      case ModelKind::deep_forest: a.model = cascade_from(j.at("model")); break;
      case ModelKind::decision_tree: a.model = tree_from(j.at("model")); break;
      case ModelKind::logreg: a.model = logistic_from(j.at("model")); break;
    }
    const auto& meta = j.at("metadata");
    a.meta.seed = RandomSeed{meta.at("seed").get<std::uint64_t>()};
    a.meta.sampling = meta.at("sampling").get<std::string>();
    a.meta.config_digest = meta.at("config_digest").get<std::string>();
    a.meta.config = meta.at("config");
    if (!meta.at("metrics").is_null()) a.meta.metrics = metrics_row_from(meta.at("metrics"));
    if (a.scaler.medians().size() != input_dim(a.model))
      throw Error("scaler width does not match the model input dimension");
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("corrupt model archive: ") + e.what());
  }
}

/// Writes to a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void save_model(const ModelArchive& archive, const std::filesystem::path& path) {
  write_file_atomic(path, archive_to_json(archive).dump(1) + "\n");
}

inline ModelArchive load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model archive " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt model archive " + path.string() + ": " + e.what());
  }
  return archive_from_json(j);
}

}  // namespace netforest
