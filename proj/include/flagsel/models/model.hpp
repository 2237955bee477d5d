#pragma once

#include <array>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "flagsel/error.hpp"
#include "flagsel/labeling.hpp"
#include "flagsel/models/decision_tree.hpp"
#include "flagsel/models/mlp.hpp"
#include "flagsel/models/svc.hpp"
#include "flagsel/models/training_matrix.hpp"

namespace flagsel {

inline constexpr int kModelSchemaVersion = 1;

enum class ModelKind { Dtc, Svc, Nnr, Cascade };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::Dtc: return "dtc";
    case ModelKind::Svc: return "svc";
    case ModelKind::Nnr: return "nnr";
    case ModelKind::Cascade: return "cascade";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "dtc") return ModelKind::Dtc;
  if (s == "svc") return ModelKind::Svc;
  if (s == "nnr") return ModelKind::Nnr;
  if (s == "cascade") return ModelKind::Cascade;
  throw Error(ErrorCode::InvalidArgument, "unknown model kind '" + std::string(s) + "'");
}

/// What a model says about one input, compared lexicographically; lower
/// is better. dtc and svc give {class}, nnr gives {raw output}, the
/// cascade gives {dtc class, svc class, nnr raw output}.
struct PredictionKey {
  std::vector<double> parts;

  friend bool operator<(const PredictionKey& a, const PredictionKey& b) {
    return std::lexicographical_compare(a.parts.begin(), a.parts.end(), b.parts.begin(), b.parts.end());
  }
  friend bool operator==(const PredictionKey&, const PredictionKey&) = default;
};

struct CascadeKey {
  int dtc_class = 0;
  int svc_class = 0;
  double nnr_value = 0;

  PredictionKey key() const { return {{static_cast<double>(dtc_class), static_cast<double>(svc_class), nnr_value}}; }
};

struct TrainParams {
  DecisionTreeParams dtc;
  SvcParams svc;
  MlpParams nnr;
};

struct TrainedModel {
  ModelKind kind = ModelKind::Dtc;
  int schema_version = kModelSchemaVersion;
  std::optional<TaskType> task;
  std::vector<std::string> feature_order;
  Normalization normalization;
  TrainParams params;

  std::optional<DecisionTree> dtc;
  std::optional<SvcModel> svc;
  std::optional<Mlp> nnr;
  std::vector<std::string> warnings;

  std::vector<double> normalize(std::span<const double> raw) const {
    if (raw.size() != feature_order.size())
      throw Error(ErrorCode::FeatureOrderMismatch, "input has " + std::to_string(raw.size()) +
                                                       " dimensions, model expects " +
                                                       std::to_string(feature_order.size()));
    return normalization.apply(raw);
  }

  CascadeKey cascade_key(std::span<const double> raw) const {
    const auto x = normalize(raw);
    return {dtc->predict(x), svc->predict(x), nnr->predict(x)};
  }

  PredictionKey predict_key(std::span<const double> raw) const {
    const auto x = normalize(raw);
    switch (kind) {
      case ModelKind::Dtc: return {{static_cast<double>(dtc->predict(x))}};
      case ModelKind::Svc: return {{static_cast<double>(svc->predict(x))}};
      case ModelKind::Nnr: return {{nnr->predict(x)}};
      case ModelKind::Cascade: return CascadeKey{dtc->predict(x), svc->predict(x), nnr->predict(x)}.key();
    }
    return {};
  }

  /// Class for reports: the deciding model's class (nnr rounds and clamps
  /// its output to 0..5).
  int predict_class(std::span<const double> raw) const {
    const auto key = predict_key(raw);
    if (kind == ModelKind::Nnr) return regression_to_class(key.parts[0]);
    return static_cast<int>(key.parts[0]);
  }

  /// Throws FeatureOrderMismatch unless the model was trained on `order`.
  void check_feature_order(const std::vector<std::string>& order) const {
    if (feature_order != order)
      throw Error(ErrorCode::FeatureOrderMismatch, "model feature order differs from the extractor's");
  }
};

/// Fits the normalization on `data`, then the requested model(s) on the
/// normalized rows.
inline TrainedModel train_model(ModelKind kind, const TrainingMatrix& data, const TrainParams& params = {},
                                std::optional<TaskType> task = std::nullopt) {
  data.validate();
  TrainedModel m;
  m.kind = kind;
  m.task = task;
  m.feature_order = data.feature_order;
  if (m.feature_order.empty())
    for (std::size_t d = 0; d < data.dims; ++d) m.feature_order.push_back("x" + std::to_string(d));
  m.params = params;
  m.normalization = Normalization::fit(data);
  const TrainingMatrix normalized = m.normalization.apply(data);

  if (kind == ModelKind::Dtc || kind == ModelKind::Cascade) {
    m.dtc = train_decision_tree(normalized, params.dtc);
    if (m.dtc->degenerate) m.warnings.push_back("DegenerateData: identical inputs carry different labels");
  }
  if (kind == ModelKind::Svc || kind == ModelKind::Cascade) {
    m.svc = train_svc(normalized, params.svc);
    if (!m.svc->converged) m.warnings.push_back("NonConvergence: SMO stopped at the iteration cap");
  }
  if (kind == ModelKind::Nnr || kind == ModelKind::Cascade) m.nnr = train_mlp(normalized, params.nnr);
  return m;
}

/// Cascade key from three separately trained models. They must share a
/// feature order; each applies its own normalization.
inline CascadeKey predict_cascade(const TrainedModel& dtc, const TrainedModel& svc, const TrainedModel& nnr,
                                  std::span<const double> raw) {
  if (!dtc.dtc || !svc.svc || !nnr.nnr)
    throw Error(ErrorCode::InvalidArgument, "cascade needs a dtc, an svc and an nnr model");
  if (dtc.feature_order != svc.feature_order || dtc.feature_order != nnr.feature_order)
    throw Error(ErrorCode::FeatureOrderMismatch, "cascade members were trained on different feature orders");
  return {dtc.dtc->predict(dtc.normalize(raw)), svc.svc->predict(svc.normalize(raw)),
          nnr.nnr->predict(nnr.normalize(raw))};
}

// ---- serialization --------------------------------------------------------

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson params_to_json(const TrainParams& p, ModelKind kind) {
  ojson j = ojson::object();
  if (kind == ModelKind::Dtc || kind == ModelKind::Cascade)
    j["dtc"] = {{"max_depth", p.dtc.max_depth}, {"min_samples_leaf", p.dtc.min_samples_leaf}};
  if (kind == ModelKind::Svc || kind == ModelKind::Cascade)
    j["svc"] = {{"C", p.svc.C},
                {"kernel", p.svc.kernel == KernelKind::Linear ? "linear" : "rbf"},
                {"gamma", p.svc.gamma},
                {"tolerance", p.svc.tolerance},
                {"max_iterations", p.svc.max_iterations},
                {"max_rows", p.svc.max_rows},
                {"subsample_seed", p.svc.subsample_seed}};
  if (kind == ModelKind::Nnr || kind == ModelKind::Cascade)
    j["nnr"] = {{"hidden_layers", p.nnr.hidden_layers}, {"learning_rate", p.nnr.learning_rate},
                {"epochs", p.nnr.epochs},               {"batch_size", p.nnr.batch_size},
                {"momentum", p.nnr.momentum},           {"seed", p.nnr.seed}};
  return j;
}

inline TrainParams params_from_json(const nlohmann::json& j) {
  TrainParams p;
  if (j.contains("dtc")) {
    p.dtc.max_depth = j["dtc"].at("max_depth").get<std::size_t>();
    p.dtc.min_samples_leaf = j["dtc"].at("min_samples_leaf").get<std::size_t>();
  }
  if (j.contains("svc")) {
    const auto& s = j["svc"];
    p.svc.C = s.at("C").get<double>();
    p.svc.kernel = s.at("kernel").get<std::string>() == "linear" ? KernelKind::Linear : KernelKind::Rbf;
    p.svc.gamma = s.at("gamma").get<double>();
    p.svc.tolerance = s.at("tolerance").get<double>();
    p.svc.max_iterations = s.at("max_iterations").get<std::size_t>();
    p.svc.max_rows = s.at("max_rows").get<std::size_t>();
    p.svc.subsample_seed = s.at("subsample_seed").get<std::uint64_t>();
  }
  if (j.contains("nnr")) {
    const auto& s = j["nnr"];
    p.nnr.hidden_layers = s.at("hidden_layers").get<std::vector<std::size_t>>();
    p.nnr.learning_rate = s.at("learning_rate").get<double>();
    p.nnr.epochs = s.at("epochs").get<std::size_t>();
    p.nnr.batch_size = s.at("batch_size").get<std::size_t>();
    p.nnr.momentum = s.at("momentum").get<double>();
    p.nnr.seed = s.at("seed").get<std::uint64_t>();
  }
  return p;
}

inline ojson tree_to_json(const DecisionTree& t) {
  ojson nodes = ojson::array();
  for (const auto& n : t.nodes) {
    if (n.is_leaf())
      nodes.push_back(ojson::array({n.label}));
    else
      nodes.push_back(ojson::array({n.feature, n.threshold, n.left, n.right, n.label}));
  }
  return {{"degenerate", t.degenerate}, {"nodes", std::move(nodes)}};
}

inline DecisionTree tree_from_json(const nlohmann::json& j) {
  DecisionTree t;
  t.degenerate = j.at("degenerate").get<bool>();
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    if (n.size() == 1) {
      node.label = n[0].get<int>();
    } else if (n.size() == 5) {
      node.feature = n[0].get<int>();
      node.threshold = n[1].get<double>();
      node.left = n[2].get<int>();
      node.right = n[3].get<int>();
      node.label = n[4].get<int>();
    } else {
      throw Error(ErrorCode::ModelFormat, "malformed tree node");
    }
    t.nodes.push_back(node);
  }
  const int count = static_cast<int>(t.nodes.size());
  if (count == 0) throw Error(ErrorCode::ModelFormat, "tree has no nodes");
  for (const auto& n : t.nodes)
    if (!n.is_leaf() && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count))
      throw Error(ErrorCode::ModelFormat, "tree child index out of range");
  return t;
}

inline ojson svc_to_json(const SvcModel& s) {
  ojson machines = ojson::array();
  for (const auto& m : s.machines) machines.push_back({{"support", m.support}, {"coef", m.coef}, {"rho", m.rho}});
  return {{"kernel", s.kernel.kind == KernelKind::Linear ? "linear" : "rbf"},
          {"gamma", s.kernel.gamma},
          {"dims", s.dims},
          {"classes", s.classes},
          {"converged", s.converged},
          {"support_vectors", s.support_vectors},
          {"machines", std::move(machines)}};
}

inline SvcModel svc_from_json(const nlohmann::json& j) {
  SvcModel s;
  s.kernel.kind = j.at("kernel").get<std::string>() == "linear" ? KernelKind::Linear : KernelKind::Rbf;
  s.kernel.gamma = j.at("gamma").get<double>();
  s.dims = j.at("dims").get<std::size_t>();
  s.classes = j.at("classes").get<std::vector<int>>();
  s.converged = j.at("converged").get<bool>();
  s.support_vectors = j.at("support_vectors").get<std::vector<double>>();
  for (const auto& m : j.at("machines")) {
    SvcModel::Machine machine;
    machine.support = m.at("support").get<std::vector<std::uint32_t>>();
    machine.coef = m.at("coef").get<std::vector<double>>();
    machine.rho = m.at("rho").get<double>();
    if (machine.support.size() != machine.coef.size())
      throw Error(ErrorCode::ModelFormat, "svc machine support/coef length mismatch");
    for (auto idx : machine.support)
      if (idx >= s.support_count()) throw Error(ErrorCode::ModelFormat, "svc support index out of range");
    s.machines.push_back(std::move(machine));
  }
  if (s.machines.size() != s.classes.size() || s.classes.empty())
    throw Error(ErrorCode::ModelFormat, "svc needs one machine per class");
  if (s.dims == 0 || s.support_vectors.size() % s.dims != 0)
    throw Error(ErrorCode::ModelFormat, "svc support vector block has the wrong size");
  return s;
}

}  // namespace detail

/// Versioned JSON form of a model. Doubles are written in shortest
/// round-trip form, so a reloaded model predicts bit-identically.
inline nlohmann::ordered_json to_json(const TrainedModel& m) {
  using detail::ojson;
  ojson j;
  j["format"] = "flagsel-model";
  j["schema_version"] = m.schema_version;
  j["kind"] = to_string(m.kind);
  j["task"] = m.task ? ojson(to_string(*m.task)) : ojson(nullptr);
  j["feature_order"] = m.feature_order;
  j["normalization"] = {{"mean", m.normalization.mean}, {"scale", m.normalization.scale}};
  j["hyperparameters"] = detail::params_to_json(m.params, m.kind);
  j["warnings"] = m.warnings;
  ojson parts = ojson::object();
  if (m.dtc) parts["dtc"] = detail::tree_to_json(*m.dtc);
  if (m.svc) parts["svc"] = detail::svc_to_json(*m.svc);
  if (m.nnr) parts["nnr"] = {{"layer_sizes", m.nnr->layer_sizes}, {"params", m.nnr->params}};
  j["parameters"] = std::move(parts);
  return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || j.value("format", "") != "flagsel-model")
      throw Error(ErrorCode::ModelFormat, "not a flagsel model file");
    TrainedModel m;
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kModelSchemaVersion)
      throw Error(ErrorCode::SchemaMismatch, "model schema_version " + std::to_string(m.schema_version) +
                                                 " is not " + std::to_string(kModelSchemaVersion));
    m.kind = parse_model_kind(j.at("kind").get<std::string>());
    if (!j.at("task").is_null()) m.task = parse_task_type(j.at("task").get<std::string>());
    m.feature_order = j.at("feature_order").get<std::vector<std::string>>();
    m.normalization.mean = j.at("normalization").at("mean").get<std::vector<double>>();
    m.normalization.scale = j.at("normalization").at("scale").get<std::vector<double>>();
    if (m.normalization.mean.size() != m.feature_order.size() ||
        m.normalization.scale.size() != m.feature_order.size())
      throw Error(ErrorCode::ModelFormat, "normalization size differs from feature_order");
    m.params = detail::params_from_json(j.at("hyperparameters"));
    m.warnings = j.value("warnings", std::vector<std::string>{});

    const auto& parts = j.at("parameters");
    const bool need_dtc = m.kind == ModelKind::Dtc || m.kind == ModelKind::Cascade;
    const bool need_svc = m.kind == ModelKind::Svc || m.kind == ModelKind::Cascade;
    const bool need_nnr = m.kind == ModelKind::Nnr || m.kind == ModelKind::Cascade;
    if (need_dtc) m.dtc = detail::tree_from_json(parts.at("dtc"));
    if (need_svc) {
      m.svc = detail::svc_from_json(parts.at("svc"));
      if (m.svc->dims != m.feature_order.size())
        throw Error(ErrorCode::FeatureOrderMismatch, "svc dimension differs from feature_order");
    }
    if (need_nnr) {
      Mlp net;
      net.layer_sizes = parts.at("nnr").at("layer_sizes").get<std::vector<std::size_t>>();
      net.params = parts.at("nnr").at("params").get<std::vector<double>>();
      if (net.layer_sizes.size() < 2 || net.layer_sizes.front() != m.feature_order.size() ||
          net.layer_sizes.back() != 1 || net.params.size() != Mlp::parameter_count(net.layer_sizes))
        throw Error(ErrorCode::ModelFormat, "nnr layer sizes do not match its parameters");
      m.nnr = std::move(net);
    }
    if (m.dtc)
      for (const auto& n : m.dtc->nodes)
        if (!n.is_leaf() && static_cast<std::size_t>(n.feature) >= m.feature_order.size())
          throw Error(ErrorCode::ModelFormat, "tree splits on an unknown dimension");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ModelFormat, e.what());
  }
}

inline std::string serialize_model(const TrainedModel& m) { return to_json(m).dump() + "\n"; }

inline TrainedModel deserialize_model(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ModelFormat, e.what());
  }
  return model_from_json(j);
}

inline void save_model(const std::string& path, const TrainedModel& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path);
  out << serialize_model(m);
}

inline TrainedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

// ---- evaluation -----------------------------------------------------------

struct EvaluationReport {
  std::array<std::array<std::size_t, kClassCount>, kClassCount> confusion{};  // [true][predicted]
  std::size_t rows = 0;

  double accuracy() const {
    std::size_t hit = 0;
    for (int c = 0; c < kClassCount; ++c) hit += confusion[c][c];
    return rows ? static_cast<double>(hit) / static_cast<double>(rows) : 0.0;
  }

  /// Recall of class c; nullopt when the class never occurs.
  std::optional<double> class_accuracy(int c) const {
    std::size_t total = 0;
    for (auto v : confusion[c]) total += v;
    if (total == 0) return std::nullopt;
    return static_cast<double>(confusion[c][c]) / static_cast<double>(total);
  }
};

inline EvaluationReport evaluate(const TrainedModel& m, const TrainingMatrix& data) {
  EvaluationReport r;
  for (std::size_t i = 0; i < data.rows(); ++i) {
    const int predicted = m.predict_class(data.row(i));
    ++r.confusion[data.y[i]][predicted];
    ++r.rows;
  }
  return r;
}

inline nlohmann::ordered_json to_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["rows"] = r.rows;
  j["accuracy"] = r.accuracy();
  j["per_class_accuracy"] = nlohmann::ordered_json::array();
  for (int c = 0; c < kClassCount; ++c) {
    const auto a = r.class_accuracy(c);
    j["per_class_accuracy"].push_back(a ? nlohmann::ordered_json(*a) : nlohmann::ordered_json(nullptr));
  }
  j["confusion"] = r.confusion;
  return j;
}

}  // namespace flagsel
