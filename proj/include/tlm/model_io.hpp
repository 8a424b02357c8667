#pragma once

#include <nlohmann/json.hpp>

#include <fstream>
#include <string>
#include <vector>

#include "tlm/common.hpp"
#include "tlm/model.hpp"

namespace tlm {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

using nlohmann::json;

inline json vec_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

inline Eigen::VectorXd vec_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Index>(values.size()));
}

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  // row-major flattening
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  return flat;
}

inline Eigen::MatrixXd matrix_from_json(const json& j, Index rows, Index cols) {
  const auto flat = j.get<std::vector<double>>();
  if (static_cast<Index>(flat.size()) != rows * cols)
    throw DataError("model file: weight matrix size mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c) m(i, c) = flat[static_cast<std::size_t>(i * cols + c)];
  return m;
}

inline json node_to_json(const TlmTree& tree, int id) {
  const TlmNode& node = tree.nodes[static_cast<std::size_t>(id)];
  json j;
  j["id"] = node.id;
  j["depth"] = node.depth;
  j["regressor"] = {{"r", vec_to_json(node.regressor.r)}, {"b", node.regressor.b}};
  j["diagnostics"] = {{"train_count", node.train_count},
                      {"train_sse", node.train_sse},
                      {"train_mae", node.train_mae}};
  if (!node.is_leaf()) {
    j["threshold"] = node.threshold;
    j["classifier"] = {{"w", vec_to_json(node.classifier.w)}, {"c", node.classifier.c}};
    j["left"] = node_to_json(tree, node.left);
    j["right"] = node_to_json(tree, node.right);
  }
  return j;
}

inline int node_from_json(const json& j, TlmTree& tree, int depth) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  {
    TlmNode& node = tree.nodes.back();
    node.id = j.at("id").get<int>();
    node.depth = j.at("depth").get<int>();
    node.regressor.r = vec_from_json(j.at("regressor").at("r"));
    node.regressor.b = j.at("regressor").at("b").get<double>();
    const auto& diag = j.at("diagnostics");
    node.train_count = diag.at("train_count").get<Index>();
    node.train_sse = diag.at("train_sse").get<double>();
    node.train_mae = diag.at("train_mae").get<double>();
    if (node.depth != depth) throw DataError("model file: inconsistent node depth");
  }
  if (j.contains("threshold")) {
    if (!j.contains("classifier") || !j.contains("left") || !j.contains("right"))
      throw DataError("model file: internal node missing classifier or children");
    tree.nodes[static_cast<std::size_t>(id)].threshold = j.at("threshold").get<double>();
    tree.nodes[static_cast<std::size_t>(id)].classifier.w =
        vec_from_json(j.at("classifier").at("w"));
    tree.nodes[static_cast<std::size_t>(id)].classifier.c =
        j.at("classifier").at("c").get<double>();
    const int left = node_from_json(j.at("left"), tree, depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].left = left;
    const int right = node_from_json(j.at("right"), tree, depth + 1);
    tree.nodes[static_cast<std::size_t>(id)].right = right;
  } else {
    ++tree.leaf_count;
  }
  return id;
}

inline json fit_config_to_json(const FitConfig& cfg) {
  return {{"ridge_lambda", cfg.ridge_lambda},
          {"logit_l2", cfg.logit_l2},
          {"max_iters", cfg.max_iters},
          {"tol", cfg.tol},
          {"step", cfg.step}};
}

inline FitConfig fit_config_from_json(const json& j) {
  FitConfig cfg;
  cfg.ridge_lambda = j.at("ridge_lambda").get<double>();
  cfg.logit_l2 = j.at("logit_l2").get<double>();
  cfg.max_iters = j.at("max_iters").get<int>();
  cfg.tol = j.at("tol").get<double>();
  cfg.step = j.at("step").get<double>();
  return cfg;
}

inline json mixup_config_to_json(const MixupConfig& cfg) {
  return {{"enabled", cfg.enabled},
          {"similarity_window", cfg.similarity_window},
          {"alpha", cfg.alpha},
          {"multiplier", cfg.multiplier}};
}

inline MixupConfig mixup_config_from_json(const json& j) {
  MixupConfig cfg;
  cfg.enabled = j.at("enabled").get<bool>();
  cfg.similarity_window = j.at("similarity_window").get<double>();
  cfg.alpha = j.at("alpha").get<double>();
  cfg.multiplier = j.at("multiplier").get<double>();
  return cfg;
}

inline json tree_config_to_json(const TreeConfig& cfg) {
  return {{"max_depth", cfg.max_depth},
          {"min_leaf", cfg.min_leaf},
          {"n_thresholds", cfg.n_thresholds},
          {"purity_eps", cfg.purity_eps},
          {"fit", fit_config_to_json(cfg.fit)},
          {"mixup", mixup_config_to_json(cfg.mixup)},
          {"partition_by", cfg.partition == PartitionRule::Label ? "label" : "classifier"},
          {"seed", cfg.seed}};
}

inline TreeConfig tree_config_from_json(const json& j) {
  TreeConfig cfg;
  cfg.max_depth = j.at("max_depth").get<int>();
  cfg.min_leaf = j.at("min_leaf").get<Index>();
  cfg.n_thresholds = j.at("n_thresholds").get<int>();
  cfg.purity_eps = j.at("purity_eps").get<double>();
  cfg.fit = fit_config_from_json(j.at("fit"));
  cfg.mixup = mixup_config_from_json(j.at("mixup"));
  const auto rule = j.at("partition_by").get<std::string>();
  if (rule == "label")
    cfg.partition = PartitionRule::Label;
  else if (rule == "classifier")
    cfg.partition = PartitionRule::Classifier;
  else
    throw DataError("model file: unknown partition_by '" + rule + "'");
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

inline json train_config_to_json(const TrainConfig& cfg) {
  return {{"learning_rate", cfg.learning_rate},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"seed", cfg.seed},
          {"dropout_enabled", cfg.dropout_enabled}};
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.batch_size = j.at("batch_size").get<Index>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.dropout_enabled = j.at("dropout_enabled").get<bool>();
  return cfg;
}

inline const char* activation_tag(nn::Activation act) {
  switch (act) {
    case nn::Activation::Identity:
      return "identity";
    case nn::Activation::Relu:
      return "relu";
    case nn::Activation::LeakyRelu:
      return "leaky_relu";
  }
  return "identity";
}

inline nn::Activation activation_from_tag(const std::string& tag) {
  if (tag == "identity") return nn::Activation::Identity;
  if (tag == "relu") return nn::Activation::Relu;
  if (tag == "leaky_relu") return nn::Activation::LeakyRelu;
  throw DataError("model file: unknown activation '" + tag + "'");
}

inline json layer_to_json(const nn::DenseLayer& layer) {
  return {{"rows", layer.W.rows()},
          {"cols", layer.W.cols()},
          {"weights", matrix_to_json(layer.W)},
          {"bias", vec_to_json(layer.b)},
          {"activation", activation_tag(layer.act)}};
}

inline nn::DenseLayer layer_from_json(const json& j) {
  nn::DenseLayer layer;
  const auto rows = j.at("rows").get<Index>();
  const auto cols = j.at("cols").get<Index>();
  layer.W = matrix_from_json(j.at("weights"), rows, cols);
  layer.b = vec_from_json(j.at("bias"));
  if (layer.b.size() != rows) throw DataError("model file: bias length mismatch");
  layer.act = activation_from_tag(j.at("activation").get<std::string>());
  return layer;
}

inline json net_to_json(const FeatureNet& net) {
  json blocks = json::array();
  for (const auto& block : net.blocks)
    blocks.push_back({{"fc1", layer_to_json(block.fc1)}, {"fc2", layer_to_json(block.fc2)}});
  return {{"dim", net.dim}, {"dropout_rate", net.dropout_rate}, {"blocks", blocks}};
}

inline FeatureNet net_from_json(const json& j) {
  FeatureNet net;
  net.dim = j.at("dim").get<Index>();
  net.dropout_rate = j.at("dropout_rate").get<double>();
  for (const auto& bj : j.at("blocks")) {
    ResidualBlock block;
    block.fc1 = layer_from_json(bj.at("fc1"));
    block.fc2 = layer_from_json(bj.at("fc2"));
    net.blocks.push_back(std::move(block));
  }
  if (net.blocks.empty()) throw DataError("model file: feature net has no blocks");
  return net;
}

}  // namespace detail

inline nlohmann::json model_to_json(const TlmModel& model) {
  nlohmann::json j;
  j["format_version"] = kModelFormatVersion;
  j["dim"] = model.tree.dim;
  j["tree"] = {{"leaf_count", model.tree.leaf_count},
               {"nodes", detail::node_to_json(model.tree, 0)}};
  j["feature_net"] = model.net ? detail::net_to_json(*model.net) : nlohmann::json(nullptr);
  nlohmann::json cfg;
  cfg["tree"] = detail::tree_config_to_json(model.tree.config);
  cfg["feature_opt"] = model.train_config
                           ? detail::train_config_to_json(*model.train_config)
                           : nlohmann::json(nullptr);
  j["training_config"] = cfg;
  return j;
}

inline TlmModel model_from_json(const nlohmann::json& j) {
  try {
    if (!j.contains("format_version"))
      throw DataError("model file: missing format_version");
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
      throw DataError("model file: unsupported format_version " + std::to_string(version));

    TlmModel model;
    model.tree.dim = j.at("dim").get<Index>();
    model.tree.config = detail::tree_config_from_json(j.at("training_config").at("tree"));
    model.tree.leaf_count = 0;
    detail::node_from_json(j.at("tree").at("nodes"), model.tree, 0);
    if (model.tree.leaf_count != j.at("tree").at("leaf_count").get<int>())
      throw DataError("model file: leaf_count does not match node records");

    if (!j.at("feature_net").is_null()) model.net = detail::net_from_json(j.at("feature_net"));
    if (!j.at("training_config").at("feature_opt").is_null())
      model.train_config =
          detail::train_config_from_json(j.at("training_config").at("feature_opt"));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file: malformed JSON: ") + e.what());
  }
}

inline void save_model(const TlmModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path);
  out << model_to_json(model).dump(2) << "\n";
}

inline TlmModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model file " + path + ": invalid JSON: " + e.what());
  }
  return model_from_json(j);
}

}  // namespace tlm
