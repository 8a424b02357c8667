#pragma once

#include <Eigen/Core>

#include <optional>

#include "tlm/common.hpp"
#include "tlm/dataset.hpp"
#include "tlm/feature_net.hpp"
#include "tlm/routing.hpp"
#include "tlm/tree.hpp"

namespace tlm {

// A trained tree plus the optional feature transform applied before routing.
struct TlmModel {
  TlmTree tree;
  std::optional<FeatureNet> net;
  std::optional<TrainConfig> train_config;  // echo of the feature-opt settings

  Index dim() const { return tree.dim; }

  Eigen::VectorXd transform(const Eigen::Ref<const Eigen::VectorXd>& f) const {
    return net ? forward(*net, f) : Eigen::VectorXd(f);
  }

  Eigen::MatrixXd transform_batch(const Eigen::MatrixXd& features) const {
    return net ? forward_batch(*net, features) : features;
  }
};

inline HardResult model_predict_hard(const TlmModel& model,
                                     const Eigen::Ref<const Eigen::VectorXd>& f,
                                     int max_depth = -1) {
  return predict_hard(model.tree, model.transform(f), max_depth);
}

inline double model_predict_soft(const TlmModel& model,
                                 const Eigen::Ref<const Eigen::VectorXd>& f,
                                 SoftRule rule = SoftRule::Path) {
  return predict_soft(model.tree, model.transform(f), rule);
}

inline double model_predict_oracle(const TlmModel& model,
                                   const Eigen::Ref<const Eigen::VectorXd>& f, double y_true) {
  return predict_oracle(model.tree, model.transform(f), y_true);
}

inline BatchResult model_predict_batch(const TlmModel& model, const Dataset& data,
                                       RoutingMode mode, SoftRule rule = SoftRule::Path) {
  if (!model.net) return predict_batch(model.tree, data, mode, rule);
  return predict_batch(model.tree,
                       Dataset(model.transform_batch(data.features()), data.targets()), mode,
                       rule);
}

}  // namespace tlm
