#pragma once

#include <Eigen/Core>

#include <map>
#include <string>
#include <vector>

#include "tlm/common.hpp"
#include "tlm/dataset.hpp"
#include "tlm/metrics.hpp"
#include "tlm/tree.hpp"

namespace tlm {

enum class RoutingMode { Hard, Soft, Oracle };

// Soft routing variant: Path blends the regressors along the hard path;
// Full marginalizes over every node by its arrival probability mass.
enum class SoftRule { Path, Full };

struct HardResult {
  double prediction = 0.0;
  int leaf_id = 0;
};

namespace detail {

inline void check_dim(const TlmTree& tree, const Eigen::Ref<const Eigen::VectorXd>& f) {
  if (f.size() != tree.dim)
    throw DataError("predict: feature dim " + std::to_string(f.size()) +
                    " does not match model dim " + std::to_string(tree.dim));
}

}  // namespace detail

// Follows each node classifier's decision to a leaf; ties route left.
// `max_depth` < 0 descends fully, otherwise stops at that depth and predicts
// with the node reached there.
inline HardResult predict_hard(const TlmTree& tree, const Eigen::Ref<const Eigen::VectorXd>& f,
                               int max_depth = -1) {
  detail::check_dim(tree, f);
  const TlmNode* node = &tree.root();
  while (!node->is_leaf() && (max_depth < 0 || node->depth < max_depth)) {
    const bool left = classify(node->classifier, f).goes_left;
    node = &tree.nodes[static_cast<std::size_t>(left ? node->left : node->right)];
  }
  return HardResult{node->regressor.predict(f), node->id};
}

// Walks the hard path and blends every visited node's regressor output. The
// root carries weight 1; each step multiplies the running weight by the
// probability of the branch taken. The result is normalized by the weight
// sum, so it is a convex combination of the path predictions.
inline double predict_soft(const TlmTree& tree, const Eigen::Ref<const Eigen::VectorXd>& f,
                           SoftRule rule = SoftRule::Path) {
  detail::check_dim(tree, f);
  double numerator = 0.0;
  double denominator = 0.0;

  if (rule == SoftRule::Path) {
    const TlmNode* node = &tree.root();
    double weight = 1.0;
    while (true) {
      numerator += weight * node->regressor.predict(f);
      denominator += weight;
      if (node->is_leaf()) break;
      const Classification cls = classify(node->classifier, f);
      weight *= cls.goes_left ? cls.prob_left : 1.0 - cls.prob_left;
      node = &tree.nodes[static_cast<std::size_t>(cls.goes_left ? node->left : node->right)];
    }
  } else {
    // every node weighted by its product-of-probabilities arrival mass
    std::vector<std::pair<int, double>> stack{{0, 1.0}};
    while (!stack.empty()) {
      const auto [id, mass] = stack.back();
      stack.pop_back();
      const TlmNode& node = tree.nodes[static_cast<std::size_t>(id)];
      numerator += mass * node.regressor.predict(f);
      denominator += mass;
      if (!node.is_leaf()) {
        const double p = node.classifier.prob_left(f);
        stack.emplace_back(node.left, mass * p);
        stack.emplace_back(node.right, mass * (1.0 - p));
      }
    }
  }
  return numerator / denominator;
}

// Diagnostic routing by the true response: descend left iff y <= threshold.
// Bounds what the learned classifiers could achieve.
inline double predict_oracle(const TlmTree& tree, const Eigen::Ref<const Eigen::VectorXd>& f,
                             double y_true) {
  detail::check_dim(tree, f);
  if (!std::isfinite(y_true)) throw DataError("predict_oracle: non-finite y_true");
  const TlmNode* node = &tree.root();
  while (!node->is_leaf())
    node = &tree.nodes[static_cast<std::size_t>(y_true <= node->threshold ? node->left
                                                                          : node->right)];
  return node->regressor.predict(f);
}

// The leaf a row lands in under oracle routing.
inline int oracle_leaf(const TlmTree& tree, double y_true) {
  const TlmNode* node = &tree.root();
  while (!node->is_leaf())
    node = &tree.nodes[static_cast<std::size_t>(y_true <= node->threshold ? node->left
                                                                          : node->right)];
  return node->id;
}

struct BatchResult {
  Eigen::VectorXd predictions;
  std::vector<int> leaf_ids;  // hard-path leaf for soft mode
  Metrics overall;
  std::map<int, Metrics> per_leaf;
};

// Per-row predictions plus aggregate and per-leaf error metrics.
inline BatchResult predict_batch(const TlmTree& tree, const Dataset& data, RoutingMode mode,
                                 SoftRule rule = SoftRule::Path) {
  const Index n = data.size();
  BatchResult result;
  result.predictions.resize(n);
  result.leaf_ids.resize(static_cast<std::size_t>(n));

  for (Index i = 0; i < n; ++i) {
    const Eigen::VectorXd f = data.row(i);
    switch (mode) {
      case RoutingMode::Hard: {
        const HardResult hr = predict_hard(tree, f);
        result.predictions(i) = hr.prediction;
        result.leaf_ids[static_cast<std::size_t>(i)] = hr.leaf_id;
        break;
      }
      case RoutingMode::Soft: {
        result.predictions(i) = predict_soft(tree, f, rule);
        result.leaf_ids[static_cast<std::size_t>(i)] = predict_hard(tree, f).leaf_id;
        break;
      }
      case RoutingMode::Oracle: {
        const double y = data.targets()(i);
        result.predictions(i) = predict_oracle(tree, f, y);
        result.leaf_ids[static_cast<std::size_t>(i)] = oracle_leaf(tree, y);
        break;
      }
    }
  }

  result.overall = compute_metrics(result.predictions, data.targets());

  std::map<int, std::vector<Index>> rows_by_leaf;
  for (Index i = 0; i < n; ++i)
    rows_by_leaf[result.leaf_ids[static_cast<std::size_t>(i)]].push_back(i);
  for (const auto& [leaf, rows] : rows_by_leaf) {
    Eigen::VectorXd pred(static_cast<Index>(rows.size()));
    Eigen::VectorXd target(static_cast<Index>(rows.size()));
    for (Index k = 0; k < static_cast<Index>(rows.size()); ++k) {
      pred(k) = result.predictions(rows[static_cast<std::size_t>(k)]);
      target(k) = data.targets()(rows[static_cast<std::size_t>(k)]);
    }
    result.per_leaf.emplace(leaf, compute_metrics(pred, target));
  }
  return result;
}

}  // namespace tlm
