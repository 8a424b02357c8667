#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tlm/common.hpp"
#include "tlm/dataset.hpp"
#include "tlm/linear.hpp"
#include "tlm/mixup.hpp"

namespace tlm {

// How rows are assigned to children while the tree is built. Label uses the
// threshold rule y <= t; Classifier follows the fitted classifier instead.
enum class PartitionRule { Label, Classifier };

struct TreeConfig {
  int max_depth = 4;
  Index min_leaf = 20;     // smallest allowed child
  int n_thresholds = 15;   // candidate quantile grid size
  double purity_eps = 1e-9;  // y-range at or below this makes a node pure
  FitConfig fit;
  MixupConfig mixup;
  PartitionRule partition = PartitionRule::Label;
  std::uint64_t seed = 0;  // drives per-node mixup draws

  void validate() const {
    if (max_depth < 0) throw ConfigError("tree: max_depth must be >= 0");
    if (min_leaf < 1) throw ConfigError("tree: min_leaf must be >= 1");
    if (n_thresholds < 1) throw ConfigError("tree: n_thresholds must be >= 1");
    if (purity_eps < 0) throw ConfigError("tree: purity_eps must be >= 0");
    fit.validate();
    if (mixup.enabled) mixup.validate();
  }
};

struct TlmNode {
  int id = 0;
  int depth = 0;
  LinearRegressor regressor;  // fitted at every node; soft routing needs it

  // internal nodes only
  double threshold = 0.0;
  LinearClassifier classifier;
  int left = -1;
  int right = -1;

  // diagnostics over the node's own (unaugmented) training rows
  Index train_count = 0;
  double train_sse = 0.0;
  double train_mae = 0.0;

  bool is_leaf() const { return left < 0; }
};

// Binary tree of oblique splits. Nodes live in an arena in preorder; ids are
// arena indices. Leaves tile the feature space into disjoint convex cells.
struct TlmTree {
  std::vector<TlmNode> nodes;
  Index dim = 0;
  TreeConfig config;
  int leaf_count = 0;

  const TlmNode& root() const { return nodes.front(); }

  int max_node_depth() const {
    int depth = 0;
    for (const auto& n : nodes) depth = std::max(depth, n.depth);
    return depth;
  }
};

struct SplitCandidate {
  double threshold = 0.0;
  LinearClassifier classifier;
  LinearRegressor left_model;
  LinearRegressor right_model;
  Index left_count = 0;
  Index right_count = 0;
  double left_sse = 0.0;
  double right_sse = 0.0;
  double reduction = 0.0;  // parent SSE minus the sum of child SSEs
};

namespace detail {

inline double model_sse(const LinearRegressor& model, const Eigen::MatrixXd& features,
                        const Eigen::VectorXd& targets) {
  return (model.predict_batch(features) - targets).squaredNorm();
}

inline double model_mae(const LinearRegressor& model, const Eigen::MatrixXd& features,
                        const Eigen::VectorXd& targets) {
  return (model.predict_batch(features) - targets).cwiseAbs().mean();
}

// Linear-interpolation quantile of pre-sorted values.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline std::pair<std::vector<Index>, std::vector<Index>> partition_by_label(
    const Eigen::VectorXd& y, double t) {
  std::vector<Index> left, right;
  for (Index i = 0; i < y.size(); ++i)
    (y(i) <= t ? left : right).push_back(i);
  return {std::move(left), std::move(right)};
}

// Scores one threshold. `fit_data` is the (possibly augmented) training set
// used for all fits; error accounting uses only `original` rows.
inline SplitCandidate score_candidate(const Dataset& original, const Dataset& fit_data,
                                      double t, const TreeConfig& cfg, double parent_sse) {
  SplitCandidate cand;
  cand.threshold = t;

  Eigen::VectorXd labels(fit_data.size());
  for (Index i = 0; i < fit_data.size(); ++i)
    labels(i) = fit_data.targets()(i) <= t ? 1.0 : 0.0;
  cand.classifier = fit_classifier(fit_data.features(), labels, cfg.fit);

  auto [fit_left, fit_right] = partition_by_label(fit_data.targets(), t);
  cand.left_model = fit_regressor(fit_data.subset(fit_left), cfg.fit);
  cand.right_model = fit_regressor(fit_data.subset(fit_right), cfg.fit);

  auto [orig_left, orig_right] = partition_by_label(original.targets(), t);
  const Dataset left = original.subset(orig_left);
  const Dataset right = original.subset(orig_right);
  cand.left_count = left.size();
  cand.right_count = right.size();
  cand.left_sse = model_sse(cand.left_model, left.features(), left.targets());
  cand.right_sse = model_sse(cand.right_model, right.features(), right.targets());
  cand.reduction = parent_sse - (cand.left_sse + cand.right_sse);
  return cand;
}

inline Dataset augment_for_node(const Dataset& data, const TreeConfig& cfg, int node_id) {
  if (!cfg.mixup.enabled || data.size() < 2) return data;
  return mixup_augment(data, cfg.mixup, mix_seed(cfg.seed, static_cast<std::uint64_t>(node_id)))
      .data;
}

}  // namespace detail

// Candidate thresholds: interior quantiles of the node's response values,
// deduplicated, keeping only values strictly inside the observed y-range
// that leave at least min_leaf rows on each side of the label split.
inline std::vector<double> candidate_thresholds(const Eigen::Ref<const Eigen::VectorXd>& targets,
                                                const TreeConfig& cfg) {
  cfg.validate();
  const Index n = targets.size();
  if (n < 2) return {};

  std::vector<double> sorted(targets.data(), targets.data() + n);
  std::sort(sorted.begin(), sorted.end());
  const double y_min = sorted.front();
  const double y_max = sorted.back();
  if (y_max - y_min <= cfg.purity_eps) return {};

  std::vector<double> out;
  for (int i = 1; i <= cfg.n_thresholds; ++i) {
    const double q = static_cast<double>(i) / static_cast<double>(cfg.n_thresholds + 1);
    const double t = detail::sorted_quantile(sorted, q);
    if (!(t > y_min && t < y_max)) continue;
    const auto left_count =
        std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    if (left_count < cfg.min_leaf || n - left_count < cfg.min_leaf) continue;
    if (!out.empty() && out.back() == t) continue;  // sorted scan: dedupe neighbors
    out.push_back(t);
  }
  return out;
}

// Scores the label split y <= t on a node's data: trains the classifier on
// the threshold labels, fits one regressor per side, and reports the SSE
// reduction against the parent fit. Mixup, when enabled, augments the fits
// but never the error accounting.
inline SplitCandidate evaluate_split(const Dataset& node_data, double t, const TreeConfig& cfg,
                                     std::optional<double> parent_sse = std::nullopt) {
  cfg.validate();
  auto [left, right] = detail::partition_by_label(node_data.targets(), t);
  if (static_cast<Index>(left.size()) < cfg.min_leaf ||
      static_cast<Index>(right.size()) < cfg.min_leaf)
    throw ConfigError("evaluate_split: threshold " + std::to_string(t) +
                      " leaves a side smaller than min_leaf");

  const Dataset fit_data = detail::augment_for_node(node_data, cfg, 0);
  double base = 0.0;
  if (parent_sse.has_value()) {
    base = *parent_sse;
  } else {
    const LinearRegressor parent = fit_regressor(fit_data, cfg.fit);
    base = detail::model_sse(parent, node_data.features(), node_data.targets());
  }
  return detail::score_candidate(node_data, fit_data, t, cfg, base);
}

namespace detail {

inline int build_node(TlmTree& tree, const Dataset& data, int depth) {
  const TreeConfig& cfg = tree.config;
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();

  const Dataset fit_data = augment_for_node(data, cfg, id);
  const LinearRegressor regressor = fit_regressor(fit_data, cfg.fit);
  const double sse = model_sse(regressor, data.features(), data.targets());

  {
    TlmNode& node = tree.nodes[static_cast<std::size_t>(id)];
    node.id = id;
    node.depth = depth;
    node.regressor = regressor;
    node.train_count = data.size();
    node.train_sse = sse;
    node.train_mae = model_mae(regressor, data.features(), data.targets());
  }

  const double y_range = data.targets().maxCoeff() - data.targets().minCoeff();
  bool make_leaf = depth >= cfg.max_depth || y_range <= cfg.purity_eps;

  SplitCandidate best;
  best.reduction = -std::numeric_limits<double>::infinity();
  if (!make_leaf) {
    const auto thresholds = candidate_thresholds(data.targets(), cfg);
    for (double t : thresholds) {
      SplitCandidate cand = score_candidate(data, fit_data, t, cfg, sse);
      if (cand.reduction > best.reduction) best = cand;
    }
    // no legal candidate, or the best split does not reduce training error
    if (thresholds.empty() || best.reduction <= 0.0) make_leaf = true;
  }

  std::vector<Index> left_rows, right_rows;
  if (!make_leaf) {
    if (cfg.partition == PartitionRule::Label) {
      std::tie(left_rows, right_rows) = partition_by_label(data.targets(), best.threshold);
    } else {
      for (Index i = 0; i < data.size(); ++i)
        (classify(best.classifier, data.row(i)).goes_left ? left_rows : right_rows).push_back(i);
      if (static_cast<Index>(left_rows.size()) < cfg.min_leaf ||
          static_cast<Index>(right_rows.size()) < cfg.min_leaf)
        make_leaf = true;  // classifier routing collapsed a side
    }
  }

  if (make_leaf) {
    ++tree.leaf_count;
    return id;
  }

  tree.nodes[static_cast<std::size_t>(id)].threshold = best.threshold;
  tree.nodes[static_cast<std::size_t>(id)].classifier = best.classifier;
  const Dataset left_data = data.subset(left_rows);
  const Dataset right_data = data.subset(right_rows);
  // children may reallocate the arena; write back through the index
  const int left_id = build_node(tree, left_data, depth + 1);
  tree.nodes[static_cast<std::size_t>(id)].left = left_id;
  const int right_id = build_node(tree, right_data, depth + 1);
  tree.nodes[static_cast<std::size_t>(id)].right = right_id;
  return id;
}

}  // namespace detail

// Recursive greedy construction: at each node, scan candidate thresholds on
// the response variable, keep the split with the largest SSE reduction, and
// recurse on the two sides until a stopping rule fires (max depth, purity,
// no legal candidates, or no positive reduction).
inline TlmTree build_tree(const Dataset& data, const TreeConfig& cfg) {
  cfg.validate();
  TlmTree tree;
  tree.dim = data.dim();
  tree.config = cfg;
  tree.nodes.reserve(64);
  detail::build_node(tree, data, 0);
  return tree;
}

// One halfspace constraint along a root-to-leaf path. `left` means the path
// took the left branch, i.e. w.f + c >= 0 holds inside the cell.
struct Halfspace {
  Eigen::VectorXd w;
  double c = 0.0;
  bool left = true;

  bool contains(const Eigen::Ref<const Eigen::VectorXd>& f) const {
    const double z = w.dot(f) + c;
    return left ? z >= 0.0 : z < 0.0;
  }
};

struct LeafCell {
  int leaf_id = 0;
  std::vector<Halfspace> constraints;  // root-to-leaf order
  LinearRegressor regressor;
};

// The tessellation: each leaf as the intersection of the halfspaces along
// its path. Cells are convex, disjoint, and cover the space.
inline std::vector<LeafCell> leaf_cells(const TlmTree& tree) {
  std::vector<LeafCell> cells;
  std::vector<Halfspace> path;

  auto walk = [&](auto&& self, int id) -> void {
    const TlmNode& node = tree.nodes[static_cast<std::size_t>(id)];
    if (node.is_leaf()) {
      cells.push_back(LeafCell{node.id, path, node.regressor});
      return;
    }
    path.push_back(Halfspace{node.classifier.w, node.classifier.c, true});
    self(self, node.left);
    path.back().left = false;
    self(self, node.right);
    path.pop_back();
  };
  walk(walk, 0);
  return cells;
}

// Total training SSE of the tree truncated at each depth 0..max depth:
// at truncation depth k the frontier is every leaf at depth <= k plus every
// internal node at depth exactly k.
inline std::vector<double> training_sse_by_depth(const TlmTree& tree) {
  const int depth_max = tree.max_node_depth();
  std::vector<double> out(static_cast<std::size_t>(depth_max) + 1, 0.0);
  for (const auto& node : tree.nodes) {
    for (int k = 0; k <= depth_max; ++k) {
      const bool frontier =
          (node.is_leaf() && node.depth <= k) || (!node.is_leaf() && node.depth == k);
      if (frontier) out[static_cast<std::size_t>(k)] += node.train_sse;
    }
  }
  return out;
}

}  // namespace tlm
