#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "test_support.hpp"
#include "tlm/tlm.hpp"

using namespace tlm;
using Catch::Approx;

namespace {

TreeConfig small_tree_config() {
  TreeConfig cfg;
  cfg.min_leaf = 5;
  cfg.fit.ridge_lambda = 1e-8;
  return cfg;
}

}  // namespace

TEST_CASE("candidate_thresholds lie at interior quantiles") {
  Eigen::VectorXd y(39);
  for (Index i = 0; i < 39; ++i) y(i) = 20.0 + static_cast<double>(i);  // 20..58
  TreeConfig cfg = small_tree_config();
  cfg.n_thresholds = 3;
  cfg.min_leaf = 1;

  const auto thresholds = candidate_thresholds(y, cfg);
  REQUIRE(thresholds.size() == 3);
  std::vector<double> values(y.data(), y.data() + y.size());
  for (std::size_t i = 0; i < 3; ++i) {
    const double q = static_cast<double>(i + 1) / 4.0;
    CHECK(thresholds[i] == Approx(test_support::quantile_oracle(values, q)).margin(1e-12));
    CHECK(thresholds[i] > 20.0);
    CHECK(thresholds[i] < 58.0);
  }
}

TEST_CASE("candidate_thresholds is empty for pure nodes") {
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(30, 12.5);
  CHECK(candidate_thresholds(y, small_tree_config()).empty());
}

TEST_CASE("candidate_thresholds respects min_leaf") {
  Eigen::VectorXd y(4);
  y << 10, 10, 10, 50;
  TreeConfig cfg = small_tree_config();
  cfg.min_leaf = 2;
  cfg.n_thresholds = 20;
  CHECK(candidate_thresholds(y, cfg).empty());
}

TEST_CASE("candidate_thresholds deduplicates repeated quantiles") {
  Eigen::VectorXd y(40);
  for (Index i = 0; i < 40; ++i) y(i) = i < 20 ? 1.0 : 2.0;
  TreeConfig cfg = small_tree_config();
  cfg.n_thresholds = 15;
  cfg.min_leaf = 1;
  const auto thresholds = candidate_thresholds(y, cfg);
  for (std::size_t i = 1; i < thresholds.size(); ++i)
    CHECK(thresholds[i] > thresholds[i - 1]);
}

TEST_CASE("evaluate_split on exactly affine data yields no reduction") {
  std::mt19937_64 rng(61);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd X(60, 2);
  for (Index i = 0; i < 60; ++i)
    for (Index j = 0; j < 2; ++j) X(i, j) = gauss(rng);
  const Eigen::VectorXd y = X * Eigen::Vector2d(1.5, -2.0) + Eigen::VectorXd::Constant(60, 3.0);
  const Dataset data(X, y);

  TreeConfig cfg = small_tree_config();
  const double t = y.sum() / 60.0;
  const SplitCandidate cand = evaluate_split(data, t, cfg);
  CHECK(std::abs(cand.reduction) < 1e-9);
}

TEST_CASE("evaluate_split separates the two-segment dataset cleanly") {
  const Dataset data = generate_synthetic(test_support::two_segment_spec(), 120, 0.0, 5);
  TreeConfig cfg = small_tree_config();
  const SplitCandidate cand = evaluate_split(data, 5.0, cfg);

  CHECK(cand.left_count + cand.right_count == data.size());
  CHECK(cand.left_sse < 1e-9);
  CHECK(cand.right_sse < 1e-9);

  const LinearRegressor parent = fit_regressor(data, cfg.fit);
  const double parent_sse =
      (parent.predict_batch(data.features()) - data.targets()).squaredNorm();
  CHECK(cand.reduction == Approx(parent_sse).epsilon(1e-6));
  CHECK(cand.reduction > 0.0);
}

TEST_CASE("evaluate_split reduction is never meaningfully negative") {
  std::mt19937_64 rng(71);
  for (int rep = 0; rep < 10; ++rep) {
    const Dataset data = test_support::random_piecewise_data(150, 3, 2.0, rng());
    TreeConfig cfg = small_tree_config();
    cfg.fit.ridge_lambda = 0.0;  // exact least squares for the optimality bound
    const LinearRegressor parent = fit_regressor(data, cfg.fit);
    const double parent_sse =
        (parent.predict_batch(data.features()) - data.targets()).squaredNorm();
    for (double t : candidate_thresholds(data.targets(), cfg)) {
      const SplitCandidate cand = evaluate_split(data, t, cfg, parent_sse);
      CHECK(cand.reduction >= -1e-9 * parent_sse);
    }
  }
}

TEST_CASE("evaluate_split rejects thresholds violating min_leaf") {
  const Dataset data = test_support::random_piecewise_data(50, 2, 1.0, 3);
  TreeConfig cfg = small_tree_config();
  cfg.min_leaf = 10;
  const double t = data.targets().minCoeff();  // everything on one side
  CHECK_THROWS_AS(evaluate_split(data, t, cfg), ConfigError);
}

TEST_CASE("depth-0 tree equals plain linear regression") {
  const Dataset data = test_support::random_linear_data(80, 4, 0.3, 13);
  TreeConfig cfg = small_tree_config();
  cfg.max_depth = 0;
  const TlmTree tree = build_tree(data, cfg);

  CHECK(tree.leaf_count == 1);
  CHECK(tree.nodes.size() == 1);

  const LinearRegressor direct = fit_regressor(data, cfg.fit);
  for (Index i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd f = data.row(i);
    CHECK(predict_hard(tree, f).prediction == direct.predict(f));
  }
}

TEST_CASE("build_tree recovers the two-segment split at depth 1") {
  const Dataset data = generate_synthetic(test_support::two_segment_spec(), 200, 0.0, 5);
  TreeConfig cfg = small_tree_config();
  cfg.max_depth = 1;
  // continuous targets: a candidate per adjacent sorted pair guarantees one
  // falls in the response gap between the segments
  cfg.n_thresholds = static_cast<int>(data.size()) - 1;
  const TlmTree tree = build_tree(data, cfg);

  REQUIRE(tree.leaf_count == 2);
  const TlmNode& root = tree.root();
  REQUIRE_FALSE(root.is_leaf());
  CHECK(root.threshold > 1.0);
  CHECK(root.threshold < 12.0);

  double sse = 0.0;
  for (Index i = 0; i < data.size(); ++i) {
    const double err = predict_hard(tree, data.row(i)).prediction - data.targets()(i);
    sse += err * err;
  }
  CHECK(sse / static_cast<double>(data.size()) < 1e-9);
}

TEST_CASE("build_tree recovers a depth-2 tessellation exactly") {
  const auto spec = test_support::recovery_spec();
  const Dataset train = generate_synthetic(spec, 2000, 0.0, 31);
  const TreeConfig cfg = test_support::recovery_config(train.size());
  const TlmTree tree = build_tree(train, cfg);

  CHECK(tree.leaf_count >= 3);
  const BatchResult result = predict_batch(tree, train, RoutingMode::Hard);
  const double mse = result.overall.rmse * result.overall.rmse;
  CHECK(mse < 1e-6);
}

TEST_CASE("internal thresholds stay strictly inside the node y-range") {
  const Dataset data = test_support::random_piecewise_data(400, 3, 1.0, 77);
  const TlmTree tree = build_tree(data, small_tree_config());
  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) continue;
    const auto& left = tree.nodes[static_cast<std::size_t>(node.left)];
    const auto& right = tree.nodes[static_cast<std::size_t>(node.right)];
    CHECK(left.train_count + right.train_count == node.train_count);
    CHECK(left.train_count >= tree.config.min_leaf);
    CHECK(right.train_count >= tree.config.min_leaf);
  }
}

TEST_CASE("training SSE is non-increasing with depth") {
  std::mt19937_64 rng(83);
  for (int rep = 0; rep < 3; ++rep) {
    const Dataset data = test_support::random_piecewise_data(300, 4, 1.0, rng());
    double previous = std::numeric_limits<double>::infinity();
    for (int depth = 0; depth <= 4; ++depth) {
      TreeConfig cfg;
      cfg.max_depth = depth;
      cfg.min_leaf = 10;
      const TlmTree tree = build_tree(data, cfg);
      double total = 0.0;
      for (const auto& node : tree.nodes)
        if (node.is_leaf()) total += node.train_sse;
      CHECK(total <= previous + 1e-9);
      previous = total;
    }
  }
}

TEST_CASE("training_sse_by_depth matches per-depth rebuilds") {
  const Dataset data = test_support::random_piecewise_data(300, 3, 1.0, 19);
  TreeConfig cfg;
  cfg.min_leaf = 10;
  cfg.max_depth = 3;
  const TlmTree full = build_tree(data, cfg);
  const auto by_depth = training_sse_by_depth(full);

  for (int depth = 0; depth < static_cast<int>(by_depth.size()); ++depth) {
    TreeConfig truncated = cfg;
    truncated.max_depth = depth;
    const TlmTree tree = build_tree(data, truncated);
    double total = 0.0;
    for (const auto& node : tree.nodes)
      if (node.is_leaf()) total += node.train_sse;
    CHECK(by_depth[static_cast<std::size_t>(depth)] == Approx(total).epsilon(1e-12));
  }
}

TEST_CASE("leaf_cells of trivial trees") {
  const Dataset data = test_support::random_linear_data(50, 2, 0.2, 7);

  TreeConfig depth0 = small_tree_config();
  depth0.max_depth = 0;
  const auto single = leaf_cells(build_tree(data, depth0));
  REQUIRE(single.size() == 1);
  CHECK(single[0].constraints.empty());

  const Dataset segments = generate_synthetic(test_support::two_segment_spec(), 150, 0.0, 5);
  TreeConfig depth1 = small_tree_config();
  depth1.max_depth = 1;
  const auto cells = leaf_cells(build_tree(segments, depth1));
  REQUIRE(cells.size() == 2);
  REQUIRE(cells[0].constraints.size() == 1);
  REQUIRE(cells[1].constraints.size() == 1);
  CHECK(cells[0].constraints[0].w == cells[1].constraints[0].w);
  CHECK(cells[0].constraints[0].left != cells[1].constraints[0].left);
}

TEST_CASE("hard routing agrees with halfspace membership") {
  const Dataset data = test_support::random_piecewise_data(400, 3, 1.0, 29);
  const TlmTree tree = build_tree(data, small_tree_config());
  const auto cells = leaf_cells(tree);

  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> unit(-1.5, 1.5);
  for (int rep = 0; rep < 1000; ++rep) {
    Eigen::VectorXd f(3);
    for (Index j = 0; j < 3; ++j) f(j) = unit(rng);
    const int routed = predict_hard(tree, f).leaf_id;

    int matches = 0;
    int matched_leaf = -1;
    for (const auto& cell : cells) {
      bool inside = true;
      for (const auto& constraint : cell.constraints)
        if (!constraint.contains(f)) {
          inside = false;
          break;
        }
      if (inside) {
        ++matches;
        matched_leaf = cell.leaf_id;
      }
    }
    CHECK(matches == 1);
    CHECK(matched_leaf == routed);
  }
}

TEST_CASE("cells are convex: segments between same-leaf points stay inside") {
  const Dataset data = test_support::random_piecewise_data(300, 2, 1.0, 37);
  const TlmTree tree = build_tree(data, small_tree_config());

  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  int checked = 0;
  while (checked < 200) {
    Eigen::Vector2d a(unit(rng), unit(rng)), b(unit(rng), unit(rng));
    const int leaf_a = predict_hard(tree, a).leaf_id;
    if (leaf_a != predict_hard(tree, b).leaf_id) continue;
    ++checked;
    for (double alpha : {0.25, 0.5, 0.75}) {
      const Eigen::Vector2d mid = alpha * a + (1 - alpha) * b;
      CHECK(predict_hard(tree, mid).leaf_id == leaf_a);
    }
  }
}

TEST_CASE("build_tree is deterministic") {
  const Dataset data = test_support::random_piecewise_data(250, 3, 1.0, 53);
  TreeConfig cfg = small_tree_config();
  cfg.mixup.enabled = true;
  cfg.seed = 99;
  const TlmTree a = build_tree(data, cfg);
  const TlmTree b = build_tree(data, cfg);
  REQUIRE(a.nodes.size() == b.nodes.size());
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    CHECK(a.nodes[i].regressor.r == b.nodes[i].regressor.r);
    CHECK(a.nodes[i].regressor.b == b.nodes[i].regressor.b);
    CHECK(a.nodes[i].threshold == b.nodes[i].threshold);
    CHECK(a.nodes[i].left == b.nodes[i].left);
  }
}

TEST_CASE("mixup augmentation keeps error accounting on original rows") {
  const Dataset data = test_support::random_piecewise_data(200, 2, 0.5, 67);
  TreeConfig plain = small_tree_config();
  TreeConfig mixed = plain;
  mixed.mixup.enabled = true;
  mixed.mixup.similarity_window = 1.0;
  mixed.seed = 5;

  const TlmTree tree = build_tree(data, mixed);
  // diagnostics must count only the original rows
  CHECK(tree.root().train_count == data.size());
  const TlmTree baseline = build_tree(data, plain);
  CHECK(baseline.root().train_count == data.size());
}

TEST_CASE("classifier partition rule still produces a valid tree") {
  const Dataset data = generate_synthetic(test_support::recovery_spec(), 800, 0.0, 3);
  TreeConfig cfg = test_support::recovery_config(data.size());
  cfg.partition = PartitionRule::Classifier;
  const TlmTree tree = build_tree(data, cfg);
  CHECK(tree.leaf_count >= 2);
  const BatchResult result = predict_batch(tree, data, RoutingMode::Hard);
  CHECK(result.overall.rmse < 1.0);  // near recovery; exactness not required
}
