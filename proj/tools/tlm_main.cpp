// tlm: train, evaluate, and inspect tessellated linear models from the
// command line. Subcommands: generate, train, evaluate, inspect, tessellate,
// baselines. Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 numeric failure.

#include <CLI11.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tlm/tlm.hpp"

namespace {

using nlohmann::json;
using namespace tlm;

int log_level() {
  const char* env = std::getenv("TLM_LOG");
  if (!env) return 1;
  const std::string v(env);
  if (v == "quiet") return 0;
  if (v == "debug") return 2;
  return 1;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[tlm] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[tlm:debug] " << msg << "\n";
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json metrics_to_json(const Metrics& m) {
  return {{"count", m.count}, {"mae", m.mae}, {"rmse", m.rmse}};
}

void write_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << j.dump(2) << "\n";
}

// Shared option bundles --------------------------------------------------

struct TreeFlags {
  int max_depth = 4;
  long min_leaf = 20;
  int n_thresholds = 15;
  double purity_eps = 1e-9;
  double ridge_lambda = 1e-3;
  double logit_l2 = 1e-4;
  int max_iters = 500;
  double tol = 1e-6;
  double step = 1.0;
  bool mixup = false;
  double mixup_window = 2.0;
  double mixup_alpha = 0.4;
  double mixup_multiplier = 1.0;
  std::string partition_by = "label";

  void attach(CLI::App& cmd) {
    cmd.add_option("--max-depth", max_depth, "Maximum tree depth");
    cmd.add_option("--min-leaf", min_leaf, "Smallest allowed child node");
    cmd.add_option("--n-thresholds", n_thresholds, "Candidate threshold grid size");
    cmd.add_option("--purity-eps", purity_eps, "Response range treated as pure");
    cmd.add_option("--ridge-lambda", ridge_lambda, "L2 strength for node regressors");
    cmd.add_option("--logit-l2", logit_l2, "L2 strength for node classifiers");
    cmd.add_option("--max-iters", max_iters, "Classifier gradient-descent iteration cap");
    cmd.add_option("--tol", tol, "Classifier gradient-norm stopping threshold");
    cmd.add_option("--step", step, "Classifier initial step size");
    cmd.add_flag("--mixup", mixup, "Augment node fits with similarity mixup");
    cmd.add_option("--mixup-window", mixup_window, "Max |y_i - y_j| between mixed partners");
    cmd.add_option("--mixup-alpha", mixup_alpha, "Beta(alpha, alpha) mixing shape");
    cmd.add_option("--mixup-multiplier", mixup_multiplier, "Synthetic rows per original row");
    cmd.add_option("--partition-by", partition_by, "Child assignment rule: label|classifier")
        ->check(CLI::IsMember({"label", "classifier"}));
  }

  TreeConfig to_config(std::uint64_t seed) const {
    TreeConfig cfg;
    cfg.max_depth = max_depth;
    cfg.min_leaf = min_leaf;
    cfg.n_thresholds = n_thresholds;
    cfg.purity_eps = purity_eps;
    cfg.fit.ridge_lambda = ridge_lambda;
    cfg.fit.logit_l2 = logit_l2;
    cfg.fit.max_iters = max_iters;
    cfg.fit.tol = tol;
    cfg.fit.step = step;
    cfg.mixup.enabled = mixup;
    cfg.mixup.similarity_window = mixup_window;
    cfg.mixup.alpha = mixup_alpha;
    cfg.mixup.multiplier = mixup_multiplier;
    cfg.partition = partition_by == "label" ? PartitionRule::Label : PartitionRule::Classifier;
    cfg.seed = mix_seed(seed, 1);
    cfg.validate();
    return cfg;
  }
};

struct FeatureOptFlags {
  bool enabled = false;
  double learning_rate = 1e-3;
  int epochs = 50;
  long batch_size = 64;
  bool no_dropout = false;

  void attach(CLI::App& cmd) {
    cmd.add_flag("--feature-opt", enabled, "Train the residual feature net after the tree");
    cmd.add_option("--learning-rate", learning_rate, "Feature training step size");
    cmd.add_option("--epochs", epochs, "Feature training epochs");
    cmd.add_option("--batch-size", batch_size, "Feature training minibatch size");
    cmd.add_flag("--no-dropout", no_dropout, "Disable dropout during feature training");
  }

  TrainConfig to_config(std::uint64_t seed) const {
    TrainConfig cfg;
    cfg.learning_rate = learning_rate;
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.seed = mix_seed(seed, 2);
    cfg.dropout_enabled = !no_dropout;
    cfg.validate();
    return cfg;
  }
};

RoutingMode parse_mode(const std::string& mode) {
  if (mode == "hard") return RoutingMode::Hard;
  if (mode == "soft") return RoutingMode::Soft;
  if (mode == "oracle") return RoutingMode::Oracle;
  throw ConfigError("unknown routing mode '" + mode + "'");
}

SoftRule parse_soft_rule(const std::string& rule) {
  if (rule == "path") return SoftRule::Path;
  if (rule == "full") return SoftRule::Full;
  throw ConfigError("unknown soft rule '" + rule + "'");
}

// generate ----------------------------------------------------------------

struct GenerateArgs {
  std::string spec_path;
  std::string out_path;
  std::string target = "y";
  long n = 1000;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

void cmd_generate(const GenerateArgs& args) {
  const TessellationSpec spec = load_tessellation_spec(args.spec_path);
  const Dataset data = generate_synthetic(spec, args.n, args.noise, args.seed);
  save_csv(data, args.out_path, args.target);
  log_info("wrote " + std::to_string(data.size()) + " rows (d=" + std::to_string(data.dim()) +
           ") to " + args.out_path);
}

// train -------------------------------------------------------------------

struct TrainArgs {
  std::string data_path;
  std::string target = "y";
  std::string out_path;
  std::string report_path;
  std::string loss_curve_path;
  std::uint64_t seed = 0;
  bool iterate = false;
  TreeFlags tree;
  FeatureOptFlags feature_opt;
};

void cmd_train(const TrainArgs& args) {
  const Dataset data = load_csv(args.data_path, args.target);
  log_info("loaded " + std::to_string(data.size()) + " rows, d=" + std::to_string(data.dim()));

  const TreeConfig tree_cfg = args.tree.to_config(args.seed);
  const auto t0 = std::chrono::steady_clock::now();

  TlmModel model;
  model.tree = build_tree(data, tree_cfg);
  log_info("tree built: " + std::to_string(model.tree.leaf_count) + " leaves, " +
           std::to_string(model.tree.nodes.size()) + " nodes");

  json feature_report = nullptr;
  if (args.feature_opt.enabled) {
    const TrainConfig train_cfg = args.feature_opt.to_config(args.seed);
    FeatureTrainResult trained = train_features(model.tree, data, train_cfg);
    log_info("feature net trained: loss " + fmt_double(trained.loss_curve.front()) + " -> " +
             fmt_double(trained.loss_curve.back()));

    if (args.iterate) {
      // one extra round of the two-step optimization: rebuild the tree on
      // the optimized features
      const Dataset transformed(forward_batch(trained.net, data.features()), data.targets());
      model.tree = build_tree(transformed, tree_cfg);
      log_info("tree rebuilt on optimized features: " +
               std::to_string(model.tree.leaf_count) + " leaves");
    }
    model.net = std::move(trained.net);
    model.train_config = train_cfg;

    std::string curve_path = args.loss_curve_path;
    if (curve_path.empty()) curve_path = args.out_path + ".loss.csv";
    std::ofstream curve(curve_path);
    if (!curve) throw DataError("cannot write file: " + curve_path);
    curve << "epoch,loss\n";
    for (std::size_t e = 0; e < trained.loss_curve.size(); ++e)
      curve << e << "," << fmt_double(trained.loss_curve[e]) << "\n";
    feature_report = {{"epochs", train_cfg.epochs},
                      {"initial_loss", trained.loss_curve.front()},
                      {"final_loss", trained.loss_curve.back()},
                      {"loss_curve_file", curve_path}};
  }

  const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - t0)
                           .count();

  save_model(model, args.out_path);
  log_info("model written to " + args.out_path);

  json report;
  report["leaf_count"] = model.tree.leaf_count;
  report["node_count"] = model.tree.nodes.size();
  report["max_depth_reached"] = model.tree.max_node_depth();
  report["per_depth_training_sse"] = training_sse_by_depth(model.tree);
  report["wall_time_ms"] = elapsed;
  report["feature_opt"] = feature_report;
  report["train_rows"] = data.size();
  report["dim"] = data.dim();

  std::string report_path = args.report_path;
  if (report_path.empty()) report_path = args.out_path + ".report.json";
  write_json_file(report, report_path);
  log_debug("report written to " + report_path);
}

// evaluate ----------------------------------------------------------------

struct EvaluateArgs {
  std::string model_path;
  std::string data_path;
  std::string target = "y";
  std::string mode = "hard";
  std::string soft_rule = "path";
  std::string metrics_path;
  std::string predictions_path;
};

void cmd_evaluate(const EvaluateArgs& args) {
  const TlmModel model = load_model(args.model_path);
  const RoutingMode mode = parse_mode(args.mode);
  const SoftRule rule = parse_soft_rule(args.soft_rule);
  const bool has_target = csv_has_column(args.data_path, args.target);

  if (!has_target) {
    if (mode == RoutingMode::Oracle)
      throw DataError("oracle mode requires target column '" + args.target + "' in " +
                      args.data_path);
    if (!args.metrics_path.empty())
      throw DataError("metrics require target column '" + args.target + "' in " +
                      args.data_path);

    const Eigen::MatrixXd features = load_features_csv(args.data_path);
    if (features.cols() != model.dim())
      throw DataError("data dim " + std::to_string(features.cols()) + " != model dim " +
                      std::to_string(model.dim()));
    if (!args.predictions_path.empty()) {
      std::ofstream out(args.predictions_path);
      if (!out) throw DataError("cannot write file: " + args.predictions_path);
      out << "row,prediction,leaf\n";
      for (Index i = 0; i < features.rows(); ++i) {
        const Eigen::VectorXd f = features.row(i).transpose();
        const double pred = mode == RoutingMode::Soft ? model_predict_soft(model, f, rule)
                                                      : model_predict_hard(model, f).prediction;
        out << i << "," << fmt_double(pred) << "," << model_predict_hard(model, f).leaf_id
            << "\n";
      }
    }
    log_info("predictions written (no targets in input, metrics skipped)");
    return;
  }

  const Dataset data = load_csv(args.data_path, args.target);
  if (data.dim() != model.dim())
    throw DataError("data dim " + std::to_string(data.dim()) + " != model dim " +
                    std::to_string(model.dim()));

  const BatchResult result = model_predict_batch(model, data, mode, rule);
  log_info("mode=" + args.mode + " mae=" + fmt_double(result.overall.mae) +
           " rmse=" + fmt_double(result.overall.rmse));

  if (!args.metrics_path.empty()) {
    json per_leaf = json::object();
    for (const auto& [leaf, metrics] : result.per_leaf)
      per_leaf[std::to_string(leaf)] = metrics_to_json(metrics);
    json j = {{"mode", args.mode},
              {"soft_rule", args.soft_rule},
              {"overall", metrics_to_json(result.overall)},
              {"per_leaf", per_leaf}};
    write_json_file(j, args.metrics_path);
  }
  if (!args.predictions_path.empty()) {
    std::ofstream out(args.predictions_path);
    if (!out) throw DataError("cannot write file: " + args.predictions_path);
    out << "row,y_true,prediction,leaf\n";
    for (Index i = 0; i < data.size(); ++i)
      out << i << "," << fmt_double(data.targets()(i)) << ","
          << fmt_double(result.predictions(i)) << ","
          << result.leaf_ids[static_cast<std::size_t>(i)] << "\n";
  }
  if (args.metrics_path.empty() && args.predictions_path.empty())
    std::cout << json({{"mode", args.mode}, {"overall", metrics_to_json(result.overall)}}).dump(2)
              << "\n";
}

// inspect -----------------------------------------------------------------

struct InspectArgs {
  std::string model_path;
  std::string data_path;
  std::string target = "y";
  std::string json_path;
};

void cmd_inspect(const InspectArgs& args) {
  const TlmModel model = load_model(args.model_path);
  const TlmTree& tree = model.tree;

  // per-node test MAE under threshold (oracle) routing, matching how the
  // training-side diagnostics were accumulated
  std::vector<double> test_abs(tree.nodes.size(), 0.0);
  std::vector<long> test_count(tree.nodes.size(), 0);
  bool have_test = false;
  if (!args.data_path.empty()) {
    const Dataset raw = load_csv(args.data_path, args.target);
    if (raw.dim() != model.dim())
      throw DataError("data dim " + std::to_string(raw.dim()) + " != model dim " +
                      std::to_string(model.dim()));
    const Eigen::MatrixXd transformed = model.transform_batch(raw.features());
    for (Index i = 0; i < raw.size(); ++i) {
      const Eigen::VectorXd f = transformed.row(i).transpose();
      const double y = raw.targets()(i);
      const TlmNode* node = &tree.root();
      while (true) {
        const auto id = static_cast<std::size_t>(node->id);
        test_abs[id] += std::abs(node->regressor.predict(f) - y);
        ++test_count[id];
        if (node->is_leaf()) break;
        node = &tree.nodes[static_cast<std::size_t>(y <= node->threshold ? node->left
                                                                         : node->right)];
      }
    }
    have_test = true;
  }

  json nodes_json = json::array();
  auto render = [&](auto&& self, int id, int indent) -> void {
    const TlmNode& node = tree.nodes[static_cast<std::size_t>(id)];
    const auto uid = static_cast<std::size_t>(id);
    std::string line(static_cast<std::size_t>(indent) * 2, ' ');
    line += "[" + std::to_string(node.id) + "] depth=" + std::to_string(node.depth);
    line += node.is_leaf() ? " leaf" : " t<=" + std::to_string(node.threshold);
    line += " n=" + std::to_string(node.train_count);
    char buf[64];
    std::snprintf(buf, sizeof(buf), " train_mae=%.4f", node.train_mae);
    line += buf;
    if (have_test && test_count[uid] > 0) {
      std::snprintf(buf, sizeof(buf), " test_mae=%.4f",
                    test_abs[uid] / static_cast<double>(test_count[uid]));
      line += buf;
    }
    std::cout << line << "\n";

    json nj = {{"id", node.id},
               {"depth", node.depth},
               {"leaf", node.is_leaf()},
               {"train_count", node.train_count},
               {"train_mae", node.train_mae},
               {"train_sse", node.train_sse}};
    if (!node.is_leaf()) nj["threshold"] = node.threshold;
    if (have_test && test_count[uid] > 0) {
      nj["test_mae"] = test_abs[uid] / static_cast<double>(test_count[uid]);
      nj["test_count"] = test_count[uid];
    }
    nodes_json.push_back(nj);

    if (!node.is_leaf()) {
      self(self, node.left, indent + 1);
      self(self, node.right, indent + 1);
    }
  };
  render(render, 0, 0);

  if (!args.json_path.empty()) {
    json j = {{"leaf_count", tree.leaf_count},
              {"dim", tree.dim},
              {"has_feature_net", model.net.has_value()},
              {"nodes", nodes_json}};
    write_json_file(j, args.json_path);
  }
}

// tessellate ----------------------------------------------------------------

struct TessellateArgs {
  std::string model_path;
  std::string out_path;
  std::vector<Index> axes = {0, 1};
  std::vector<double> anchor;
  long resolution = 50;
  int depth = -1;
  double x_min = -1.0, x_max = 1.0, y_min = -1.0, y_max = 1.0;
};

void cmd_tessellate(const TessellateArgs& args) {
  const TlmModel model = load_model(args.model_path);
  if (model.dim() < 2) throw ConfigError("tessellate requires a model with dim >= 2");
  if (args.axes.size() != 2 || args.axes[0] == args.axes[1])
    throw ConfigError("tessellate needs two distinct axes");
  for (Index axis : args.axes)
    if (axis < 0 || axis >= model.dim())
      throw ConfigError("axis " + std::to_string(axis) + " out of range for dim " +
                        std::to_string(model.dim()));
  if (args.resolution < 2) throw ConfigError("resolution must be >= 2");

  Eigen::VectorXd anchor = Eigen::VectorXd::Zero(model.dim());
  if (!args.anchor.empty()) {
    if (static_cast<Index>(args.anchor.size()) != model.dim())
      throw ConfigError("anchor needs one value per model dimension");
    anchor = Eigen::Map<const Eigen::VectorXd>(args.anchor.data(),
                                               static_cast<Index>(args.anchor.size()));
  }

  std::ofstream out(args.out_path);
  if (!out) throw DataError("cannot write file: " + args.out_path);
  out << "x1,x2,leaf,prediction\n";
  const long r = args.resolution;
  for (long i = 0; i < r; ++i) {
    const double x1 = args.x_min + (args.x_max - args.x_min) * static_cast<double>(i) /
                                       static_cast<double>(r - 1);
    for (long j = 0; j < r; ++j) {
      const double x2 = args.y_min + (args.y_max - args.y_min) * static_cast<double>(j) /
                                         static_cast<double>(r - 1);
      Eigen::VectorXd f = anchor;
      f(args.axes[0]) = x1;
      f(args.axes[1]) = x2;
      const HardResult hr = model_predict_hard(model, f, args.depth);
      out << fmt_double(x1) << "," << fmt_double(x2) << "," << hr.leaf_id << ","
          << fmt_double(hr.prediction) << "\n";
    }
  }
  log_info("grid written to " + args.out_path);
}

// baselines -----------------------------------------------------------------

struct BaselinesArgs {
  std::string train_path;
  std::string test_path;
  std::string target = "y";
  std::string out_path;
  int k = 10;
  std::vector<Index> mlp_hidden = {128, 128};
  int mlp_epochs = 200;
  double mlp_learning_rate = 1e-3;
  long mlp_batch_size = 64;
  std::uint64_t seed = 0;
  TreeFlags tree;
};

void cmd_baselines(const BaselinesArgs& args) {
  const Dataset train = load_csv(args.train_path, args.target);
  std::optional<Dataset> test;
  if (!args.test_path.empty()) {
    test = load_csv(args.test_path, args.target);
    if (test->dim() != train.dim()) throw DataError("train/test dimension mismatch");
  }

  json results = json::object();
  auto record = [&](const std::string& name, auto&& predictor) {
    json entry = json::object();
    Eigen::VectorXd train_pred(train.size());
    for (Index i = 0; i < train.size(); ++i) train_pred(i) = predictor(train, i);
    entry["train"] = metrics_to_json(compute_metrics(train_pred, train.targets()));
    if (test) {
      Eigen::VectorXd test_pred(test->size());
      for (Index i = 0; i < test->size(); ++i) test_pred(i) = predictor(*test, i);
      entry["test"] = metrics_to_json(compute_metrics(test_pred, test->targets()));
    }
    results[name] = entry;
    log_info(name + " done");
  };

  const FitConfig fit = args.tree.to_config(args.seed).fit;

  const MeanPredictor mean = fit_mean(train);
  record("common_sense", [&](const Dataset& d, Index i) { return mean.predict(d.row(i)); });

  const LinearRegressor lr = fit_regressor(train, fit);
  record("linear_regression", [&](const Dataset& d, Index i) { return lr.predict(d.row(i)); });

  const KMeansLR km = fit_kmeans_lr(train, args.k, mix_seed(args.seed, 3), fit);
  record("kmeans_lr", [&](const Dataset& d, Index i) { return km.predict(d.row(i)); });

  TrainConfig mlp_cfg;
  mlp_cfg.epochs = args.mlp_epochs;
  mlp_cfg.learning_rate = args.mlp_learning_rate;
  mlp_cfg.batch_size = args.mlp_batch_size;
  mlp_cfg.seed = mix_seed(args.seed, 4);
  mlp_cfg.dropout_enabled = false;
  const MlpRegressor mlp = fit_mlp(train, mlp_cfg, args.mlp_hidden).model;
  record("mlp", [&](const Dataset& d, Index i) { return mlp.predict(d.row(i)); });

  const TlmTree tree = build_tree(train, args.tree.to_config(args.seed));
  record("tlm_hard",
         [&](const Dataset& d, Index i) { return predict_hard(tree, d.row(i)).prediction; });
  record("tlm_soft", [&](const Dataset& d, Index i) { return predict_soft(tree, d.row(i)); });
  record("tlm_oracle", [&](const Dataset& d, Index i) {
    return predict_oracle(tree, d.row(i), d.targets()(i));
  });

  results["config"] = {{"k", args.k}, {"seed", args.seed}, {"target", args.target}};
  if (args.out_path.empty())
    std::cout << results.dump(2) << "\n";
  else
    write_json_file(results, args.out_path);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tessellated linear models: piecewise-linear regression via "
               "response-threshold tessellation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a TOML/INI config file");
  app.allow_config_extras(false);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Sample a synthetic dataset from a spec");
  generate->add_option("--spec", gen.spec_path, "Tessellation spec JSON")->required();
  generate->add_option("--out", gen.out_path, "Output CSV path")->required();
  generate->add_option("--n", gen.n, "Number of rows");
  generate->add_option("--noise", gen.noise, "Gaussian noise standard deviation");
  generate->add_option("--seed", gen.seed, "RNG seed");
  generate->add_option("--target", gen.target, "Target column name");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Build a tessellated linear model");
  train_cmd->add_option("--data", train.data_path, "Training CSV")->required();
  train_cmd->add_option("--target", train.target, "Target column name");
  train_cmd->add_option("--out", train.out_path, "Model JSON output path")->required();
  train_cmd->add_option("--report", train.report_path,
                        "Training report path (default: <out>.report.json)");
  train_cmd->add_option("--loss-curve", train.loss_curve_path,
                        "Feature-opt loss curve CSV (default: <out>.loss.csv)");
  train_cmd->add_option("--seed", train.seed, "Master RNG seed");
  train_cmd->add_flag("--iterate", train.iterate,
                      "Rebuild the tree on optimized features after feature training");
  train.tree.attach(*train_cmd);
  train.feature_opt.attach(*train_cmd);

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a model on a dataset");
  eval_cmd->add_option("--model", eval.model_path, "Model JSON")->required();
  eval_cmd->add_option("--data", eval.data_path, "Evaluation CSV")->required();
  eval_cmd->add_option("--target", eval.target, "Target column name");
  eval_cmd->add_option("--mode", eval.mode, "Routing mode: hard|soft|oracle")
      ->check(CLI::IsMember({"hard", "soft", "oracle"}));
  eval_cmd->add_option("--soft-rule", eval.soft_rule, "Soft routing rule: path|full")
      ->check(CLI::IsMember({"path", "full"}));
  eval_cmd->add_option("--metrics-out", eval.metrics_path, "Metrics JSON output");
  eval_cmd->add_option("--predictions-out", eval.predictions_path, "Predictions CSV output");

  InspectArgs inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print the per-node tree report");
  inspect_cmd->add_option("--model", inspect.model_path, "Model JSON")->required();
  inspect_cmd->add_option("--data", inspect.data_path, "Optional test CSV for test MAE");
  inspect_cmd->add_option("--target", inspect.target, "Target column name");
  inspect_cmd->add_option("--json-out", inspect.json_path, "Report JSON output");

  TessellateArgs tess;
  auto* tess_cmd = app.add_subcommand("tessellate", "Export the leaf-cell grid for plotting");
  tess_cmd->add_option("--model", tess.model_path, "Model JSON")->required();
  tess_cmd->add_option("--out", tess.out_path, "Grid CSV output")->required();
  tess_cmd->add_option("--axes", tess.axes, "Two feature indices to vary")->expected(2);
  tess_cmd->add_option("--anchor", tess.anchor, "Fixed values for the remaining coordinates");
  tess_cmd->add_option("--resolution", tess.resolution, "Grid points per axis");
  tess_cmd->add_option("--depth", tess.depth, "Truncate routing at this depth (-1: full)");
  tess_cmd->add_option("--xmin", tess.x_min, "First axis lower bound");
  tess_cmd->add_option("--xmax", tess.x_max, "First axis upper bound");
  tess_cmd->add_option("--ymin", tess.y_min, "Second axis lower bound");
  tess_cmd->add_option("--ymax", tess.y_max, "Second axis upper bound");

  BaselinesArgs base;
  auto* base_cmd = app.add_subcommand("baselines", "Run the model comparison harness");
  base_cmd->add_option("--train", base.train_path, "Training CSV")->required();
  base_cmd->add_option("--test", base.test_path, "Optional test CSV");
  base_cmd->add_option("--target", base.target, "Target column name");
  base_cmd->add_option("--out", base.out_path, "Comparison JSON output (default: stdout)");
  base_cmd->add_option("--k", base.k, "k-means cluster count");
  base_cmd->add_option("--mlp-hidden", base.mlp_hidden, "MLP hidden layer widths");
  base_cmd->add_option("--mlp-epochs", base.mlp_epochs, "MLP training epochs");
  base_cmd->add_option("--mlp-learning-rate", base.mlp_learning_rate, "MLP step size");
  base_cmd->add_option("--mlp-batch-size", base.mlp_batch_size, "MLP minibatch size");
  base_cmd->add_option("--seed", base.seed, "Master RNG seed");
  base.tree.attach(*base_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (generate->parsed()) cmd_generate(gen);
    if (train_cmd->parsed()) cmd_train(train);
    if (eval_cmd->parsed()) cmd_evaluate(eval);
    if (inspect_cmd->parsed()) cmd_inspect(inspect);
    if (tess_cmd->parsed()) cmd_tessellate(tess);
    if (base_cmd->parsed()) cmd_baselines(base);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
