// End-to-end checks of the command-line binary. The harness passes the
// binary path through the TLM_CLI environment variable.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "test_support.hpp"
#include "tlm/tlm.hpp"

using namespace tlm;
using test_support::TempDir;

namespace {

std::string cli_path() {
  const char* env = std::getenv("TLM_CLI");
  REQUIRE(env != nullptr);
  return env;
}

int run(const std::string& args) {
  const std::string cmd = cli_path() + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

void write_recovery_csvs(const TempDir& dir) {
  const auto spec = test_support::recovery_spec();
  save_csv(generate_synthetic(spec, 600, 0.0, 3), dir.file("train.csv"));
  save_csv(generate_synthetic(spec, 200, 0.0, 4), dir.file("test.csv"));
}

}  // namespace

TEST_CASE("cli: depth-0 train equals plain linear regression") {
  TempDir dir("tlm-cli");
  const Dataset data = test_support::random_linear_data(120, 3, 0.4, 11);
  save_csv(data, dir.file("data.csv"));

  REQUIRE(run("train --data " + dir.file("data.csv") + " --out " + dir.file("m.json") +
              " --max-depth 0 --ridge-lambda 1e-6") == 0);

  const TlmModel model = load_model(dir.file("m.json"));
  FitConfig fit;
  fit.ridge_lambda = 1e-6;
  const LinearRegressor direct = fit_regressor(data, fit);
  for (Index i = 0; i < 20; ++i) {
    const Eigen::VectorXd f = data.row(i);
    CHECK(model_predict_hard(model, f).prediction == direct.predict(f));
  }
}

TEST_CASE("cli: identical seeds produce byte-identical model files") {
  TempDir dir("tlm-cli");
  write_recovery_csvs(dir);
  const std::string base = "train --data " + dir.file("train.csv") +
                           " --max-depth 2 --mixup --seed 17 --out ";
  REQUIRE(run(base + dir.file("a.json")) == 0);
  REQUIRE(run(base + dir.file("b.json")) == 0);
  CHECK(test_support::read_file(dir.file("a.json")) ==
        test_support::read_file(dir.file("b.json")));
  CHECK_FALSE(test_support::read_file(dir.file("a.json")).empty());
}

TEST_CASE("cli: exit codes distinguish error classes") {
  TempDir dir("tlm-cli");
  write_recovery_csvs(dir);

  CHECK(run("train --data " + dir.file("absent.csv") + " --out " + dir.file("x.json")) == 3);
  CHECK(run("train --data " + dir.file("train.csv") + " --out " + dir.file("x.json") +
            " --max-depth -2") == 2);
  CHECK(run("train --data " + dir.file("train.csv") + " --out " + dir.file("x.json") +
            " --no-such-flag") == 2);

  // oracle evaluation needs targets
  REQUIRE(run("train --data " + dir.file("train.csv") + " --out " + dir.file("m.json") +
              " --max-depth 1") == 0);
  std::ofstream(dir.file("features.csv")) << "f0,f1\n0.5,0.5\n";
  CHECK(run("evaluate --model " + dir.file("m.json") + " --data " + dir.file("features.csv") +
            " --mode oracle") == 3);

  std::ofstream(dir.file("corrupt.json")) << "{\"format_version\": 999}";
  CHECK(run("evaluate --model " + dir.file("corrupt.json") + " --data " +
            dir.file("test.csv")) == 3);
}

TEST_CASE("cli: evaluate writes metrics and predictions") {
  TempDir dir("tlm-cli");
  write_recovery_csvs(dir);
  REQUIRE(run("train --data " + dir.file("train.csv") + " --out " + dir.file("m.json") +
              " --max-depth 2 --n-thresholds 599") == 0);
  REQUIRE(run("evaluate --model " + dir.file("m.json") + " --data " + dir.file("test.csv") +
              " --mode hard --metrics-out " + dir.file("metrics.json") +
              " --predictions-out " + dir.file("preds.csv")) == 0);

  const auto metrics = nlohmann::json::parse(test_support::read_file(dir.file("metrics.json")));
  CHECK(metrics.at("overall").at("count").get<int>() == 200);
  CHECK(metrics.at("overall").at("mae").get<double>() < 0.01);

  std::ifstream preds(dir.file("preds.csv"));
  std::string header;
  std::getline(preds, header);
  CHECK(header == "row,y_true,prediction,leaf");
  int rows = 0;
  for (std::string line; std::getline(preds, line);) ++rows;
  CHECK(rows == 200);
}

TEST_CASE("cli: hard and soft agree on a depth-0 model") {
  TempDir dir("tlm-cli");
  const Dataset data = test_support::random_linear_data(80, 2, 0.4, 19);
  save_csv(data, dir.file("data.csv"));
  REQUIRE(run("train --data " + dir.file("data.csv") + " --out " + dir.file("m.json") +
              " --max-depth 0") == 0);
  REQUIRE(run("evaluate --model " + dir.file("m.json") + " --data " + dir.file("data.csv") +
              " --mode hard --predictions-out " + dir.file("hard.csv")) == 0);
  REQUIRE(run("evaluate --model " + dir.file("m.json") + " --data " + dir.file("data.csv") +
              " --mode soft --predictions-out " + dir.file("soft.csv")) == 0);
  CHECK(test_support::read_file(dir.file("hard.csv")) ==
        test_support::read_file(dir.file("soft.csv")));
}

TEST_CASE("cli: inspect reports one node per tree node") {
  TempDir dir("tlm-cli");
  write_recovery_csvs(dir);
  REQUIRE(run("train --data " + dir.file("train.csv") + " --out " + dir.file("m.json") +
              " --max-depth 0") == 0);
  REQUIRE(run("inspect --model " + dir.file("m.json") + " --json-out " +
              dir.file("report.json")) == 0);
  auto report = nlohmann::json::parse(test_support::read_file(dir.file("report.json")));
  CHECK(report.at("nodes").size() == 1);
  CHECK(report.at("leaf_count").get<int>() == 1);

  REQUIRE(run("train --data " + dir.file("train.csv") + " --out " + dir.file("m2.json") +
              " --max-depth 2 --n-thresholds 599") == 0);
  REQUIRE(run("inspect --model " + dir.file("m2.json") + " --data " + dir.file("test.csv") +
              " --json-out " + dir.file("report2.json")) == 0);
  report = nlohmann::json::parse(test_support::read_file(dir.file("report2.json")));
  CHECK(report.at("nodes").size() >= 3);
  long total = 0;
  for (const auto& node : report.at("nodes"))
    if (node.at("leaf").get<bool>()) total += node.at("train_count").get<long>();
  CHECK(total == 600);
  for (const auto& node : report.at("nodes")) {
    CHECK(node.at("train_mae").get<double>() >= 0.0);
    if (node.contains("test_mae")) CHECK(node.at("test_mae").get<double>() >= 0.0);
  }
}

TEST_CASE("cli: tessellate grid matches the trained partition") {
  TempDir dir("tlm-cli");
  const auto spec = test_support::two_segment_spec();
  // lift the 1-D segments into 2-D so tessellate has two axes
  const Dataset seg = generate_synthetic(spec, 300, 0.0, 9);
  Eigen::MatrixXd features(seg.size(), 2);
  features.col(0) = seg.features().col(0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (Index i = 0; i < seg.size(); ++i) features(i, 1) = unit(rng);
  save_csv(Dataset(features, seg.targets()), dir.file("data.csv"));

  REQUIRE(run("train --data " + dir.file("data.csv") + " --out " + dir.file("m.json") +
              " --max-depth 1 --n-thresholds 299 --min-leaf 5") == 0);
  REQUIRE(run("tessellate --model " + dir.file("m.json") + " --out " + dir.file("grid.csv") +
              " --resolution 25 --xmin 0 --xmax 3 --ymin -1 --ymax 1") == 0);

  std::ifstream grid(dir.file("grid.csv"));
  std::string line;
  std::getline(grid, line);
  CHECK(line == "x1,x2,leaf,prediction");
  std::set<std::string> leaves;
  int rows = 0;
  while (std::getline(grid, line)) {
    ++rows;
    std::stringstream ss(line);
    std::string x1, x2, leaf;
    std::getline(ss, x1, ',');
    std::getline(ss, x2, ',');
    std::getline(ss, leaf, ',');
    leaves.insert(leaf);
  }
  CHECK(rows == 25 * 25);
  CHECK(leaves.size() == 2);

  // depth truncation 0 collapses everything onto the root
  REQUIRE(run("tessellate --model " + dir.file("m.json") + " --out " + dir.file("grid0.csv") +
              " --resolution 5 --depth 0") == 0);
  std::ifstream grid0(dir.file("grid0.csv"));
  std::getline(grid0, line);
  std::set<std::string> roots;
  while (std::getline(grid0, line)) {
    std::stringstream ss(line);
    std::string x1, x2, leaf;
    std::getline(ss, x1, ',');
    std::getline(ss, x2, ',');
    std::getline(ss, leaf, ',');
    roots.insert(leaf);
  }
  CHECK(roots.size() == 1);

  CHECK(run("tessellate --model " + dir.file("m.json") + " --out " + dir.file("bad.csv") +
            " --axes 0 7") == 2);
}

TEST_CASE("cli: feature-opt with zero epochs stores a near-identity net") {
  TempDir dir("tlm-cli");
  write_recovery_csvs(dir);
  REQUIRE(run("train --data " + dir.file("train.csv") + " --out " + dir.file("m.json") +
              " --max-depth 1 --feature-opt --epochs 0") == 0);
  const TlmModel model = load_model(dir.file("m.json"));
  REQUIRE(model.net.has_value());

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::Vector2d f(unit(rng), unit(rng));
    CHECK((forward(*model.net, f) - f).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("cli: baselines emits the comparison table") {
  TempDir dir("tlm-cli");
  write_recovery_csvs(dir);
  REQUIRE(run("baselines --train " + dir.file("train.csv") + " --test " + dir.file("test.csv") +
              " --k 4 --mlp-epochs 20 --max-depth 2 --n-thresholds 599 --out " +
              dir.file("base.json")) == 0);
  const auto table = nlohmann::json::parse(test_support::read_file(dir.file("base.json")));
  for (const char* row : {"common_sense", "linear_regression", "kmeans_lr", "mlp", "tlm_hard",
                          "tlm_soft", "tlm_oracle"}) {
    REQUIRE(table.contains(row));
    CHECK(table.at(row).at("train").at("mae").get<double>() >= 0.0);
    CHECK(table.at(row).contains("test"));
  }

  // common-sense row equals the mean predictor's metrics
  const Dataset train = load_csv(dir.file("train.csv"));
  const double mean = train.targets().mean();
  const Metrics expect = compute_metrics(
      Eigen::VectorXd::Constant(train.size(), mean), train.targets());
  CHECK(table.at("common_sense").at("train").at("mae").get<double>() ==
        Catch::Approx(expect.mae).epsilon(1e-12));

  // the qualitative ordering reported in the comparison
  CHECK(table.at("tlm_hard").at("train").at("mae").get<double>() <=
        table.at("linear_regression").at("train").at("mae").get<double>());
  CHECK(table.at("tlm_oracle").at("train").at("mae").get<double>() <=
        table.at("tlm_hard").at("train").at("mae").get<double>() + 1e-12);
  CHECK(table.at("common_sense").at("train").at("mae").get<double>() >=
        table.at("linear_regression").at("train").at("mae").get<double>());
}
