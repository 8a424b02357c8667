#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "test_support.hpp"
#include "tlm/tlm.hpp"

using namespace tlm;
using test_support::TempDir;

namespace {

TlmModel trained_model(bool with_net) {
  const Dataset data = test_support::random_piecewise_data(200, 3, 1.0, 7);
  TreeConfig cfg;
  cfg.min_leaf = 10;
  cfg.mixup.enabled = true;
  cfg.seed = 42;
  TlmModel model;
  model.tree = build_tree(data, cfg);
  if (with_net) {
    TrainConfig train;
    train.epochs = 3;
    train.batch_size = 32;
    train.seed = 9;
    model.net = train_features(model.tree, data, train).net;
    model.train_config = train;
  }
  return model;
}

}  // namespace

TEST_CASE("save/load round-trips predictions bit-exactly") {
  for (bool with_net : {false, true}) {
    const TlmModel model = trained_model(with_net);
    TempDir dir("tlm-io");
    const auto path = dir.file("model.json");
    save_model(model, path);
    const TlmModel loaded = load_model(path);

    CHECK(loaded.tree.dim == model.tree.dim);
    CHECK(loaded.tree.leaf_count == model.tree.leaf_count);
    CHECK(loaded.net.has_value() == with_net);

    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> unit(-2.0, 2.0);
    for (int rep = 0; rep < 200; ++rep) {
      Eigen::VectorXd f(3);
      for (Index j = 0; j < 3; ++j) f(j) = unit(rng);
      CHECK(model_predict_hard(model, f).prediction == model_predict_hard(loaded, f).prediction);
      CHECK(model_predict_soft(model, f) == model_predict_soft(loaded, f));
    }
  }
}

TEST_CASE("model JSON serialization is stable") {
  const TlmModel model = trained_model(true);
  const std::string a = model_to_json(model).dump(2);
  const std::string b = model_to_json(model).dump(2);
  CHECK(a == b);

  TempDir dir("tlm-io");
  const auto path = dir.file("model.json");
  save_model(model, path);
  const TlmModel loaded = load_model(path);
  CHECK(model_to_json(loaded).dump(2) == a);  // reload reproduces the file
}

TEST_CASE("config echo survives the round trip") {
  const TlmModel model = trained_model(true);
  TempDir dir("tlm-io");
  const auto path = dir.file("model.json");
  save_model(model, path);
  const TlmModel loaded = load_model(path);

  CHECK(loaded.tree.config.max_depth == model.tree.config.max_depth);
  CHECK(loaded.tree.config.min_leaf == model.tree.config.min_leaf);
  CHECK(loaded.tree.config.mixup.enabled == model.tree.config.mixup.enabled);
  CHECK(loaded.tree.config.seed == model.tree.config.seed);
  REQUIRE(loaded.train_config.has_value());
  CHECK(loaded.train_config->epochs == 3);
  CHECK(loaded.train_config->batch_size == 32);
}

TEST_CASE("load_model rejects bad files") {
  TempDir dir("tlm-io");

  SECTION("missing file") {
    CHECK_THROWS_AS(load_model(dir.file("absent.json")), DataError);
  }
  SECTION("invalid JSON") {
    const auto path = dir.file("garbage.json");
    test_support::write_file(path, "{not json");
    CHECK_THROWS_AS(load_model(path), DataError);
  }
  SECTION("wrong format version") {
    const TlmModel model = trained_model(false);
    auto j = model_to_json(model);
    j["format_version"] = 999;
    const auto path = dir.file("version.json");
    test_support::write_file(path, j.dump());
    CHECK_THROWS_AS(load_model(path), DataError);
  }
  SECTION("truncated tree") {
    const TlmModel model = trained_model(false);
    auto j = model_to_json(model);
    j["tree"]["nodes"].erase("regressor");
    const auto path = dir.file("broken.json");
    test_support::write_file(path, j.dump());
    CHECK_THROWS_AS(load_model(path), DataError);
  }
}
