#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "tlm/common.hpp"
#include "tlm/dataset.hpp"
#include "tlm/feature_net.hpp"
#include "tlm/linear.hpp"
#include "tlm/nn.hpp"

namespace tlm {

// "Common sense" baseline: always predicts the training mean.
struct MeanPredictor {
  double mean = 0.0;
  double predict(const Eigen::Ref<const Eigen::VectorXd>&) const { return mean; }
};

inline MeanPredictor fit_mean(const Dataset& data) { return MeanPredictor{data.targets().mean()}; }

// k-means clustering (a Voronoi tessellation) with one ridge regressor per
// cluster; inference assigns to the nearest centroid.
struct KMeansLR {
  Eigen::MatrixXd centroids;  // k x d
  std::vector<LinearRegressor> models;

  int assign(const Eigen::Ref<const Eigen::VectorXd>& f) const {
    if (f.size() != centroids.cols()) throw DataError("kmeans: dimension mismatch");
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < centroids.rows(); ++k) {
      const double dist = (centroids.row(k).transpose() - f).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = static_cast<int>(k);
      }
    }
    return best;
  }

  double predict(const Eigen::Ref<const Eigen::VectorXd>& f) const {
    return models[static_cast<std::size_t>(assign(f))].predict(f);
  }
};

// Lloyd's algorithm with distance-weighted (k-means++) seeding, iteration
// cap 100, deterministic under seed. Empty clusters are re-seeded from the
// point farthest from its assigned centroid.
inline KMeansLR fit_kmeans_lr(const Dataset& data, int k, std::uint64_t seed,
                              const FitConfig& cfg) {
  if (k < 1) throw ConfigError("kmeans: k must be >= 1");
  if (static_cast<Index>(k) > data.size())
    throw DataError("kmeans: k=" + std::to_string(k) + " exceeds n=" +
                    std::to_string(data.size()));

  const Index n = data.size();
  const Eigen::MatrixXd& X = data.features();
  std::mt19937_64 rng(seed);

  // k-means++ style seeding
  Eigen::MatrixXd centroids(k, data.dim());
  std::uniform_int_distribution<Index> first(0, n - 1);
  centroids.row(0) = X.row(first(rng));
  Eigen::VectorXd dist2 = (X.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Index pick = 0;
    if (total > 0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double r = u(rng);
      for (Index i = 0; i < n; ++i) {
        r -= dist2(i);
        if (r <= 0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = first(rng);
    }
    centroids.row(c) = X.row(pick);
    dist2 = dist2.cwiseMin((X.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }

  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      int best = 0;
      double best_dist = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double d2 = (X.row(i) - centroids.row(c)).squaredNorm();
        if (d2 < best_dist) {
          best_dist = d2;
          best = c;
        }
      }
      if (assignment[static_cast<std::size_t>(i)] != best) {
        assignment[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, data.dim());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Index i = 0; i < n; ++i) {
      sums.row(assignment[static_cast<std::size_t>(i)]) += X.row(i);
      counts(assignment[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (int c = 0; c < k; ++c) {
      if (counts(c) > 0) {
        centroids.row(c) = sums.row(c) / counts(c);
      } else {
        // re-seed from the point farthest from its own centroid
        Index farthest = 0;
        double worst = -1.0;
        for (Index i = 0; i < n; ++i) {
          const double d2 =
              (X.row(i) - centroids.row(assignment[static_cast<std::size_t>(i)])).squaredNorm();
          if (d2 > worst) {
            worst = d2;
            farthest = i;
          }
        }
        centroids.row(c) = X.row(farthest);
      }
    }
  }

  KMeansLR result;
  result.centroids = centroids;
  result.models.resize(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    std::vector<Index> rows;
    for (Index i = 0; i < n; ++i)
      if (assignment[static_cast<std::size_t>(i)] == c) rows.push_back(i);
    if (rows.empty()) {
      // cluster emptied in the final assignment: fall back to the global fit
      result.models[static_cast<std::size_t>(c)] = fit_regressor(data, cfg);
    } else {
      result.models[static_cast<std::size_t>(c)] = fit_regressor(data.subset(rows), cfg);
    }
  }
  return result;
}

// Fully connected ReLU regressor with a linear scalar output.
struct MlpRegressor {
  std::vector<nn::DenseLayer> layers;

  double predict(const Eigen::Ref<const Eigen::VectorXd>& f) const {
    if (layers.empty() || f.size() != layers.front().in_dim())
      throw DataError("mlp: dimension mismatch");
    Eigen::MatrixXd h = f.transpose();
    for (const auto& layer : layers) h = nn::layer_forward(layer, h, nullptr);
    return h(0, 0);
  }

  Eigen::VectorXd predict_batch(const Eigen::MatrixXd& features) const {
    Eigen::MatrixXd h = features;
    for (const auto& layer : layers) h = nn::layer_forward(layer, h, nullptr);
    return h.col(0);
  }
};

struct MlpTrainResult {
  MlpRegressor model;
  std::vector<double> loss_curve;  // evaluation MSE, one entry per epoch plus the start
};

// Minibatch gradient descent on MSE over the dense stack.
inline MlpTrainResult fit_mlp(const Dataset& data, const TrainConfig& cfg,
                              const std::vector<Index>& hidden = {128, 128}) {
  cfg.validate();
  std::mt19937_64 rng(mix_seed(cfg.seed, 0x33));

  MlpTrainResult result;
  Index in = data.dim();
  for (Index width : hidden) {
    if (width < 1) throw ConfigError("mlp: hidden width must be >= 1");
    result.model.layers.push_back(
        nn::make_layer(width, in, nn::Activation::Relu, std::sqrt(2.0 / static_cast<double>(in)),
                       rng));
    in = width;
  }
  result.model.layers.push_back(nn::make_layer(1, in, nn::Activation::Identity,
                                               1.0 / std::sqrt(static_cast<double>(in)), rng));

  auto eval_mse = [&]() {
    return (result.model.predict_batch(data.features()) - data.targets()).squaredNorm() /
           static_cast<double>(data.size());
  };
  result.loss_curve.push_back(eval_mse());

  std::vector<Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Index{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Index start = 0; start < data.size(); start += cfg.batch_size) {
      const Index count = std::min(cfg.batch_size, data.size() - start);
      std::vector<Index> rows(order.begin() + start, order.begin() + start + count);
      const Dataset batch = data.subset(rows);

      std::vector<nn::LayerCache> caches(result.model.layers.size());
      Eigen::MatrixXd h = batch.features();
      for (std::size_t l = 0; l < result.model.layers.size(); ++l)
        h = nn::layer_forward(result.model.layers[l], h, &caches[l]);

      // d(mean squared error)/d(prediction)
      Eigen::MatrixXd grad_out = 2.0 * (h.col(0) - batch.targets()) / static_cast<double>(count);

      std::vector<nn::LayerGrad> grads;
      for (const auto& layer : result.model.layers) grads.push_back(nn::zero_grad(layer));
      Eigen::MatrixXd g = grad_out;
      for (std::size_t l = result.model.layers.size(); l-- > 0;)
        g = nn::layer_backward(result.model.layers[l], caches[l], g, grads[l]);

      for (std::size_t l = 0; l < result.model.layers.size(); ++l) {
        result.model.layers[l].W -= cfg.learning_rate * grads[l].dW;
        result.model.layers[l].b -= cfg.learning_rate * grads[l].db;
      }
    }
    const double loss = eval_mse();
    if (!std::isfinite(loss))
      throw NumericError("fit_mlp: loss diverged at epoch " + std::to_string(epoch));
    result.loss_curve.push_back(loss);
  }
  return result;
}

// Gradient of the MLP's mean squared error, for finite-difference checks.
inline std::vector<nn::LayerGrad> mlp_gradient(const MlpRegressor& model, const Dataset& batch) {
  std::vector<nn::LayerCache> caches(model.layers.size());
  Eigen::MatrixXd h = batch.features();
  for (std::size_t l = 0; l < model.layers.size(); ++l)
    h = nn::layer_forward(model.layers[l], h, &caches[l]);
  Eigen::MatrixXd grad_out =
      2.0 * (h.col(0) - batch.targets()) / static_cast<double>(batch.size());
  std::vector<nn::LayerGrad> grads;
  for (const auto& layer : model.layers) grads.push_back(nn::zero_grad(layer));
  Eigen::MatrixXd g = grad_out;
  for (std::size_t l = model.layers.size(); l-- > 0;)
    g = nn::layer_backward(model.layers[l], caches[l], g, grads[l]);
  return grads;
}

}  // namespace tlm
