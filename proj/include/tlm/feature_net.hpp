#pragma once

#include <Eigen/Core>

#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tlm/common.hpp"
#include "tlm/dataset.hpp"
#include "tlm/nn.hpp"
#include "tlm/routing.hpp"
#include "tlm/tree.hpp"

namespace tlm {

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 50;
  Index batch_size = 64;
  std::uint64_t seed = 0;
  bool dropout_enabled = true;

  void validate() const {
    if (!(learning_rate > 0)) throw ConfigError("train: learning_rate must be > 0");
    if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  }
};

// One residual block: u + fc2(leaky_relu after fc1(relu after linear)),
// with dropout after each activation during training. Input and output are
// both d-dimensional so the frozen tree stays applicable.
struct ResidualBlock {
  nn::DenseLayer fc1;  // d -> d, ReLU
  nn::DenseLayer fc2;  // d -> d, LeakyReLU
};

// Residual feature transform R^d -> R^d. With all weights zero it is the
// identity map.
struct FeatureNet {
  Index dim = 0;
  double dropout_rate = 0.2;
  std::vector<ResidualBlock> blocks;  // two blocks

  static FeatureNet identity(Index d) { return with_init(d, 0.0, 0); }

  // Small random start: N(0, 0.01/sqrt(d)) weights, zero biases, so the map
  // begins near the identity and the frozen tree remains valid at step 0.
  static FeatureNet near_identity(Index d, std::uint64_t seed) {
    return with_init(d, 0.01 / std::sqrt(static_cast<double>(d)), seed);
  }

  static FeatureNet random(Index d, double weight_sd, std::uint64_t seed) {
    return with_init(d, weight_sd, seed);
  }

 private:
  static FeatureNet with_init(Index d, double weight_sd, std::uint64_t seed) {
    if (d < 1) throw ConfigError("feature net: dim must be >= 1");
    FeatureNet net;
    net.dim = d;
    std::mt19937_64 rng(seed);
    for (int k = 0; k < 2; ++k) {
      ResidualBlock block;
      block.fc1 = nn::make_layer(d, d, nn::Activation::Relu, weight_sd, rng);
      block.fc2 = nn::make_layer(d, d, nn::Activation::LeakyRelu, weight_sd, rng);
      net.blocks.push_back(std::move(block));
    }
    return net;
  }
};

struct NetGradients {
  std::vector<std::pair<nn::LayerGrad, nn::LayerGrad>> blocks;

  static NetGradients zero(const FeatureNet& net) {
    NetGradients g;
    for (const auto& block : net.blocks)
      g.blocks.emplace_back(nn::zero_grad(block.fc1), nn::zero_grad(block.fc2));
    return g;
  }
};

namespace detail {

struct BlockCache {
  nn::LayerCache c1, c2;
  Eigen::MatrixXd input;
};

inline Eigen::MatrixXd net_forward(const FeatureNet& net, const Eigen::MatrixXd& X,
                                   std::vector<BlockCache>* caches, bool training,
                                   std::mt19937_64* rng) {
  const double rate = (training && rng) ? net.dropout_rate : 0.0;
  Eigen::MatrixXd h = X;
  if (caches) caches->resize(net.blocks.size());
  for (std::size_t k = 0; k < net.blocks.size(); ++k) {
    BlockCache* cache = caches ? &(*caches)[k] : nullptr;
    if (cache) cache->input = h;
    const Eigen::MatrixXd h1 =
        nn::layer_forward(net.blocks[k].fc1, h, cache ? &cache->c1 : nullptr, rate, rng);
    const Eigen::MatrixXd h2 =
        nn::layer_forward(net.blocks[k].fc2, h1, cache ? &cache->c2 : nullptr, rate, rng);
    h += h2;  // identity skip
  }
  return h;
}

inline void net_backward(const FeatureNet& net, const std::vector<BlockCache>& caches,
                         const Eigen::MatrixXd& grad_out, NetGradients& grads) {
  Eigen::MatrixXd g = grad_out;
  for (std::size_t k = net.blocks.size(); k-- > 0;) {
    // out = input + fc2(fc1(input)): the skip passes g through unchanged
    const Eigen::MatrixXd g_h1 =
        nn::layer_backward(net.blocks[k].fc2, caches[k].c2, g, grads.blocks[k].second);
    const Eigen::MatrixXd g_in =
        nn::layer_backward(net.blocks[k].fc1, caches[k].c1, g_h1, grads.blocks[k].first);
    g += g_in;
  }
}

// Collects mutable parameter pointers in a fixed order (fc1.W, fc1.b,
// fc2.W, fc2.b per block); used by the SGD update and gradient checks.
inline std::vector<double*> param_ptrs(FeatureNet& net) {
  std::vector<double*> out;
  auto add = [&](nn::DenseLayer& layer) {
    for (Index i = 0; i < layer.W.size(); ++i) out.push_back(layer.W.data() + i);
    for (Index i = 0; i < layer.b.size(); ++i) out.push_back(layer.b.data() + i);
  };
  for (auto& block : net.blocks) {
    add(block.fc1);
    add(block.fc2);
  }
  return out;
}

inline std::vector<const double*> grad_ptrs(const NetGradients& grads) {
  std::vector<const double*> out;
  auto add = [&](const nn::LayerGrad& g) {
    for (Index i = 0; i < g.dW.size(); ++i) out.push_back(g.dW.data() + i);
    for (Index i = 0; i < g.db.size(); ++i) out.push_back(g.db.data() + i);
  };
  for (const auto& block : grads.blocks) {
    add(block.first);
    add(block.second);
  }
  return out;
}

// Joint tree loss over transformed features F (batch x d): one squared-error
// term per node on each row's label path, plus one BCE term per internal
// node on that path, averaged over all accumulated terms. Label routing does
// not depend on the net, so the indicators are constants under the gradient.
// Also fills grad (batch x d) with dLoss/dF when requested.
inline double joint_terms(const TlmTree& tree, const Eigen::MatrixXd& transformed,
                          const Dataset& data, Eigen::MatrixXd* grad) {
  const Index n = data.size();
  double total = 0.0;
  long terms = 0;
  if (grad) grad->setZero(n, transformed.cols());

  for (Index i = 0; i < n; ++i) {
    const Eigen::VectorXd f = transformed.row(i).transpose();
    const double y = data.targets()(i);
    const TlmNode* node = &tree.root();
    while (true) {
      const double residual = node->regressor.predict(f) - y;
      total += residual * residual;
      ++terms;
      if (grad) grad->row(i) += 2.0 * residual * node->regressor.r.transpose();
      if (node->is_leaf()) break;
      const double label = y <= node->threshold ? 1.0 : 0.0;
      const double z = node->classifier.logit(f);
      total += bce_with_logits(z, label);
      ++terms;
      if (grad) grad->row(i) += (sigmoid_raw(z) - label) * node->classifier.w.transpose();
      node = &tree.nodes[static_cast<std::size_t>(label > 0.5 ? node->left : node->right)];
    }
  }
  if (grad) *grad /= static_cast<double>(terms);
  return total / static_cast<double>(terms);
}

}  // namespace detail

// Deterministic when training=false; dropout draws are seeded otherwise.
inline Eigen::VectorXd forward(const FeatureNet& net, const Eigen::Ref<const Eigen::VectorXd>& f,
                               bool training = false, std::uint64_t seed = 0) {
  if (f.size() != net.dim) throw DataError("feature net: dimension mismatch");
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd out =
      detail::net_forward(net, f.transpose(), nullptr, training, training ? &rng : nullptr);
  return out.row(0).transpose();
}

// Evaluation-mode transform of a whole feature matrix.
inline Eigen::MatrixXd forward_batch(const FeatureNet& net, const Eigen::MatrixXd& features) {
  if (features.cols() != net.dim) throw DataError("feature net: dimension mismatch");
  return detail::net_forward(net, features, nullptr, false, nullptr);
}

// Mean of all per-node BCE and squared-error terms of the frozen tree on
// label-routed, net-transformed features (evaluation mode).
inline double joint_loss(const TlmTree& tree, const FeatureNet& net, const Dataset& data) {
  if (data.dim() != tree.dim || net.dim != tree.dim)
    throw DataError("joint_loss: dimension mismatch");
  const Eigen::MatrixXd transformed = forward_batch(net, data.features());
  return detail::joint_terms(tree, transformed, data, nullptr);
}

// Exact gradient of joint_loss with respect to every net parameter, by
// backpropagation through the frozen tree's linear models (dropout off).
inline NetGradients gradient(const TlmTree& tree, const FeatureNet& net, const Dataset& batch) {
  if (batch.dim() != tree.dim || net.dim != tree.dim)
    throw DataError("gradient: dimension mismatch");
  std::vector<detail::BlockCache> caches;
  const Eigen::MatrixXd transformed =
      detail::net_forward(net, batch.features(), &caches, false, nullptr);
  Eigen::MatrixXd grad_features;
  detail::joint_terms(tree, transformed, batch, &grad_features);
  NetGradients grads = NetGradients::zero(net);
  detail::net_backward(net, caches, grad_features, grads);
  return grads;
}

struct FeatureTrainResult {
  FeatureNet net;
  // loss_curve[0] is the initial evaluation loss; one entry follows per epoch
  std::vector<double> loss_curve;
};

// Minibatch gradient descent on the joint loss from a near-identity start.
// The tree is read-only throughout.
inline FeatureTrainResult train_features(const TlmTree& tree, const Dataset& data,
                                         const TrainConfig& cfg) {
  cfg.validate();
  if (data.dim() != tree.dim) throw DataError("train_features: dimension mismatch");

  FeatureTrainResult result;
  result.net = FeatureNet::near_identity(tree.dim, mix_seed(cfg.seed, 0x11));
  result.loss_curve.push_back(joint_loss(tree, result.net, data));

  std::mt19937_64 rng(mix_seed(cfg.seed, 0x22));
  std::vector<Index> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), Index{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Index start = 0; start < data.size(); start += cfg.batch_size) {
      const Index count = std::min(cfg.batch_size, data.size() - start);
      std::vector<Index> rows(order.begin() + start, order.begin() + start + count);
      const Dataset batch = data.subset(rows);

      std::vector<detail::BlockCache> caches;
      const Eigen::MatrixXd transformed = detail::net_forward(
          result.net, batch.features(), &caches, cfg.dropout_enabled, &rng);
      Eigen::MatrixXd grad_features;
      detail::joint_terms(tree, transformed, batch, &grad_features);
      NetGradients grads = NetGradients::zero(result.net);
      detail::net_backward(result.net, caches, grad_features, grads);

      const auto params = detail::param_ptrs(result.net);
      const auto gptrs = detail::grad_ptrs(grads);
      for (std::size_t k = 0; k < params.size(); ++k)
        *params[k] -= cfg.learning_rate * *gptrs[k];
    }
    const double loss = joint_loss(tree, result.net, data);
    if (!std::isfinite(loss))
      throw NumericError("train_features: loss diverged at epoch " + std::to_string(epoch));
    result.loss_curve.push_back(loss);
  }
  return result;
}

}  // namespace tlm
