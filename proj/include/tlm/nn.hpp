#pragma once

#include <Eigen/Core>

#include <random>
#include <vector>

#include "tlm/common.hpp"

namespace tlm {
namespace nn {

enum class Activation { Identity, Relu, LeakyRelu };

constexpr double kLeakyReluSlope = 0.01;

inline Eigen::MatrixXd activate(const Eigen::MatrixXd& pre, Activation act) {
  switch (act) {
    case Activation::Identity:
      return pre;
    case Activation::Relu:
      return pre.cwiseMax(0.0);
    case Activation::LeakyRelu:
      return pre.cwiseMax(0.0) + kLeakyReluSlope * pre.cwiseMin(0.0);
  }
  return pre;
}

inline Eigen::MatrixXd activation_grad(const Eigen::MatrixXd& pre, Activation act) {
  switch (act) {
    case Activation::Identity:
      return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
    case Activation::Relu:
      return (pre.array() > 0.0).cast<double>();
    case Activation::LeakyRelu:
      return (pre.array() > 0.0).select(Eigen::MatrixXd::Ones(pre.rows(), pre.cols()),
                                        kLeakyReluSlope);
  }
  return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
}

// Fully connected layer mapping rows of X (batch x in) to batch x out.
struct DenseLayer {
  Eigen::MatrixXd W;  // out x in
  Eigen::VectorXd b;  // out
  Activation act = Activation::Identity;

  Index in_dim() const { return W.cols(); }
  Index out_dim() const { return W.rows(); }
};

inline DenseLayer make_layer(Index out, Index in, Activation act, double weight_sd,
                             std::mt19937_64& rng) {
  DenseLayer layer;
  layer.act = act;
  layer.b = Eigen::VectorXd::Zero(out);
  layer.W.resize(out, in);
  if (weight_sd > 0) {
    std::normal_distribution<double> gauss(0.0, weight_sd);
    for (Index i = 0; i < out; ++i)
      for (Index j = 0; j < in; ++j) layer.W(i, j) = gauss(rng);
  } else {
    layer.W.setZero();
  }
  return layer;
}

struct LayerGrad {
  Eigen::MatrixXd dW;
  Eigen::VectorXd db;
};

inline LayerGrad zero_grad(const DenseLayer& layer) {
  return LayerGrad{Eigen::MatrixXd::Zero(layer.W.rows(), layer.W.cols()),
                   Eigen::VectorXd::Zero(layer.b.size())};
}

struct LayerCache {
  Eigen::MatrixXd input;   // batch x in
  Eigen::MatrixXd pre;     // batch x out, before activation
  Eigen::MatrixXd mask;    // dropout mask (inverted scaling); empty when unused
  Eigen::MatrixXd output;  // batch x out, after activation and dropout
};

// Inverted-dropout mask: zero with probability `rate`, else 1/(1-rate), so
// evaluation needs no rescaling.
inline Eigen::MatrixXd dropout_mask(Index rows, Index cols, double rate, std::mt19937_64& rng) {
  Eigen::MatrixXd mask(rows, cols);
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) mask(i, j) = keep(rng) ? scale : 0.0;
  return mask;
}

inline Eigen::MatrixXd layer_forward(const DenseLayer& layer, const Eigen::MatrixXd& input,
                                     LayerCache* cache, double dropout_rate = 0.0,
                                     std::mt19937_64* rng = nullptr) {
  Eigen::MatrixXd pre = (input * layer.W.transpose()).rowwise() + layer.b.transpose();
  Eigen::MatrixXd out = activate(pre, layer.act);
  Eigen::MatrixXd mask;
  if (dropout_rate > 0.0 && rng != nullptr) {
    mask = dropout_mask(out.rows(), out.cols(), dropout_rate, *rng);
    out = out.cwiseProduct(mask);
  }
  if (cache) {
    cache->input = input;
    cache->pre = std::move(pre);
    cache->mask = std::move(mask);
    cache->output = out;
  }
  return out;
}

// Backward through one layer; accumulates parameter gradients and returns
// the gradient with respect to the layer input.
inline Eigen::MatrixXd layer_backward(const DenseLayer& layer, const LayerCache& cache,
                                      const Eigen::MatrixXd& grad_out, LayerGrad& grad) {
  Eigen::MatrixXd g = grad_out;
  if (cache.mask.size() > 0) g = g.cwiseProduct(cache.mask);
  const Eigen::MatrixXd grad_pre = g.cwiseProduct(activation_grad(cache.pre, layer.act));
  grad.dW += grad_pre.transpose() * cache.input;
  grad.db += grad_pre.colwise().sum().transpose();
  return grad_pre * layer.W;
}

}  // namespace nn
}  // namespace tlm
