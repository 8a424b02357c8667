#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <string>
#include <vector>

#include "tlm/common.hpp"
#include "tlm/dataset.hpp"

namespace tlm {

struct FitConfig {
  double ridge_lambda = 1e-3;  // L2 on regression coefficients (bias free)
  double logit_l2 = 1e-4;      // L2 on classifier normal (offset free)
  int max_iters = 500;
  double tol = 1e-6;  // gradient-norm stopping threshold
  double step = 1.0;  // initial step size for backtracking

  void validate() const {
    if (ridge_lambda < 0) throw ConfigError("fit: ridge_lambda must be >= 0");
    if (logit_l2 < 0) throw ConfigError("fit: logit_l2 must be >= 0");
    if (max_iters < 1) throw ConfigError("fit: max_iters must be >= 1");
    if (!(tol > 0)) throw ConfigError("fit: tol must be > 0");
    if (!(step > 0)) throw ConfigError("fit: step must be > 0");
  }
};

struct LinearRegressor {
  Eigen::VectorXd r;
  double b = 0.0;

  double predict(const Eigen::Ref<const Eigen::VectorXd>& f) const {
    if (f.size() != r.size())
      throw DataError("regressor: dimension mismatch (" + std::to_string(f.size()) + " vs " +
                      std::to_string(r.size()) + ")");
    return r.dot(f) + b;
  }

  Eigen::VectorXd predict_batch(const Eigen::Ref<const Eigen::MatrixXd>& features) const {
    if (features.cols() != r.size()) throw DataError("regressor: dimension mismatch");
    return (features * r).array() + b;
  }
};

// Hyperplane classifier; prob_left(f) = sigmoid(w.f + c) estimates
// P(y <= threshold), the probability of routing left.
struct LinearClassifier {
  Eigen::VectorXd w;
  double c = 0.0;

  double logit(const Eigen::Ref<const Eigen::VectorXd>& f) const {
    if (f.size() != w.size())
      throw DataError("classifier: dimension mismatch (" + std::to_string(f.size()) + " vs " +
                      std::to_string(w.size()) + ")");
    return w.dot(f) + c;
  }

  double prob_left(const Eigen::Ref<const Eigen::VectorXd>& f) const { return sigmoid(logit(f)); }
};

struct Classification {
  double prob_left = 0.5;
  bool goes_left = true;
};

inline double predict_regressor(const LinearRegressor& model,
                                const Eigen::Ref<const Eigen::VectorXd>& f) {
  return model.predict(f);
}

// Ties at the decision boundary (logit exactly 0, prob 0.5) route left.
inline Classification classify(const LinearClassifier& model,
                               const Eigen::Ref<const Eigen::VectorXd>& f) {
  const double z = model.logit(f);
  return Classification{sigmoid(z), z >= 0.0};
}

// Ridge least squares with unpenalized bias, solved in closed form via the
// regularized normal equations and an LDLT factorization:
//   min_{r,b}  sum_i (y_i - r.f_i - b)^2 + ridge_lambda * |r|^2
inline LinearRegressor fit_regressor(const Dataset& data, const FitConfig& cfg) {
  cfg.validate();
  const Index n = data.size();
  const Index d = data.dim();
  const Eigen::MatrixXd& X = data.features();
  const Eigen::VectorXd& y = data.targets();

  Eigen::MatrixXd gram(d + 1, d + 1);
  gram.topLeftCorner(d, d) = X.transpose() * X;
  gram.topLeftCorner(d, d).diagonal().array() += cfg.ridge_lambda;
  gram.topRightCorner(d, 1) = X.colwise().sum().transpose();
  gram.bottomLeftCorner(1, d) = X.colwise().sum();
  gram(d, d) = static_cast<double>(n);

  Eigen::VectorXd rhs(d + 1);
  rhs.head(d) = X.transpose() * y;
  rhs(d) = y.sum();

  const auto ldlt = gram.ldlt();
  const Eigen::VectorXd beta = ldlt.solve(rhs);

  // rank-deficient gram matrices stay consistent (rhs lies in the range), so
  // detect singularity from the factorization itself
  const Eigen::VectorXd diag = ldlt.vectorD().cwiseAbs();
  const double scale = rhs.norm() + gram.norm() * beta.norm() + 1.0;
  if (!all_finite(beta) || diag.minCoeff() <= 1e-12 * diag.maxCoeff() ||
      (gram * beta - rhs).norm() > 1e-6 * scale)
    throw NumericError("fit_regressor: singular normal equations (collinear features at "
                       "ridge_lambda=0); use ridge_lambda > 0");

  LinearRegressor model;
  model.r = beta.head(d);
  model.b = beta(d);
  return model;
}

namespace detail {

inline double logistic_loss(const Eigen::MatrixXd& X, const Eigen::VectorXd& labels,
                            const Eigen::VectorXd& w, double c, double l2) {
  const Eigen::VectorXd z = (X * w).array() + c;
  double loss = 0.0;
  for (Index i = 0; i < z.size(); ++i) loss += bce_with_logits(z(i), labels(i));
  return loss / static_cast<double>(z.size()) + l2 * w.squaredNorm();
}

}  // namespace detail

// Logistic regression by gradient descent with Armijo backtracking on
//   mean BCE(sigmoid(w.f + c), label) + logit_l2 * |w|^2.
// Accepted iterations strictly decrease the loss. When only one class is
// present the fit degenerates to a constant-probability classifier.
inline LinearClassifier fit_classifier(const Eigen::Ref<const Eigen::MatrixXd>& features,
                                       const Eigen::Ref<const Eigen::VectorXd>& labels,
                                       const FitConfig& cfg,
                                       std::vector<double>* loss_trace = nullptr) {
  cfg.validate();
  const Index n = features.rows();
  const Index d = features.cols();
  if (n < 1) throw DataError("fit_classifier: empty input");
  if (labels.size() != n) throw DataError("fit_classifier: labels/features length mismatch");
  for (Index i = 0; i < n; ++i)
    if (labels(i) != 0.0 && labels(i) != 1.0)
      throw ConfigError("fit_classifier: non-binary label " + std::to_string(labels(i)) +
                        " at row " + std::to_string(i));

  LinearClassifier model;
  model.w = Eigen::VectorXd::Zero(d);

  const double positives = labels.sum();
  if (positives == 0.0 || positives == static_cast<double>(n)) {
    // one-class node: saturate instead of failing, so bad thresholds score
    // poorly rather than aborting the scan
    model.c = positives > 0 ? 25.0 : -25.0;
    if (loss_trace)
      loss_trace->push_back(detail::logistic_loss(features, labels, model.w, model.c, cfg.logit_l2));
    return model;
  }

  double loss = detail::logistic_loss(features, labels, model.w, model.c, cfg.logit_l2);
  if (loss_trace) loss_trace->push_back(loss);
  double step = cfg.step;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const Eigen::VectorXd z = (features * model.w).array() + model.c;
    Eigen::VectorXd p(n);
    for (Index i = 0; i < n; ++i) p(i) = sigmoid_raw(z(i));
    const Eigen::VectorXd diff = p - labels;
    const Eigen::VectorXd grad_w =
        features.transpose() * diff / static_cast<double>(n) + 2.0 * cfg.logit_l2 * model.w;
    const double grad_c = diff.mean();
    const double grad_sq = grad_w.squaredNorm() + grad_c * grad_c;
    if (std::sqrt(grad_sq) <= cfg.tol) break;

    // backtracking line search (Armijo)
    bool accepted = false;
    while (step > 1e-14) {
      const Eigen::VectorXd w_try = model.w - step * grad_w;
      const double c_try = model.c - step * grad_c;
      const double loss_try = detail::logistic_loss(features, labels, w_try, c_try, cfg.logit_l2);
      if (loss_try <= loss - 1e-4 * step * grad_sq) {
        model.w = w_try;
        model.c = c_try;
        loss = loss_try;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // step underflow: gradient direction exhausted
    if (loss_trace) loss_trace->push_back(loss);
    step = std::min(step * 2.0, 1e6);
  }
  if (!all_finite(model.w) || !std::isfinite(model.c))
    throw NumericError("fit_classifier: non-finite parameters");
  return model;
}

}  // namespace tlm
