#pragma once

#include <Eigen/Core>

#include <cmath>

#include "tlm/common.hpp"

namespace tlm {

struct Metrics {
  double mae = 0.0;
  double rmse = 0.0;
  Index count = 0;
};

// Mean absolute error and root mean squared error of predictions vs targets.
inline Metrics compute_metrics(const Eigen::Ref<const Eigen::VectorXd>& predictions,
                               const Eigen::Ref<const Eigen::VectorXd>& targets) {
  if (predictions.size() != targets.size())
    throw DataError("compute_metrics: length mismatch (" +
                    std::to_string(predictions.size()) + " vs " +
                    std::to_string(targets.size()) + ")");
  if (predictions.size() == 0) throw DataError("compute_metrics: empty input");
  if (!all_finite(predictions) || !all_finite(targets))
    throw DataError("compute_metrics: non-finite value in input");

  const Eigen::VectorXd residuals = targets - predictions;
  Metrics m;
  m.count = targets.size();
  m.mae = residuals.cwiseAbs().mean();
  m.rmse = std::sqrt(residuals.squaredNorm() / static_cast<double>(m.count));
  return m;
}

}  // namespace tlm
