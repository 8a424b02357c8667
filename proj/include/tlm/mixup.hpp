#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "tlm/common.hpp"
#include "tlm/dataset.hpp"

namespace tlm {

// Augmentation that mixes pairs of samples whose responses lie within a
// similarity window, so interpolated labels stay locally meaningful.
struct MixupConfig {
  bool enabled = false;
  double similarity_window = 2.0;  // max |y_i - y_j| between partners
  double alpha = 0.4;              // Beta(alpha, alpha) shape for lambda
  double multiplier = 1.0;         // synthetic rows per original row

  void validate() const {
    if (!(similarity_window > 0)) throw ConfigError("mixup: similarity_window must be > 0");
    if (!(alpha > 0)) throw ConfigError("mixup: alpha must be > 0");
    if (multiplier < 0) throw ConfigError("mixup: multiplier must be >= 0");
  }
};

struct MixupResult {
  Dataset data;
  Index skipped = 0;  // source rows with no partner inside the window
  // (i, j) source indices for each synthetic row, in output order
  std::vector<std::pair<Index, Index>> pairs;
};

inline std::pair<Eigen::VectorXd, double> mix_rows(const Eigen::Ref<const Eigen::VectorXd>& fi,
                                                   const Eigen::Ref<const Eigen::VectorXd>& fj,
                                                   double yi, double yj, double lambda) {
  return {lambda * fi + (1.0 - lambda) * fj, lambda * yi + (1.0 - lambda) * yj};
}

// Appends floor(multiplier * n) mixed rows to the dataset. Row i's partner is
// drawn uniformly among rows j != i with |y_i - y_j| <= similarity_window;
// rows with no eligible partner are skipped and counted.
inline MixupResult mixup_augment(const Dataset& data, const MixupConfig& cfg,
                                 std::uint64_t seed) {
  cfg.validate();
  if (data.size() < 2) throw DataError("mixup_augment: need at least 2 rows");

  const Index n = data.size();
  const Index target = static_cast<Index>(std::floor(cfg.multiplier * static_cast<double>(n)));

  // Sort row indices by y so each window is a contiguous range.
  std::vector<Index> by_y(static_cast<std::size_t>(n));
  std::iota(by_y.begin(), by_y.end(), Index{0});
  std::stable_sort(by_y.begin(), by_y.end(),
                   [&](Index a, Index b) { return data.targets()(a) < data.targets()(b); });
  std::vector<Index> sorted_pos(static_cast<std::size_t>(n));
  std::vector<double> sorted_y(static_cast<std::size_t>(n));
  for (Index p = 0; p < n; ++p) {
    sorted_pos[static_cast<std::size_t>(by_y[static_cast<std::size_t>(p)])] = p;
    sorted_y[static_cast<std::size_t>(p)] = data.targets()(by_y[static_cast<std::size_t>(p)]);
  }

  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(cfg.alpha, 1.0);

  std::vector<Eigen::VectorXd> mixed_features;
  std::vector<double> mixed_targets;
  std::vector<std::pair<Index, Index>> pairs;
  Index skipped = 0;

  for (Index k = 0; k < target; ++k) {
    const Index i = k % n;
    const double yi = data.targets()(i);
    const auto lo = std::lower_bound(sorted_y.begin(), sorted_y.end(),
                                     yi - cfg.similarity_window) -
                    sorted_y.begin();
    const auto hi = std::upper_bound(sorted_y.begin(), sorted_y.end(),
                                     yi + cfg.similarity_window) -
                    sorted_y.begin();
    const Index eligible = static_cast<Index>(hi - lo) - 1;  // window minus row i itself
    if (eligible <= 0) {
      ++skipped;
      continue;
    }
    std::uniform_int_distribution<Index> pick(0, eligible - 1);
    Index pos = static_cast<Index>(lo) + pick(rng);
    if (pos >= sorted_pos[static_cast<std::size_t>(i)]) ++pos;  // skip self
    const Index j = by_y[static_cast<std::size_t>(pos)];

    // lambda ~ Beta(alpha, alpha) via two gamma draws
    const double a = gamma(rng);
    const double b = gamma(rng);
    const double lambda = (a + b > 0) ? a / (a + b) : 0.5;

    auto [f, y] = mix_rows(data.row(i), data.row(j), yi, data.targets()(j), lambda);
    mixed_features.push_back(std::move(f));
    mixed_targets.push_back(y);
    pairs.emplace_back(i, j);
  }

  const Index m = static_cast<Index>(mixed_targets.size());
  Eigen::MatrixXd features(n + m, data.dim());
  Eigen::VectorXd targets(n + m);
  features.topRows(n) = data.features();
  targets.head(n) = data.targets();
  for (Index k = 0; k < m; ++k) {
    features.row(n + k) = mixed_features[static_cast<std::size_t>(k)].transpose();
    targets(n + k) = mixed_targets[static_cast<std::size_t>(k)];
  }
  return MixupResult{Dataset(std::move(features), std::move(targets)), skipped,
                     std::move(pairs)};
}

}  // namespace tlm
