#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace tlm {

// Error taxonomy; the CLI maps each class to a distinct exit code.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid parameters, flags, or malformed specs.
struct ConfigError : Error {
  using Error::Error;
};

// Bad input data: unreadable files, parse failures, shape mismatches.
struct DataError : Error {
  using Error::Error;
};

// Numeric failures: singular systems, divergence, non-finite values.
struct NumericError : Error {
  using Error::Error;
};

using Index = Eigen::Index;

// splitmix64; used to derive independent sub-seeds from one master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Numerically stable logistic function, clamped so the result stays strictly
// inside (0, 1) even for saturated logits.
inline double sigmoid(double z) {
  double p;
  if (z >= 0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  return std::clamp(p, 1e-15, 1.0 - 1e-15);
}

// Unclamped logistic, for gradients of bce_with_logits.
inline double sigmoid_raw(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Binary cross-entropy evaluated from the logit; never overflows.
inline double bce_with_logits(double z, double label) {
  return std::max(z, 0.0) - z * label + std::log1p(std::exp(-std::abs(z)));
}

inline bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  return m.allFinite();
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ConfigError(msg);
}

}  // namespace tlm
