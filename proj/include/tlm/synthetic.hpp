#pragma once

#include <Eigen/Core>

#include <nlohmann/json.hpp>

#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tlm/common.hpp"
#include "tlm/dataset.hpp"

namespace tlm {

struct Hyperplane {
  Eigen::VectorXd w;
  double c = 0.0;

  double signed_value(const Eigen::Ref<const Eigen::VectorXd>& f) const {
    return w.dot(f) + c;
  }
};

// One convex cell: a sign constraint per hyperplane (+1 means w.f + c >= 0,
// -1 the complement, 0 unconstrained) plus the affine law y = r.f + b.
struct CellSpec {
  std::vector<int> signs;
  Eigen::VectorXd r;
  double b = 0.0;
};

// Ground-truth piecewise-affine generator: cells bounded by hyperplanes, one
// affine response law per cell. Doubles as the oracle when verifying trained
// models on its own samples.
struct TessellationSpec {
  Eigen::VectorXd box_lo;  // sampling box, per dimension
  Eigen::VectorXd box_hi;
  std::vector<Hyperplane> hyperplanes;
  std::vector<CellSpec> cells;

  Index dim() const { return box_lo.size(); }

  void validate() const {
    if (box_lo.size() != box_hi.size() || box_lo.size() < 1)
      throw ConfigError("tessellation spec: invalid box");
    for (Index i = 0; i < box_lo.size(); ++i)
      if (!(box_lo(i) < box_hi(i)))
        throw ConfigError("tessellation spec: box_lo must be < box_hi per dimension");
    if (cells.empty()) throw ConfigError("tessellation spec: no cells");
    for (const auto& h : hyperplanes) {
      if (h.w.size() != dim()) throw ConfigError("tessellation spec: hyperplane dim mismatch");
      if (!all_finite(h.w) || !std::isfinite(h.c))
        throw ConfigError("tessellation spec: non-finite hyperplane");
    }
    for (const auto& cell : cells) {
      if (cell.signs.size() != hyperplanes.size())
        throw ConfigError("tessellation spec: cell signs length != hyperplane count");
      for (int s : cell.signs)
        if (s < -1 || s > 1) throw ConfigError("tessellation spec: cell sign must be -1, 0 or +1");
      if (cell.r.size() != dim()) throw ConfigError("tessellation spec: cell model dim mismatch");
      if (!all_finite(cell.r) || !std::isfinite(cell.b))
        throw ConfigError("tessellation spec: non-finite cell model");
    }
  }

  // Index of the first cell containing f, or -1 when no cell matches.
  int find_cell(const Eigen::Ref<const Eigen::VectorXd>& f) const {
    for (std::size_t k = 0; k < cells.size(); ++k) {
      bool inside = true;
      for (std::size_t h = 0; h < hyperplanes.size(); ++h) {
        const int want = cells[k].signs[h];
        if (want == 0) continue;
        const int got = hyperplanes[h].signed_value(f) >= 0 ? 1 : -1;
        if (got != want) {
          inside = false;
          break;
        }
      }
      if (inside) return static_cast<int>(k);
    }
    return -1;
  }

  // Noise-free response of the cell containing f.
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& f) const {
    const int k = find_cell(f);
    if (k < 0) throw DataError("tessellation spec: point matches no cell");
    return cells[static_cast<std::size_t>(k)].r.dot(f) + cells[static_cast<std::size_t>(k)].b;
  }
};

inline TessellationSpec parse_tessellation_spec(const nlohmann::json& j) {
  TessellationSpec spec;
  try {
    const auto& box = j.at("box");
    const auto lo = box.at("lo").get<std::vector<double>>();
    const auto hi = box.at("hi").get<std::vector<double>>();
    spec.box_lo = Eigen::Map<const Eigen::VectorXd>(lo.data(), static_cast<Index>(lo.size()));
    spec.box_hi = Eigen::Map<const Eigen::VectorXd>(hi.data(), static_cast<Index>(hi.size()));
    for (const auto& hj : j.at("hyperplanes")) {
      Hyperplane h;
      const auto w = hj.at("w").get<std::vector<double>>();
      h.w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Index>(w.size()));
      h.c = hj.at("c").get<double>();
      spec.hyperplanes.push_back(std::move(h));
    }
    for (const auto& cj : j.at("cells")) {
      CellSpec cell;
      cell.signs = cj.at("signs").get<std::vector<int>>();
      const auto r = cj.at("r").get<std::vector<double>>();
      cell.r = Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Index>(r.size()));
      cell.b = cj.at("b").get<double>();
      spec.cells.push_back(std::move(cell));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("tessellation spec: malformed JSON: ") + e.what());
  }
  spec.validate();
  return spec;
}

inline TessellationSpec load_tessellation_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open spec file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("spec file " + path + ": invalid JSON: " + e.what());
  }
  return parse_tessellation_spec(j);
}

// Samples features uniformly over the box, rejecting points outside every
// cell, and applies the matching cell's affine law plus Gaussian noise.
// A fixed seed reproduces the dataset bit for bit.
inline Dataset generate_synthetic(const TessellationSpec& spec, Index n, double noise_sd,
                                  std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw ConfigError("generate_synthetic: n must be >= 1");
  if (noise_sd < 0) throw ConfigError("generate_synthetic: noise_sd must be >= 0");

  const Index d = spec.dim();
  Eigen::MatrixXd features(n, d);
  Eigen::VectorXd targets(n);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const long long budget = 1000LL * static_cast<long long>(n) + 1000;
  long long attempts = 0;
  Eigen::VectorXd f(d);
  for (Index i = 0; i < n;) {
    if (++attempts > budget)
      throw NumericError("generate_synthetic: rejection budget exhausted; cells may be empty "
                         "over the sampling box");
    for (Index c = 0; c < d; ++c)
      f(c) = spec.box_lo(c) + (spec.box_hi(c) - spec.box_lo(c)) * unit(rng);
    const int cell = spec.find_cell(f);
    if (cell < 0) continue;
    features.row(i) = f.transpose();
    double y = spec.cells[static_cast<std::size_t>(cell)].r.dot(f) +
               spec.cells[static_cast<std::size_t>(cell)].b;
    if (noise_sd > 0) y += noise_sd * gauss(rng);
    targets(i) = y;
    ++i;
  }
  return Dataset(std::move(features), std::move(targets));
}

}  // namespace tlm
