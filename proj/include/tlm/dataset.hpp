#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tlm/common.hpp"

namespace tlm {

// Immutable sample matrix: n rows of d-dimensional features with one real
// response value per row. Safe for concurrent shared reads.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd features, Eigen::VectorXd targets)
      : features_(std::move(features)), targets_(std::move(targets)) {
    if (features_.rows() != targets_.size())
      throw DataError("Dataset: feature rows (" + std::to_string(features_.rows()) +
                      ") != target count (" + std::to_string(targets_.size()) + ")");
    if (features_.rows() < 1) throw DataError("Dataset: needs at least one row");
    if (features_.cols() < 1) throw DataError("Dataset: needs at least one feature column");
    if (!all_finite(features_) || !all_finite(targets_))
      throw DataError("Dataset: non-finite entry");
  }

  const Eigen::MatrixXd& features() const { return features_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  Index dim() const { return features_.cols(); }
  Index size() const { return features_.rows(); }

  Eigen::VectorXd row(Index i) const { return features_.row(i).transpose(); }

  Dataset subset(const std::vector<Index>& rows) const {
    if (rows.empty()) throw DataError("Dataset::subset: empty selection");
    Eigen::MatrixXd f(static_cast<Index>(rows.size()), dim());
    Eigen::VectorXd y(static_cast<Index>(rows.size()));
    for (Index i = 0; i < static_cast<Index>(rows.size()); ++i) {
      f.row(i) = features_.row(rows[static_cast<std::size_t>(i)]);
      y(i) = targets_(rows[static_cast<std::size_t>(i)]);
    }
    return Dataset(std::move(f), std::move(y));
  }

 private:
  Eigen::MatrixXd features_;
  Eigen::VectorXd targets_;
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline double parse_cell(const std::string& cell, Index row, const std::string& column) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw DataError("CSV parse error at row " + std::to_string(row) + ", column '" +
                    column + "': not a number: '" + cell + "'");
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path);

  CsvTable table;
  table.header = split_fields(line);
  if (table.header.empty()) throw DataError("empty header row in " + path);

  Index row_index = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row_index;
    auto fields = split_fields(line);
    if (fields.size() != table.header.size())
      throw DataError("CSV row " + std::to_string(row_index) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(table.header.size()) + " (" + path + ")");
    std::vector<double> values(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c)
      values[c] = parse_cell(fields[c], row_index, table.header[c]);
    table.rows.push_back(std::move(values));
  }
  if (table.rows.empty()) throw DataError("no data rows in " + path);
  return table;
}

}  // namespace detail

// Loads a CSV with a header row. The named column becomes the target; every
// other column is a feature, kept in file order.
inline Dataset load_csv(const std::string& path, const std::string& target_column = "y") {
  auto table = detail::read_csv_table(path);
  auto it = std::find(table.header.begin(), table.header.end(), target_column);
  if (it == table.header.end())
    throw DataError("target column '" + target_column + "' not found in " + path);
  const auto target_idx = static_cast<std::size_t>(it - table.header.begin());
  if (table.header.size() < 2)
    throw DataError("no feature columns besides target in " + path);

  const Index n = static_cast<Index>(table.rows.size());
  const Index d = static_cast<Index>(table.header.size()) - 1;
  Eigen::MatrixXd features(n, d);
  Eigen::VectorXd targets(n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    Index f = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == target_idx)
        targets(i) = row[c];
      else
        features(i, f++) = row[c];
    }
  }
  return Dataset(std::move(features), std::move(targets));
}

// True when the CSV header contains the named column.
inline bool csv_has_column(const std::string& path, const std::string& column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path);
  auto header = detail::split_fields(line);
  return std::find(header.begin(), header.end(), column) != header.end();
}

// Loads every column as a feature (no target), for prediction-only inputs.
inline Eigen::MatrixXd load_features_csv(const std::string& path) {
  auto table = detail::read_csv_table(path);
  const Index n = static_cast<Index>(table.rows.size());
  const Index d = static_cast<Index>(table.header.size());
  Eigen::MatrixXd features(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < d; ++c)
      features(i, c) = table.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
  return features;
}

inline void save_csv(const Dataset& data, const std::string& path,
                     const std::string& target_column = "y") {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (Index c = 0; c < data.dim(); ++c) out << "f" << c << ",";
  out << target_column << "\n";
  char buf[64];
  for (Index i = 0; i < data.size(); ++i) {
    for (Index c = 0; c < data.dim(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.features()(i, c));
      out << buf << ",";
    }
    std::snprintf(buf, sizeof(buf), "%.17g", data.targets()(i));
    out << buf << "\n";
  }
}

// Seeded random partition into train/test. The two sides are disjoint and
// cover all rows; identical seeds give identical partitions.
inline std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                         std::uint64_t seed) {
  if (data.size() < 2) throw DataError("split: need at least 2 rows");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw ConfigError("split: train_fraction must lie in (0,1)");
  const Index n = data.size();
  const Index n_train = static_cast<Index>(std::floor(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train == n)
    throw ConfigError("split: fraction " + std::to_string(train_fraction) +
                      " leaves an empty side for n=" + std::to_string(n));

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<Index> train(order.begin(), order.begin() + n_train);
  std::vector<Index> test(order.begin() + n_train, order.end());
  return {data.subset(train), data.subset(test)};
}

}  // namespace tlm
