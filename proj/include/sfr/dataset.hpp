#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sfr/errors.hpp"

namespace sfr {

/// Per-feature affine transform fitted on the training split.
struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;  // constant features keep 1 so division is a no-op

  Eigen::MatrixXd apply(const Eigen::Ref<const Eigen::MatrixXd>& x) const;
};

struct Dataset {
  std::string name;
  Eigen::MatrixXd x;  // N x D
  Eigen::VectorXd y;  // class indices, or reals for regression
  Eigen::Index num_classes = 0;  // 0 marks regression
  std::vector<std::string> label_names;

  bool regression() const { return num_classes == 0; }
  Eigen::Index size() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }

  Dataset rows(const std::vector<Eigen::Index>& idx, const std::string& suffix) const;
};

struct CsvSchema {
  std::string label_column;  // column name; used when header is present
  int label_index = -1;      // column index; used when label_column is empty
  char delimiter = ',';
  bool header = true;
  bool regression = false;
  bool no_label = false;  // features-only file (prediction inputs)
};

/// Reads a delimited file. Rows keep on-disk order; classification labels map
/// to dense indices in first-appearance order.
Dataset load_csv(const std::string& path, const CsvSchema& schema);

struct SplitFractions {
  double train = 0.70;
  double valid = 0.15;
  double test = 0.15;
};

struct Splits {
  Dataset train;
  Dataset valid;
  Dataset test;
  Standardization stats;
};

/// Seeded shuffle, contiguous split, then feature standardization with
/// statistics from the training split only.
Splits split_standardize(const Dataset& data, const SplitFractions& fractions,
                         std::uint64_t seed);

}  // namespace sfr
