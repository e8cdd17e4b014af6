#include "sfr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace sfr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(trim(field));
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

double parse_number(const std::string& s, std::size_t row, std::size_t col) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError("row " + std::to_string(row) + ", column " +
                     std::to_string(col) + ": cannot parse '" + s +
                     "' as a finite number");
  }
  return v;
}

}  // namespace

Eigen::MatrixXd Standardization::apply(
    const Eigen::Ref<const Eigen::MatrixXd>& x) const {
  if (x.cols() != mean.size()) {
    throw DimensionMismatch("Standardization: feature count mismatch");
  }
  return (x.rowwise() - mean.transpose()).array().rowwise() /
         stddev.transpose().array();
}

Dataset Dataset::rows(const std::vector<Eigen::Index>& idx,
                      const std::string& suffix) const {
  Dataset out;
  out.name = suffix.empty() ? name : name + "/" + suffix;
  out.num_classes = num_classes;
  out.label_names = label_names;
  out.x.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
  out.y.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.x.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
    out.y[static_cast<Eigen::Index>(i)] = y[idx[i]];
  }
  return out;
}

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("load_csv: cannot open " + path);

  std::string line;
  std::size_t row_number = 0;
  int label_idx = schema.label_index;

  if (schema.header) {
    if (!std::getline(in, line)) throw ParseError("load_csv: empty file " + path);
    ++row_number;
    const auto names = split_line(line, schema.delimiter);
    if (!schema.no_label && !schema.label_column.empty()) {
      const auto it = std::find(names.begin(), names.end(), schema.label_column);
      if (it == names.end()) {
        throw MissingLabelColumn("load_csv: no column named '" +
                                 schema.label_column + "' in " + path);
      }
      label_idx = static_cast<int>(it - names.begin());
    }
  }
  if (schema.no_label) {
    label_idx = -1;
  } else if (label_idx < 0) {
    throw MissingLabelColumn("load_csv: label column not specified");
  }

  std::vector<std::vector<double>> features;
  std::vector<double> labels;
  std::vector<std::string> label_names;
  std::map<std::string, double> label_map;

  while (std::getline(in, line)) {
    ++row_number;
    if (trim(line).empty()) continue;
    const auto fields = split_line(line, schema.delimiter);
    if (!schema.no_label && label_idx >= static_cast<int>(fields.size())) {
      throw ParseError("row " + std::to_string(row_number) +
                       ": too few columns for label index " +
                       std::to_string(label_idx));
    }
    std::vector<double> feat;
    feat.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!schema.no_label && static_cast<int>(c) == label_idx) continue;
      feat.push_back(parse_number(fields[c], row_number, c));
    }
    if (!features.empty() && feat.size() != features.front().size()) {
      throw ParseError("row " + std::to_string(row_number) +
                       ": inconsistent column count");
    }
    if (schema.no_label) {
      labels.push_back(0.0);
    } else {
      const std::string& raw_label = fields[static_cast<std::size_t>(label_idx)];
      if (schema.regression) {
        labels.push_back(parse_number(raw_label, row_number,
                                      static_cast<std::size_t>(label_idx)));
      } else {
        auto it = label_map.find(raw_label);
        if (it == label_map.end()) {
          it = label_map
                   .emplace(raw_label, static_cast<double>(label_names.size()))
                   .first;
          label_names.push_back(raw_label);
        }
        labels.push_back(it->second);
      }
    }
    features.push_back(std::move(feat));
  }
  if (features.empty()) throw DataError("load_csv: no data rows in " + path);

  Dataset out;
  out.name = path;
  out.num_classes = schema.regression || schema.no_label
                        ? 0
                        : static_cast<Eigen::Index>(label_names.size());
  out.label_names = std::move(label_names);
  out.x.resize(static_cast<Eigen::Index>(features.size()),
               static_cast<Eigen::Index>(features.front().size()));
  out.y.resize(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (std::size_t j = 0; j < features[i].size(); ++j) {
      out.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          features[i][j];
    }
    out.y[static_cast<Eigen::Index>(i)] = labels[i];
  }
  return out;
}

Splits split_standardize(const Dataset& data, const SplitFractions& fractions,
                         std::uint64_t seed) {
  const double total = fractions.train + fractions.valid + fractions.test;
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("split_standardize: fractions must sum to 1");
  }
  const Eigen::Index n = data.size();
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  const auto n_train = static_cast<Eigen::Index>(
      std::llround(fractions.train * static_cast<double>(n)));
  const auto n_valid = static_cast<Eigen::Index>(
      std::llround(fractions.valid * static_cast<double>(n)));
  const Eigen::Index n_test = n - n_train - n_valid;
  if (n_train < 1 || n_valid < 1 || n_test < 1) {
    throw EmptySplit("split_standardize: a split would be empty (N=" +
                     std::to_string(n) + ")");
  }

  const std::vector<Eigen::Index> train_idx(perm.begin(), perm.begin() + n_train);
  const std::vector<Eigen::Index> valid_idx(perm.begin() + n_train,
                                            perm.begin() + n_train + n_valid);
  const std::vector<Eigen::Index> test_idx(perm.begin() + n_train + n_valid,
                                           perm.end());

  Splits out{data.rows(train_idx, "train"), data.rows(valid_idx, "valid"),
             data.rows(test_idx, "test"), {}};

  out.stats.mean = out.train.x.colwise().mean();
  Eigen::VectorXd var =
      (out.train.x.rowwise() - out.stats.mean.transpose()).array().square()
          .matrix().colwise().mean();
  out.stats.stddev = var.array().sqrt();
  for (Eigen::Index j = 0; j < out.stats.stddev.size(); ++j) {
    // constant features keep scale 1 (rounding can leave a ~1e-16 residual)
    if (out.stats.stddev[j] <= 1e-12 * (1.0 + std::abs(out.stats.mean[j]))) {
      out.stats.stddev[j] = 1.0;
    }
  }
  out.train.x = out.stats.apply(out.train.x);
  out.valid.x = out.stats.apply(out.valid.x);
  out.test.x = out.stats.apply(out.test.x);
  return out;
}

}  // namespace sfr
