#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "sfr/dataset.hpp"

using namespace sfr;

namespace {

struct TempCsv {
  std::string path;
  explicit TempCsv(const std::string& contents) {
    path = std::string(std::tmpnam(nullptr)) + ".csv";
    std::ofstream out(path);
    out << contents;
  }
  ~TempCsv() { std::remove(path.c_str()); }
};

CsvSchema by_name(const std::string& column) {
  CsvSchema schema;
  schema.label_column = column;
  return schema;
}

}  // namespace

TEST_CASE("labels map to dense indices in first-appearance order") {
  const TempCsv csv("f1,f2,label\n1,2,a\n3,4,b\n5,6,a\n");
  const Dataset data = load_csv(csv.path, by_name("label"));
  CHECK(data.size() == 3);
  CHECK(data.dim() == 2);
  CHECK(data.num_classes == 2);
  CHECK(data.y[0] == 0.0);
  CHECK(data.y[1] == 1.0);
  CHECK(data.y[2] == 0.0);
  CHECK(data.label_names == std::vector<std::string>{"a", "b"});
  CHECK(data.x(2, 1) == 6.0);
}

TEST_CASE("non-numeric feature cells are located in the error") {
  const TempCsv csv("f1,f2,label\n1,2,a\n3,oops,b\n");
  try {
    load_csv(csv.path, by_name("label"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row 3") != std::string::npos);
    CHECK(msg.find("column 1") != std::string::npos);
  }
}

TEST_CASE("header handling and positional labels") {
  const TempCsv with_header("x,y\n9,a\n8,b\n");
  CsvSchema schema;
  schema.label_index = 1;
  const Dataset d1 = load_csv(with_header.path, schema);
  CHECK(d1.size() == 2);
  CHECK(d1.x(0, 0) == 9.0);

  const TempCsv headerless("7,a\n6,b\n");
  schema.header = false;
  const Dataset d2 = load_csv(headerless.path, schema);
  CHECK(d2.size() == 2);
  CHECK(d2.x(0, 0) == 7.0);
}

TEST_CASE("missing label column") {
  const TempCsv csv("f1,f2,target\n1,2,a\n");
  CHECK_THROWS_AS(load_csv(csv.path, by_name("label")), MissingLabelColumn);
  CHECK_THROWS_AS(load_csv(csv.path, CsvSchema{}), MissingLabelColumn);
}

TEST_CASE("regression and features-only schemas") {
  const TempCsv csv("f1,target\n1,0.5\n2,-0.125\n");
  CsvSchema schema = by_name("target");
  schema.regression = true;
  const Dataset reg = load_csv(csv.path, schema);
  CHECK(reg.regression());
  CHECK(reg.y[1] == -0.125);

  CsvSchema none;
  none.no_label = true;
  const Dataset feats = load_csv(csv.path, none);
  CHECK(feats.dim() == 2);
  CHECK(feats.size() == 2);
}

TEST_CASE("split sizes, determinism and standardization") {
  Dataset data;
  data.name = "synthetic";
  data.num_classes = 2;
  data.x.resize(100, 3);
  data.y.resize(100);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(2.0, 3.0);
  for (Eigen::Index i = 0; i < 100; ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) data.x(i, j) = normal(rng);
    data.y[i] = i % 2;
  }
  data.x.col(2).setConstant(4.2);  // constant feature

  const Splits s = split_standardize(data, SplitFractions{}, 11);
  CHECK(s.train.size() == 70);
  CHECK(s.valid.size() == 15);
  CHECK(s.test.size() == 15);

  for (Eigen::Index j = 0; j < 2; ++j) {
    CHECK(std::abs(s.train.x.col(j).mean()) < 1e-9);
    const double sd = std::sqrt(s.train.x.col(j).array().square().mean());
    CHECK(std::abs(sd - 1.0) < 1e-9);
  }
  CHECK(s.stats.stddev[2] == 1.0);  // constant feature left unscaled
  CHECK(s.train.x.col(2).cwiseAbs().maxCoeff() < 1e-12);

  const Splits again = split_standardize(data, SplitFractions{}, 11);
  CHECK((s.train.x.array() == again.train.x.array()).all());
  CHECK((s.test.y.array() == again.test.y.array()).all());

  const Splits other = split_standardize(data, SplitFractions{}, 12);
  CHECK((s.train.y.array() != other.train.y.array()).any());
}

TEST_CASE("splits are disjoint and exhaustive") {
  Dataset data;
  data.num_classes = 0;
  data.x.resize(40, 1);
  data.y.resize(40);
  for (Eigen::Index i = 0; i < 40; ++i) {
    data.x(i, 0) = static_cast<double>(i);  // unique key per row
    data.y[i] = 0.0;
  }
  const Splits s = split_standardize(data, SplitFractions{0.5, 0.25, 0.25}, 5);
  std::vector<int> seen(40, 0);
  for (const Dataset* part : {&s.train, &s.valid, &s.test}) {
    for (Eigen::Index i = 0; i < part->size(); ++i) {
      const double raw =
          part->x(i, 0) * s.stats.stddev[0] + s.stats.mean[0];
      ++seen[static_cast<std::size_t>(std::llround(raw))];
    }
  }
  for (int count : seen) CHECK(count == 1);
}

TEST_CASE("degenerate splits are rejected") {
  Dataset tiny;
  tiny.num_classes = 2;
  tiny.x.resize(3, 1);
  tiny.x.setZero();
  tiny.y.resize(3);
  tiny.y.setZero();
  CHECK_THROWS_AS(split_standardize(tiny, SplitFractions{0.9, 0.05, 0.05}, 0),
                  EmptySplit);
  CHECK_THROWS_AS(split_standardize(tiny, SplitFractions{0.5, 0.2, 0.2}, 0),
                  ConfigError);
}
