#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sfr/experiment.hpp"
#include "sfr/metrics.hpp"

#include "oracles.hpp"

using namespace sfr;

namespace {

OutputDistribution class_probs(std::initializer_list<double> probs) {
  OutputDistribution out;
  out.classification = true;
  out.probs = Eigen::VectorXd(static_cast<Eigen::Index>(probs.size()));
  Eigen::Index i = 0;
  for (double p : probs) out.probs[i++] = p;
  return out;
}

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.dataset_name = "blobs";
  cfg.seeds = {0, 1};
  cfg.hidden_widths = {8};
  cfg.train.learning_rate = 1e-2;
  cfg.train.batch_size = 32;
  cfg.train.prior_precision = 0.1;
  cfg.train.patience = 300;
  cfg.train.eval_interval = 100;
  cfg.train.max_steps = 1200;
  cfg.inducing_fraction = 0.25;
  cfg.methods = {"nn_map", "sfr"};
  cfg.grid = TuneGrid::log_spaced(1e-2, 1e2, 5);
  cfg.push = PushForward::mc(32, 0);
  return cfg;
}

nlohmann::json normalized_results_json(const std::string& path) {
  std::ifstream in(path);
  nlohmann::json j;
  in >> j;
  for (auto& run : j["per_run"]) run["seconds"] = 0.0;
  return j;
}

}  // namespace

TEST_CASE("nlpd reference values") {
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(3);
  std::vector<OutputDistribution> uniform_binary(3, class_probs({0.5, 0.5}));
  CHECK(nlpd(uniform_binary, zeros) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  std::vector<OutputDistribution> certain(3, class_probs({1.0, 0.0}));
  CHECK(nlpd(certain, zeros) == doctest::Approx(0.0).epsilon(1e-12));

  std::vector<OutputDistribution> uniform3(
      3, class_probs({1.0 / 3, 1.0 / 3, 1.0 / 3}));
  CHECK(nlpd(uniform3, zeros) == doctest::Approx(std::log(3.0)).epsilon(1e-12));

  // zero probability is clamped, not -inf
  std::vector<OutputDistribution> wrong(1, class_probs({0.0, 1.0}));
  CHECK(nlpd(wrong, Eigen::VectorXd::Zero(1)) ==
        doctest::Approx(-std::log(1e-12)).epsilon(1e-9));

  CHECK_THROWS_AS(nlpd(certain, Eigen::VectorXd::Zero(2)), LengthMismatch);
}

TEST_CASE("accuracy breaks ties toward the lowest class") {
  std::vector<OutputDistribution> preds(1, class_probs({0.5, 0.5}));
  CHECK(accuracy(preds, Eigen::VectorXd::Zero(1)) == 1.0);
  CHECK(accuracy(preds, Eigen::VectorXd::Ones(1)) == 0.0);
}

TEST_CASE("likelihood_for maps dataset shapes onto families") {
  Dataset d = oracles::random_dataset(5, 2, 2, 0);
  CHECK(likelihood_for(d, 1.0).family == Likelihood::Family::BernoulliLogit);
  CHECK(likelihood_for(d, 1.0).latent_dim == 1);
  d.num_classes = 5;
  CHECK(likelihood_for(d, 1.0).family == Likelihood::Family::CategoricalSoftmax);
  CHECK(likelihood_for(d, 1.0).latent_dim == 5);
  d.num_classes = 0;
  CHECK(likelihood_for(d, 0.5).family == Likelihood::Family::Gaussian);
}

TEST_CASE("config hashing is stable and sensitive") {
  const ExperimentConfig a = tiny_config();
  ExperimentConfig b = tiny_config();
  CHECK(a.config_hash() == b.config_hash());
  b.inducing_fraction = 0.5;
  CHECK(a.config_hash() != b.config_hash());
}

TEST_CASE("config json round-trip") {
  ExperimentConfig cfg = tiny_config();
  cfg.dataset_path = "some.csv";
  cfg.schema.label_column = "y";
  const std::string tmp = std::string(std::tmpnam(nullptr)) + ".json";
  std::ofstream(tmp) << cfg.to_json_string();
  const ExperimentConfig loaded = ExperimentConfig::from_json_file(tmp);
  std::remove(tmp.c_str());
  CHECK(loaded.config_hash() == cfg.config_hash());
  CHECK(loaded.schema.label_column == "y");
  CHECK(loaded.methods == cfg.methods);
}

TEST_CASE("experiment on a separable toy reaches high accuracy") {
  Dataset blobs = make_classification_blobs("blobs", 160, 2, 2, 3, 0.3);
  for (Eigen::Index i = 0; i < blobs.size(); ++i) {
    blobs.x(i, 0) += blobs.y[i] > 0.5 ? 3.0 : -3.0;
  }
  ExperimentConfig cfg = tiny_config();
  cfg.methods = {"nn_map"};
  cfg.tune = false;
  cfg.seeds = {0};
  const ResultsRecord results = run_experiment_on(cfg, blobs);
  REQUIRE(results.runs.size() == 1);
  CHECK(results.runs[0].error.empty());
  CHECK(results.runs[0].acc >= 0.99);
  CHECK(results.runs[0].delta_mode == "none");
}

TEST_CASE("experiment reruns are identical apart from wall-clock") {
  const Dataset blobs = make_classification_blobs("blobs", 120, 3, 2, 7, 1.0);
  ExperimentConfig cfg = tiny_config();
  const ResultsRecord a = run_experiment_on(cfg, blobs);
  const ResultsRecord b = run_experiment_on(cfg, blobs);
  REQUIRE(a.runs.size() == b.runs.size());
  for (std::size_t i = 0; i < a.runs.size(); ++i) {
    CHECK(a.runs[i].method == b.runs[i].method);
    CHECK(a.runs[i].delta_mode == b.runs[i].delta_mode);
    CHECK(a.runs[i].nlpd == b.runs[i].nlpd);
    CHECK(a.runs[i].acc == b.runs[i].acc);
    CHECK(a.runs[i].delta == b.runs[i].delta);
  }

  const std::string dir_a = "/tmp/sfr_test_results_a";
  const std::string dir_b = "/tmp/sfr_test_results_b";
  write_results(a, cfg, dir_a, "blobs");
  write_results(b, cfg, dir_b, "blobs");
  CHECK(normalized_results_json(dir_a + "/blobs_results.json") ==
        normalized_results_json(dir_b + "/blobs_results.json"));
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
}

TEST_CASE("tuned runs carry the per-delta table and dominate on validation") {
  const Dataset blobs = make_classification_blobs("blobs", 140, 2, 3, 11, 1.2);
  ExperimentConfig cfg = tiny_config();
  cfg.methods = {"sfr"};
  cfg.seeds = {2};
  const ResultsRecord results = run_experiment_on(cfg, blobs);
  REQUIRE(results.runs.size() == 2);
  const RunRecord& tuned = results.runs[1];
  CHECK(tuned.delta_mode == "tuned");
  CHECK(tuned.tune_table.size() == cfg.grid.values.size());
  CHECK(tuned.error.empty());
  bool found = false;
  for (const auto& e : tuned.tune_table) {
    if (e.value == tuned.delta) found = true;
  }
  CHECK(found);
}

TEST_CASE("a failing method is recorded without aborting the rest") {
  const Dataset blobs = make_classification_blobs("blobs", 90, 2, 2, 13, 1.0);
  ExperimentConfig cfg = tiny_config();
  cfg.methods = {"bogus", "nn_map"};
  cfg.tune = false;
  cfg.seeds = {0};
  const ResultsRecord results = run_experiment_on(cfg, blobs);
  REQUIRE(results.runs.size() == 2);
  CHECK(!results.runs[0].error.empty());
  CHECK(results.runs[0].error.find("bogus") != std::string::npos);
  CHECK(results.runs[1].error.empty());
}

TEST_CASE("inducing sweep emits the expected grid with a self-check") {
  const Dataset blobs = make_classification_blobs("blobs", 80, 2, 2, 17, 1.0);
  ExperimentConfig cfg = tiny_config();
  cfg.tune = false;
  cfg.seeds = {0, 1};
  const std::vector<double> fractions = {0.2, 1.0};
  const SweepResult sweep = sweep_inducing_on(cfg, blobs, fractions);
  CHECK(sweep.rows.size() == fractions.size() * 2 * cfg.seeds.size());
  int checked = 0;
  for (const auto& row : sweep.rows) {
    CHECK(std::isfinite(row.nlpd));
    if (row.method == "sfr" && row.fraction == 1.0) {
      REQUIRE(row.nlpd_dual_full.has_value());
      CHECK(std::abs(row.nlpd - *row.nlpd_dual_full) < 1e-6);
      ++checked;
    }
  }
  CHECK(checked == 2);

  const std::string path = "/tmp/sfr_test_sweep.csv";
  write_sweep_csv(sweep, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "dataset,method,fraction,seed,nlpd,nlpd_dual_full");
  std::remove(path.c_str());
}

TEST_CASE("regression demo emits a monotone grid and calibrated bands") {
  ExperimentConfig cfg = tiny_config();
  cfg.dataset_name = "wave";
  cfg.train.max_steps = 4000;
  cfg.train.patience = 1000;
  cfg.output_dir = "/tmp/sfr_test_demo";
  const DemoResult demo = regression_demo(cfg);

  for (Eigen::Index i = 1; i < demo.grid_x.size(); ++i) {
    CHECK(demo.grid_x[i] > demo.grid_x[i - 1]);
  }
  CHECK(std::filesystem::exists(demo.csv_path));
  CHECK(demo.sfr_std.minCoeff() > 0.0);
  CHECK(demo.train_pred_std.size() == demo.train_x.size());
  std::filesystem::remove_all(cfg.output_dir);
}
