#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sfr/dataset.hpp"
#include "sfr/train.hpp"
#include "sfr/tuning.hpp"

namespace sfr {

struct ExperimentConfig {
  std::string dataset_path;
  std::string dataset_name = "dataset";
  CsvSchema schema;
  SplitFractions split;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::vector<Eigen::Index> hidden_widths = {50, 50};
  TrainConfig train;
  double inducing_fraction = 0.20;
  std::vector<std::string> methods = {"nn_map", "bnn", "glm", "gp_subset", "sfr"};
  bool tune = true;
  TuneGrid grid = TuneGrid::log_spaced();
  PushForward push = PushForward::mc(100, 0);
  int bnn_samples = 100;
  double noise_variance = 1.0;  // Gaussian likelihood (regression data)
  std::string output_dir = "results";

  static ExperimentConfig from_json_file(const std::string& path);
  std::string to_json_string() const;
  std::string config_hash() const;  // FNV-1a over the canonical JSON
};

struct RunRecord {
  std::string dataset;
  std::string method;
  std::string delta_mode;  // "none" (nn_map), "train", or "tuned"
  std::uint64_t seed = 0;
  double nlpd = 0.0;
  double acc = 0.0;  // NaN for regression
  Eigen::Index num_inducing = 0;
  double delta = 0.0;
  double seconds = 0.0;
  std::string error;  // nonempty when the method failed for this seed
  std::vector<TuneEntry> tune_table;  // filled for delta_mode == "tuned"
};

struct Aggregate {
  std::string dataset;
  std::string method;
  std::string delta_mode;
  int num_seeds = 0;
  double nlpd_mean = 0.0;
  std::optional<double> nlpd_std;  // omitted below 2 seeds
  double acc_mean = 0.0;
  std::optional<double> acc_std;
};

struct ResultsRecord {
  std::string config_hash;
  Eigen::Index data_n = 0, data_d = 0, data_c = 0;
  std::vector<RunRecord> runs;
  std::vector<Aggregate> aggregates;
};

/// Full protocol on an in-memory dataset: per seed, split + MAP training,
/// every requested method under the training delta and (optionally) a tuned
/// delta, evaluated on the test split. A failing method records an error
/// entry without aborting the rest.
ResultsRecord run_experiment_on(const ExperimentConfig& cfg, const Dataset& data);

/// Loads the configured CSV and runs; also writes results files under
/// output_dir (<name>_results.json, <name>_long.csv, <name>_table.csv).
ResultsRecord run_experiment(const ExperimentConfig& cfg);

void write_results(const ResultsRecord& results, const ExperimentConfig& cfg,
                   const std::string& output_dir, const std::string& stem);

struct SweepRow {
  std::string dataset;
  std::string method;  // "sfr" or "gp_subset"
  double fraction = 0.0;
  std::uint64_t seed = 0;
  double nlpd = 0.0;
  std::optional<double> nlpd_dual_full;  // self-check, fraction 1.0 only
};

struct SweepResult {
  std::string config_hash;
  std::vector<SweepRow> rows;
};

/// Inducing-point sweep: one trained MAP per seed reused across fractions.
SweepResult sweep_inducing_on(const ExperimentConfig& cfg, const Dataset& data,
                              const std::vector<double>& fractions);
SweepResult sweep_inducing(const ExperimentConfig& cfg,
                           const std::vector<double>& fractions);
void write_sweep_csv(const SweepResult& sweep, const std::string& path);

struct DemoResult {
  Eigen::VectorXd grid_x;     // monotone, raw coordinates
  Eigen::VectorXd nn_mean;
  Eigen::VectorXd sfr_mean;
  Eigen::VectorXd sfr_std;    // predictive std including observation noise
  Eigen::VectorXd train_x;    // raw coordinates
  Eigen::VectorXd train_y;
  Eigen::VectorXd train_pred_mean;
  Eigen::VectorXd train_pred_std;
  double delta_used = 0.0;
  double noise_variance_used = 0.0;
  std::string csv_path;
};

/// 1-D regression illustration: trains on the configured (or generated)
/// data, tunes delta and the noise variance on validation, then emits a
/// grid CSV of NN mean, GP mean and +/-2 sigma bands.
DemoResult regression_demo(const ExperimentConfig& cfg);

/// Seeded synthetic tasks used by the demo, smoke tests and sweeps.
Dataset make_classification_blobs(const std::string& name, Eigen::Index n,
                                  Eigen::Index d, Eigen::Index num_classes,
                                  std::uint64_t seed, double spread);
Dataset make_regression_wave(Eigen::Index n, std::uint64_t seed,
                             double noise_std);

Likelihood likelihood_for(const Dataset& data, double noise_variance);

}  // namespace sfr
