#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sfr/experiment.hpp"
#include "sfr/io.hpp"
#include "sfr/metrics.hpp"
#include "sfr/rng.hpp"

namespace {

using sfr::ExperimentConfig;

struct CommonFlags {
  std::string config_path;
  std::string data_path;
  std::string name;
  std::string label_column;
  int label_index = -1;
  std::string delimiter = ",";
  bool no_header = false;
  bool regression = false;
  std::vector<std::uint64_t> seeds;
  std::vector<Eigen::Index> hidden;
  double learning_rate = -1.0;
  int batch_size = -1;
  double delta = -1.0;
  long patience = -1;
  long max_steps = -1;
  double inducing_fraction = -1.0;
  std::vector<std::string> methods;
  bool no_tune = false;
  double noise_variance = -1.0;
  std::string output_dir;
};

void add_common_options(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file");
  cmd->add_option("--data", flags.data_path, "dataset CSV path");
  cmd->add_option("--name", flags.name, "dataset name used in outputs");
  cmd->add_option("--label-column", flags.label_column, "label column name");
  cmd->add_option("--label-index", flags.label_index, "label column index");
  cmd->add_option("--delimiter", flags.delimiter, "CSV delimiter");
  cmd->add_flag("--no-header", flags.no_header, "CSV has no header row");
  cmd->add_flag("--regression", flags.regression, "labels are real-valued");
  cmd->add_option("--seeds", flags.seeds, "seeds to run")->delimiter(',');
  cmd->add_option("--hidden", flags.hidden, "hidden layer widths")->delimiter(',');
  cmd->add_option("--lr", flags.learning_rate, "Adam learning rate");
  cmd->add_option("--batch", flags.batch_size, "minibatch size");
  cmd->add_option("--delta", flags.delta, "prior precision used for training");
  cmd->add_option("--patience", flags.patience, "early-stopping patience (steps)");
  cmd->add_option("--max-steps", flags.max_steps, "optimizer step cap");
  cmd->add_option("--inducing-fraction", flags.inducing_fraction,
                  "M as a fraction of N");
  cmd->add_option("--methods", flags.methods, "methods to evaluate")
      ->delimiter(',');
  cmd->add_flag("--no-tune", flags.no_tune, "skip delta tuning");
  cmd->add_option("--noise-variance", flags.noise_variance,
                  "Gaussian likelihood noise variance");
  cmd->add_option("--output-dir", flags.output_dir, "directory for results");
}

ExperimentConfig resolve_config(const CommonFlags& flags) {
  ExperimentConfig cfg;
  if (!flags.config_path.empty()) {
    cfg = ExperimentConfig::from_json_file(flags.config_path);
  }
  if (!flags.data_path.empty()) cfg.dataset_path = flags.data_path;
  if (!flags.name.empty()) cfg.dataset_name = flags.name;
  if (!flags.label_column.empty()) cfg.schema.label_column = flags.label_column;
  if (flags.label_index >= 0) cfg.schema.label_index = flags.label_index;
  if (flags.delimiter.size() == 1) cfg.schema.delimiter = flags.delimiter[0];
  if (flags.no_header) cfg.schema.header = false;
  if (flags.regression) cfg.schema.regression = true;
  if (!flags.seeds.empty()) cfg.seeds = flags.seeds;
  if (!flags.hidden.empty()) cfg.hidden_widths = flags.hidden;
  if (flags.learning_rate > 0.0) cfg.train.learning_rate = flags.learning_rate;
  if (flags.batch_size > 0) cfg.train.batch_size = flags.batch_size;
  if (flags.delta > 0.0) cfg.train.prior_precision = flags.delta;
  if (flags.patience > 0) cfg.train.patience = flags.patience;
  if (flags.max_steps > 0) cfg.train.max_steps = flags.max_steps;
  if (flags.inducing_fraction > 0.0) {
    cfg.inducing_fraction = flags.inducing_fraction;
  }
  if (!flags.methods.empty()) cfg.methods = flags.methods;
  if (flags.no_tune) cfg.tune = false;
  if (flags.noise_variance > 0.0) cfg.noise_variance = flags.noise_variance;
  if (!flags.output_dir.empty()) cfg.output_dir = flags.output_dir;
  return cfg;
}

sfr::Dataset load_configured(const ExperimentConfig& cfg) {
  if (cfg.dataset_path.empty()) {
    throw sfr::ConfigError("no dataset given (use --data or the config file)");
  }
  sfr::Dataset data = sfr::load_csv(cfg.dataset_path, cfg.schema);
  data.name = cfg.dataset_name;
  return data;
}

int cmd_train(const CommonFlags& flags, const std::string& out_path,
              std::uint64_t seed) {
  const ExperimentConfig cfg = resolve_config(flags);
  const sfr::Dataset data = load_configured(cfg);
  const sfr::Splits splits = sfr::split_standardize(data, cfg.split, seed);
  const sfr::Likelihood lik = sfr::likelihood_for(data, cfg.noise_variance);

  sfr::MlpArchitecture arch;
  arch.input_dim = data.dim();
  arch.hidden_widths = cfg.hidden_widths;
  arch.output_dim = lik.latent_dim;
  sfr::TrainConfig train_cfg = cfg.train;
  train_cfg.seed = seed;

  const sfr::TrainResult result =
      sfr::train_map(splits.train, splits.valid, lik, arch, train_cfg);

  sfr::Checkpoint ckpt;
  ckpt.weights = result.weights;
  ckpt.prior_precision = cfg.train.prior_precision;
  ckpt.likelihood = lik;
  ckpt.standardization = splits.stats;
  sfr::save_checkpoint(ckpt, out_path);

  std::printf("trained %s: best step %ld, validation nlpd %.6f -> %s\n",
              cfg.dataset_name.c_str(), result.trace.best_step,
              result.trace.best_valid_nlpd, out_path.c_str());
  return 0;
}

int cmd_fit(const CommonFlags& flags, const std::string& ckpt_path,
            const std::string& out_path, std::uint64_t seed, double fit_delta) {
  const ExperimentConfig cfg = resolve_config(flags);
  const sfr::Checkpoint ckpt = sfr::load_checkpoint(ckpt_path);
  const sfr::Dataset data = load_configured(cfg);
  const sfr::Splits splits = sfr::split_standardize(data, cfg.split, seed);

  const double delta = fit_delta > 0.0 ? fit_delta : ckpt.prior_precision;
  const auto m = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(
             cfg.inducing_fraction * static_cast<double>(splits.train.size()))));
  const sfr::InducingPoints inducing =
      sfr::select_inducing(splits.train.x, m, sfr::mix_seed(seed, 0x1d));

  const sfr::SfrState state = sfr::sfr_fit(ckpt.weights, splits.train,
                                           ckpt.likelihood, inducing.z, delta);
  sfr::save_sfr_state(state, ckpt.likelihood, ckpt.standardization, out_path);
  std::printf("fitted sparse state: M=%lld, delta=%g, absorbed %ld points -> %s\n",
              static_cast<long long>(m), delta, state.num_points_absorbed,
              out_path.c_str());
  return 0;
}

int cmd_predict(const CommonFlags& flags, const std::string& state_path,
                const std::string& out_path) {
  const ExperimentConfig cfg = resolve_config(flags);
  const sfr::LoadedSfrState loaded = sfr::load_sfr_state(state_path);

  sfr::CsvSchema schema = cfg.schema;
  sfr::Dataset data;
  bool have_labels = true;
  try {
    data = sfr::load_csv(cfg.dataset_path, schema);
  } catch (const sfr::MissingLabelColumn&) {
    schema.no_label = true;
    data = sfr::load_csv(cfg.dataset_path, schema);
    have_labels = false;
  }

  Eigen::MatrixXd x = data.x;
  if (loaded.standardization.has_value()) {
    x = loaded.standardization->apply(x);
  }
  const auto preds =
      sfr::sfr_predict_batch(loaded.state, x, loaded.likelihood, cfg.push);

  std::ofstream out(out_path);
  if (!out) throw sfr::DataError("cannot write " + out_path);
  const bool classify = loaded.likelihood.is_classification();
  out << "row,latent_mean,latent_var";
  if (classify) {
    for (Eigen::Index c = 0; c < loaded.likelihood.num_classes(); ++c) {
      out << ",p" << c;
    }
  } else {
    out << ",pred_mean,pred_var";
  }
  out << "\n";
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out << i << "," << preds[i].latent_mean[0] << ","
        << preds[i].latent_cov(0, 0);
    if (classify) {
      for (Eigen::Index c = 0; c < preds[i].output.probs.size(); ++c) {
        out << "," << preds[i].output.probs[c];
      }
    } else {
      out << "," << preds[i].output.mean << "," << preds[i].output.variance;
    }
    out << "\n";
  }

  if (have_labels && data.y.size() > 0) {
    std::vector<sfr::OutputDistribution> outputs;
    for (const auto& p : preds) outputs.push_back(p.output);
    std::printf("nlpd %.6f", sfr::nlpd(outputs, data.y));
    if (classify) std::printf(", accuracy %.4f", sfr::accuracy(outputs, data.y));
    std::printf("\n");
  }
  std::printf("wrote %zu predictions -> %s\n", preds.size(), out_path.c_str());
  return 0;
}

int cmd_update(const CommonFlags& flags, const std::string& state_path,
               const std::string& out_path) {
  const ExperimentConfig cfg = resolve_config(flags);
  sfr::LoadedSfrState loaded = sfr::load_sfr_state(state_path);
  sfr::Dataset data = load_configured(cfg);
  if (loaded.standardization.has_value()) {
    data.x = loaded.standardization->apply(data.x);
  }
  const sfr::SfrState updated =
      sfr::sfr_update(loaded.state, data, loaded.likelihood);
  sfr::save_sfr_state(updated, loaded.likelihood, loaded.standardization,
                      out_path);
  std::printf("absorbed %lld new points (total %ld) -> %s\n",
              static_cast<long long>(data.size()), updated.num_points_absorbed,
              out_path.c_str());
  return 0;
}

int cmd_tune(const CommonFlags& flags, const std::string& ckpt_path,
             const std::string& family_name, std::uint64_t seed,
             const std::string& out_path) {
  const ExperimentConfig cfg = resolve_config(flags);
  const sfr::Checkpoint ckpt = sfr::load_checkpoint(ckpt_path);
  const sfr::Dataset data = load_configured(cfg);
  const sfr::Splits splits = sfr::split_standardize(data, cfg.split, seed);

  sfr::PredictorFamily family;
  if (family_name == "bnn") family = sfr::PredictorFamily::Bnn;
  else if (family_name == "glm") family = sfr::PredictorFamily::Glm;
  else if (family_name == "gp_subset") family = sfr::PredictorFamily::GpSubset;
  else if (family_name == "sfr") family = sfr::PredictorFamily::Sfr;
  else throw sfr::ConfigError("unknown family: " + family_name);

  const auto m = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(
             cfg.inducing_fraction * static_cast<double>(splits.train.size()))));
  sfr::JacobianCache cache;
  sfr::TuneContext ctx;
  ctx.w_star = &ckpt.weights;
  ctx.train = &splits.train;
  ctx.likelihood = ckpt.likelihood;
  ctx.inducing = sfr::select_inducing(splits.train.x, m, sfr::mix_seed(seed, 0x1d));
  ctx.push = cfg.push;
  ctx.bnn_samples = cfg.bnn_samples;
  ctx.cache = &cache;
  const sfr::TuneResult result =
      sfr::tune_delta(family, ctx, splits.valid, cfg.grid);

  nlohmann::json j;
  j["family"] = family_name;
  j["best_delta"] = result.best;
  j["table"] = nlohmann::json::array();
  for (const auto& e : result.table) {
    j["table"].push_back({{"delta", e.value},
                          {"nlpd", std::isfinite(e.nlpd)
                                       ? nlohmann::json(e.nlpd)
                                       : nlohmann::json("inf")}});
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    out << j.dump(2) << "\n";
  }
  std::printf("%s\n", j.dump(2).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse function-space posteriors for trained networks"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string ckpt_path, state_path, out_path, family_name = "sfr";
  std::uint64_t seed = 0;
  double fit_delta = -1.0;
  std::vector<double> fractions = {0.01, 0.05, 0.2, 1.0};

  auto* train = app.add_subcommand("train", "train the MAP network");
  add_common_options(train, flags);
  train->add_option("--seed", seed, "split/init seed");
  train->add_option("--out", out_path, "checkpoint output path")->required();

  auto* fit = app.add_subcommand("fit", "fit the sparse posterior state");
  add_common_options(fit, flags);
  fit->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  fit->add_option("--seed", seed, "split/inducing seed");
  fit->add_option("--fit-delta", fit_delta, "override the checkpoint delta");
  fit->add_option("--out", out_path, "state output path")->required();

  auto* predict = app.add_subcommand("predict", "predict with a fitted state");
  add_common_options(predict, flags);
  predict->add_option("--state", state_path, "fitted state file")->required();
  predict->add_option("--out", out_path, "predictions CSV path")->required();

  auto* update = app.add_subcommand("update", "condition a state on new data");
  add_common_options(update, flags);
  update->add_option("--state", state_path, "fitted state file")->required();
  update->add_option("--out", out_path, "updated state path")->required();

  auto* tune = app.add_subcommand("tune", "grid-search the prior precision");
  add_common_options(tune, flags);
  tune->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  tune->add_option("--family", family_name, "bnn|glm|gp_subset|sfr");
  tune->add_option("--seed", seed, "split seed");
  tune->add_option("--out", out_path, "table output path");

  auto* bench = app.add_subcommand("bench", "run the benchmark protocol");
  add_common_options(bench, flags);

  auto* sweep = app.add_subcommand("sweep", "inducing-point fraction sweep");
  add_common_options(sweep, flags);
  sweep->add_option("--fractions", fractions, "M/N fractions")->delimiter(',');

  auto* demo = app.add_subcommand("demo", "1-D regression illustration");
  add_common_options(demo, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(flags, out_path, seed);
    if (fit->parsed()) return cmd_fit(flags, ckpt_path, out_path, seed, fit_delta);
    if (predict->parsed()) return cmd_predict(flags, state_path, out_path);
    if (update->parsed()) return cmd_update(flags, state_path, out_path);
    if (tune->parsed()) {
      return cmd_tune(flags, ckpt_path, family_name, seed, out_path);
    }
    if (bench->parsed()) {
      const ExperimentConfig cfg = resolve_config(flags);
      const sfr::ResultsRecord results = sfr::run_experiment(cfg);
      for (const auto& agg : results.aggregates) {
        std::printf("%s %s/%s: nlpd %.4f%s%s\n", agg.dataset.c_str(),
                    agg.method.c_str(), agg.delta_mode.c_str(), agg.nlpd_mean,
                    agg.nlpd_std.has_value() ? " +/- " : "",
                    agg.nlpd_std.has_value()
                        ? std::to_string(*agg.nlpd_std).c_str()
                        : "");
      }
      for (const auto& run : results.runs) {
        if (!run.error.empty()) std::fprintf(stderr, "error: %s\n", run.error.c_str());
      }
      return 0;
    }
    if (sweep->parsed()) {
      const ExperimentConfig cfg = resolve_config(flags);
      sfr::sweep_inducing(cfg, fractions);
      std::printf("sweep written under %s\n", cfg.output_dir.c_str());
      return 0;
    }
    if (demo->parsed()) {
      const ExperimentConfig cfg = resolve_config(flags);
      const sfr::DemoResult result = sfr::regression_demo(cfg);
      std::printf("demo written to %s (delta %g, noise %g)\n",
                  result.csv_path.c_str(), result.delta_used,
                  result.noise_variance_used);
      return 0;
    }
  } catch (const sfr::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const sfr::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const sfr::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
