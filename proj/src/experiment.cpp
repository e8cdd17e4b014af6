#include "sfr/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include <json.hpp>

#include "sfr/metrics.hpp"
#include "sfr/rng.hpp"

namespace sfr {

namespace {

using nlohmann::json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["dataset"] = cfg.dataset_path;
  j["name"] = cfg.dataset_name;
  j["schema"] = {{"label_column", cfg.schema.label_column},
                 {"label_index", cfg.schema.label_index},
                 {"delimiter", std::string(1, cfg.schema.delimiter)},
                 {"header", cfg.schema.header},
                 {"regression", cfg.schema.regression}};
  j["split"] = {cfg.split.train, cfg.split.valid, cfg.split.test};
  j["seeds"] = cfg.seeds;
  j["hidden_widths"] = cfg.hidden_widths;
  j["train"] = {{"learning_rate", cfg.train.learning_rate},
                {"batch_size", cfg.train.batch_size},
                {"prior_precision", cfg.train.prior_precision},
                {"patience", cfg.train.patience},
                {"eval_interval", cfg.train.eval_interval},
                {"max_steps", cfg.train.max_steps}};
  j["inducing_fraction"] = cfg.inducing_fraction;
  j["methods"] = cfg.methods;
  j["tune_delta"] = cfg.tune;
  j["grid"] = cfg.grid.values;
  j["pushforward"] = {
      {"method", cfg.push.kind == PushForward::Kind::MonteCarlo ? "mc" : "probit"},
      {"samples", cfg.push.num_samples},
      {"seed", cfg.push.seed}};
  j["bnn_samples"] = cfg.bnn_samples;
  j["noise_variance"] = cfg.noise_variance;
  j["output_dir"] = cfg.output_dir;
  return j;
}

void config_from_json(const json& j, ExperimentConfig& cfg) {
  cfg.dataset_path = j.value("dataset", cfg.dataset_path);
  cfg.dataset_name = j.value("name", cfg.dataset_name);
  if (j.contains("schema")) {
    const auto& s = j["schema"];
    cfg.schema.label_column = s.value("label_column", cfg.schema.label_column);
    cfg.schema.label_index = s.value("label_index", cfg.schema.label_index);
    const std::string d = s.value("delimiter", std::string(1, cfg.schema.delimiter));
    if (d.size() != 1) throw ConfigError("config: delimiter must be one char");
    cfg.schema.delimiter = d[0];
    cfg.schema.header = s.value("header", cfg.schema.header);
    cfg.schema.regression = s.value("regression", cfg.schema.regression);
  }
  if (j.contains("split")) {
    const auto& s = j["split"];
    if (s.size() != 3) throw ConfigError("config: split needs 3 fractions");
    cfg.split = SplitFractions{s[0].get<double>(), s[1].get<double>(),
                               s[2].get<double>()};
  }
  if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("hidden_widths")) {
    cfg.hidden_widths = j["hidden_widths"].get<std::vector<Eigen::Index>>();
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
    cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
    cfg.train.prior_precision =
        t.value("prior_precision", cfg.train.prior_precision);
    cfg.train.patience = t.value("patience", cfg.train.patience);
    cfg.train.eval_interval = t.value("eval_interval", cfg.train.eval_interval);
    cfg.train.max_steps = t.value("max_steps", cfg.train.max_steps);
  }
  cfg.inducing_fraction = j.value("inducing_fraction", cfg.inducing_fraction);
  if (j.contains("methods")) {
    cfg.methods = j["methods"].get<std::vector<std::string>>();
  }
  cfg.tune = j.value("tune_delta", cfg.tune);
  if (j.contains("grid")) {
    if (j["grid"].is_array()) {
      cfg.grid.values = j["grid"].get<std::vector<double>>();
    } else {
      cfg.grid = TuneGrid::log_spaced(j["grid"].value("lo", 1e-4),
                                      j["grid"].value("hi", 1e4),
                                      j["grid"].value("count", 20));
    }
  }
  if (j.contains("pushforward")) {
    const auto& p = j["pushforward"];
    const std::string kind = p.value("method", "mc");
    if (kind == "mc") {
      cfg.push = PushForward::mc(p.value("samples", 100),
                                 p.value("seed", std::uint64_t{0}));
    } else if (kind == "probit") {
      cfg.push = PushForward::probit();
    } else {
      throw ConfigError("config: pushforward method must be mc or probit");
    }
  }
  cfg.bnn_samples = j.value("bnn_samples", cfg.bnn_samples);
  cfg.noise_variance = j.value("noise_variance", cfg.noise_variance);
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
}

struct SeedContext {
  const ExperimentConfig* cfg = nullptr;
  const Dataset* train = nullptr;
  const Dataset* valid = nullptr;
  const Dataset* test = nullptr;
  Likelihood lik = Likelihood::gaussian(1.0);
  const MlpWeights* w_star = nullptr;
  InducingPoints inducing;
  JacobianCache* cache = nullptr;
  const GgnPosterior* shared_ggn = nullptr;
};

PredictorFamily family_of(const std::string& method) {
  if (method == "bnn") return PredictorFamily::Bnn;
  if (method == "glm") return PredictorFamily::Glm;
  if (method == "gp_subset") return PredictorFamily::GpSubset;
  if (method == "sfr") return PredictorFamily::Sfr;
  throw ConfigError("unknown tunable method: " + method);
}

struct MethodEval {
  double nlpd = kNan;
  double acc = kNan;
};

MethodEval score(const SeedContext& ctx,
                 const std::vector<PredictiveDistribution>& preds) {
  std::vector<OutputDistribution> outputs;
  outputs.reserve(preds.size());
  for (const auto& p : preds) outputs.push_back(p.output);
  MethodEval ev;
  ev.nlpd = nlpd(outputs, ctx.test->y);
  if (ctx.lik.is_classification()) ev.acc = accuracy(outputs, ctx.test->y);
  return ev;
}

MethodEval eval_method(const SeedContext& ctx, const std::string& method,
                       double delta) {
  const PushForward& push = ctx.cfg->push;
  if (method == "nn_map") {
    const Eigen::MatrixXd& f =
        ctx.cache->forward(*ctx.w_star, "test", ctx.test->x);
    std::vector<OutputDistribution> outputs;
    outputs.reserve(static_cast<std::size_t>(f.rows()));
    for (Eigen::Index i = 0; i < f.rows(); ++i) {
      outputs.push_back(map_output(ctx.lik, f.row(i).transpose()));
    }
    MethodEval ev;
    ev.nlpd = nlpd(outputs, ctx.test->y);
    if (ctx.lik.is_classification()) ev.acc = accuracy(outputs, ctx.test->y);
    return ev;
  }
  if (method == "bnn") {
    const GgnPosterior post = ggn_with_delta(*ctx.shared_ggn, delta);
    return score(ctx, bnn_predict_batch(post, ctx.test->x, ctx.lik,
                                        ctx.cfg->bnn_samples, push.seed));
  }
  if (method == "glm") {
    const GgnPosterior post = ggn_with_delta(*ctx.shared_ggn, delta);
    return score(ctx, glm_predict_batch(post, ctx.test->x, ctx.lik, push,
                                        ctx.cache, "test"));
  }
  if (method == "gp_subset") {
    const Dataset subset = ctx.train->rows(ctx.inducing.indices, "subset");
    const GpSubsetPredictor pred =
        gp_subset_fit(*ctx.w_star, subset, ctx.lik, delta, ctx.cache, "z");
    return score(ctx, gp_subset_predict_batch(pred, ctx.test->x, ctx.lik, push,
                                              ctx.cache, "test"));
  }
  if (method == "sfr") {
    const SfrState state = sfr_fit(*ctx.w_star, *ctx.train, ctx.lik,
                                   ctx.inducing.z, delta, ctx.cache, "train", "z");
    return score(ctx, sfr_predict_batch(state, ctx.test->x, ctx.lik, push,
                                        ctx.cache, "test"));
  }
  throw ConfigError("unknown method: " + method);
}

void aggregate_results(ResultsRecord& results) {
  std::vector<std::string> keys;
  for (const auto& run : results.runs) {
    const std::string key = run.method + "\x1f" + run.delta_mode;
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      keys.push_back(key);
    }
  }
  for (const auto& key : keys) {
    const auto sep = key.find('\x1f');
    Aggregate agg;
    agg.method = key.substr(0, sep);
    agg.delta_mode = key.substr(sep + 1);
    std::vector<double> nlpds, accs;
    for (const auto& run : results.runs) {
      if (run.method != agg.method || run.delta_mode != agg.delta_mode ||
          !run.error.empty()) {
        continue;
      }
      agg.dataset = run.dataset;
      nlpds.push_back(run.nlpd);
      if (std::isfinite(run.acc)) accs.push_back(run.acc);
    }
    if (nlpds.empty()) continue;
    agg.num_seeds = static_cast<int>(nlpds.size());
    const auto mean = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    const auto sample_std = [&](const std::vector<double>& v, double mu) {
      double s = 0.0;
      for (double x : v) s += (x - mu) * (x - mu);
      return std::sqrt(s / static_cast<double>(v.size() - 1));
    };
    agg.nlpd_mean = mean(nlpds);
    if (nlpds.size() >= 2) agg.nlpd_std = sample_std(nlpds, agg.nlpd_mean);
    if (!accs.empty()) {
      agg.acc_mean = mean(accs);
      if (accs.size() >= 2) agg.acc_std = sample_std(accs, agg.acc_mean);
    } else {
      agg.acc_mean = kNan;
    }
    results.aggregates.push_back(std::move(agg));
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  config_from_json(j, cfg);
  return cfg;
}

std::string ExperimentConfig::to_json_string() const {
  return config_to_json(*this).dump(2);
}

std::string ExperimentConfig::config_hash() const {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(to_json_string())));
  return buf;
}

Likelihood likelihood_for(const Dataset& data, double noise_variance) {
  if (data.regression()) return Likelihood::gaussian(noise_variance);
  if (data.num_classes < 2) throw DataError("classification needs >= 2 classes");
  if (data.num_classes == 2) return Likelihood::bernoulli_logit();
  return Likelihood::categorical_softmax(data.num_classes);
}

ResultsRecord run_experiment_on(const ExperimentConfig& cfg, const Dataset& data) {
  ResultsRecord results;
  results.config_hash = cfg.config_hash();
  results.data_n = data.size();
  results.data_d = data.dim();
  results.data_c = data.num_classes;

  const Likelihood proto_lik = likelihood_for(data, cfg.noise_variance);
  MlpArchitecture arch;
  arch.input_dim = data.dim();
  arch.hidden_widths = cfg.hidden_widths;
  arch.output_dim = proto_lik.latent_dim;

  for (std::uint64_t seed : cfg.seeds) {
    const Splits splits = split_standardize(data, cfg.split, seed);

    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = seed;
    const TrainResult trained =
        train_map(splits.train, splits.valid, proto_lik, arch, train_cfg);

    JacobianCache cache;
    SeedContext ctx;
    ctx.cfg = &cfg;
    ctx.train = &splits.train;
    ctx.valid = &splits.valid;
    ctx.test = &splits.test;
    ctx.lik = proto_lik;
    ctx.w_star = &trained.weights;
    ctx.cache = &cache;

    const auto m = std::max<Eigen::Index>(
        1, static_cast<Eigen::Index>(std::llround(
               cfg.inducing_fraction * static_cast<double>(splits.train.size()))));
    ctx.inducing = select_inducing(splits.train.x, m, mix_seed(seed, 0x1d));

    GgnPosterior shared_ggn;
    const bool needs_ggn =
        std::find(cfg.methods.begin(), cfg.methods.end(), "bnn") !=
            cfg.methods.end() ||
        std::find(cfg.methods.begin(), cfg.methods.end(), "glm") !=
            cfg.methods.end();
    if (needs_ggn) {
      shared_ggn = ggn_fit(trained.weights, splits.train, proto_lik, 1.0,
                           &cache, "train");
      ctx.shared_ggn = &shared_ggn;
    }

    for (const std::string& method : cfg.methods) {
      RunRecord rec;
      rec.dataset = cfg.dataset_name;
      rec.method = method;
      rec.seed = seed;
      rec.num_inducing = method == "gp_subset" || method == "sfr" ? m : 0;
      rec.delta = cfg.train.prior_precision;
      rec.delta_mode = method == "nn_map" ? "none" : "train";
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const MethodEval ev = eval_method(ctx, method, cfg.train.prior_precision);
        rec.nlpd = ev.nlpd;
        rec.acc = ev.acc;
      } catch (const std::exception& e) {
        rec.error = std::string("(") + cfg.dataset_name + ", " + method + ", " +
                    std::to_string(seed) + "): " + e.what();
      }
      rec.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
      results.runs.push_back(rec);

      if (cfg.tune && method != "nn_map" && rec.error.empty()) {
        RunRecord tuned = rec;
        tuned.delta_mode = "tuned";
        const auto t1 = std::chrono::steady_clock::now();
        try {
          TuneContext tctx;
          tctx.w_star = ctx.w_star;
          tctx.train = ctx.train;
          tctx.likelihood = ctx.lik;
          tctx.inducing = ctx.inducing;
          tctx.push = cfg.push;
          tctx.bnn_samples = cfg.bnn_samples;
          tctx.cache = &cache;
          tctx.base_ggn = ctx.shared_ggn;
          tctx.train_id = "train";
          tctx.valid_id = "valid";
          tctx.inducing_id = "z";
          const TuneResult tr =
              tune_delta(family_of(method), tctx, splits.valid, cfg.grid);
          tuned.delta = tr.best;
          tuned.tune_table = tr.table;
          const MethodEval ev = eval_method(ctx, method, tr.best);
          tuned.nlpd = ev.nlpd;
          tuned.acc = ev.acc;
        } catch (const std::exception& e) {
          tuned.error = std::string("(") + cfg.dataset_name + ", " + method +
                        ", " + std::to_string(seed) + ", tuned): " + e.what();
        }
        tuned.seconds = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t1)
                            .count();
        results.runs.push_back(std::move(tuned));
      }
    }
  }

  aggregate_results(results);
  return results;
}

ResultsRecord run_experiment(const ExperimentConfig& cfg) {
  if (cfg.dataset_path.empty()) {
    throw ConfigError("run_experiment: no dataset path configured");
  }
  Dataset data = load_csv(cfg.dataset_path, cfg.schema);
  data.name = cfg.dataset_name;
  ResultsRecord results = run_experiment_on(cfg, data);
  write_results(results, cfg, cfg.output_dir, cfg.dataset_name);
  return results;
}

void write_results(const ResultsRecord& results, const ExperimentConfig& cfg,
                   const std::string& output_dir, const std::string& stem) {
  std::filesystem::create_directories(output_dir);

  json j;
  j["config_hash"] = results.config_hash;
  j["config"] = config_to_json(cfg);
  j["dataset"] = {{"name", stem},
                  {"n", results.data_n},
                  {"d", results.data_d},
                  {"c", results.data_c}};
  j["per_run"] = json::array();
  for (const auto& run : results.runs) {
    json r;
    r["dataset"] = run.dataset;
    r["method"] = run.method;
    r["delta_mode"] = run.delta_mode;
    r["seed"] = run.seed;
    if (run.error.empty()) {
      r["nlpd"] = run.nlpd;
      if (std::isfinite(run.acc)) r["acc"] = run.acc;
    } else {
      r["error"] = run.error;
    }
    r["m"] = run.num_inducing;
    r["delta"] = run.delta;
    r["seconds"] = run.seconds;
    if (!run.tune_table.empty()) {
      json table = json::array();
      for (const auto& e : run.tune_table) {
        table.push_back({{"delta", e.value},
                         {"nlpd", std::isfinite(e.nlpd)
                                      ? json(e.nlpd)
                                      : json("inf")}});
      }
      r["tune_table"] = std::move(table);
    }
    j["per_run"].push_back(std::move(r));
  }
  j["aggregates"] = json::array();
  for (const auto& agg : results.aggregates) {
    json a;
    a["dataset"] = agg.dataset;
    a["method"] = agg.method;
    a["delta_mode"] = agg.delta_mode;
    a["num_seeds"] = agg.num_seeds;
    a["nlpd_mean"] = agg.nlpd_mean;
    if (agg.nlpd_std.has_value()) a["nlpd_std"] = *agg.nlpd_std;
    if (std::isfinite(agg.acc_mean)) {
      a["acc_mean"] = agg.acc_mean;
      if (agg.acc_std.has_value()) a["acc_std"] = *agg.acc_std;
    }
    j["aggregates"].push_back(std::move(a));
  }
  std::ofstream json_out(output_dir + "/" + stem + "_results.json");
  json_out << j.dump(2) << "\n";

  std::ofstream long_csv(output_dir + "/" + stem + "_long.csv");
  long_csv << "dataset,method,seed,delta_mode,nlpd,acc,M,delta,seconds\n";
  for (const auto& run : results.runs) {
    if (!run.error.empty()) continue;
    long_csv << run.dataset << "," << run.method << "," << run.seed << ","
             << run.delta_mode << "," << format_double(run.nlpd) << ","
             << (std::isfinite(run.acc) ? format_double(run.acc) : "") << ","
             << run.num_inducing << "," << format_double(run.delta) << ","
             << format_double(run.seconds) << "\n";
  }

  // One row per dataset in the layout of the benchmark table: the plain MAP
  // column, then every method without and with delta tuning.
  std::ofstream table_csv(output_dir + "/" + stem + "_table.csv");
  table_csv << "dataset,n,d,c";
  const std::vector<std::string> table_methods = {"bnn", "glm", "gp_subset",
                                                  "sfr"};
  table_csv << ",nn_map_nlpd_mean,nn_map_nlpd_std";
  for (const char* mode : {"train", "tuned"}) {
    for (const auto& m : table_methods) {
      table_csv << "," << m << "_" << mode << "_nlpd_mean," << m << "_" << mode
                << "_nlpd_std";
    }
  }
  table_csv << "\n" << stem << "," << results.data_n << "," << results.data_d
            << "," << results.data_c;
  const auto emit = [&](const std::string& method, const std::string& mode) {
    for (const auto& agg : results.aggregates) {
      if (agg.method == method && agg.delta_mode == mode) {
        table_csv << "," << format_double(agg.nlpd_mean) << ","
                  << (agg.nlpd_std.has_value() ? format_double(*agg.nlpd_std)
                                               : "");
        return;
      }
    }
    table_csv << ",,";
  };
  emit("nn_map", "none");
  for (const char* mode : {"train", "tuned"}) {
    for (const auto& m : table_methods) emit(m, mode);
  }
  table_csv << "\n";
}

SweepResult sweep_inducing_on(const ExperimentConfig& cfg, const Dataset& data,
                              const std::vector<double>& fractions) {
  for (double f : fractions) {
    if (!(f > 0.0) || f > 1.0) {
      throw ConfigError("sweep_inducing: fractions must lie in (0, 1]");
    }
  }
  SweepResult sweep;
  sweep.config_hash = cfg.config_hash();

  const Likelihood lik = likelihood_for(data, cfg.noise_variance);
  MlpArchitecture arch;
  arch.input_dim = data.dim();
  arch.hidden_widths = cfg.hidden_widths;
  arch.output_dim = lik.latent_dim;

  for (std::uint64_t seed : cfg.seeds) {
    const Splits splits = split_standardize(data, cfg.split, seed);
    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = seed;
    const TrainResult trained =
        train_map(splits.train, splits.valid, lik, arch, train_cfg);
    JacobianCache cache;

    for (std::size_t fi = 0; fi < fractions.size(); ++fi) {
      const double fraction = fractions[fi];
      const auto m = std::max<Eigen::Index>(
          1, static_cast<Eigen::Index>(std::llround(
                 fraction * static_cast<double>(splits.train.size()))));
      const InducingPoints inducing =
          select_inducing(splits.train.x, m, mix_seed(seed, 0x1d, fi));
      const std::string z_id = "z/" + std::to_string(fi);

      double delta = cfg.train.prior_precision;
      SeedContext ctx;
      ctx.cfg = &cfg;
      ctx.train = &splits.train;
      ctx.valid = &splits.valid;
      ctx.test = &splits.test;
      ctx.lik = lik;
      ctx.w_star = &trained.weights;
      ctx.inducing = inducing;
      ctx.cache = &cache;

      for (const std::string& method : {std::string("sfr"),
                                        std::string("gp_subset")}) {
        SweepRow row;
        row.dataset = cfg.dataset_name;
        row.method = method;
        row.fraction = fraction;
        row.seed = seed;

        double method_delta = delta;
        if (cfg.tune) {
          TuneContext tctx;
          tctx.w_star = ctx.w_star;
          tctx.train = ctx.train;
          tctx.likelihood = lik;
          tctx.inducing = inducing;
          tctx.push = cfg.push;
          tctx.cache = &cache;
          tctx.train_id = "train";
          tctx.valid_id = "valid";
          tctx.inducing_id = z_id;
          method_delta =
              tune_delta(family_of(method), tctx, splits.valid, cfg.grid).best;
        }

        if (method == "sfr") {
          const SfrState state =
              sfr_fit(trained.weights, splits.train, lik, inducing.z,
                      method_delta, &cache, "train", z_id);
          row.nlpd = score(ctx, sfr_predict_batch(state, splits.test.x, lik,
                                                  cfg.push, &cache, "test"))
                         .nlpd;
          if (fraction >= 1.0 &&
              splits.train.size() * lik.latent_dim <= 2400) {
            const DualCoefficients duals =
                compute_duals(trained.weights, splits.train, lik, &cache, "train");
            const DualFullPredictor full =
                dual_full_fit(trained.weights, duals, splits.train.x,
                              method_delta, lik, &cache, "train");
            row.nlpd_dual_full =
                score(ctx, dual_full_predict_batch(full, splits.test.x, lik,
                                                   cfg.push, &cache, "test"))
                    .nlpd;
          }
        } else {
          const Dataset subset = splits.train.rows(inducing.indices, "subset");
          const GpSubsetPredictor pred = gp_subset_fit(
              trained.weights, subset, lik, method_delta, &cache, z_id);
          row.nlpd = score(ctx, gp_subset_predict_batch(pred, splits.test.x, lik,
                                                        cfg.push, &cache, "test"))
                         .nlpd;
        }
        sweep.rows.push_back(std::move(row));
      }
    }
  }
  return sweep;
}

SweepResult sweep_inducing(const ExperimentConfig& cfg,
                           const std::vector<double>& fractions) {
  if (cfg.dataset_path.empty()) {
    throw ConfigError("sweep_inducing: no dataset path configured");
  }
  Dataset data = load_csv(cfg.dataset_path, cfg.schema);
  data.name = cfg.dataset_name;
  SweepResult sweep = sweep_inducing_on(cfg, data, fractions);
  std::filesystem::create_directories(cfg.output_dir);
  write_sweep_csv(sweep, cfg.output_dir + "/" + cfg.dataset_name + "_sweep.csv");
  return sweep;
}

void write_sweep_csv(const SweepResult& sweep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "dataset,method,fraction,seed,nlpd,nlpd_dual_full\n";
  for (const auto& row : sweep.rows) {
    out << row.dataset << "," << row.method << "," << format_double(row.fraction)
        << "," << row.seed << "," << format_double(row.nlpd) << ","
        << (row.nlpd_dual_full.has_value() ? format_double(*row.nlpd_dual_full)
                                           : "")
        << "\n";
  }
}

Dataset make_classification_blobs(const std::string& name, Eigen::Index n,
                                  Eigen::Index d, Eigen::Index num_classes,
                                  std::uint64_t seed, double spread) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd means(num_classes, d);
  for (Eigen::Index c = 0; c < num_classes; ++c) {
    for (Eigen::Index j = 0; j < d; ++j) means(c, j) = 2.0 * normal(rng);
  }
  Dataset out;
  out.name = name;
  out.num_classes = num_classes;
  out.x.resize(n, d);
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index c = i % num_classes;
    out.y[i] = static_cast<double>(c);
    for (Eigen::Index j = 0; j < d; ++j) {
      out.x(i, j) = means(c, j) + spread * normal(rng);
    }
  }
  for (Eigen::Index c = 0; c < num_classes; ++c) {
    out.label_names.push_back("class" + std::to_string(c));
  }
  return out;
}

Dataset make_regression_wave(Eigen::Index n, std::uint64_t seed,
                             double noise_std) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset out;
  out.name = "wave";
  out.num_classes = 0;
  out.x.resize(n, 1);
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool left = uniform(rng) < 0.5;
    const double u = uniform(rng);
    const double x = left ? -1.0 + 0.8 * u : 0.2 + 0.8 * u;
    out.x(i, 0) = x;
    out.y[i] = std::sin(5.0 * x) + noise_std * normal(rng);
  }
  return out;
}

DemoResult regression_demo(const ExperimentConfig& cfg) {
  Dataset data;
  if (cfg.dataset_path.empty()) {
    data = make_regression_wave(200, cfg.seeds.empty() ? 0 : cfg.seeds[0], 0.1);
  } else {
    CsvSchema schema = cfg.schema;
    schema.regression = true;
    data = load_csv(cfg.dataset_path, schema);
  }
  if (data.dim() != 1) {
    throw ConfigError("regression_demo: needs a 1-D regression dataset");
  }

  const std::uint64_t seed = cfg.seeds.empty() ? 0 : cfg.seeds[0];
  const Splits splits = split_standardize(data, cfg.split, seed);
  Likelihood lik = Likelihood::gaussian(cfg.noise_variance);

  MlpArchitecture arch;
  arch.input_dim = 1;
  arch.hidden_widths = cfg.hidden_widths;
  arch.output_dim = 1;
  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = seed;
  const TrainResult trained =
      train_map(splits.train, splits.valid, lik, arch, train_cfg);

  JacobianCache cache;
  const auto m = std::max<Eigen::Index>(
      1, static_cast<Eigen::Index>(std::llround(
             cfg.inducing_fraction * static_cast<double>(splits.train.size()))));
  const InducingPoints inducing =
      select_inducing(splits.train.x, m, mix_seed(seed, 0x1d));

  double delta = cfg.train.prior_precision;
  if (cfg.tune) {
    TuneContext tctx;
    tctx.w_star = &trained.weights;
    tctx.train = &splits.train;
    tctx.likelihood = lik;
    tctx.inducing = inducing;
    tctx.push = cfg.push;
    tctx.cache = &cache;
    tctx.train_id = "train";
    tctx.valid_id = "valid";
    tctx.inducing_id = "z";
    delta = tune_delta(PredictorFamily::Sfr, tctx, splits.valid, cfg.grid).best;
    const TuneResult noise = tune_noise_variance(
        PredictorFamily::Sfr, tctx, splits.valid, delta,
        TuneGrid::log_spaced(1e-4, 1e1, 16));
    lik.noise_variance = noise.best;
  }

  const SfrState state = sfr_fit(trained.weights, splits.train, lik, inducing.z,
                                 delta, &cache, "train", "z");

  const double lo = splits.train.x.col(0).minCoeff();
  const double hi = splits.train.x.col(0).maxCoeff();
  const double span = hi - lo;
  const Eigen::Index grid_n = 200;
  Eigen::MatrixXd grid(grid_n, 1);
  for (Eigen::Index i = 0; i < grid_n; ++i) {
    grid(i, 0) = lo - 0.5 * span +
                 2.0 * span * static_cast<double>(i) /
                     static_cast<double>(grid_n - 1);
  }

  DemoResult demo;
  demo.delta_used = delta;
  demo.noise_variance_used = lik.noise_variance;
  demo.grid_x = grid.col(0) * splits.stats.stddev[0];
  demo.grid_x.array() += splits.stats.mean[0];
  demo.nn_mean = mlp_forward(trained.weights, grid).col(0);
  demo.sfr_mean.resize(grid_n);
  demo.sfr_std.resize(grid_n);
  const auto grid_preds = sfr_predict_batch(state, grid, lik, cfg.push);
  for (Eigen::Index i = 0; i < grid_n; ++i) {
    demo.sfr_mean[i] = grid_preds[static_cast<std::size_t>(i)].output.mean;
    demo.sfr_std[i] =
        std::sqrt(grid_preds[static_cast<std::size_t>(i)].output.variance);
  }

  demo.train_x = splits.train.x.col(0) * splits.stats.stddev[0];
  demo.train_x.array() += splits.stats.mean[0];
  demo.train_y = splits.train.y;
  const auto train_preds =
      sfr_predict_batch(state, splits.train.x, lik, cfg.push, &cache, "train");
  demo.train_pred_mean.resize(splits.train.size());
  demo.train_pred_std.resize(splits.train.size());
  for (Eigen::Index i = 0; i < splits.train.size(); ++i) {
    demo.train_pred_mean[i] = train_preds[static_cast<std::size_t>(i)].output.mean;
    demo.train_pred_std[i] =
        std::sqrt(train_preds[static_cast<std::size_t>(i)].output.variance);
  }

  std::filesystem::create_directories(cfg.output_dir);
  demo.csv_path = cfg.output_dir + "/" + cfg.dataset_name + "_demo.csv";
  std::ofstream out(demo.csv_path);
  out << "x,nn_mean,sfr_mean,sfr_std,sfr_lo,sfr_hi\n";
  for (Eigen::Index i = 0; i < grid_n; ++i) {
    out << format_double(demo.grid_x[i]) << "," << format_double(demo.nn_mean[i])
        << "," << format_double(demo.sfr_mean[i]) << ","
        << format_double(demo.sfr_std[i]) << ","
        << format_double(demo.sfr_mean[i] - 2.0 * demo.sfr_std[i]) << ","
        << format_double(demo.sfr_mean[i] + 2.0 * demo.sfr_std[i]) << "\n";
  }
  return demo;
}

}  // namespace sfr
