#include "sfr/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "sfr/rng.hpp"

namespace sfr {

namespace {

void check_data(const Dataset& data, const Likelihood& lik,
                const MlpArchitecture& arch) {
  if (data.size() == 0) throw ConfigError("train_map: dataset is empty");
  if (data.dim() != arch.input_dim) {
    throw DimensionMismatch("train_map: dataset dim does not match architecture");
  }
  if (lik.latent_dim != arch.output_dim) {
    throw DimensionMismatch("train_map: likelihood dim does not match output dim");
  }
}

}  // namespace

double map_loss(const MlpWeights& weights, const Dataset& data,
                const Likelihood& lik, double prior_precision) {
  const Eigen::MatrixXd f = mlp_forward(weights, data.x);
  double nll = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    nll -= log_prob(lik, data.y[i], f.row(i).transpose());
  }
  return nll + 0.5 * prior_precision * weights.w.squaredNorm();
}

double plugin_nlpd(const MlpWeights& weights, const Dataset& data,
                   const Likelihood& lik) {
  const Eigen::MatrixXd f = mlp_forward(weights, data.x);
  double total = 0.0;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    total -= map_output(lik, f.row(i).transpose()).log_predictive(data.y[i]);
  }
  return total / static_cast<double>(data.size());
}

TrainResult train_map(const Dataset& train, const Dataset& valid,
                      const Likelihood& lik, const MlpArchitecture& arch,
                      const TrainConfig& cfg) {
  check_data(train, lik, arch);
  check_data(valid, lik, arch);
  if (cfg.batch_size < 1 || !(cfg.learning_rate > 0.0) ||
      !(cfg.prior_precision > 0.0)) {
    throw ConfigError("train_map: invalid training configuration");
  }

  const Eigen::Index n = train.size();
  const Eigen::Index p = arch.num_params();
  MlpWeights weights = mlp_init(arch, cfg.seed);

  Eigen::VectorXd m = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(p);

  std::mt19937_64 rng(splitmix64(cfg.seed ^ 0x5e3d1abfULL));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::size_t cursor = order.size();  // forces a shuffle on the first step

  TrainTrace trace;
  trace.best_valid_nlpd = std::numeric_limits<double>::infinity();
  MlpWeights best = weights;

  const Eigen::Index batch = std::min<Eigen::Index>(cfg.batch_size, n);
  Eigen::MatrixXd xb(batch, train.dim());
  Eigen::VectorXd yb(batch);
  Eigen::MatrixXd dl_df(batch, arch.output_dim);

  const auto evaluate = [&](long step) {
    TrainEval ev;
    ev.step = step;
    ev.train_loss = map_loss(weights, train, lik, cfg.prior_precision);
    ev.valid_nlpd = plugin_nlpd(weights, valid, lik);
    trace.evals.push_back(ev);
    if (ev.valid_nlpd < trace.best_valid_nlpd) {
      trace.best_valid_nlpd = ev.valid_nlpd;
      trace.best_step = step;
      best = weights;
    }
  };

  evaluate(0);

  for (long step = 1; step <= cfg.max_steps; ++step) {
    for (Eigen::Index i = 0; i < batch; ++i) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const Eigen::Index row = order[cursor++];
      xb.row(i) = train.x.row(row);
      yb[i] = train.y[row];
    }

    const Eigen::MatrixXd f = mlp_forward(weights, xb);
    const double scale = static_cast<double>(n) / static_cast<double>(batch);
    double batch_nll = 0.0;
    for (Eigen::Index i = 0; i < batch; ++i) {
      batch_nll -= log_prob(lik, yb[i], f.row(i).transpose());
      dl_df.row(i) = -scale * grad_f(lik, yb[i], f.row(i).transpose()).transpose();
    }
    const double loss =
        scale * batch_nll + 0.5 * cfg.prior_precision * weights.w.squaredNorm();
    if (!std::isfinite(loss)) {
      throw NonFiniteLoss("train_map: loss became non-finite at step " +
                          std::to_string(step));
    }

    Eigen::VectorXd grad = mlp_backward(weights, xb, dl_df);
    grad += cfg.prior_precision * weights.w;

    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * grad;
    v = cfg.adam_beta2 * v.array().matrix() +
        (1.0 - cfg.adam_beta2) * grad.array().square().matrix();
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
    weights.w.array() -=
        cfg.learning_rate *
        (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.adam_eps);

    trace.steps_run = step;
    if (step % cfg.eval_interval == 0) {
      evaluate(step);
      if (step - trace.best_step >= cfg.patience) break;
    }
  }

  return TrainResult{std::move(best), std::move(trace)};
}

}  // namespace sfr
