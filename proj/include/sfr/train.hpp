#pragma once

#include <cstdint>
#include <vector>

#include "sfr/dataset.hpp"
#include "sfr/likelihood.hpp"
#include "sfr/mlp.hpp"

namespace sfr {

struct TrainConfig {
  double learning_rate = 1e-4;
  int batch_size = 128;
  double prior_precision = 1.0;  // delta of the Gaussian weight prior
  long patience = 1000;          // optimizer steps without validation improvement
  long eval_interval = 100;      // steps between validation evaluations
  long max_steps = 100000;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct TrainEval {
  long step = 0;
  double train_loss = 0.0;
  double valid_nlpd = 0.0;
};

struct TrainTrace {
  std::vector<TrainEval> evals;
  long best_step = 0;
  double best_valid_nlpd = 0.0;
  long steps_run = 0;
};

struct TrainResult {
  MlpWeights weights;
  TrainTrace trace;
};

/// Full objective: sum_i -log p(y_i | f(x_i)) + (delta/2) ||w||^2.
double map_loss(const MlpWeights& weights, const Dataset& data,
                const Likelihood& lik, double prior_precision);

/// Mean plugin negative log-likelihood at the current weights.
double plugin_nlpd(const MlpWeights& weights, const Dataset& data,
                   const Likelihood& lik);

/// Adam on the minibatch estimate of the regularized risk, early-stopped on
/// validation NLPD; returns the checkpoint with the lowest validation NLPD.
TrainResult train_map(const Dataset& train, const Dataset& valid,
                      const Likelihood& lik, const MlpArchitecture& arch,
                      const TrainConfig& cfg);

}  // namespace sfr
