#include "sfr/tuning.hpp"

#include <cmath>
#include <limits>

#include "sfr/metrics.hpp"
#include "sfr/rng.hpp"

namespace sfr {

namespace {

std::vector<OutputDistribution> outputs_of(
    const std::vector<PredictiveDistribution>& preds) {
  std::vector<OutputDistribution> out;
  out.reserve(preds.size());
  for (const auto& p : preds) out.push_back(p.output);
  return out;
}

double evaluate_family(PredictorFamily family, const TuneContext& ctx,
                       const Dataset& valid, double delta,
                       const Likelihood& lik, const PushForward& push,
                       const GgnPosterior* base_ggn,
                       const SfrDualSums* sfr_sums) {
  std::vector<PredictiveDistribution> preds;
  switch (family) {
    case PredictorFamily::Bnn: {
      const GgnPosterior post = ggn_with_delta(*base_ggn, delta);
      preds = bnn_predict_batch(post, valid.x, lik, ctx.bnn_samples, push.seed);
      break;
    }
    case PredictorFamily::Glm: {
      const GgnPosterior post = ggn_with_delta(*base_ggn, delta);
      preds = glm_predict_batch(post, valid.x, lik, push, ctx.cache,
                                ctx.valid_id);
      break;
    }
    case PredictorFamily::GpSubset: {
      const Dataset subset = ctx.train->rows(ctx.inducing.indices, "subset");
      const GpSubsetPredictor pred = gp_subset_fit(*ctx.w_star, subset, lik,
                                                   delta, ctx.cache,
                                                   ctx.inducing_id);
      preds = gp_subset_predict_batch(pred, valid.x, lik, push, ctx.cache,
                                      ctx.valid_id);
      break;
    }
    case PredictorFamily::Sfr: {
      // the accumulated sums are delta-free: refitting is rescale + refactor
      const SfrState state =
          sfr_assemble(*sfr_sums, *ctx.w_star, ctx.inducing.z, delta);
      preds = sfr_predict_batch(state, valid.x, lik, push, ctx.cache,
                                ctx.valid_id);
      break;
    }
  }
  return nlpd(outputs_of(preds), valid.y);
}

TuneResult run_grid(PredictorFamily family, const TuneContext& ctx,
                    const Dataset& valid, const TuneGrid& grid,
                    bool tune_noise, double fixed_delta) {
  if (valid.size() == 0) throw ConfigError("tune: validation set is empty");
  if (grid.values.empty()) throw ConfigError("tune: empty grid");
  for (std::size_t i = 0; i < grid.values.size(); ++i) {
    if (!(grid.values[i] > 0.0) ||
        (i > 0 && grid.values[i] <= grid.values[i - 1])) {
      throw ConfigError("tune: grid must be strictly increasing and positive");
    }
  }

  GgnPosterior local_ggn;
  const GgnPosterior* base_ggn = ctx.base_ggn;
  const bool needs_ggn =
      family == PredictorFamily::Bnn || family == PredictorFamily::Glm;
  if (needs_ggn && base_ggn == nullptr) {
    local_ggn = ggn_fit(*ctx.w_star, *ctx.train, ctx.likelihood, 1.0, ctx.cache,
                        ctx.train_id);
    base_ggn = &local_ggn;
  }
  SfrDualSums sfr_sums;
  const bool needs_sums = family == PredictorFamily::Sfr && !tune_noise;
  if (needs_sums) {
    sfr_sums = sfr_accumulate(*ctx.w_star, *ctx.train, ctx.likelihood,
                              ctx.inducing.z, ctx.cache, ctx.train_id,
                              ctx.inducing_id);
  }

  TuneResult result;
  result.table.reserve(grid.values.size());
  double best_nlpd = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < grid.values.size(); ++g) {
    const double value = grid.values[g];
    const double delta = tune_noise ? fixed_delta : value;
    Likelihood lik = ctx.likelihood;
    if (tune_noise) lik.noise_variance = value;
    SfrDualSums noise_sums;  // duals depend on the noise variance
    if (family == PredictorFamily::Sfr && tune_noise) {
      noise_sums = sfr_accumulate(*ctx.w_star, *ctx.train, lik, ctx.inducing.z,
                                  ctx.cache, ctx.train_id, ctx.inducing_id);
    }
    // seed fixed per grid point so the table reproduces exactly
    const PushForward push =
        ctx.push.with_seed(mix_seed(ctx.push.seed, static_cast<std::uint64_t>(g)));
    double score;
    try {
      score = evaluate_family(family, ctx, valid, delta, lik, push,
                              needs_ggn ? base_ggn : nullptr,
                              needs_sums ? &sfr_sums : &noise_sums);
    } catch (const NumericalError&) {
      score = std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(score)) score = std::numeric_limits<double>::infinity();
    result.table.push_back(TuneEntry{value, score});
    if (std::isfinite(score) && score < best_nlpd + 1e-12) {
      best_nlpd = score;
      result.best = value;  // later (larger) values win ties
    }
  }
  if (!std::isfinite(best_nlpd)) {
    throw NumericalError("tune: every grid point evaluated non-finite");
  }
  return result;
}

}  // namespace

TuneGrid TuneGrid::log_spaced(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 1) {
    throw ConfigError("TuneGrid::log_spaced: invalid range");
  }
  TuneGrid grid;
  grid.values.reserve(static_cast<std::size_t>(count));
  if (count == 1) {
    grid.values.push_back(lo);
    return grid;
  }
  const double step = (std::log(hi) - std::log(lo)) / (count - 1);
  for (int i = 0; i < count; ++i) {
    grid.values.push_back(std::exp(std::log(lo) + step * i));
  }
  return grid;
}

TuneResult tune_delta(PredictorFamily family, const TuneContext& ctx,
                      const Dataset& valid, const TuneGrid& grid) {
  return run_grid(family, ctx, valid, grid, false, 0.0);
}

TuneResult tune_noise_variance(PredictorFamily family, const TuneContext& ctx,
                               const Dataset& valid, double delta,
                               const TuneGrid& grid) {
  if (ctx.likelihood.family != Likelihood::Family::Gaussian) {
    throw UnsupportedMethod("tune_noise_variance: Gaussian likelihood only");
  }
  return run_grid(family, ctx, valid, grid, true, delta);
}

}  // namespace sfr
