#pragma once

#include <cstdint>
#include <vector>

#include "sfr/posterior.hpp"

namespace sfr {

struct TuneGrid {
  std::vector<double> values;  // strictly increasing, all > 0

  static TuneGrid log_spaced(double lo = 1e-4, double hi = 1e4, int count = 20);
};

enum class PredictorFamily { Bnn, Glm, GpSubset, Sfr };

struct TuneEntry {
  double value = 0.0;
  double nlpd = 0.0;  // +inf marks a non-finite evaluation
};

struct TuneResult {
  double best = 0.0;
  std::vector<TuneEntry> table;
};

/// Everything the refits need; the Jacobian cache makes every grid point reuse
/// the same network passes.
struct TuneContext {
  const MlpWeights* w_star = nullptr;
  const Dataset* train = nullptr;
  Likelihood likelihood;
  InducingPoints inducing;  // for Sfr / GpSubset
  PushForward push;
  int bnn_samples = 100;
  JacobianCache* cache = nullptr;
  const GgnPosterior* base_ggn = nullptr;  // reused for Bnn/Glm when provided
  std::string train_id = "tune/train";
  std::string valid_id = "tune/valid";
  std::string inducing_id = "tune/z";
};

/// Grid search over the prior precision on validation NLPD. Ties within 1e-12
/// resolve toward the largest delta; non-finite entries are recorded as +inf
/// and skipped.
TuneResult tune_delta(PredictorFamily family, const TuneContext& ctx,
                      const Dataset& valid, const TuneGrid& grid);

/// Same machinery over the Gaussian noise variance (regression only);
/// the kernel stays fixed while the duals are rebuilt per grid value.
TuneResult tune_noise_variance(PredictorFamily family, const TuneContext& ctx,
                               const Dataset& valid, double delta,
                               const TuneGrid& grid);

}  // namespace sfr
