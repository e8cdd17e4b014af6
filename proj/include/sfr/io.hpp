#pragma once

#include <optional>
#include <string>

#include "sfr/dataset.hpp"
#include "sfr/posterior.hpp"

namespace sfr {

/// Trained network checkpoint. Weights round-trip bit-exact through JSON; the
/// optional blocks carry what downstream fitting needs (training delta,
/// feature standardization, likelihood).
struct Checkpoint {
  MlpWeights weights;
  double prior_precision = 1.0;
  Likelihood likelihood = Likelihood::gaussian(1.0);
  std::optional<Standardization> standardization;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

void save_sfr_state(const SfrState& state, const Likelihood& lik,
                    const std::optional<Standardization>& standardization,
                    const std::string& path);
struct LoadedSfrState {
  SfrState state;
  Likelihood likelihood = Likelihood::gaussian(1.0);
  std::optional<Standardization> standardization;
};
LoadedSfrState load_sfr_state(const std::string& path);

}  // namespace sfr
