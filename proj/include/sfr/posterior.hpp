#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfr/dataset.hpp"
#include "sfr/kernel.hpp"
#include "sfr/likelihood.hpp"
#include "sfr/linalg.hpp"

namespace sfr {

/// Latent Gaussian moments at one input plus the pushed-forward output.
struct PredictiveDistribution {
  Eigen::VectorXd latent_mean;  // C
  Eigen::MatrixXd latent_cov;   // C x C, symmetric, negative diagonal clamped
  OutputDistribution output;
  double raw_min_variance = 0.0;  // smallest diagonal entry before clamping
};

/// Weight-space Gaussian posterior N(w*, (delta I + sum_i J_i^T beta_i J_i)^-1).
struct GgnPosterior {
  MlpWeights w_star;
  double delta = 1.0;
  Eigen::MatrixXd ggn;  // sum_i J_i^T beta_i J_i; independent of delta
  CholeskyFactor chol_precision;

  Eigen::MatrixXd precision() const;
};

GgnPosterior ggn_fit(const MlpWeights& w_star, const Dataset& data,
                     const Likelihood& lik, double delta,
                     JacobianCache* cache = nullptr,
                     const std::string& cache_id = "",
                     Eigen::Index batch_size = 256);

/// Re-factors an existing posterior at a new prior precision; the GGN term is
/// delta-free so no network passes are repeated.
GgnPosterior ggn_with_delta(const GgnPosterior& post, double delta);

/// Posterior weight samples through the nonlinear network, likelihoods
/// averaged over S draws.
PredictiveDistribution predict_bnn(const GgnPosterior& post,
                                   const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                   const Likelihood& lik, int num_samples,
                                   std::uint64_t seed);

/// Linearized predictive: latent mean f(x), latent covariance J Sigma J^T.
PredictiveDistribution predict_glm(const GgnPosterior& post,
                                   const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                   const Likelihood& lik,
                                   const PushForward& method);

/// alpha_hat/beta_hat evaluated at f(x_i) for every data point.
DualCoefficients compute_duals(const MlpWeights& w_star, const Dataset& data,
                               const Likelihood& lik,
                               JacobianCache* cache = nullptr,
                               const std::string& cache_id = "");

/// Function-space posterior over a data subset, centered on the network
/// prediction; the subset's own duals supply the per-input noise.
struct GpSubsetPredictor {
  MlpWeights w_star;
  double delta = 1.0;
  Eigen::MatrixXd j_subset;                // (Ms*C) x P
  std::vector<Eigen::MatrixXd> sqrt_beta;  // Ms blocks of C x C
  CholeskyFactor chol_inner;               // of S K_ss S + I
};

GpSubsetPredictor gp_subset_fit(const MlpWeights& w_star, const Dataset& subset,
                                const Likelihood& lik, double delta,
                                JacobianCache* cache = nullptr,
                                const std::string& cache_id = "");

PredictiveDistribution gp_subset_predict(
    const GpSubsetPredictor& predictor,
    const Eigen::Ref<const Eigen::RowVectorXd>& x, const Likelihood& lik,
    const PushForward& method);

PredictiveDistribution predict_gp_subset(
    const MlpWeights& w_star, const Dataset& subset, const Likelihood& lik,
    double delta, const Eigen::Ref<const Eigen::RowVectorXd>& x,
    const PushForward& method);

/// Dense dual-parameterized posterior over the full data set: mean k^T alpha,
/// variance k_ii - k^T (K + diag(beta)^-1)^-1 k in the inverse-free form.
struct DualFullPredictor {
  MlpWeights w_star;
  double delta = 1.0;
  Eigen::MatrixXd j_data;                  // (N*C) x P
  Eigen::VectorXd alpha;                   // N*C stacked
  std::vector<Eigen::MatrixXd> sqrt_beta;  // N blocks
  CholeskyFactor chol_inner;               // of S K_xx S + I
  bool empty = false;                      // N == 0: prior recovery
};

DualFullPredictor dual_full_fit(const MlpWeights& w_star,
                                const DualCoefficients& duals,
                                const Eigen::Ref<const Eigen::MatrixXd>& data_x,
                                double delta, const Likelihood& lik,
                                JacobianCache* cache = nullptr,
                                const std::string& cache_id = "");

PredictiveDistribution dual_full_predict(
    const DualFullPredictor& predictor,
    const Eigen::Ref<const Eigen::RowVectorXd>& x, const Likelihood& lik,
    const PushForward& method);

PredictiveDistribution predict_dual_full(
    const MlpWeights& w_star, const DualCoefficients& duals,
    const Eigen::Ref<const Eigen::MatrixXd>& data_x, double delta,
    const Eigen::Ref<const Eigen::RowVectorXd>& x, const Likelihood& lik,
    const PushForward& method);

struct InducingPoints {
  std::vector<Eigen::Index> indices;  // rows of the source inputs
  Eigen::MatrixXd z;                  // M x D
};

/// Uniform subset of the training inputs without replacement; Z is always a
/// subset of X so the GP-subset baseline can share it.
InducingPoints select_inducing(const Eigen::Ref<const Eigen::MatrixXd>& x,
                               Eigen::Index m, std::uint64_t seed);

/// Sparse dual state: kernel-projected sums over every absorbed data point.
struct SfrState {
  NtkKernel kernel;
  Eigen::MatrixXd z;        // M x D
  Eigen::VectorXd alpha_u;  // M*C
  Eigen::MatrixXd b_u;      // (M*C) x (M*C), symmetric PSD
  CholeskyFactor chol_kzz;
  CholeskyFactor chol_kzz_plus_bu;
  long num_points_absorbed = 0;

  // Derived quantities, rebuilt by fit/update/rehydrate.
  Eigen::MatrixXd j_z;            // (M*C) x P
  Eigen::VectorXd kzz_inv_alpha;  // K_zz^-1 alpha_u

  Eigen::Index num_inducing() const { return z.rows(); }
};

/// Delta-free kernel projections of the per-point duals: the raw sums behind
/// Eq.-style sparse parameters. alpha_u and B_u at prior precision delta are
/// alpha_raw/delta and beta_raw/delta^2, so retuning delta rescales and
/// refactors without touching the network again.
struct SfrDualSums {
  Eigen::MatrixXd j_z;        // (M*C) x P
  Eigen::MatrixXd g_zz;       // J_z J_z^T
  Eigen::VectorXd alpha_raw;  // sum_i g_zi alpha_i
  Eigen::MatrixXd beta_raw;   // sum_i g_zi beta_i g_zi^T
  long num_points = 0;
};

SfrDualSums sfr_accumulate(const MlpWeights& w_star, const Dataset& data,
                           const Likelihood& lik,
                           const Eigen::Ref<const Eigen::MatrixXd>& z,
                           JacobianCache* cache = nullptr,
                           const std::string& data_cache_id = "",
                           const std::string& z_cache_id = "",
                           Eigen::Index chunk = 128);

SfrState sfr_assemble(const SfrDualSums& sums, const MlpWeights& w_star,
                      const Eigen::Ref<const Eigen::MatrixXd>& z, double delta);

SfrState sfr_fit(const MlpWeights& w_star, const Dataset& data,
                 const Likelihood& lik,
                 const Eigen::Ref<const Eigen::MatrixXd>& z, double delta,
                 JacobianCache* cache = nullptr,
                 const std::string& data_cache_id = "",
                 const std::string& z_cache_id = "");

PredictiveDistribution sfr_predict(const SfrState& state,
                                   const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                   const Likelihood& lik,
                                   const PushForward& method);

/// Conditions the state on additional data without retraining: adds the new
/// points' kernel-projected duals and refreshes the B_u factorization.
SfrState sfr_update(const SfrState& state, const Dataset& new_data,
                    const Likelihood& lik);

/// Rebuilds the derived members (j_z, Cholesky factors, kzz_inv_alpha) from
/// the serialized core fields.
void sfr_rehydrate(SfrState& state);

/// Batch prediction. Point i uses the method seed mixed with i so Monte Carlo
/// outputs stay deterministic and independent across points. When a cache and
/// id are given, the test inputs' Jacobians and forward values come from the
/// cache, so repeated evaluation (e.g. a tuning grid) runs no new network
/// passes.
std::vector<PredictiveDistribution> sfr_predict_batch(
    const SfrState& state, const Eigen::Ref<const Eigen::MatrixXd>& x,
    const Likelihood& lik, const PushForward& method,
    JacobianCache* cache = nullptr, const std::string& cache_id = "");
std::vector<PredictiveDistribution> glm_predict_batch(
    const GgnPosterior& post, const Eigen::Ref<const Eigen::MatrixXd>& x,
    const Likelihood& lik, const PushForward& method,
    JacobianCache* cache = nullptr, const std::string& cache_id = "");
std::vector<PredictiveDistribution> bnn_predict_batch(
    const GgnPosterior& post, const Eigen::Ref<const Eigen::MatrixXd>& x,
    const Likelihood& lik, int num_samples, std::uint64_t seed);
std::vector<PredictiveDistribution> gp_subset_predict_batch(
    const GpSubsetPredictor& predictor,
    const Eigen::Ref<const Eigen::MatrixXd>& x, const Likelihood& lik,
    const PushForward& method, JacobianCache* cache = nullptr,
    const std::string& cache_id = "");
std::vector<PredictiveDistribution> dual_full_predict_batch(
    const DualFullPredictor& predictor,
    const Eigen::Ref<const Eigen::MatrixXd>& x, const Likelihood& lik,
    const PushForward& method, JacobianCache* cache = nullptr,
    const std::string& cache_id = "");

}  // namespace sfr
