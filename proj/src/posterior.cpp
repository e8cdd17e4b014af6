#include "sfr/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sfr/rng.hpp"

namespace sfr {

namespace {

// PSD square root via symmetric eigendecomposition; eigenvalues below 1e-10
// are zeroed, which keeps singular softmax blocks well-defined.
Eigen::MatrixXd psd_sqrt(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  if (m.rows() == 1) {
    return Eigen::MatrixXd::Constant(1, 1,
                                     m(0, 0) > 1e-10 ? std::sqrt(m(0, 0)) : 0.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd lam = es.eigenvalues();
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    lam[i] = lam[i] > 1e-10 ? std::sqrt(lam[i]) : 0.0;
  }
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

std::vector<Eigen::MatrixXd> sqrt_blocks(const std::vector<Eigen::MatrixXd>& beta) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(beta.size());
  for (const auto& b : beta) out.push_back(psd_sqrt(b));
  return out;
}

// Multiplies blockdiag(blocks) into the block rows of m ((N*C) x K).
Eigen::MatrixXd apply_block_diag(const std::vector<Eigen::MatrixXd>& blocks,
                                 const Eigen::Ref<const Eigen::MatrixXd>& m) {
  const auto c = static_cast<Eigen::Index>(blocks.empty() ? 1 : blocks[0].rows());
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Eigen::Index r = static_cast<Eigen::Index>(i) * c;
    out.middleRows(r, c) = blocks[i] * m.middleRows(r, c);
  }
  return out;
}

// Symmetrize, record the smallest raw variance, clamp negatives to zero.
void finalize_cov(Eigen::MatrixXd& cov, double& raw_min) {
  cov = 0.5 * (cov + cov.transpose());
  raw_min = cov.diagonal().minCoeff();
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    if (cov(i, i) < 0.0) cov(i, i) = 0.0;
  }
}

const Eigen::MatrixXd& stacked_jacobians(const MlpWeights& w,
                                         const Eigen::Ref<const Eigen::MatrixXd>& x,
                                         JacobianCache* cache,
                                         const std::string& id,
                                         Eigen::MatrixXd& scratch) {
  if (cache != nullptr && !id.empty()) return cache->jacobians(w, id, x);
  scratch = mlp_jacobian_stacked(w, x);
  return scratch;
}

const Eigen::MatrixXd& forward_values(const MlpWeights& w,
                                      const Eigen::Ref<const Eigen::MatrixXd>& x,
                                      JacobianCache* cache, const std::string& id,
                                      Eigen::MatrixXd& scratch) {
  if (cache != nullptr && !id.empty()) return cache->forward(w, id, x);
  scratch = mlp_forward(w, x);
  return scratch;
}

PredictiveDistribution glm_predict_core(const GgnPosterior& post,
                                        const Eigen::Ref<const Eigen::MatrixXd>& jx,
                                        const Eigen::VectorXd& fx,
                                        const Likelihood& lik,
                                        const PushForward& method) {
  const Eigen::MatrixXd t =
      post.chol_precision.lower.triangularView<Eigen::Lower>().solve(
          jx.transpose());
  PredictiveDistribution out;
  out.latent_mean = fx;
  out.latent_cov = t.transpose() * t;
  finalize_cov(out.latent_cov, out.raw_min_variance);
  out.output = push_forward(lik, out.latent_mean, out.latent_cov, method);
  return out;
}

PredictiveDistribution gp_subset_predict_core(
    const GpSubsetPredictor& predictor,
    const Eigen::Ref<const Eigen::MatrixXd>& jx, const Eigen::VectorXd& fx,
    const Likelihood& lik, const PushForward& method) {
  const Eigen::MatrixXd kxx = (jx * jx.transpose()) / predictor.delta;
  const Eigen::MatrixXd k_sx =
      (predictor.j_subset * jx.transpose()) / predictor.delta;  // (Ms*C) x C
  const Eigen::MatrixXd w = apply_block_diag(predictor.sqrt_beta, k_sx);

  PredictiveDistribution out;
  out.latent_mean = fx;
  out.latent_cov = kxx - w.transpose() * solve_with_factor(predictor.chol_inner, w);
  finalize_cov(out.latent_cov, out.raw_min_variance);
  out.output = push_forward(lik, out.latent_mean, out.latent_cov, method);
  return out;
}

PredictiveDistribution dual_full_predict_core(
    const DualFullPredictor& predictor,
    const Eigen::Ref<const Eigen::MatrixXd>& jx, const Likelihood& lik,
    const PushForward& method) {
  const Eigen::MatrixXd kxx = (jx * jx.transpose()) / predictor.delta;

  PredictiveDistribution out;
  if (predictor.empty) {
    out.latent_mean = Eigen::VectorXd::Zero(jx.rows());
    out.latent_cov = kxx;
    finalize_cov(out.latent_cov, out.raw_min_variance);
    out.output = push_forward(lik, out.latent_mean, out.latent_cov, method);
    return out;
  }

  const Eigen::MatrixXd k_x =
      (predictor.j_data * jx.transpose()) / predictor.delta;  // (N*C) x C
  const Eigen::MatrixXd w = apply_block_diag(predictor.sqrt_beta, k_x);

  out.latent_mean = k_x.transpose() * predictor.alpha;
  out.latent_cov = kxx - w.transpose() * solve_with_factor(predictor.chol_inner, w);
  finalize_cov(out.latent_cov, out.raw_min_variance);
  out.output = push_forward(lik, out.latent_mean, out.latent_cov, method);
  return out;
}

PredictiveDistribution sfr_predict_core(const SfrState& state,
                                        const Eigen::Ref<const Eigen::MatrixXd>& jx,
                                        const Likelihood& lik,
                                        const PushForward& method) {
  const double delta = state.kernel.prior_precision;
  const Eigen::MatrixXd kxx = (jx * jx.transpose()) / delta;
  const Eigen::MatrixXd k_zx = (state.j_z * jx.transpose()) / delta;  // (M*C) x C

  PredictiveDistribution out;
  out.latent_mean = k_zx.transpose() * state.kzz_inv_alpha;
  const Eigen::MatrixXd prior_term =
      k_zx.transpose() * solve_with_factor(state.chol_kzz, k_zx);
  const Eigen::MatrixXd post_term =
      k_zx.transpose() * solve_with_factor(state.chol_kzz_plus_bu, k_zx);
  out.latent_cov = kxx - prior_term + post_term;
  finalize_cov(out.latent_cov, out.raw_min_variance);
  out.output = push_forward(lik, out.latent_mean, out.latent_cov, method);
  return out;
}

}  // namespace

Eigen::MatrixXd GgnPosterior::precision() const {
  Eigen::MatrixXd p = ggn;
  p.diagonal().array() += delta;
  return p;
}

GgnPosterior ggn_fit(const MlpWeights& w_star, const Dataset& data,
                     const Likelihood& lik, double delta, JacobianCache* cache,
                     const std::string& cache_id, Eigen::Index batch_size) {
  if (!(delta > 0.0)) throw ConfigError("ggn_fit: delta must be > 0");
  const Eigen::Index p = w_star.arch.num_params();
  const Eigen::Index c = w_star.arch.output_dim;

  GgnPosterior post;
  post.w_star = w_star;
  post.delta = delta;
  post.ggn = Eigen::MatrixXd::Zero(p, p);

  if (data.size() > 0) {
    if (lik.latent_dim != c) {
      throw DimensionMismatch("ggn_fit: likelihood dim mismatch");
    }
    Eigen::MatrixXd jac_scratch, fwd_scratch;
    const Eigen::MatrixXd& j_all =
        stacked_jacobians(w_star, data.x, cache, cache_id, jac_scratch);
    const Eigen::MatrixXd& f_all =
        forward_values(w_star, data.x, cache, cache_id, fwd_scratch);
    for (Eigen::Index start = 0; start < data.size(); start += batch_size) {
      const Eigen::Index count = std::min(batch_size, data.size() - start);
      Eigen::MatrixXd scaled(count * c, p);
      for (Eigen::Index i = 0; i < count; ++i) {
        const Eigen::Index row = start + i;
        const Eigen::MatrixXd sb =
            psd_sqrt(hess_f(lik, data.y[row], f_all.row(row).transpose()));
        scaled.middleRows(i * c, c) = sb * j_all.middleRows(row * c, c);
      }
      post.ggn.selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
    }
    post.ggn.triangularView<Eigen::StrictlyUpper>() = post.ggn.transpose();
  }

  post.chol_precision = cholesky_psd(SymmetricMatrix(post.precision()));
  return post;
}

GgnPosterior ggn_with_delta(const GgnPosterior& post, double delta) {
  if (!(delta > 0.0)) throw ConfigError("ggn_with_delta: delta must be > 0");
  GgnPosterior out;
  out.w_star = post.w_star;
  out.delta = delta;
  out.ggn = post.ggn;
  out.chol_precision = cholesky_psd(SymmetricMatrix(out.precision()));
  return out;
}

PredictiveDistribution predict_bnn(const GgnPosterior& post,
                                   const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                   const Likelihood& lik, int num_samples,
                                   std::uint64_t seed) {
  if (num_samples < 1) throw ConfigError("predict_bnn: need num_samples >= 1");
  const Eigen::Index c = post.w_star.arch.output_dim;
  const Eigen::Index p = post.w_star.arch.num_params();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MlpWeights sample = post.w_star;

  Eigen::MatrixXd latents(num_samples, c);
  const bool classify = lik.is_classification();
  Eigen::VectorXd probs =
      classify ? Eigen::VectorXd::Zero(lik.num_classes()) : Eigen::VectorXd();

  Eigen::VectorXd eps(p);
  for (int s = 0; s < num_samples; ++s) {
    for (Eigen::Index i = 0; i < p; ++i) eps[i] = normal(rng);
    // covariance is (L L^T)^-1, so w = w* + L^-T eps has the right spread
    post.chol_precision.lower.triangularView<Eigen::Lower>()
        .transpose()
        .solveInPlace(eps);
    sample.w = post.w_star.w + eps;
    const Eigen::VectorXd f = mlp_forward(sample, x).row(0).transpose();
    latents.row(s) = f.transpose();
    if (classify) probs += map_output(lik, f).probs;
  }

  PredictiveDistribution out;
  out.latent_mean = latents.colwise().mean().transpose();
  const Eigen::MatrixXd centered = latents.rowwise() - out.latent_mean.transpose();
  out.latent_cov = centered.transpose() * centered /
                   static_cast<double>(std::max(num_samples - 1, 1));
  finalize_cov(out.latent_cov, out.raw_min_variance);

  if (classify) {
    out.output.classification = true;
    out.output.probs = probs / static_cast<double>(num_samples);
  } else {
    out.output.classification = false;
    out.output.mean = out.latent_mean[0];
    out.output.variance = out.latent_cov(0, 0) + lik.noise_variance;
  }
  return out;
}

PredictiveDistribution predict_glm(const GgnPosterior& post,
                                   const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                   const Likelihood& lik,
                                   const PushForward& method) {
  const Eigen::MatrixXd jx = mlp_jacobian(post.w_star, x);
  const Eigen::VectorXd fx = mlp_forward(post.w_star, x).row(0).transpose();
  return glm_predict_core(post, jx, fx, lik, method);
}

DualCoefficients compute_duals(const MlpWeights& w_star, const Dataset& data,
                               const Likelihood& lik, JacobianCache* cache,
                               const std::string& cache_id) {
  const Eigen::Index c = w_star.arch.output_dim;
  Eigen::MatrixXd fwd_scratch;
  DualCoefficients duals;
  duals.alpha_hat.resize(data.size(), c);
  duals.beta_hat.reserve(static_cast<std::size_t>(data.size()));
  if (data.size() == 0) return duals;
  const Eigen::MatrixXd& f =
      forward_values(w_star, data.x, cache, cache_id, fwd_scratch);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd fi = f.row(i).transpose();
    duals.alpha_hat.row(i) = grad_f(lik, data.y[i], fi).transpose();
    duals.beta_hat.push_back(hess_f(lik, data.y[i], fi));
  }
  return duals;
}

GpSubsetPredictor gp_subset_fit(const MlpWeights& w_star, const Dataset& subset,
                                const Likelihood& lik, double delta,
                                JacobianCache* cache,
                                const std::string& cache_id) {
  if (subset.size() == 0) {
    throw ConfigError("gp_subset_fit: subset must be nonempty");
  }
  GpSubsetPredictor pred;
  pred.w_star = w_star;
  pred.delta = delta;
  Eigen::MatrixXd jac_scratch;
  pred.j_subset = stacked_jacobians(w_star, subset.x, cache, cache_id, jac_scratch);

  const DualCoefficients duals = compute_duals(w_star, subset, lik, cache, cache_id);
  pred.sqrt_beta = sqrt_blocks(duals.beta_hat);

  const Eigen::MatrixXd k = (pred.j_subset * pred.j_subset.transpose()) / delta;
  Eigen::MatrixXd inner = apply_block_diag(
      pred.sqrt_beta, apply_block_diag(pred.sqrt_beta, k).transpose());
  inner.diagonal().array() += 1.0;
  pred.chol_inner = cholesky_psd(SymmetricMatrix(std::move(inner)));
  return pred;
}

PredictiveDistribution gp_subset_predict(
    const GpSubsetPredictor& predictor,
    const Eigen::Ref<const Eigen::RowVectorXd>& x, const Likelihood& lik,
    const PushForward& method) {
  const Eigen::MatrixXd jx = mlp_jacobian(predictor.w_star, x);
  const Eigen::VectorXd fx = mlp_forward(predictor.w_star, x).row(0).transpose();
  return gp_subset_predict_core(predictor, jx, fx, lik, method);
}

PredictiveDistribution predict_gp_subset(
    const MlpWeights& w_star, const Dataset& subset, const Likelihood& lik,
    double delta, const Eigen::Ref<const Eigen::RowVectorXd>& x,
    const PushForward& method) {
  return gp_subset_predict(gp_subset_fit(w_star, subset, lik, delta), x, lik,
                           method);
}

DualFullPredictor dual_full_fit(const MlpWeights& w_star,
                                const DualCoefficients& duals,
                                const Eigen::Ref<const Eigen::MatrixXd>& data_x,
                                double delta, const Likelihood& lik,
                                JacobianCache* cache,
                                const std::string& cache_id) {
  (void)lik;
  DualFullPredictor pred;
  pred.w_star = w_star;
  pred.delta = delta;
  if (data_x.rows() == 0) {
    pred.empty = true;
    return pred;
  }
  if (duals.size() != data_x.rows()) {
    throw DimensionMismatch("dual_full_fit: duals and inputs disagree on N");
  }
  Eigen::MatrixXd jac_scratch;
  pred.j_data = stacked_jacobians(w_star, data_x, cache, cache_id, jac_scratch);

  const Eigen::Index c = w_star.arch.output_dim;
  pred.alpha.resize(data_x.rows() * c);
  for (Eigen::Index i = 0; i < data_x.rows(); ++i) {
    pred.alpha.segment(i * c, c) = duals.alpha_hat.row(i).transpose();
  }
  pred.sqrt_beta = sqrt_blocks(duals.beta_hat);

  const Eigen::MatrixXd k = (pred.j_data * pred.j_data.transpose()) / delta;
  Eigen::MatrixXd inner = apply_block_diag(
      pred.sqrt_beta, apply_block_diag(pred.sqrt_beta, k).transpose());
  inner.diagonal().array() += 1.0;
  pred.chol_inner = cholesky_psd(SymmetricMatrix(std::move(inner)));
  return pred;
}

PredictiveDistribution dual_full_predict(
    const DualFullPredictor& predictor,
    const Eigen::Ref<const Eigen::RowVectorXd>& x, const Likelihood& lik,
    const PushForward& method) {
  return dual_full_predict_core(predictor, mlp_jacobian(predictor.w_star, x),
                                lik, method);
}

PredictiveDistribution predict_dual_full(
    const MlpWeights& w_star, const DualCoefficients& duals,
    const Eigen::Ref<const Eigen::MatrixXd>& data_x, double delta,
    const Eigen::Ref<const Eigen::RowVectorXd>& x, const Likelihood& lik,
    const PushForward& method) {
  return dual_full_predict(dual_full_fit(w_star, duals, data_x, delta, lik), x,
                           lik, method);
}

InducingPoints select_inducing(const Eigen::Ref<const Eigen::MatrixXd>& x,
                               Eigen::Index m, std::uint64_t seed) {
  const Eigen::Index n = x.rows();
  if (m < 1 || m > n) {
    throw InvalidM("select_inducing: M=" + std::to_string(m) + " outside [1, " +
                   std::to_string(n) + "]");
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  // partial Fisher-Yates: the first m entries are a uniform sample
  for (Eigen::Index i = 0; i < m; ++i) {
    std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
    std::swap(idx[static_cast<std::size_t>(i)],
              idx[static_cast<std::size_t>(pick(rng))]);
  }
  InducingPoints out;
  out.indices.assign(idx.begin(), idx.begin() + m);
  out.z.resize(m, x.cols());
  for (Eigen::Index i = 0; i < m; ++i) {
    out.z.row(i) = x.row(out.indices[static_cast<std::size_t>(i)]);
  }
  return out;
}

namespace {

// Adds each point's kernel-projected duals into (alpha_u, B_u). Accumulation
// runs per point in data order, so splitting a data set across fit/update
// calls reproduces the same sums up to rounding.
void accumulate_duals(SfrState& state, const Dataset& data, const Likelihood& lik,
                      const Eigen::MatrixXd& j_data,
                      const Eigen::MatrixXd& f_data) {
  const Eigen::Index c = state.kernel.block_dim();
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const Eigen::VectorXd fi = f_data.row(i).transpose();
    const Eigen::VectorXd alpha_i = grad_f(lik, data.y[i], fi);
    const Eigen::MatrixXd beta_i = hess_f(lik, data.y[i], fi);
    const Eigen::MatrixXd k_zi =
        (state.j_z * j_data.middleRows(i * c, c).transpose()) /
        state.kernel.prior_precision;  // (M*C) x C
    state.alpha_u += k_zi * alpha_i;
    state.b_u.selfadjointView<Eigen::Lower>().rankUpdate(k_zi * psd_sqrt(beta_i));
  }
}

void refresh_factors(SfrState& state, const Eigen::MatrixXd* kzz_known = nullptr) {
  const Eigen::MatrixXd k_zz =
      kzz_known != nullptr
          ? *kzz_known
          : Eigen::MatrixXd((state.j_z * state.j_z.transpose()) /
                            state.kernel.prior_precision);
  state.chol_kzz = cholesky_psd(SymmetricMatrix(k_zz));
  state.b_u.triangularView<Eigen::StrictlyUpper>() = state.b_u.transpose();
  state.chol_kzz_plus_bu = cholesky_psd(SymmetricMatrix(k_zz + state.b_u));
  state.kzz_inv_alpha = solve_with_factor(state.chol_kzz, state.alpha_u);
}

}  // namespace

SfrDualSums sfr_accumulate(const MlpWeights& w_star, const Dataset& data,
                           const Likelihood& lik,
                           const Eigen::Ref<const Eigen::MatrixXd>& z,
                           JacobianCache* cache, const std::string& data_cache_id,
                           const std::string& z_cache_id, Eigen::Index chunk) {
  if (z.rows() < 1) {
    throw ConfigError("sfr_accumulate: need at least one inducing point");
  }
  const Eigen::Index c = w_star.arch.output_dim;

  SfrDualSums sums;
  Eigen::MatrixXd jz_scratch;
  sums.j_z = stacked_jacobians(w_star, z, cache, z_cache_id, jz_scratch);
  sums.g_zz = sums.j_z * sums.j_z.transpose();
  const Eigen::Index mc = sums.j_z.rows();
  sums.alpha_raw = Eigen::VectorXd::Zero(mc);
  sums.beta_raw = Eigen::MatrixXd::Zero(mc, mc);
  sums.num_points = data.size();
  if (data.size() == 0) return sums;

  if (data.dim() != w_star.arch.input_dim) {
    throw DimensionMismatch("sfr_accumulate: data dim mismatch");
  }
  Eigen::MatrixXd jac_scratch, fwd_scratch;
  const Eigen::MatrixXd& j_data =
      stacked_jacobians(w_star, data.x, cache, data_cache_id, jac_scratch);
  const Eigen::MatrixXd& f_data =
      forward_values(w_star, data.x, cache, data_cache_id, fwd_scratch);

  for (Eigen::Index start = 0; start < data.size(); start += chunk) {
    const Eigen::Index count = std::min(chunk, data.size() - start);
    const Eigen::MatrixXd g_chunk =
        sums.j_z * j_data.middleRows(start * c, count * c).transpose();
    for (Eigen::Index i = 0; i < count; ++i) {
      const Eigen::Index row = start + i;
      const Eigen::VectorXd fi = f_data.row(row).transpose();
      const auto g_zi = g_chunk.middleCols(i * c, c);
      sums.alpha_raw += g_zi * grad_f(lik, data.y[row], fi);
      sums.beta_raw.selfadjointView<Eigen::Lower>().rankUpdate(
          g_zi * psd_sqrt(hess_f(lik, data.y[row], fi)));
    }
  }
  sums.beta_raw.triangularView<Eigen::StrictlyUpper>() = sums.beta_raw.transpose();
  return sums;
}

SfrState sfr_assemble(const SfrDualSums& sums, const MlpWeights& w_star,
                      const Eigen::Ref<const Eigen::MatrixXd>& z, double delta) {
  if (!(delta > 0.0)) throw ConfigError("sfr_assemble: delta must be > 0");
  SfrState state;
  state.kernel = NtkKernel{w_star, delta};
  state.z = z;
  state.j_z = sums.j_z;
  state.alpha_u = sums.alpha_raw / delta;
  state.b_u = sums.beta_raw / (delta * delta);
  state.num_points_absorbed = sums.num_points;
  const Eigen::MatrixXd k_zz = sums.g_zz / delta;
  refresh_factors(state, &k_zz);
  return state;
}

SfrState sfr_fit(const MlpWeights& w_star, const Dataset& data,
                 const Likelihood& lik,
                 const Eigen::Ref<const Eigen::MatrixXd>& z, double delta,
                 JacobianCache* cache, const std::string& data_cache_id,
                 const std::string& z_cache_id) {
  const SfrDualSums sums =
      sfr_accumulate(w_star, data, lik, z, cache, data_cache_id, z_cache_id);
  return sfr_assemble(sums, w_star, z, delta);
}

PredictiveDistribution sfr_predict(const SfrState& state,
                                   const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                   const Likelihood& lik,
                                   const PushForward& method) {
  return sfr_predict_core(state, mlp_jacobian(state.kernel.weights_star, x), lik,
                          method);
}

SfrState sfr_update(const SfrState& state, const Dataset& new_data,
                    const Likelihood& lik) {
  if (new_data.size() > 0 &&
      new_data.dim() != state.kernel.weights_star.arch.input_dim) {
    throw DimensionMismatch("sfr_update: data dim mismatch");
  }
  SfrState out = state;
  if (new_data.size() > 0) {
    const Eigen::MatrixXd j_new =
        mlp_jacobian_stacked(out.kernel.weights_star, new_data.x);
    const Eigen::MatrixXd f_new = mlp_forward(out.kernel.weights_star, new_data.x);
    accumulate_duals(out, new_data, lik, j_new, f_new);
    out.num_points_absorbed += new_data.size();
  }
  refresh_factors(out);
  return out;
}

void sfr_rehydrate(SfrState& state) {
  state.j_z = mlp_jacobian_stacked(state.kernel.weights_star, state.z);
  refresh_factors(state);
}

std::vector<PredictiveDistribution> sfr_predict_batch(
    const SfrState& state, const Eigen::Ref<const Eigen::MatrixXd>& x,
    const Likelihood& lik, const PushForward& method, JacobianCache* cache,
    const std::string& cache_id) {
  const Eigen::Index c = state.kernel.block_dim();
  Eigen::MatrixXd scratch;
  const Eigen::MatrixXd& j_all = stacked_jacobians(
      state.kernel.weights_star, x, cache, cache_id, scratch);
  std::vector<PredictiveDistribution> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.push_back(sfr_predict_core(state, j_all.middleRows(i * c, c), lik,
                                   method.with_seed(mix_seed(method.seed, i))));
  }
  return out;
}

std::vector<PredictiveDistribution> glm_predict_batch(
    const GgnPosterior& post, const Eigen::Ref<const Eigen::MatrixXd>& x,
    const Likelihood& lik, const PushForward& method, JacobianCache* cache,
    const std::string& cache_id) {
  const Eigen::Index c = post.w_star.arch.output_dim;
  Eigen::MatrixXd jac_scratch, fwd_scratch;
  const Eigen::MatrixXd& j_all =
      stacked_jacobians(post.w_star, x, cache, cache_id, jac_scratch);
  const Eigen::MatrixXd& f_all =
      forward_values(post.w_star, x, cache, cache_id, fwd_scratch);
  std::vector<PredictiveDistribution> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.push_back(glm_predict_core(post, j_all.middleRows(i * c, c),
                                   f_all.row(i).transpose(), lik,
                                   method.with_seed(mix_seed(method.seed, i))));
  }
  return out;
}

std::vector<PredictiveDistribution> bnn_predict_batch(
    const GgnPosterior& post, const Eigen::Ref<const Eigen::MatrixXd>& x,
    const Likelihood& lik, int num_samples, std::uint64_t seed) {
  std::vector<PredictiveDistribution> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.push_back(predict_bnn(post, x.row(i), lik, num_samples, mix_seed(seed, i)));
  }
  return out;
}

std::vector<PredictiveDistribution> gp_subset_predict_batch(
    const GpSubsetPredictor& predictor,
    const Eigen::Ref<const Eigen::MatrixXd>& x, const Likelihood& lik,
    const PushForward& method, JacobianCache* cache,
    const std::string& cache_id) {
  const Eigen::Index c = predictor.w_star.arch.output_dim;
  Eigen::MatrixXd jac_scratch, fwd_scratch;
  const Eigen::MatrixXd& j_all =
      stacked_jacobians(predictor.w_star, x, cache, cache_id, jac_scratch);
  const Eigen::MatrixXd& f_all =
      forward_values(predictor.w_star, x, cache, cache_id, fwd_scratch);
  std::vector<PredictiveDistribution> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.push_back(gp_subset_predict_core(
        predictor, j_all.middleRows(i * c, c), f_all.row(i).transpose(), lik,
        method.with_seed(mix_seed(method.seed, i))));
  }
  return out;
}

std::vector<PredictiveDistribution> dual_full_predict_batch(
    const DualFullPredictor& predictor,
    const Eigen::Ref<const Eigen::MatrixXd>& x, const Likelihood& lik,
    const PushForward& method, JacobianCache* cache,
    const std::string& cache_id) {
  const Eigen::Index c = predictor.w_star.arch.output_dim;
  Eigen::MatrixXd scratch;
  const Eigen::MatrixXd& j_all =
      stacked_jacobians(predictor.w_star, x, cache, cache_id, scratch);
  std::vector<PredictiveDistribution> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.push_back(dual_full_predict_core(
        predictor, j_all.middleRows(i * c, c), lik,
        method.with_seed(mix_seed(method.seed, i))));
  }
  return out;
}

}  // namespace sfr
