#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sfr/errors.hpp"

namespace sfr {

/// Likelihood family linking latent outputs f in R^C to labels. Binary
/// classification uses a single logit (C=1); categorical covers C >= 2.
struct Likelihood {
  enum class Family { Gaussian, BernoulliLogit, CategoricalSoftmax };

  Family family = Family::Gaussian;
  double noise_variance = 1.0;   // Gaussian only
  Eigen::Index latent_dim = 1;   // C, the network output dimension

  static Likelihood gaussian(double noise_variance);
  static Likelihood bernoulli_logit();
  static Likelihood categorical_softmax(Eigen::Index num_classes);

  bool is_classification() const { return family != Family::Gaussian; }
  /// Number of distinct label values (2 for Bernoulli); 0 for regression.
  Eigen::Index num_classes() const;
};

/// log p(y | f).
double log_prob(const Likelihood& lik, double y,
                const Eigen::Ref<const Eigen::VectorXd>& f);

/// d/df log p(y | f).
Eigen::VectorXd grad_f(const Likelihood& lik, double y,
                       const Eigen::Ref<const Eigen::VectorXd>& f);

/// -d2/df2 log p(y | f), returned negated so the result is PSD. For the
/// softmax family the matrix is singular (rows sum to zero); callers must
/// never invert a block on its own.
Eigen::MatrixXd hess_f(const Likelihood& lik, double y,
                       const Eigen::Ref<const Eigen::VectorXd>& f);

/// Per-datapoint dual coefficients: alpha_hat row i is the log-likelihood
/// gradient at f_i, beta_hat[i] the negated Hessian (PSD).
struct DualCoefficients {
  Eigen::MatrixXd alpha_hat;              // N x C
  std::vector<Eigen::MatrixXd> beta_hat;  // N blocks of C x C

  Eigen::Index size() const { return alpha_hat.rows(); }
};

struct PushForward {
  enum class Kind { MonteCarlo, Probit };

  Kind kind = Kind::MonteCarlo;
  int num_samples = 100;
  std::uint64_t seed = 0;

  static PushForward mc(int num_samples, std::uint64_t seed) {
    return PushForward{Kind::MonteCarlo, num_samples, seed};
  }
  static PushForward probit() { return PushForward{Kind::Probit, 0, 0}; }

  PushForward with_seed(std::uint64_t s) const {
    PushForward out = *this;
    out.seed = s;
    return out;
  }
};

/// Predictive output distribution: class probabilities for classification,
/// mean/variance for regression.
struct OutputDistribution {
  bool classification = false;
  Eigen::VectorXd probs;  // num_classes entries, in [0,1], summing to 1
  double mean = 0.0;
  double variance = 0.0;

  double log_predictive(double y) const;
  Eigen::Index predicted_class() const;  // argmax, ties to the lowest index
};

/// E_{f ~ N(mean, cov)}[p(y | f)] pushed to the output space. Gaussian is
/// analytic (mean, cov + sigma^2) regardless of method; classification uses
/// Monte Carlo or the probit approximation.
OutputDistribution push_forward(const Likelihood& lik,
                                const Eigen::Ref<const Eigen::VectorXd>& mean,
                                const Eigen::Ref<const Eigen::MatrixXd>& cov,
                                const PushForward& method);

/// Plugin output at a point estimate f (zero latent covariance).
OutputDistribution map_output(const Likelihood& lik,
                              const Eigen::Ref<const Eigen::VectorXd>& f);

}  // namespace sfr
