#include "sfr/likelihood.hpp"

#include <cmath>
#include <random>

namespace sfr {

namespace {

constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5*log(2*pi)

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

Eigen::VectorXd softmax(const Eigen::Ref<const Eigen::VectorXd>& f) {
  Eigen::VectorXd p = (f.array() - f.maxCoeff()).exp();
  p /= p.sum();
  return p;
}

void check_latent(const Likelihood& lik, Eigen::Index c) {
  if (c != lik.latent_dim) {
    throw DimensionMismatch("likelihood: latent dim " + std::to_string(c) +
                            " does not match family dim " +
                            std::to_string(lik.latent_dim));
  }
}

int class_label(const Likelihood& lik, double y) {
  const double r = std::round(y);
  if (!(std::isfinite(y)) || std::abs(y - r) > 1e-9 || r < 0.0 ||
      r >= static_cast<double>(lik.num_classes())) {
    throw InvalidLabel("likelihood: label " + std::to_string(y) +
                       " invalid for " + std::to_string(lik.num_classes()) +
                       " classes");
  }
  return static_cast<int>(r);
}

// Factor G with G G^T = cov, eigenvalues clamped at zero so PSD inputs with
// rounding noise still sample.
Eigen::MatrixXd sampling_factor(const Eigen::Ref<const Eigen::MatrixXd>& cov) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (cov + cov.transpose()));
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
}

}  // namespace

Likelihood Likelihood::gaussian(double noise_variance) {
  if (!(noise_variance > 0.0)) {
    throw ConfigError("Likelihood::gaussian: noise variance must be > 0");
  }
  return Likelihood{Family::Gaussian, noise_variance, 1};
}

Likelihood Likelihood::bernoulli_logit() {
  return Likelihood{Family::BernoulliLogit, 0.0, 1};
}

Likelihood Likelihood::categorical_softmax(Eigen::Index num_classes) {
  if (num_classes < 2) {
    throw ConfigError("Likelihood::categorical_softmax: needs >= 2 classes");
  }
  return Likelihood{Family::CategoricalSoftmax, 0.0, num_classes};
}

Eigen::Index Likelihood::num_classes() const {
  switch (family) {
    case Family::Gaussian: return 0;
    case Family::BernoulliLogit: return 2;
    case Family::CategoricalSoftmax: return latent_dim;
  }
  return 0;
}

double log_prob(const Likelihood& lik, double y,
                const Eigen::Ref<const Eigen::VectorXd>& f) {
  check_latent(lik, f.size());
  switch (lik.family) {
    case Likelihood::Family::Gaussian: {
      if (!std::isfinite(y)) throw InvalidLabel("gaussian: non-finite label");
      const double r = y - f[0];
      return -kHalfLog2Pi - 0.5 * std::log(lik.noise_variance) -
             0.5 * r * r / lik.noise_variance;
    }
    case Likelihood::Family::BernoulliLogit: {
      const int c = class_label(lik, y);
      return c * f[0] - softplus(f[0]);
    }
    case Likelihood::Family::CategoricalSoftmax: {
      const int c = class_label(lik, y);
      const double m = f.maxCoeff();
      const double lse = m + std::log((f.array() - m).exp().sum());
      return f[c] - lse;
    }
  }
  throw ConfigError("log_prob: unknown family");
}

Eigen::VectorXd grad_f(const Likelihood& lik, double y,
                       const Eigen::Ref<const Eigen::VectorXd>& f) {
  check_latent(lik, f.size());
  switch (lik.family) {
    case Likelihood::Family::Gaussian: {
      if (!std::isfinite(y)) throw InvalidLabel("gaussian: non-finite label");
      return Eigen::VectorXd::Constant(1, (y - f[0]) / lik.noise_variance);
    }
    case Likelihood::Family::BernoulliLogit: {
      const int c = class_label(lik, y);
      return Eigen::VectorXd::Constant(1, c - sigmoid(f[0]));
    }
    case Likelihood::Family::CategoricalSoftmax: {
      const int c = class_label(lik, y);
      Eigen::VectorXd g = -softmax(f);
      g[c] += 1.0;
      return g;
    }
  }
  throw ConfigError("grad_f: unknown family");
}

Eigen::MatrixXd hess_f(const Likelihood& lik, double y,
                       const Eigen::Ref<const Eigen::VectorXd>& f) {
  check_latent(lik, f.size());
  switch (lik.family) {
    case Likelihood::Family::Gaussian:
      if (!std::isfinite(y)) throw InvalidLabel("gaussian: non-finite label");
      return Eigen::MatrixXd::Constant(1, 1, 1.0 / lik.noise_variance);
    case Likelihood::Family::BernoulliLogit: {
      class_label(lik, y);
      const double p = sigmoid(f[0]);
      return Eigen::MatrixXd::Constant(1, 1, p * (1.0 - p));
    }
    case Likelihood::Family::CategoricalSoftmax: {
      class_label(lik, y);
      const Eigen::VectorXd p = softmax(f);
      Eigen::MatrixXd h = -p * p.transpose();
      h.diagonal() += p;
      return h;
    }
  }
  throw ConfigError("hess_f: unknown family");
}

double OutputDistribution::log_predictive(double y) const {
  if (classification) {
    const double r = std::round(y);
    if (r < 0.0 || r >= static_cast<double>(probs.size())) {
      throw InvalidLabel("log_predictive: label outside class range");
    }
    return std::log(std::max(probs[static_cast<Eigen::Index>(r)], 1e-12));
  }
  const double v = std::max(variance, 1e-300);
  const double r = y - mean;
  return -kHalfLog2Pi - 0.5 * std::log(v) - 0.5 * r * r / v;
}

Eigen::Index OutputDistribution::predicted_class() const {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

OutputDistribution push_forward(const Likelihood& lik,
                                const Eigen::Ref<const Eigen::VectorXd>& mean,
                                const Eigen::Ref<const Eigen::MatrixXd>& cov,
                                const PushForward& method) {
  check_latent(lik, mean.size());
  if (cov.rows() != lik.latent_dim || cov.cols() != lik.latent_dim) {
    throw DimensionMismatch("push_forward: covariance shape mismatch");
  }

  OutputDistribution out;
  if (lik.family == Likelihood::Family::Gaussian) {
    out.classification = false;
    out.mean = mean[0];
    out.variance = std::max(cov(0, 0), 0.0) + lik.noise_variance;
    return out;
  }

  out.classification = true;
  const Eigen::Index k = lik.num_classes();

  if (method.kind == PushForward::Kind::Probit) {
    double m, v;
    if (lik.family == Likelihood::Family::BernoulliLogit) {
      m = mean[0];
      v = std::max(cov(0, 0), 0.0);
    } else if (k == 2) {
      // two-class softmax reduces to a logit on the class-0 margin
      m = mean[0] - mean[1];
      v = std::max(cov(0, 0) + cov(1, 1) - 2.0 * cov(0, 1), 0.0);
    } else {
      throw UnsupportedMethod("push_forward: probit needs a binary likelihood");
    }
    const double p1 = sigmoid(m / std::sqrt(1.0 + M_PI * v / 8.0));
    out.probs = Eigen::VectorXd(2);
    if (lik.family == Likelihood::Family::BernoulliLogit) {
      out.probs << 1.0 - p1, p1;
    } else {
      out.probs << p1, 1.0 - p1;  // m was the class-0 margin
    }
    return out;
  }

  if (method.num_samples < 1) {
    throw ConfigError("push_forward: Monte Carlo needs num_samples >= 1");
  }
  const Eigen::MatrixXd factor = sampling_factor(cov);
  std::mt19937_64 rng(method.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd probs = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd eps(lik.latent_dim);
  for (int s = 0; s < method.num_samples; ++s) {
    for (Eigen::Index j = 0; j < eps.size(); ++j) eps[j] = normal(rng);
    const Eigen::VectorXd f = mean + factor * eps;
    if (lik.family == Likelihood::Family::BernoulliLogit) {
      const double p = sigmoid(f[0]);
      probs[0] += 1.0 - p;
      probs[1] += p;
    } else {
      probs += softmax(f);
    }
  }
  out.probs = probs / static_cast<double>(method.num_samples);
  return out;
}

OutputDistribution map_output(const Likelihood& lik,
                              const Eigen::Ref<const Eigen::VectorXd>& f) {
  check_latent(lik, f.size());
  OutputDistribution out;
  switch (lik.family) {
    case Likelihood::Family::Gaussian:
      out.classification = false;
      out.mean = f[0];
      out.variance = lik.noise_variance;
      return out;
    case Likelihood::Family::BernoulliLogit: {
      out.classification = true;
      const double p = sigmoid(f[0]);
      out.probs = Eigen::VectorXd(2);
      out.probs << 1.0 - p, p;
      return out;
    }
    case Likelihood::Family::CategoricalSoftmax:
      out.classification = true;
      out.probs = softmax(f);
      return out;
  }
  throw ConfigError("map_output: unknown family");
}

}  // namespace sfr
