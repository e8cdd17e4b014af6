#pragma once

#include <map>
#include <string>

#include <Eigen/Dense>

#include "sfr/mlp.hpp"

namespace sfr {

/// Tangent kernel of a trained network at frozen weights:
/// kappa(x, x') = (1/delta) * J(x) * J(x')^T, a C x C block per input pair.
struct NtkKernel {
  MlpWeights weights_star;
  double prior_precision = 1.0;  // delta

  Eigen::Index block_dim() const { return weights_star.arch.output_dim; }
};

/// Write-once store of stacked Jacobians and forward values per input set.
/// A cache instance belongs to a single frozen weight vector; entries are
/// keyed by the caller-chosen input-set identifier.
class JacobianCache {
 public:
  const Eigen::MatrixXd& jacobians(const MlpWeights& weights,
                                   const std::string& id,
                                   const Eigen::Ref<const Eigen::MatrixXd>& x);
  const Eigen::MatrixXd& forward(const MlpWeights& weights,
                                 const std::string& id,
                                 const Eigen::Ref<const Eigen::MatrixXd>& x);

  long jacobian_computes() const { return jacobian_computes_; }
  long forward_computes() const { return forward_computes_; }
  long hits() const { return hits_; }

 private:
  std::map<std::string, Eigen::MatrixXd> jac_;
  std::map<std::string, Eigen::MatrixXd> fwd_;
  long jacobian_computes_ = 0;
  long forward_computes_ = 0;
  long hits_ = 0;
};

/// Dense block Gram matrix in point-major, channel-minor layout:
/// values.block(i*C, j*C, C, C) = kappa(x1_i, x2_j).
struct BlockGram {
  Eigen::MatrixXd values;
  Eigen::Index rows_points = 0;
  Eigen::Index cols_points = 0;
  Eigen::Index block_dim = 1;

  Eigen::Block<const Eigen::MatrixXd> block(Eigen::Index i, Eigen::Index j) const {
    return values.block(i * block_dim, j * block_dim, block_dim, block_dim);
  }
};

/// kappa(x, x') for a single pair.
Eigen::MatrixXd ntk_block(const NtkKernel& kernel,
                          const Eigen::Ref<const Eigen::RowVectorXd>& x1,
                          const Eigen::Ref<const Eigen::RowVectorXd>& x2);

/// Gram matrix between two input sets, reusing cached Jacobians keyed by the
/// given identifiers. Empty identifiers bypass the cache.
BlockGram gram(const NtkKernel& kernel, JacobianCache& cache,
               const std::string& id1, const Eigen::Ref<const Eigen::MatrixXd>& x1,
               const std::string& id2, const Eigen::Ref<const Eigen::MatrixXd>& x2);

/// Gram from already-stacked Jacobians (rows (N*C) x P each).
BlockGram gram_from_jacobians(double prior_precision, Eigen::Index block_dim,
                              const Eigen::Ref<const Eigen::MatrixXd>& j1,
                              const Eigen::Ref<const Eigen::MatrixXd>& j2);

}  // namespace sfr
