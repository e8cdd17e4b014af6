#include "sfr/kernel.hpp"

namespace sfr {

const Eigen::MatrixXd& JacobianCache::jacobians(
    const MlpWeights& weights, const std::string& id,
    const Eigen::Ref<const Eigen::MatrixXd>& x) {
  auto it = jac_.find(id);
  if (it != jac_.end()) {
    ++hits_;
    return it->second;
  }
  ++jacobian_computes_;
  return jac_.emplace(id, mlp_jacobian_stacked(weights, x)).first->second;
}

const Eigen::MatrixXd& JacobianCache::forward(
    const MlpWeights& weights, const std::string& id,
    const Eigen::Ref<const Eigen::MatrixXd>& x) {
  auto it = fwd_.find(id);
  if (it != fwd_.end()) {
    ++hits_;
    return it->second;
  }
  ++forward_computes_;
  return fwd_.emplace(id, mlp_forward(weights, x)).first->second;
}

Eigen::MatrixXd ntk_block(const NtkKernel& kernel,
                          const Eigen::Ref<const Eigen::RowVectorXd>& x1,
                          const Eigen::Ref<const Eigen::RowVectorXd>& x2) {
  const Eigen::MatrixXd j1 = mlp_jacobian(kernel.weights_star, x1);
  const Eigen::MatrixXd j2 = mlp_jacobian(kernel.weights_star, x2);
  return (j1 * j2.transpose()) / kernel.prior_precision;
}

BlockGram gram_from_jacobians(double prior_precision, Eigen::Index block_dim,
                              const Eigen::Ref<const Eigen::MatrixXd>& j1,
                              const Eigen::Ref<const Eigen::MatrixXd>& j2) {
  if (j1.cols() != j2.cols()) {
    throw DimensionMismatch("gram: Jacobian parameter dimensions differ");
  }
  BlockGram out;
  out.block_dim = block_dim;
  out.rows_points = j1.rows() / block_dim;
  out.cols_points = j2.rows() / block_dim;
  out.values = (j1 * j2.transpose()) / prior_precision;
  return out;
}

BlockGram gram(const NtkKernel& kernel, JacobianCache& cache,
               const std::string& id1, const Eigen::Ref<const Eigen::MatrixXd>& x1,
               const std::string& id2,
               const Eigen::Ref<const Eigen::MatrixXd>& x2) {
  const Eigen::MatrixXd* j1;
  const Eigen::MatrixXd* j2;
  Eigen::MatrixXd fresh1, fresh2;
  if (id1.empty()) {
    fresh1 = mlp_jacobian_stacked(kernel.weights_star, x1);
    j1 = &fresh1;
  } else {
    j1 = &cache.jacobians(kernel.weights_star, id1, x1);
  }
  if (id2.empty()) {
    fresh2 = mlp_jacobian_stacked(kernel.weights_star, x2);
    j2 = &fresh2;
  } else if (id2 == id1) {
    j2 = j1;
  } else {
    j2 = &cache.jacobians(kernel.weights_star, id2, x2);
  }
  return gram_from_jacobians(kernel.prior_precision, kernel.block_dim(), *j1, *j2);
}

}  // namespace sfr
