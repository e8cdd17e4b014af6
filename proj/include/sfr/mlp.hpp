#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sfr/errors.hpp"

namespace sfr {

/// Fully connected tanh network with a linear output layer.
///
/// Parameter vector layout: for each weight layer in input-to-output order,
/// the weight matrix W (fan_out x fan_in) flattened row by row, followed by
/// the bias vector (when use_bias). use_bias=false drops biases from the
/// parameter vector entirely; it exists for linear-kernel checks.
struct MlpArchitecture {
  Eigen::Index input_dim = 0;
  std::vector<Eigen::Index> hidden_widths;
  Eigen::Index output_dim = 1;
  bool use_bias = true;

  Eigen::Index num_layers() const {
    return static_cast<Eigen::Index>(hidden_widths.size()) + 1;
  }
  Eigen::Index fan_in(Eigen::Index layer) const;
  Eigen::Index fan_out(Eigen::Index layer) const;
  Eigen::Index num_params() const;

  bool operator==(const MlpArchitecture&) const = default;
};

struct MlpWeights {
  MlpArchitecture arch;
  Eigen::VectorXd w;
};

/// Deterministic init: per-layer zero-mean normals scaled by 1/sqrt(fan_in),
/// biases exactly zero.
MlpWeights mlp_init(const MlpArchitecture& arch, std::uint64_t seed);

/// Batch forward pass. X is N x D, the result is N x C.
Eigen::MatrixXd mlp_forward(const MlpWeights& weights,
                            const Eigen::Ref<const Eigen::MatrixXd>& x);

/// Jacobian of the network outputs with respect to the parameter vector at a
/// single input, C x P, rows in output order, columns in parameter order.
Eigen::MatrixXd mlp_jacobian(const MlpWeights& weights,
                             const Eigen::Ref<const Eigen::RowVectorXd>& x);

/// Jacobians for every row of X stacked point-major: row i*C + c is the
/// gradient of output c at input i. Result is (N*C) x P.
Eigen::MatrixXd mlp_jacobian_stacked(const MlpWeights& weights,
                                     const Eigen::Ref<const Eigen::MatrixXd>& x);

/// Gradient of sum_i <dl_df.row(i), f(x_i)> with respect to the parameters;
/// the batched reverse pass used by training.
Eigen::VectorXd mlp_backward(const MlpWeights& weights,
                             const Eigen::Ref<const Eigen::MatrixXd>& x,
                             const Eigen::Ref<const Eigen::MatrixXd>& dl_df);

}  // namespace sfr
