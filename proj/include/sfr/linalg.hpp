#pragma once

#include <Eigen/Dense>

#include "sfr/errors.hpp"

namespace sfr {

/// Dense symmetric matrix. Construction symmetrizes A <- (A + A^T)/2; relative
/// asymmetry beyond 1e-6 is logged to stderr but is not an error.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(Eigen::MatrixXd a);

  const Eigen::MatrixXd& matrix() const { return m_; }
  Eigen::Index dim() const { return m_.rows(); }

 private:
  Eigen::MatrixXd m_;
};

/// Lower-triangular Cholesky factor of a (possibly jittered) symmetric matrix.
/// jitter_used is the relative jitter level that succeeded: the factored
/// matrix is A + jitter_used * mean(diag(A)) * I.
struct CholeskyFactor {
  Eigen::MatrixXd lower;
  double jitter_used = 0.0;

  Eigen::Index dim() const { return lower.rows(); }
};

/// Factors A, escalating jitter through {0, 1e-8, 1e-7, ..., 1e-2} scaled by
/// mean(diag(A)). Throws NotPositiveDefinite when every level fails.
CholeskyFactor cholesky_psd(const SymmetricMatrix& a);

/// Solves (L L^T) X = B.
Eigen::MatrixXd solve_with_factor(const CholeskyFactor& factor,
                                  const Eigen::Ref<const Eigen::MatrixXd>& b);

/// v^T (L L^T)^{-1} v, computed as a squared norm so it is nonnegative.
double quadratic_form(const CholeskyFactor& factor,
                      const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace sfr
