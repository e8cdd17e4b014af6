#include "sfr/linalg.hpp"

#include <array>
#include <cmath>
#include <iostream>

namespace sfr {

SymmetricMatrix::SymmetricMatrix(Eigen::MatrixXd a) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch("SymmetricMatrix: input is not square");
  }
  if (a.rows() < 1) {
    throw DimensionMismatch("SymmetricMatrix: dim must be >= 1");
  }
  const double scale = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (scale > 0.0 && asym > 1e-6 * scale) {
    std::cerr << "sfr: warning: symmetrizing matrix with relative asymmetry "
              << asym / scale << "\n";
  }
  m_ = 0.5 * (a + a.transpose());
}

CholeskyFactor cholesky_psd(const SymmetricMatrix& a) {
  const Eigen::MatrixXd& m = a.matrix();
  if (!m.allFinite()) {
    throw NotPositiveDefinite("cholesky_psd: matrix has non-finite entries");
  }
  const double mean_diag = m.diagonal().mean();
  const double scale = mean_diag > 0.0 ? mean_diag : 1.0;

  static constexpr std::array<double, 8> kJitterLadder = {
      0.0, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2};

  for (double level : kJitterLadder) {
    Eigen::MatrixXd jittered = m;
    if (level > 0.0) {
      jittered.diagonal().array() += level * scale;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(jittered);
    if (llt.info() == Eigen::Success &&
        (llt.matrixLLT().diagonal().array() > 0.0).all()) {
      CholeskyFactor out;
      out.lower = llt.matrixL();
      out.jitter_used = level;
      return out;
    }
  }
  throw NotPositiveDefinite(
      "cholesky_psd: factorization failed at every jitter level");
}

Eigen::MatrixXd solve_with_factor(const CholeskyFactor& factor,
                                  const Eigen::Ref<const Eigen::MatrixXd>& b) {
  if (b.rows() != factor.dim()) {
    throw DimensionMismatch("solve_with_factor: rhs has " +
                            std::to_string(b.rows()) + " rows, factor dim is " +
                            std::to_string(factor.dim()));
  }
  Eigen::MatrixXd x = factor.lower.triangularView<Eigen::Lower>().solve(b);
  factor.lower.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
  return x;
}

double quadratic_form(const CholeskyFactor& factor,
                      const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() != factor.dim()) {
    throw DimensionMismatch("quadratic_form: vector length " +
                            std::to_string(v.size()) + ", factor dim " +
                            std::to_string(factor.dim()));
  }
  Eigen::VectorXd t = factor.lower.triangularView<Eigen::Lower>().solve(v);
  return t.squaredNorm();
}

}  // namespace sfr
