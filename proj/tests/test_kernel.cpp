#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sfr/kernel.hpp"

#include "oracles.hpp"

using namespace sfr;

namespace {

MlpWeights linear_no_bias(Eigen::Index d) {
  MlpArchitecture arch;
  arch.input_dim = d;
  arch.output_dim = 1;
  arch.use_bias = false;
  MlpWeights w{arch, Eigen::VectorXd::Zero(d)};
  w.w.setRandom();
  return w;
}

MlpWeights random_net(Eigen::Index d, std::vector<Eigen::Index> hidden,
                      Eigen::Index c, std::uint64_t seed) {
  MlpArchitecture arch;
  arch.input_dim = d;
  arch.hidden_widths = std::move(hidden);
  arch.output_dim = c;
  return mlp_init(arch, seed);
}

}  // namespace

TEST_CASE("linear kernel without bias is the raw inner product") {
  const NtkKernel kernel{linear_no_bias(3), 1.0};
  const Eigen::RowVector3d a(1.0, 2.0, -1.0);
  const Eigen::RowVector3d b(0.5, 0.0, 2.0);
  CHECK(ntk_block(kernel, a, b)(0, 0) == doctest::Approx(-1.5).epsilon(1e-14));
}

TEST_CASE("doubling delta halves every entry exactly") {
  const MlpWeights w = random_net(3, {5}, 2, 1);
  const NtkKernel k1{w, 0.7};
  const NtkKernel k2{w, 1.4};
  const Eigen::RowVector3d a(0.3, -1.0, 0.4);
  const Eigen::RowVector3d b(1.1, 0.2, -0.3);
  const Eigen::MatrixXd b1 = ntk_block(k1, a, b);
  const Eigen::MatrixXd b2 = ntk_block(k2, a, b);
  CHECK(((0.5 * b1).array() == b2.array()).all());
}

TEST_CASE("self-blocks are PSD") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const MlpWeights w = random_net(4, {6}, 3, seed);
    const NtkKernel kernel{w, 1.0};
    const Eigen::RowVectorXd x = oracles::random_matrix(1, 4, 50 + seed).row(0);
    const Eigen::MatrixXd block = ntk_block(kernel, x, x);
    const Eigen::VectorXd eig =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(block).eigenvalues();
    CHECK(eig.minCoeff() >= -1e-10);
    CHECK((block - block.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("gram layout and symmetry") {
  const MlpWeights w = random_net(3, {4}, 2, 3);
  const NtkKernel kernel{w, 2.0};
  JacobianCache cache;
  const Eigen::MatrixXd x1 = oracles::random_matrix(3, 3, 60);
  const Eigen::MatrixXd x2 = oracles::random_matrix(4, 3, 61);

  const BlockGram g12 = gram(kernel, cache, "x1", x1, "x2", x2);
  CHECK(g12.rows_points == 3);
  CHECK(g12.cols_points == 4);
  CHECK(g12.block_dim == 2);
  CHECK(g12.values.rows() == 6);
  CHECK(g12.values.cols() == 8);

  // block (i, j) is the pairwise kernel block
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) {
      const Eigen::MatrixXd expected = ntk_block(kernel, x1.row(i), x2.row(j));
      CHECK(oracles::rel_diff(Eigen::MatrixXd(g12.block(i, j)), expected) < 1e-12);
    }
  }

  const BlockGram g21 = gram(kernel, cache, "x2", x2, "x1", x1);
  CHECK(oracles::rel_diff(g21.values.transpose(), g12.values) < 1e-12);
}

TEST_CASE("gram of a linear map on the canonical basis is the identity") {
  const NtkKernel kernel{linear_no_bias(2), 1.0};
  JacobianCache cache;
  Eigen::MatrixXd x(2, 2);
  x << 1.0, 0.0, 0.0, 1.0;
  const BlockGram g = gram(kernel, cache, "x", x, "x", x);
  CHECK((g.values - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gram PSD invariant at trace scale") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const MlpWeights w = random_net(3, {7}, 2, 70 + seed);
    const NtkKernel kernel{w, 1.0};
    JacobianCache cache;
    const Eigen::MatrixXd x = oracles::random_matrix(6, 3, 80 + seed);
    const BlockGram g = gram(kernel, cache, "x", x, "x", x);
    const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(
                                    0.5 * (g.values + g.values.transpose()))
                                    .eigenvalues();
    const double scale =
        g.values.trace() / static_cast<double>(g.values.rows());
    CHECK(eig.minCoeff() >= -1e-8 * scale);
  }
}

TEST_CASE("kernel scaling law is exact for power-of-two rescaling") {
  const MlpWeights w = random_net(4, {5}, 2, 90);
  JacobianCache cache;
  const Eigen::MatrixXd x = oracles::random_matrix(5, 4, 91);
  const BlockGram g1 = gram(NtkKernel{w, 3.0}, cache, "x", x, "x", x);
  const BlockGram g2 = gram(NtkKernel{w, 6.0}, cache, "x", x, "x", x);
  CHECK(((0.5 * g1.values).array() == g2.values.array()).all());
}

TEST_CASE("cache is transparent and bit-identical") {
  const MlpWeights w = random_net(3, {6}, 2, 92);
  const NtkKernel kernel{w, 1.3};
  const Eigen::MatrixXd x1 = oracles::random_matrix(4, 3, 93);
  const Eigen::MatrixXd x2 = oracles::random_matrix(3, 3, 94);

  JacobianCache cache;
  const BlockGram cached1 = gram(kernel, cache, "x1", x1, "x2", x2);
  const BlockGram cached2 = gram(kernel, cache, "x1", x1, "x2", x2);
  JacobianCache fresh;
  const BlockGram uncached = gram(kernel, fresh, "", x1, "", x2);

  CHECK((cached1.values.array() == cached2.values.array()).all());
  CHECK((cached1.values.array() == uncached.values.array()).all());
  CHECK(cache.jacobian_computes() == 2);
  CHECK(cache.hits() >= 2);
  CHECK(fresh.jacobian_computes() == 0);

  // cached entries are bit-identical to fresh jacobian calls
  const Eigen::MatrixXd& j1 = cache.jacobians(w, "x1", x1);
  CHECK((j1.array() == mlp_jacobian_stacked(w, x1).array()).all());
}
