#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sfr/mlp.hpp"

#include "oracles.hpp"

using namespace sfr;

namespace {

MlpArchitecture arch_of(Eigen::Index d, std::vector<Eigen::Index> hidden,
                        Eigen::Index c, bool use_bias = true) {
  MlpArchitecture arch;
  arch.input_dim = d;
  arch.hidden_widths = std::move(hidden);
  arch.output_dim = c;
  arch.use_bias = use_bias;
  return arch;
}

}  // namespace

TEST_CASE("parameter count follows (fan_in+1)*fan_out") {
  CHECK(arch_of(2, {3}, 1).num_params() == 13);
  CHECK(arch_of(5, {8, 8}, 3).num_params() == 48 + 72 + 27);
  CHECK(arch_of(4, {}, 2).num_params() == 10);
  CHECK(arch_of(4, {}, 2, false).num_params() == 8);
}

TEST_CASE("init is deterministic with zero biases") {
  const MlpArchitecture arch = arch_of(3, {5, 4}, 2);
  const MlpWeights a = mlp_init(arch, 42);
  const MlpWeights b = mlp_init(arch, 42);
  CHECK(a.w.size() == arch.num_params());
  CHECK((a.w.array() == b.w.array()).all());
  CHECK((a.w.array() != mlp_init(arch, 43).w.array()).any());

  // bias segments sit after each row-major weight block
  Eigen::Index offset = 0;
  for (Eigen::Index l = 0; l < arch.num_layers(); ++l) {
    offset += arch.fan_in(l) * arch.fan_out(l);
    CHECK(a.w.segment(offset, arch.fan_out(l)).cwiseAbs().maxCoeff() == 0.0);
    offset += arch.fan_out(l);
  }
}

TEST_CASE("forward of the zero network is zero") {
  const MlpArchitecture arch = arch_of(3, {4}, 2);
  MlpWeights w{arch, Eigen::VectorXd::Zero(arch.num_params())};
  const Eigen::MatrixXd f = mlp_forward(w, oracles::random_matrix(5, 3, 1));
  CHECK(f.rows() == 5);
  CHECK(f.cols() == 2);
  CHECK(f.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single linear layer is the plain affine map") {
  const MlpArchitecture arch = arch_of(2, {}, 1);
  MlpWeights w{arch, Eigen::VectorXd::Zero(3)};
  w.w << 1.0, 0.0, 0.0;  // weights [1,0], bias 0
  Eigen::RowVector2d x(2.0, 5.0);
  CHECK(mlp_forward(w, x)(0, 0) == 2.0);

  // J = [x^T, 1] exactly
  const Eigen::MatrixXd jac = mlp_jacobian(w, x);
  CHECK(jac.rows() == 1);
  CHECK(jac(0, 0) == 2.0);
  CHECK(jac(0, 1) == 5.0);
  CHECK(jac(0, 2) == 1.0);
}

TEST_CASE("forward rejects wrong input dimension") {
  const MlpArchitecture arch = arch_of(3, {4}, 1);
  const MlpWeights w = mlp_init(arch, 0);
  CHECK_THROWS_AS(mlp_forward(w, Eigen::MatrixXd::Zero(2, 4)), DimensionMismatch);
}

TEST_CASE("jacobian agrees with central finite differences") {
  double worst = 0.0;
  int case_id = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::Index d = 1 + rep % 5;
    const Eigen::Index c = 1 + rep % 3;
    std::vector<Eigen::Index> hidden;
    if (rep % 3 == 0) hidden = {4};
    else if (rep % 3 == 1) hidden = {8, 8};
    else hidden = {5, 3};
    const MlpArchitecture arch = arch_of(d, hidden, c);
    const MlpWeights w = mlp_init(arch, 1000 + rep);
    const Eigen::RowVectorXd x = oracles::random_matrix(1, d, 2000 + rep).row(0);

    const Eigen::MatrixXd jac = mlp_jacobian(w, x);
    const Eigen::MatrixXd fd = oracles::fd_jacobian(w, x);
    const double err = oracles::rel_diff(fd, jac);
    if (err > worst) {
      worst = err;
      case_id = rep;
    }
  }
  INFO("worst case ", case_id);
  CHECK(worst < 1e-4);
}

TEST_CASE("jacobian is bit-reproducible") {
  const MlpArchitecture arch = arch_of(4, {6, 5}, 2);
  const MlpWeights w = mlp_init(arch, 3);
  const Eigen::RowVectorXd x = oracles::random_matrix(1, 4, 5).row(0);
  const Eigen::MatrixXd j1 = mlp_jacobian(w, x);
  const Eigen::MatrixXd j2 = mlp_jacobian(w, x);
  CHECK((j1.array() == j2.array()).all());
}

TEST_CASE("purely linear network is linear in the weights") {
  const MlpArchitecture arch = arch_of(3, {}, 2);
  const Eigen::RowVectorXd x = oracles::random_matrix(1, 3, 9).row(0);

  MlpWeights w1{arch, Eigen::VectorXd::Zero(arch.num_params())};
  MlpWeights w2 = w1;
  w1.w.head(4).setRandom();
  w2.w.tail(4).setRandom();
  MlpWeights sum = w1;
  sum.w += w2.w;

  const Eigen::MatrixXd f =
      mlp_forward(w1, x) + mlp_forward(w2, x) - mlp_forward(sum, x);
  CHECK(f.cwiseAbs().maxCoeff() < 1e-14);

  // and the Jacobian does not depend on the weights
  CHECK((mlp_jacobian(w1, x) - mlp_jacobian(w2, x)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stacked jacobian rows match the per-point jacobians") {
  const MlpArchitecture arch = arch_of(3, {5}, 2);
  const MlpWeights w = mlp_init(arch, 11);
  const Eigen::MatrixXd x = oracles::random_matrix(4, 3, 12);
  const Eigen::MatrixXd stacked = mlp_jacobian_stacked(w, x);
  CHECK(stacked.rows() == 8);
  for (Eigen::Index i = 0; i < 4; ++i) {
    const Eigen::MatrixXd ji = mlp_jacobian(w, x.row(i));
    CHECK((stacked.middleRows(i * 2, 2) - ji).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("batched backward equals the jacobian-weighted sum") {
  const MlpArchitecture arch = arch_of(3, {6, 4}, 2);
  const MlpWeights w = mlp_init(arch, 21);
  const Eigen::MatrixXd x = oracles::random_matrix(5, 3, 22);
  const Eigen::MatrixXd dl_df = oracles::random_matrix(5, 2, 23);

  const Eigen::VectorXd grad = mlp_backward(w, x, dl_df);

  Eigen::VectorXd expected = Eigen::VectorXd::Zero(arch.num_params());
  const Eigen::MatrixXd stacked = mlp_jacobian_stacked(w, x);
  for (Eigen::Index i = 0; i < 5; ++i) {
    expected += stacked.middleRows(i * 2, 2).transpose() *
                dl_df.row(i).transpose();
  }
  CHECK(oracles::rel_diff(expected, grad) < 1e-12);
}
