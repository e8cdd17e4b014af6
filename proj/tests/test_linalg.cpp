#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "sfr/linalg.hpp"

#include "oracles.hpp"

using namespace sfr;

TEST_CASE("cholesky of the identity needs no jitter") {
  const CholeskyFactor f =
      cholesky_psd(SymmetricMatrix(Eigen::Matrix2d::Identity()));
  CHECK(f.jitter_used == 0.0);
  CHECK((f.lower - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cholesky matches the hand factorization of [[4,2],[2,3]]") {
  Eigen::Matrix2d a;
  a << 4.0, 2.0, 2.0, 3.0;
  const CholeskyFactor f = cholesky_psd(SymmetricMatrix(a));
  CHECK(f.jitter_used == 0.0);
  CHECK(f.lower(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f.lower(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(f.lower(1, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(f.lower(0, 1) == 0.0);
}

TEST_CASE("indefinite matrix exhausts the jitter ladder") {
  Eigen::Matrix2d a;
  a << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
  CHECK_THROWS_AS(cholesky_psd(SymmetricMatrix(a)), NotPositiveDefinite);
}

TEST_CASE("non-finite input is rejected") {
  Eigen::Matrix2d a = Eigen::Matrix2d::Identity();
  a(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(cholesky_psd(SymmetricMatrix(a)), NotPositiveDefinite);
}

TEST_CASE("solve_with_factor") {
  const CholeskyFactor id =
      cholesky_psd(SymmetricMatrix(Eigen::Matrix2d::Identity()));
  Eigen::MatrixXd b(2, 1);
  b << 3.0, 7.0;
  CHECK((solve_with_factor(id, b) - b).cwiseAbs().maxCoeff() == 0.0);

  Eigen::Matrix2d a;
  a << 4.0, 2.0, 2.0, 3.0;
  const CholeskyFactor f = cholesky_psd(SymmetricMatrix(a));
  Eigen::MatrixXd rhs(2, 1);
  rhs << 1.0, 0.0;
  const Eigen::MatrixXd x = solve_with_factor(f, rhs);
  CHECK(x(0, 0) == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(x(1, 0) == doctest::Approx(-0.25).epsilon(1e-12));

  CHECK_THROWS_AS(solve_with_factor(f, Eigen::MatrixXd::Zero(3, 1)),
                  DimensionMismatch);
}

TEST_CASE("quadratic_form") {
  const CholeskyFactor id =
      cholesky_psd(SymmetricMatrix(Eigen::Matrix2d::Identity()));
  Eigen::Vector2d v(3.0, 4.0);
  CHECK(quadratic_form(id, v) == doctest::Approx(25.0).epsilon(1e-14));

  Eigen::Matrix2d a;
  a << 4.0, 2.0, 2.0, 3.0;
  const CholeskyFactor f = cholesky_psd(SymmetricMatrix(a));
  CHECK(quadratic_form(f, Eigen::Vector2d(1.0, 0.0)) ==
        doctest::Approx(0.375).epsilon(1e-12));
  CHECK(quadratic_form(f, Eigen::Vector2d::Zero()) == 0.0);
  CHECK_THROWS_AS(quadratic_form(f, Eigen::Vector3d::Zero()), DimensionMismatch);
}

TEST_CASE("SymmetricMatrix construction") {
  CHECK_THROWS_AS(SymmetricMatrix(Eigen::MatrixXd::Zero(2, 3)), DimensionMismatch);
  CHECK_THROWS_AS(SymmetricMatrix(Eigen::MatrixXd(0, 0)), DimensionMismatch);
  Eigen::Matrix2d a;
  a << 1.0, 2.0, 4.0, 1.0;
  const SymmetricMatrix s(a);
  CHECK(s.matrix()(0, 1) == 3.0);
  CHECK(s.matrix()(1, 0) == 3.0);
}

TEST_CASE("random PSD Gram matrices factor at the lowest jitter levels") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(seed % 7);
    const Eigen::MatrixXd g = oracles::random_matrix(n + 3, n, seed);
    const SymmetricMatrix a(g.transpose() * g);
    const CholeskyFactor f = cholesky_psd(a);
    CHECK(f.jitter_used <= 1e-8);
    CHECK((f.lower.diagonal().array() > 0.0).all());
    Eigen::MatrixXd jittered = a.matrix();
    jittered.diagonal().array() += f.jitter_used * a.matrix().diagonal().mean();
    const double err = (f.lower * f.lower.transpose() - jittered).norm() /
                       std::max(jittered.norm(), 1e-300);
    CHECK(err < 1e-10);
  }
}

TEST_CASE("quadratic form is nonnegative and solves round-trip") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(seed % 6);
    const Eigen::MatrixXd g = oracles::random_matrix(n + 2, n, 100 + seed);
    const SymmetricMatrix a(g.transpose() * g);
    const CholeskyFactor f = cholesky_psd(a);

    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
    CHECK(quadratic_form(f, v) >= 0.0);

    const Eigen::MatrixXd b = oracles::random_matrix(n, 3, 200 + seed);
    const Eigen::MatrixXd x = solve_with_factor(f, b);
    Eigen::MatrixXd jittered = a.matrix();
    jittered.diagonal().array() += f.jitter_used * a.matrix().diagonal().mean();
    const double err = (jittered * x - b).norm() / std::max(b.norm(), 1e-300);
    CHECK(err < 1e-8);
  }
}
