#include <doctest.h>

#include <random>

#include "cansys/algebra.hpp"
#include "oracles.hpp"

using namespace cansys;

TEST_CASE("symplectic matrix structure") {
  for (int order : {2, 4, 8}) {
    const Matrix j = symplectic(order);
    CHECK((j * j + Matrix::Identity(order, order)).norm() == 0.0);
    CHECK((j.adjoint() + j).norm() == 0.0);
  }
}

TEST_CASE("validate_boundary normalizes rows") {
  Matrix raw(1, 2);
  raw << 0.0, 1.0;
  CHECK((validate_boundary(raw).matrix() - raw).norm() < 1e-15);

  raw << 0.0, 2.0;
  Matrix expect(1, 2);
  expect << 0.0, 1.0;
  CHECK((validate_boundary(raw).matrix() - expect).norm() < 1e-15);

  raw << 1.0, 1.0;
  const BoundaryCondition bc = validate_boundary(raw);
  expect << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  CHECK((bc.matrix() - expect).norm() < 1e-15);
  CHECK((bc.matrix() * symplectic(2) * bc.matrix().adjoint()).norm() < 1e-15);
}

TEST_CASE("validate_boundary rejects bad input") {
  Matrix rank_deficient(2, 4);
  rank_deficient << 1, 0, 0, 0, 2, 0, 0, 0;
  CHECK_THROWS_AS(validate_boundary(rank_deficient), Error);
  Matrix not_lagrangian(1, 2);
  not_lagrangian << 1.0, cplx(0.0, 1.0);
  try {
    validate_boundary(not_lagrangian);
    FAIL("expected NotSelfAdjoint");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotSelfAdjoint);
  }
}

TEST_CASE("validated random conditions satisfy the invariants") {
  std::mt19937 rng(7);
  for (int n : {1, 2, 3, 5}) {
    const Matrix mixer = oracle::random_psd(n, rng) + oracle::random_unitary(n, rng);
    const Matrix raw = mixer * oracle::random_lagrangian(n, rng);
    const Matrix a = validate_boundary(raw).matrix();
    CHECK((a * a.adjoint() - Matrix::Identity(n, n)).norm() <= 1e-12);
    CHECK((a * symplectic(2 * n) * a.adjoint()).norm() <= 1e-10);
    // Same row space: the raw rows are combinations of the normalized rows.
    CHECK((raw - raw * a.adjoint() * a).norm() <= 1e-10 * raw.norm());
  }
}

TEST_CASE("mat_exp against the Taylor oracle") {
  CHECK((mat_exp(Matrix::Zero(3, 3)) - Matrix::Identity(3, 3)).norm() == 0.0);
  const Matrix pj = M_PI * symplectic(2);
  CHECK((mat_exp(pj) + Matrix::Identity(2, 2)).norm() < 1e-14);
  CHECK((mat_exp(pj) - oracle::taylor_exp(pj)).norm() < 1e-13);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = -1.0;
  const Matrix e = mat_exp(d);
  CHECK(std::abs(e(0, 0) - std::exp(1.0)) < 1e-14);
  CHECK(std::abs(e(1, 1) - std::exp(-1.0)) < 1e-15);

  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    Matrix m(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) m(i, j) = cplx(g(rng), g(rng));
    m *= 2.0;
    const Matrix ref = oracle::taylor_exp(m);
    CHECK((mat_exp(m) - ref).norm() <= 1e-12 * ref.norm());
    CHECK((mat_exp(m) * mat_exp(-m) - Matrix::Identity(4, 4)).norm() <= 1e-10);
  }
}

TEST_CASE("mat_exp overflow") {
  Matrix big = Matrix::Identity(2, 2) * 1e4;
  CHECK_THROWS_AS(mat_exp(big), Error);
}

TEST_CASE("kernel_basis") {
  CHECK(kernel_basis(Matrix::Identity(3, 3), 1e-10).empty());
  const auto full = kernel_basis(Matrix::Zero(2, 2), 1e-10);
  REQUIRE(full.size() == 2);
  CHECK(std::abs(full[0].dot(full[1])) < 1e-15);
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = 1e-14;
  const auto k = kernel_basis(m, 1e-10);
  REQUIRE(k.size() == 1);
  CHECK(std::abs(std::abs(k[0](1)) - 1.0) < 1e-14);
  CHECK((m * k[0]).norm() <= 10 * 1e-10);
}

TEST_CASE("permutations") {
  CHECK(is_permutation({2, 0, 1}));
  CHECK_FALSE(is_permutation({0, 0, 1}));
  const Matrix p = permutation_matrix({2, 0, 1});
  CHECK((p * p.adjoint() - Matrix::Identity(3, 3)).norm() == 0.0);
  CHECK(p(2, 0) == cplx(1.0));
}
