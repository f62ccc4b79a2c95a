#include <doctest.h>

#include <random>

#include "cansys/hamiltonian.hpp"
#include "oracles.hpp"

using namespace cansys;

namespace {

Matrix m2(cplx a, cplx b, cplx c, cplx d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

TEST_CASE("evaluate constant, Schrodinger and tail values") {
  const Hamiltonian c(2, 0.0, {Segment::constant(1.0, Matrix::Identity(2, 2))});
  CHECK((c.evaluate(0.3) - Matrix::Identity(2, 2)).norm() == 0.0);

  const Hamiltonian s(2, 0.0, {Segment::schrodinger(3.0, 0.0, Real2::Identity())});
  CHECK((s.evaluate(2.0) - m2(4, 2, 2, 1)).norm() < 1e-14);

  Matrix beta(1, 2);
  beta << 0.0, 1.0;
  const Hamiltonian p(2, 0.0, {Segment::constant(1.0, Matrix::Identity(2, 2))},
                      Tail{ProjectionTail{validate_boundary(beta)}});
  CHECK((p.evaluate(5.0) - m2(0, 0, 0, 1)).norm() < 1e-15);
  CHECK_THROWS_AS(c.evaluate(1.5), Error);
  CHECK_THROWS_AS(c.evaluate(-0.1), Error);
}

TEST_CASE("Schrodinger-induced values match the hyperbolic closed form") {
  const double v = 2.0;
  const Hamiltonian s(2, 0.0, {Segment::schrodinger(1.0, v, Real2::Identity())});
  for (double x : {0.1, 0.5, 0.9}) {
    const double k = std::sqrt(v);
    const double p = std::sinh(k * x) / k, q = std::cosh(k * x);
    CHECK((s.evaluate(x) - m2(p * p, p * q, p * q, q * q)).norm() < 1e-13);
  }
}

TEST_CASE("values are positive semidefinite") {
  std::mt19937 rng(11);
  const Hamiltonian h = oracle::random_hamiltonian(4, 5, rng);
  const Hamiltonian s(2, 0.0, {Segment::schrodinger(1.0, -3.0, Real2::Identity()),
                               Segment::schrodinger(0.5, 4.0, Real2::Identity())});
  for (int i = 0; i <= 100; ++i) {
    CHECK(min_eigenvalue_hermitian(h.evaluate(h.end() * i / 100.0)) >= -1e-12);
    CHECK(min_eigenvalue_hermitian(s.evaluate(s.end() * i / 100.0)) >= -1e-12);
  }
}

TEST_CASE("projection tail is a J-neutral projection") {
  std::mt19937 rng(5);
  for (int n : {1, 2, 3}) {
    const ProjectionTail t{validate_boundary(oracle::random_lagrangian(n, rng))};
    const Matrix p = t.projection();
    const Matrix j = symplectic(2 * n);
    CHECK((p * p - p).norm() <= 1e-12);
    CHECK((p * j * p).norm() <= 1e-12);
  }
}

TEST_CASE("reflect_and_scale examples") {
  const Hamiltonian unit(2, -1.0, {Segment::constant(2.0, Matrix::Identity(2, 2))});
  const Hamiltonian right = reflect_and_scale(unit, 1.0, Side::Right);
  CHECK(right.start() == 0.0);
  CHECK(std::abs(right.end() - 1.0) < 1e-15);
  CHECK((right.evaluate(0.5) - Matrix::Identity(2, 2)).norm() == 0.0);

  const Hamiltonian wide(2, -2.0, {Segment::constant(4.0, Matrix::Identity(2, 2))});
  CHECK((reflect_and_scale(wide, 2.0, Side::Left).evaluate(0.5) - 2.0 * Matrix::Identity(2, 2)).norm() == 0.0);

  const Hamiltonian ones(2, -1.0, {Segment::constant(2.0, m2(1, 1, 1, 1))});
  CHECK((reflect_and_scale(ones, 1.0, Side::Left).evaluate(0.3) - m2(1, -1, -1, 1)).norm() == 0.0);
}

TEST_CASE("reflect_and_scale matches the pointwise formula") {
  std::mt19937 rng(17);
  const double r = 0.7;
  const Matrix nn = reflection(2);
  const Hamiltonian h(2, -r, {Segment::schrodinger(0.4, 1.5, Real2::Identity()),
                              Segment::constant(0.5, oracle::random_psd(2, rng)),
                              Segment::schrodinger(0.5, -2.0, Real2::Identity())});
  // Make the Schrodinger pieces consistent with a propagated T.
  std::vector<Segment> segs;
  Real2 t = Real2::Identity();
  for (const auto& [len, v] : std::vector<std::pair<double, double>>{{0.4, 1.5}, {0.5, 0.0}, {0.5, -2.0}}) {
    segs.push_back(Segment::schrodinger(len, v, t));
    t = schrodinger_step_real(v, len) * t;
  }
  for (const Hamiltonian& edge : {h, Hamiltonian(2, -r, segs)}) {
    const Hamiltonian left = reflect_and_scale(edge, r, Side::Left);
    const Hamiltonian right = reflect_and_scale(edge, r, Side::Right);
    for (int i = 0; i <= 100; ++i) {
      const double x = std::min(1.0, std::max(0.0, i / 100.0));
      CHECK((left.evaluate(x) - r * nn * edge.evaluate(-r * x) * nn).norm() <= 1e-12);
      CHECK((right.evaluate(x) - r * edge.evaluate(r * x)).norm() <= 1e-12);
    }
  }
}

TEST_CASE("reflect_and_scale on a half line keeps the tail") {
  const Hamiltonian half(2, -1.0, {Segment::constant(1.5, 2.0 * Matrix::Identity(2, 2))},
                         Tail{DefiniteConstantTail{Matrix::Identity(2, 2)}});
  const Hamiltonian right = reflect_and_scale(half, 1.0, Side::Right);
  CHECK(right.has_tail());
  CHECK(std::abs(right.end() - 0.5) < 1e-15);
  CHECK((right.evaluate(3.0) - Matrix::Identity(2, 2)).norm() == 0.0);
  CHECK_THROWS_AS(reflect_and_scale(half, 2.0, Side::Right), Error);
}

TEST_CASE("detect_theta_form") {
  const Matrix dn = m2(0, 0, 0, 1);
  const Hamiltonian vertical(2, 0.0, {Segment::constant(1.0, 2.0 * dn), Segment::constant(0.5, 0.3 * dn)});
  const auto line = detect_theta_form(vertical);
  REQUIRE(line.has_value());
  CHECK(std::abs(line->theta - M_PI / 2) < 1e-12);
  CHECK(std::abs(line->weights[0] - 2.0) < 1e-12);
  CHECK_FALSE(detect_theta_form(Hamiltonian(2, 0.0, {Segment::constant(1.0, Matrix::Identity(2, 2))})));
  const Hamiltonian mixed(2, 0.0, {Segment::constant(1.0, m2(1, 0, 0, 0)), Segment::constant(1.0, dn)});
  CHECK_FALSE(detect_theta_form(mixed));
  CHECK_FALSE(detect_theta_form(Hamiltonian(2, 0.0, {Segment::schrodinger(1.0, 0.0, Real2::Identity())})));
  CHECK_FALSE(is_definite(vertical));
  CHECK(is_definite(mixed));
}
