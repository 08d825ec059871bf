#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "djds/linalg.hpp"

using namespace djds;

namespace {

Matrix random_symmetric(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = d(rng);
  return m;
}

} // namespace

TEST_CASE("arithmetic on 2x2 hand values") {
  Matrix x(2, 2), y(2, 2);
  x(0, 0) = 1; x(0, 1) = 2; x(1, 0) = 3; x(1, 1) = 4;
  y(0, 0) = 5; y(0, 1) = 6; y(1, 0) = 7; y(1, 1) = 8;
  Matrix s = x + y;
  CHECK(s(0, 0) == 6.0);
  CHECK(s(1, 1) == 12.0);
  Matrix p = x * y;
  CHECK(p(0, 0) == 19.0);
  CHECK(p(0, 1) == 22.0);
  CHECK(p(1, 0) == 43.0);
  CHECK(p(1, 1) == 50.0);
  Matrix t = transpose(x);
  CHECK(t(0, 1) == 3.0);
  Matrix h = 0.5 * x;
  CHECK(h(1, 1) == 2.0);
  CHECK(frobenius_norm(x) == doctest::Approx(std::sqrt(30.0)));
  auto v = matvec(x, {1.0, -1.0});
  CHECK(v[0] == doctest::Approx(-1.0));
  CHECK(v[1] == doctest::Approx(-1.0));
}

TEST_CASE("identity and symmetry checks") {
  Matrix i3 = Matrix::identity(3);
  CHECK(i3(0, 0) == 1.0);
  CHECK(i3(0, 1) == 0.0);
  CHECK(is_symmetric(i3, 0.0));
  Matrix m(2, 2);
  m(0, 1) = 1e-3;
  CHECK(!is_symmetric(m, 1e-6));
  CHECK(is_symmetric(m, 1e-2));
}

TEST_CASE("jacobi on diagonal matrix returns sorted diagonal") {
  Matrix m(3, 3);
  m(0, 0) = 5.0; m(1, 1) = -2.0; m(2, 2) = 1.0;
  EigenResult r = jacobi_eigen(m);
  REQUIRE(r.values.size() == 3);
  CHECK(r.values[0] == doctest::Approx(-2.0));
  CHECK(r.values[1] == doctest::Approx(1.0));
  CHECK(r.values[2] == doctest::Approx(5.0));
}

TEST_CASE("jacobi on known 2x2") {
  // [[2,1],[1,2]] has eigenvalues 1 and 3
  Matrix m(2, 2);
  m(0, 0) = 2; m(0, 1) = 1; m(1, 0) = 1; m(1, 1) = 2;
  EigenResult r = jacobi_eigen(m);
  CHECK(r.values[0] == doctest::Approx(1.0));
  CHECK(r.values[1] == doctest::Approx(3.0));
  CHECK(min_eigenvalue(m) == doctest::Approx(1.0));
  CHECK(max_eigenvalue(m) == doctest::Approx(3.0));
}

TEST_CASE("jacobi reconstruction Q L Q^T on random symmetric matrices") {
  std::mt19937_64 rng(99);
  for (std::size_t n : {2u, 5u, 10u, 25u}) {
    Matrix m = random_symmetric(rng, n);
    EigenResult r = jacobi_eigen(m);
    Matrix L(n, n);
    for (std::size_t i = 0; i < n; ++i) L(i, i) = r.values[i];
    Matrix rec = r.vectors * L * transpose(r.vectors);
    CHECK(frobenius_norm(rec - m) <= 1e-9 * frobenius_norm(m));
    // eigenvalues come out ascending
    for (std::size_t i = 1; i < n; ++i) CHECK(r.values[i] >= r.values[i - 1]);
    // Q is orthogonal
    Matrix qtq = transpose(r.vectors) * r.vectors;
    CHECK(frobenius_norm(qtq - Matrix::identity(n)) <= 1e-10 * double(n));
  }
}

TEST_CASE("spectral norm oracles") {
  // diag(3, -4): largest singular value 4
  Matrix d(2, 2);
  d(0, 0) = 3; d(1, 1) = -4;
  CHECK(spectral_norm(d) == doctest::Approx(4.0));
  // rank-one uv^T has spectral norm |u||v|
  Matrix r1(2, 3);
  double u[] = {1.0, 2.0}, v[] = {2.0, -1.0, 2.0};
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j) r1(i, j) = u[i] * v[j];
  CHECK(spectral_norm(r1) == doctest::Approx(std::sqrt(5.0) * 3.0));
  // rotation matrices have spectral norm 1
  double th = 0.7;
  Matrix rot(2, 2);
  rot(0, 0) = std::cos(th); rot(0, 1) = -std::sin(th);
  rot(1, 0) = std::sin(th); rot(1, 1) = std::cos(th);
  CHECK(spectral_norm(rot) == doctest::Approx(1.0));
}

TEST_CASE("spectral norm is submultiplicative and triangle-bounded (random)") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a(4, 4), b(4, 4);
    for (auto& x : a.a) x = d(rng);
    for (auto& x : b.a) x = d(rng);
    CHECK(spectral_norm(a * b) <= spectral_norm(a) * spectral_norm(b) + 1e-10);
    CHECK(spectral_norm(a + b) <= spectral_norm(a) + spectral_norm(b) + 1e-10);
    CHECK(spectral_norm(a) <= frobenius_norm(a) + 1e-10);
  }
}
