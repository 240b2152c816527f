#include <cmath>
#include <random>

#include "doctest.h"
#include "latte/error.hpp"
#include "latte/proximity.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace latte;

namespace {

SparseMatrix sparse(const Matrix& m) { return m.sparseView(); }

}  // namespace

TEST_CASE("normalize") {
  SUBCASE("two nodes") {
    Matrix a(2, 2);
    a << 0, 1, 1, 0;
    CHECK(Matrix(normalize(sparse(a))) == a);
  }
  SUBCASE("star centre") {
    Matrix a(3, 3);
    a << 0, 1, 1,
         1, 0, 0,
         1, 0, 0;
    const Matrix b(normalize(sparse(a)));
    CHECK(b(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
    CHECK(b(2, 0) == doctest::Approx(0.7071067811865476).epsilon(1e-12));
  }
  SUBCASE("isolated node row is zero") {
    Matrix a = Matrix::Zero(3, 3);
    a(0, 1) = a(1, 0) = 1.0;
    const Matrix b(normalize(sparse(a)));
    CHECK(b.row(2).isZero());
    CHECK(b.col(2).isZero());
  }
  SUBCASE("asymmetric input is rejected") {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 1) = 1.0;
    CHECK_THROWS_AS(normalize(sparse(a)), ShapeError);
  }
  SUBCASE("non-square input is rejected") { CHECK_THROWS_AS(normalize(SparseMatrix(2, 3)), ShapeError); }
}

TEST_CASE("power stack") {
  SUBCASE("identity stays identity") {
    const ProximityStack s = power_stack(sparse(Matrix::Identity(4, 4)), 5);
    for (const Matrix& p : s.powers()) CHECK(p == Matrix::Identity(4, 4));
  }
  SUBCASE("two-cycle oscillates") {
    Matrix b(2, 2);
    b << 0, 1, 1, 0;
    const ProximityStack s = power_stack(sparse(b), 3);
    CHECK(s.power(2) == Matrix::Identity(2, 2));
    CHECK(s.power(3) == b);
  }
  SUBCASE("order cap below one is rejected") { CHECK_THROWS_AS(power_stack(sparse(Matrix::Identity(2, 2)), 0), ShapeError); }
  SUBCASE("order outside the stack is rejected") {
    const ProximityStack s = power_stack(sparse(Matrix::Identity(2, 2)), 2);
    CHECK_THROWS_AS(s.power(3), ShapeError);
    CHECK_THROWS_AS(s.power(0), ShapeError);
  }
  SUBCASE("fourth power equals the squared second power") {
    std::mt19937_64 rng(11);
    const ProximityStack s = power_stack(normalize(testing::random_adjacency(12, 25, rng)), 4);
    CHECK((s.power(4) - s.power(2) * s.power(2)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("global proximity") {
  SUBCASE("order one is B") {
    Matrix a(2, 2);
    a << 0, 1, 1, 0;
    const ProximityStack s = power_stack(normalize(sparse(a)), 1);
    CHECK(global_proximity(s) == Matrix(s.transition()));
  }
  SUBCASE("path graph reaches two hops") {
    Matrix a = Matrix::Zero(4, 4);
    for (int i = 0; i < 3; ++i) a(i, i + 1) = a(i + 1, i) = 1.0;
    const Matrix p = global_proximity(power_stack(normalize(sparse(a)), 2));
    CHECK(p(0, 2) > 0.0);
    CHECK(p(1, 3) > 0.0);
  }
  SUBCASE("components stay separate") {
    Matrix a = Matrix::Zero(5, 5);
    a(0, 1) = a(1, 0) = 1.0;
    a(2, 3) = a(3, 2) = a(3, 4) = a(4, 3) = 1.0;
    const ProximityStack s = power_stack(normalize(sparse(a)), 6);
    for (const Matrix& p : s.powers()) {
      CHECK(p.topRightCorner(2, 3).isZero(0.0));
      CHECK(p.bottomLeftCorner(3, 2).isZero(0.0));
    }
  }
}

TEST_CASE("proximity algebra on a seeded family of small graphs") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const int edges = static_cast<int>(rng() % 13);
    const SparseMatrix a = testing::random_adjacency(n, edges, rng);
    const Matrix dense_a(a);
    const ProximityStack s = power_stack(normalize(a), 4);
    CHECK(testing::spectral_radius(Matrix(s.transition()), rng) <= 1.0 + 1e-9);
    for (std::size_t m = 1; m <= s.max_order(); ++m) {
      const Matrix& p = s.power(m);
      CHECK((p - p.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((p.array() >= 0.0).all());
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) CHECK((p(i, j) > 0.0) == testing::walk_exists(dense_a, i, j, static_cast<int>(m)));
    }
    CHECK((s.power(4) - s.power(2) * s.power(2)).cwiseAbs().maxCoeff() < 1e-12);
  }
}
