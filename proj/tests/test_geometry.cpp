#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace fsc;
using fsc::test::random_matrix;

namespace {

Matrix explicit_projector(const Matrix& u) { return u * (u.transpose() * u).inverse() * u.transpose(); }

}  // namespace

TEST(Orthonormalize, CanonicalCases) {
  Matrix b(2, 1);
  b << 2, 0;
  Matrix q = orthonormalize(b);
  EXPECT_NEAR(q(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(q(1, 0), 0.0, 1e-15);
  EXPECT_LE((orthonormalize(Matrix::Identity(3, 3)) - Matrix::Identity(3, 3)).norm(), 1e-15);
}

TEST(Orthonormalize, RandomBasisKeepsSpan) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix b = random_matrix(10, 3, s);
    const Matrix q = orthonormalize(b);
    EXPECT_LE((q.transpose() * q - Matrix::Identity(3, 3)).norm(), 1e-12);
    EXPECT_LE((projector(q) - explicit_projector(b)).norm(), 1e-10);
  }
}

TEST(Orthonormalize, RejectsRankDeficient) {
  Matrix b(3, 2);
  b << 1, 2, 1, 2, 1, 2;
  EXPECT_THROW(orthonormalize(b), RankDeficient);
  EXPECT_THROW(orthonormalize(Matrix::Zero(4, 1)), RankDeficient);
}

TEST(Projector, AxisAndOrthonormal) {
  Matrix u(2, 1);
  u << 1, 0;
  Matrix expect(2, 2);
  expect << 1, 0, 0, 0;
  EXPECT_LE((projector(u) - expect).norm(), 1e-15);
  const Matrix q = orthonormalize(random_matrix(7, 3, 4));
  EXPECT_LE((projector(q) - q * q.transpose()).norm(), 1e-12);
  EXPECT_NEAR(projector(q).trace(), 3.0, 1e-8);
}

TEST(Projector, IdempotentSymmetricAndFixesSpan) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix u = random_matrix(8, 2, s);
    const Matrix p = projector(u);
    EXPECT_LE((p * p - p).norm(), 1e-8 * 8);
    EXPECT_LE((p - p.transpose()).norm(), 1e-10 * 8);
    EXPECT_NEAR(p.trace(), 2.0, 1e-6);
    const Vector x = u * random_matrix(2, 1, s + 100);
    EXPECT_LE((p * x - x).norm(), 1e-10 * x.norm());
  }
}

TEST(Projector, ReparameterizationInvariant) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix u = random_matrix(9, 3, s);
    const Matrix a = random_matrix(3, 3, s + 50) + 3.0 * Matrix::Identity(3, 3);
    EXPECT_LE((projector(u) - projector(u * a)).norm(), 1e-8);
  }
}

TEST(Projector, RidgeShrinksTowardZero) {
  const Matrix u = orthonormalize(random_matrix(6, 2, 1));
  const Matrix p = projector(u, 1.0);
  EXPECT_LE((p - 0.5 * u * u.transpose()).norm(), 1e-12);
  EXPECT_THROW(projector(u, -1.0), InvalidParams);
}

TEST(SuggestedRidge, OnlyWhenIllConditioned) {
  EXPECT_EQ(suggested_ridge(Matrix::Identity(3, 3)), 0.0);
  Matrix g = Matrix::Identity(2, 2);
  g(1, 1) = 1e-14;
  EXPECT_NEAR(suggested_ridge(g), 1e-10 * g.trace() / 2.0, 1e-24);
}

TEST(RestrictedProjector, Examples) {
  Matrix e1 = Matrix::Zero(3, 1);
  e1(0, 0) = 1.0;
  Matrix expect(2, 2);
  expect << 1, 0, 0, 0;
  EXPECT_LE((restricted_projector(e1, {0, 1}) - expect).norm(), 1e-15);

  const Matrix u = random_matrix(10, 2, 3);
  ObservationPattern all(10);
  for (Index i = 0; i < 10; ++i) all[static_cast<std::size_t>(i)] = i;
  EXPECT_LE((restricted_projector(u, all) - projector(u)).cwiseAbs().maxCoeff(), 1e-12);

  const Matrix p = restricted_projector(u, {0, 2, 3, 7, 9});
  EXPECT_LE((p * p - p).norm(), 1e-8 * 5);
}

TEST(RestrictedProjector, TooFewRows) {
  const Matrix u = random_matrix(10, 3, 3);
  try {
    restricted_projector(u, {1, 4});
    FAIL() << "expected InsufficientObservations";
  } catch (const InsufficientObservations& e) {
    EXPECT_EQ(e.observed(), 2);
    EXPECT_EQ(e.required(), 3);
  }
  EXPECT_THROW(restricted_projector(u, {4, 1, 2}), InvalidParams);
  EXPECT_THROW(restricted_projector(u, {1, 2, 10}), InvalidParams);
}

TEST(ProjectorDistance, Examples) {
  const Matrix u = random_matrix(5, 2, 9);
  EXPECT_NEAR(projector_distance(u, u), 0.0, 1e-12);
  Matrix e1(2, 1), e2(2, 1);
  e1 << 1, 0;
  e2 << 0, 1;
  EXPECT_NEAR(projector_distance(e1, e2), 2.0, 1e-15);
  EXPECT_THROW(projector_distance(random_matrix(4, 1, 1), random_matrix(5, 1, 1)), DimensionMismatch);
}

TEST(ProjectorDistance, TwoFormulasAgree) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Matrix a = random_matrix(12, 3, s);
    const Matrix b = random_matrix(12, 3, s + 1000);
    const double explicit_value = (explicit_projector(a) - explicit_projector(b)).squaredNorm();
    const Matrix qa = orthonormalize(a);
    const Matrix qb = orthonormalize(b);
    EXPECT_NEAR(projector_distance(a, b), explicit_value, 1e-10);
    EXPECT_NEAR(6.0 - 2.0 * (qa.transpose() * qb).squaredNorm(), explicit_value, 1e-10);
    EXPECT_NEAR(projector_distance(a, b), projector_distance(b, a), 1e-14);
  }
}

TEST(ProjectorDistance, TriangleInequalityOnRoot) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Matrix a = random_matrix(6, 2, s), b = random_matrix(6, 2, s + 1), c = random_matrix(6, 2, s + 2);
    const double ab = std::sqrt(projector_distance(a, b));
    const double bc = std::sqrt(projector_distance(b, c));
    const double ac = std::sqrt(projector_distance(a, c));
    EXPECT_LE(ac, ab + bc + 1e-8);
  }
}
