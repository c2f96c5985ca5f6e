#include <gtest/gtest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "relbal/balance_solver.hpp"
#include "relbal/error.hpp"
#include "relbal/hermitian_space.hpp"

using namespace relbal;

namespace {

SplittingPtr one_block(int n) { return splitting_from_weights(std::vector<std::vector<int>>(n)); }

double rel(const CMatrix& a, const CMatrix& b) { return (a - b).norm() / b.norm(); }

InnerProduct random_ip(const SplittingPtr& sp, std::uint64_t seed, Group g = Group::full_SL) {
  return random_start(sp, g, seed, 1.0);
}

}  // namespace

TEST(Splitting, MaximalAndTrivialTorusOnP1) {
  const auto m = PolarizedModel::build({{1, 2}});
  const auto maximal = splitting_for(m, TorusSelection::maximal());
  EXPECT_EQ(maximal->block_count(), 3);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(maximal->block_size(k), 1);
  const auto trivial = splitting_for(m, TorusSelection::trivial());
  EXPECT_EQ(trivial->block_count(), 1);
  EXPECT_EQ(trivial->block_size(0), 3);
}

TEST(Splitting, FirstFactorTorusOnProduct) {
  const auto m = PolarizedModel::build({{1, 1}, {1, 1}});
  const auto sp = splitting_for(m, TorusSelection::of_factors({0}));
  ASSERT_EQ(sp->block_count(), 2);
  EXPECT_EQ(sp->block_size(0), 2);
  EXPECT_EQ(sp->block_size(1), 2);
  EXPECT_LT(sp->block(0).weight, sp->block(1).weight);
}

TEST(AdmissibleBasis, IdentityAndDiagonal) {
  const auto sp = one_block(2);
  const CMatrix s = admissible_orthonormal_basis(InnerProduct::identity(sp));
  EXPECT_LT((s * s.adjoint() - CMatrix::Identity(2, 2)).norm(), 1e-14);
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 4.0, d(1, 1) = 1.0;
  const InnerProduct m(d, sp);
  const CMatrix s2 = admissible_orthonormal_basis(m);
  EXPECT_LT((s2.adjoint() * d * s2 - CMatrix::Identity(2, 2)).norm(), 1e-14);
  EXPECT_NEAR(std::abs(s2(0, 0)), 0.5, 1e-14);
  EXPECT_NEAR(std::abs(s2(1, 1)), 1.0, 1e-14);
}

TEST(AdmissibleBasis, RandomMatrixWithIndex) {
  const auto model = PolarizedModel::build({{1, 1}});
  const auto sp = splitting_for(model, TorusSelection::maximal());
  const InnerProduct m(oracle::random_hpd(2, 3), sp);
  IndexVector b{RVector(2)};
  b.b << 1.3, 0.7;
  b.validate(*sp);
  const CMatrix s = admissible_normal_basis(m, b);
  CMatrix target = CMatrix::Zero(2, 2);
  target(0, 0) = 1.3, target(1, 1) = 0.7;
  EXPECT_LT((s.adjoint() * m.matrix() * s - target).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(s(0, 1), Complex(0.0));
}

TEST(AdmissibleBasis, RejectsIndefinite) {
  CMatrix d = CMatrix::Identity(2, 2);
  d(1, 1) = -1.0;
  try {
    InnerProduct m(d, one_block(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::definiteness);
  }
}

TEST(InnerProductType, OffBlockEntriesZeroed) {
  const auto model = PolarizedModel::build({{1, 2}});
  const auto sp = splitting_for(model, TorusSelection::maximal());
  const InnerProduct m(oracle::random_hpd(3, 5, 0.3), sp);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) EXPECT_EQ(m.matrix()(i, j), Complex(0.0));
}

TEST(Geodesic, EndpointsAndConstantSegment) {
  const auto sp = one_block(3);
  const InnerProduct a = random_ip(sp, 1), b = random_ip(sp, 2);
  const GeodesicSegment seg = geodesic(a, b);
  EXPECT_LT(rel(seg.eval(0.0).matrix(), a.matrix()), 1e-10);
  EXPECT_LT(rel(seg.eval(1.0).matrix(), b.matrix()), 1e-10);
  const GeodesicSegment same = geodesic(a, a);
  EXPECT_LT(same.gamma.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(rel(same.eval(0.4).matrix(), a.matrix()), 1e-12);
}

TEST(Geodesic, ExplicitOneParameterSubgroup) {
  const double a = 0.37;
  const auto sp = one_block(2);
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = std::exp(-2 * a), d(1, 1) = std::exp(2 * a);
  const GeodesicSegment seg = geodesic(InnerProduct::identity(sp), InnerProduct(d, sp));
  RVector g = seg.gamma;
  std::sort(g.data(), g.data() + g.size());
  EXPECT_NEAR(g(0), -a, 1e-14);
  EXPECT_NEAR(g(1), a, 1e-14);
  EXPECT_NEAR(seg.length, a * std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(distance(InnerProduct::identity(sp), InnerProduct(d, sp)), a * std::sqrt(2.0), 1e-14);
}

TEST(Geodesic, MidpointIsGeometricMean) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto sp = one_block(4);
    const InnerProduct a = random_ip(sp, seed), b = random_ip(sp, seed + 100);
    const CMatrix mid = geodesic(a, b).eval(0.5).matrix();
    EXPECT_LT(rel(mid, oracle::geometric_mean(a.matrix(), b.matrix())), 1e-9);
  }
}

TEST(Geodesic, OrbitMismatchRejected) {
  const auto sp = one_block(2);
  const InnerProduct a = InnerProduct::identity(sp);
  try {
    geodesic(a, a.scaled(2.0), Group::full_SL);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::orbit);
  }
}

TEST(Geodesic, StaysBlockDiagonalAndDefinite) {
  const auto model = PolarizedModel::build({{1, 1}, {1, 1}});
  const auto sp = splitting_for(model, TorusSelection::of_factors({0}));
  const InnerProduct a = random_ip(sp, 7), b = random_ip(sp, 8);
  const GeodesicSegment seg = geodesic(a, b);
  for (double t = 0.0; t <= 1.0; t += 0.1) {
    const CMatrix m = seg.eval(t).matrix();
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (sp->block_of(i) != sp->block_of(j)) EXPECT_EQ(m(i, j), Complex(0.0));
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<CMatrix>(m).eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Distance, SymmetryTriangleAndIsometry) {
  const auto sp = one_block(3);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const InnerProduct a = random_ip(sp, seed), b = random_ip(sp, seed + 50), c = random_ip(sp, seed + 90);
    EXPECT_NEAR(distance(a, a), 0.0, 1e-12);
    EXPECT_NEAR(distance(a, b), distance(b, a), 1e-12);
    EXPECT_LE(distance(a, c), distance(a, b) + distance(b, c) + 1e-9);
    const CMatrix u = oracle::random_unitary(3, seed);
    const InnerProduct ua(u.adjoint() * a.matrix() * u, sp), ub(u.adjoint() * b.matrix() * u, sp);
    EXPECT_NEAR(distance(ua, ub), distance(a, b), 1e-10);
  }
}

TEST(RiemannianInner, TraceIdentities) {
  const auto sp = one_block(3);
  const InnerProduct m = random_ip(sp, 11);
  EXPECT_NEAR(riemannian_inner(m.matrix(), m.matrix(), m), 3.0, 1e-12);
  const auto sp2 = one_block(2);
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = 1.0, d(1, 1) = -1.0;
  EXPECT_NEAR(riemannian_inner(d, d, InnerProduct::identity(sp2)), 2.0, 1e-14);
}

TEST(RiemannianInner, ConstantSpeedAlongGeodesic) {
  // distance² from the start grows as t² L², so its second derivative is 2 L²; the matrix
  // itself moves with exponent −2tγ, so the trace form measures speed 2L
  const auto sp = one_block(3);
  const InnerProduct a = random_ip(sp, 21), b = random_ip(sp, 22);
  const GeodesicSegment seg = geodesic(a, b);
  const double h = 1e-3;
  for (double t : {0.3, 0.6}) {
    auto d2 = [&](double s) { return std::pow(distance(a, seg.eval(s)), 2); };
    const double second = (d2(t + h) - 2 * d2(t) + d2(t - h)) / (h * h);
    EXPECT_NEAR(second, 2 * seg.length * seg.length, 1e-6);
    const CMatrix vel = (seg.eval(t + h).matrix() - seg.eval(t - h).matrix()) / (2 * h);
    EXPECT_NEAR(std::sqrt(riemannian_inner(vel, vel, seg.eval(t))), 2 * seg.length, 1e-6);
  }
}

TEST(OrbitProject, ScalarMultipleOfIdentity) {
  const auto sp = one_block(3);
  const InnerProduct m = orbit_project(InnerProduct::identity(sp).scaled(5.0), Group::full_SL);
  EXPECT_LT((m.matrix() - CMatrix::Identity(3, 3)).norm(), 1e-13);
}

TEST(OrbitProject, TwoBlockTorusConstraint) {
  // ν=2, n=(1,1), w=(−1,+1), block dets (e², e²): Σ L = 4, Σ w L = 0 → both dets 1
  const auto model = PolarizedModel::build({{1, 1}});
  const auto sp = splitting_for(model, TorusSelection::maximal());
  CMatrix d = CMatrix::Zero(2, 2);
  d(0, 0) = std::exp(2.0), d(1, 1) = std::exp(2.0);
  const InnerProduct m = orbit_project(InnerProduct(d, sp), Group::G_c_Tperp);
  EXPECT_NEAR(m.matrix()(0, 0).real(), 1.0, 1e-13);
  EXPECT_NEAR(m.matrix()(1, 1).real(), 1.0, 1e-13);
}

TEST(OrbitProject, IdempotentAndShapePreserving) {
  const auto model = PolarizedModel::build({{1, 1}, {1, 2}});
  const auto sp = splitting_for(model, TorusSelection::of_factors({0}));
  for (Group g : {Group::full_SL, Group::G_c, Group::G_c_Tperp}) {
    const InnerProduct m(oracle::random_hpd(6, 31, 1.5), sp);
    const InnerProduct p = orbit_project(m, g);
    EXPECT_LT(rel(orbit_project(p, g).matrix(), p.matrix()), 1e-13);
    EXPECT_LT(orbit_residual(p, p, g), 1e-12);
    for (int k = 0; k < sp->block_count(); ++k) {
      const double n = sp->block_size(k);
      const CMatrix a = m.block(k) / std::exp(m.block_logdets()(k) / n);
      const CMatrix b = p.block(k) / std::exp(p.block_logdets()(k) / n);
      EXPECT_LT(rel(b, a), 1e-12);
    }
  }
}

TEST(InnerProductJson, RoundTripIsBitFaithful) {
  const auto model = PolarizedModel::build({{1, 1}, {1, 2}});
  const auto sp = splitting_for(model, TorusSelection::of_factors({1}));
  const InnerProduct m(oracle::random_hpd(6, 41, 2.0), sp);
  const std::string text = to_json(m).dump();
  const InnerProduct back = inner_product_from_json(nlohmann::json::parse(text));
  EXPECT_EQ(back.matrix(), m.matrix());
  EXPECT_TRUE(*back.splitting() == *m.splitting());
}
