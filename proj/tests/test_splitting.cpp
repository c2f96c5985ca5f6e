#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "relbal/error.hpp"
#include "relbal/splitting.hpp"

using namespace relbal;

namespace {

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return k;
}

InnerProduct diagonal_ip(const RVector& d, SplittingPtr sp) {
  return InnerProduct(d.cast<Complex>().asDiagonal().toDenseMatrix(), std::move(sp));
}

struct Pair {
  PolarizedModel model, first, second;
  SplittingPtr sp, sp1, sp2;
};

Pair pair(FactorDescriptor a, FactorDescriptor b, const TorusSelection& torus) {
  auto model = PolarizedModel::build({a, b});
  auto first = model.factor_model(0), second = model.factor_model(1);
  auto sp = splitting_for(model, torus);
  auto sp1 = splitting_for(first, torus.restrict_to_factor(0));
  auto sp2 = splitting_for(second, torus.restrict_to_factor(1));
  return {std::move(model), std::move(first), std::move(second), sp, sp1, sp2};
}

}  // namespace

TEST(Tensor, IdentityAndDiagonal) {
  const auto p = pair({1, 1}, {1, 2}, TorusSelection::maximal());
  const auto id = tensor(InnerProduct::identity(p.sp1), InnerProduct::identity(p.sp2));
  EXPECT_LT((id.matrix() - CMatrix::Identity(6, 6)).norm(), 1e-15);
  const RVector a{{2.0, 0.5}}, b{{1.0, 3.0, 0.25}};
  const auto t = tensor(diagonal_ip(a, p.sp1), diagonal_ip(b, p.sp2));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(t.matrix()(3 * i + j, 3 * i + j).real(), a(i) * b(j), 1e-15);
  EXPECT_TRUE(*t.splitting() == *p.sp);
}

TEST(Tensor, MatchesKroneckerOracle) {
  const auto p = pair({1, 2}, {1, 1}, TorusSelection::trivial());
  const auto m1 = random_start(p.sp1, Group::full_SL, 1), m2 = random_start(p.sp2, Group::full_SL, 2);
  EXPECT_LT((tensor(m1, m2).matrix() - kron(m1.matrix(), m2.matrix())).norm(), 1e-14);
}

TEST(Tensor, FubiniStudyProductIsBalanced) {
  const auto p = pair({1, 2}, {1, 3}, TorusSelection::maximal());
  const auto grid = make_grid(p.model, 1, TorusSelection::maximal());
  const auto m = tensor(diagonal_ip(oracle::p1_balanced_diagonal(2), p.sp1),
                        diagonal_ip(oracle::p1_balanced_diagonal(3), p.sp2));
  EXPECT_LT(balanced_residual(m, grid, IndexVector::ones(p.sp->block_count())), 1e-9);
}

TEST(NearestKronecker, ExactProductsAreRecovered) {
  const CMatrix a = oracle::random_hpd(3, 1), b = oracle::random_hpd(4, 2);
  const auto w = nearest_kronecker(kron(a, b), 3, 4);
  EXPECT_LT(w.residual, 1e-12);
  EXPECT_NEAR(std::log(w.first.determinant().real()), 0.0, 1e-12);
  EXPECT_LT((kron(w.first, w.second) - kron(a, b)).norm() / kron(a, b).norm(), 1e-12);
  EXPECT_LT((w.first - w.first.adjoint()).norm(), 1e-14);
}

TEST(NearestKronecker, PerturbationIsDetected) {
  for (double eps : {1e-6, 1e-3}) {
    const CMatrix m = kron(oracle::random_hpd(3, 5), oracle::random_hpd(4, 6));
    CMatrix e = oracle::random_hpd(12, 7) - CMatrix::Identity(12, 12);
    e *= eps * m.norm() / e.norm();
    const auto w = nearest_kronecker(m + e, 3, 4);
    EXPECT_GE(w.residual, 0.5 * eps) << eps;
    EXPECT_LE(w.residual, 2.0 * eps) << eps;
  }
}

TEST(NearestKronecker, GeodesicsBetweenProductsStayProducts) {
  const auto p = pair({1, 1}, {1, 2}, TorusSelection::trivial());
  const auto a = tensor(random_start(p.sp1, Group::full_SL, 1), random_start(p.sp2, Group::full_SL, 2), p.sp);
  const auto b = tensor(random_start(p.sp1, Group::full_SL, 3), random_start(p.sp2, Group::full_SL, 4), p.sp);
  const auto seg = geodesic(a, b);
  for (int i = 1; i < 10; ++i) EXPECT_LT(nearest_kronecker(seg.eval(0.1 * i), p.model).residual, 1e-10) << i;
}

TEST(DistanceCheck, PythagoreanWithSectionCountCoefficients) {
  const auto p = pair({1, 2}, {1, 1}, TorusSelection::trivial());
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto m1 = random_start(p.sp1, Group::full_SL, 10 + 4 * s), m1p = random_start(p.sp1, Group::full_SL, 11 + 4 * s);
    const auto m2 = random_start(p.sp2, Group::full_SL, 12 + 4 * s), m2p = random_start(p.sp2, Group::full_SL, 13 + 4 * s);
    const auto r = product_distance_check(m1, m1p, m2, m2p);
    EXPECT_EQ(r.coefficient1, 2);
    EXPECT_EQ(r.coefficient2, 3);
    EXPECT_NEAR(r.lhs, r.rhs, 1e-10);
    const double brute = oracle::double_sum(geodesic(m1, m1p).gamma, geodesic(m2, m2p).gamma);
    EXPECT_NEAR(r.lhs, brute, 1e-10);
  }
}

TEST(DistanceCheck, OneFactorFixed) {
  const auto p = pair({1, 1}, {1, 3}, TorusSelection::trivial());
  const auto m1 = random_start(p.sp1, Group::full_SL, 1);
  const auto m2 = random_start(p.sp2, Group::full_SL, 2), m2p = random_start(p.sp2, Group::full_SL, 3);
  const auto r = product_distance_check(m1, m1, m2, m2p);
  EXPECT_NEAR(r.d1, 0.0, 1e-12);
  EXPECT_NEAR(r.lhs, 2.0 * r.d2 * r.d2, 1e-10);
}

TEST(Splitting, FactorDerivativeScalesByOtherVolume) {
  const auto p = pair({1, 2}, {1, 1}, TorusSelection::maximal());
  const auto grid = make_grid(p.model, 1, TorusSelection::maximal());
  const auto grid1 = make_grid(p.first, 1, TorusSelection::maximal());
  const auto m1 = diagonal_ip(RVector{{1.3, 0.4, 2.0}}, p.sp1);
  const auto m2 = random_start(p.sp2, Group::full_SL, 3);
  const RVector g1{{0.6, -0.1, -0.5}};
  const CMatrix d1 = g1.cast<Complex>().asDiagonal();
  const CMatrix d = kron(d1, CMatrix::Identity(2, 2));
  const double product = d_prime(geodesic_from_direction(tensor(m1, m2), d), 0.0, grid);
  const double factor = d_prime(geodesic_from_direction(m1, d1), 0.0, grid1);
  EXPECT_GT(std::abs(factor), 1e-3);
  EXPECT_NEAR(product, p.second.vol_reference() * factor, 1e-9);
}

TEST(VerifySplitting, MaximalTorusPassesEveryStage) {
  const auto model = PolarizedModel::build({{1, 1}, {1, 2}});
  SplitConfig cfg;
  cfg.torus = TorusSelection::maximal();
  cfg.solve.anderson = 5;
  const auto report = verify_splitting(model, cfg);
  for (const auto& s : report.stages) EXPECT_TRUE(s.passed) << s.name << " " << s.value << " " << s.note;
  EXPECT_TRUE(report.passed) << report.failed_stage;
  EXPECT_EQ(report.stages.size(), 8u);
  EXPECT_LT(report.witness.mixed_hessian, 1e-6);
}

TEST(VerifySplitting, UnresolvedToleranceFailsTheAccuracyStage) {
  const auto model = PolarizedModel::build({{1, 1}, {1, 1}});
  SplitConfig cfg;
  cfg.torus = TorusSelection::trivial();
  cfg.solve.anderson = 5;
  cfg.solve.tolerance = 1e-12;
  const auto report = verify_splitting(model, cfg);
  EXPECT_FALSE(report.passed);
  EXPECT_EQ(report.failed_stage, "accuracy");
}

TEST(VerifySplitting, RequiresTwoFactors) {
  SplitConfig cfg;
  try {
    verify_splitting(PolarizedModel::build({{1, 2}}), cfg);
    ADD_FAILURE() << "no error thrown";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::precondition);
  }
}
