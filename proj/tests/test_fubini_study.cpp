#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "relbal/balance_solver.hpp"
#include "relbal/error.hpp"
#include "relbal/fubini_study.hpp"
#include "relbal/splitting.hpp"

using namespace relbal;

namespace {

InnerProduct p1_balanced(const PolarizedModel& model, const TorusSelection& torus) {
  const RVector d = oracle::p1_balanced_diagonal(model.factors()[0].k);
  return InnerProduct(d.cast<Complex>().asDiagonal().toDenseMatrix(), splitting_for(model, torus));
}

double oracle_density(const InnerProduct& m, const PolarizedModel& model, const std::vector<Complex>& z) {
  const CMatrix mm = m.matrix();
  const CMatrix h = oracle::fd_log_hessian([&](const std::vector<Complex>& w) {
    return oracle::flat_kernel(mm, model, w);
  }, z);
  return h.determinant().real();
}

}  // namespace

TEST(HsDensity, ConstantOneForBalancedFubiniStudy) {
  for (int k : {1, 2, 5}) {
    const auto model = PolarizedModel::build({{1, k}});
    const auto m = p1_balanced(model, TorusSelection::maximal());
    for (Complex z : {Complex(0.0, 0.0), Complex(0.3, -1.2), Complex(4.0, 2.0)})
      EXPECT_NEAR(h_s_density(m, model, ChartPoint::dense({z})), 1.0, 1e-12) << "k=" << k;
  }
}

TEST(HsDensity, ScalesWithTheInnerProduct) {
  const auto model = PolarizedModel::build({{1, 3}});
  const auto m = random_start(splitting_for(model, TorusSelection::trivial()), Group::full_SL, 5);
  const auto p = ChartPoint::dense({Complex(0.7, 0.2)});
  EXPECT_NEAR(h_s_density(m.scaled(3.0), model, p) / h_s_density(m, model, p), 3.0, 1e-12);
}

TEST(HsDensity, MatchesFlatKernelOracle) {
  const auto model = PolarizedModel::build({{2, 2}});
  const auto m = random_start(splitting_for(model, TorusSelection::trivial()), Group::full_SL, 9);
  const std::vector<Complex> z{Complex(0.4, 0.1), Complex(-0.8, 0.5)};
  const double h = std::pow(1.0 + std::norm(z[0]) + std::norm(z[1]), -2);
  const double expected = 1.0 / (oracle::flat_kernel(m.matrix(), model, z) * h);
  EXPECT_NEAR(h_s_density(m, model, ChartPoint::dense(z)) / expected, 1.0, 1e-12);
}

TEST(HsDensity, UnderflowIsReported) {
  const auto model = PolarizedModel::build({{1, 4}});
  const auto m = p1_balanced(model, TorusSelection::maximal());
  EXPECT_THROW(
      {
        try {
          h_s_density(m, model, ChartPoint::dense({Complex(1e200, 0.0)}));
        } catch (const Error& e) {
          EXPECT_EQ(e.kind(), ErrorKind::evaluation);
          throw;
        }
      },
      Error);
}

TEST(FsVolume, BalancedFubiniStudyReproducesReferenceDensity) {
  for (int k : {1, 3, 6}) {
    const auto model = PolarizedModel::build({{1, k}});
    const auto grid = make_grid(model, 1, TorusSelection::maximal());
    const auto vol = fs_volume(p1_balanced(model, TorusSelection::maximal()), grid);
    for (std::size_t p = 0; p < grid.size(); ++p)
      ASSERT_NEAR(vol.density[p] / grid.reference_density(p), 1.0, 1e-9) << "k=" << k << " p=" << p;
    EXPECT_NEAR(vol.volume / model.vol_reference(), 1.0, 1e-8);
  }
}

TEST(FsVolume, InvariantUnderScaling) {
  const auto model = PolarizedModel::build({{1, 2}});
  const auto grid = make_grid(model, 2);
  const auto m = random_start(splitting_for(model, TorusSelection::trivial()), Group::full_SL, 3);
  const auto a = fs_volume(m, grid), b = fs_volume(m.scaled(7.5), grid);
  for (std::size_t p = 0; p < grid.size(); ++p) ASSERT_NEAR(a.density[p] / b.density[p], 1.0, 1e-12);
}

TEST(FsVolume, VolumeIsTopologicalForRandomMetrics) {
  struct Case {
    std::vector<FactorDescriptor> factors;
    TorusSelection torus;
  };
  const std::vector<Case> cases{{{{1, 3}}, TorusSelection::trivial()},
                                {{{2, 1}}, TorusSelection::maximal()},
                                {{{2, 2}}, TorusSelection::maximal()},
                                {{{1, 1}, {1, 2}}, TorusSelection::maximal()}};
  for (const auto& c : cases) {
    const auto model = PolarizedModel::build(c.factors);
    const auto grid = make_grid(model, grid_level_for(model, c.torus), c.torus);
    for (std::uint64_t seed : {1u, 2u}) {
      const auto m = random_start(splitting_for(model, c.torus), Group::full_SL, seed);
      EXPECT_NEAR(fs_volume(m, grid).volume / model.vol_reference(), 1.0, 1e-8)
          << c.torus.describe() << " seed " << seed << " factors " << c.factors.size();
    }
  }
}

TEST(KernelField, DensityMatchesFiniteDifferenceHessian) {
  struct Case {
    std::vector<FactorDescriptor> factors;
    TorusSelection torus;
  };
  const std::vector<Case> cases{{{{1, 3}}, TorusSelection::trivial()},
                                {{{2, 2}}, TorusSelection::trivial()},
                                {{{1, 1}, {2, 1}}, TorusSelection::maximal()}};
  for (const auto& c : cases) {
    const auto model = PolarizedModel::build(c.factors);
    const auto grid = make_grid(model, 1, c.torus);
    const auto m = random_start(splitting_for(model, c.torus), Group::full_SL, 17);
    const auto field = kernel_field(m, grid);
    // finite differences lose accuracy where log K flattens out, so sample moderate points
    int checked = 0;
    for (std::size_t p = 0; p < grid.size() && checked < 6; p += 13) {
      const auto z = grid.point(p).coords;
      if (std::any_of(z.begin(), z.end(), [](Complex c) { return std::abs(c) < 0.2 || std::abs(c) > 3.0; })) continue;
      const double expected = oracle_density(m, model, z);
      EXPECT_NEAR(field[p].density / expected, 1.0, 1e-6) << "point " << p;
      ++checked;
    }
    EXPECT_EQ(checked, 6);
  }
}

TEST(KernelField, ProductMetricHasProductDensityAndNoMixedTerms) {
  const auto model = PolarizedModel::build({{1, 1}, {1, 2}});
  const auto grid = make_grid(model, 1);
  const auto f1 = model.factor_model(0), f2 = model.factor_model(1);
  const auto m1 = random_start(splitting_for(f1, TorusSelection::trivial()), Group::full_SL, 2);
  const auto m2 = random_start(splitting_for(f2, TorusSelection::trivial()), Group::full_SL, 3);
  const auto m = tensor(m1, m2);
  const auto field = kernel_field(m, grid);
  const auto d1 = fs_volume(m1, make_grid(f1, 1)).density;
  const auto d2 = fs_volume(m2, make_grid(f2, 1)).density;
  std::vector<std::size_t> idx;
  double mixed = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    grid.unflatten(p, idx);
    ASSERT_NEAR(field[p].density / (d1[idx[0]] * d2[idx[1]]), 1.0, 1e-10);
    mixed = std::max(mixed, field[p].mixed);
  }
  EXPECT_LT(mixed, 1e-12);
  EXPECT_LT(mixed_hessian_max(m, grid), 1e-12);
}

TEST(KernelField, NonProductMetricHasMixedTerms) {
  const auto model = PolarizedModel::build({{1, 1}, {1, 1}});
  const auto grid = make_grid(model, 1);
  const auto m = random_start(splitting_for(model, TorusSelection::trivial()), Group::full_SL, 4);
  EXPECT_GT(mixed_hessian_max(m, grid), 1e-3);
}

TEST(L2Gram, TraceIsTheVolume) {
  const auto model = PolarizedModel::build({{1, 3}});
  const auto torus = TorusSelection::trivial();
  const auto grid = make_grid(model, grid_level_for(model, torus), torus);
  const auto m = random_start(splitting_for(model, torus), Group::full_SL, 8);
  const auto g = l2_gram_orthonormal(m, grid);
  EXPECT_NEAR(g.gram.trace().real() / model.vol_reference(), 1.0, 1e-8);
  EXPECT_NEAR(g.volume / model.vol_reference(), 1.0, 1e-8);
  EXPECT_LT((g.gram - g.gram.adjoint()).norm(), 1e-14);
}

TEST(L2Gram, BalancedFubiniStudyIsScalar) {
  for (int k : {1, 4}) {
    const auto model = PolarizedModel::build({{1, k}});
    const auto torus = TorusSelection::trivial();
    const auto grid = make_grid(model, grid_level_for(model, torus), torus);
    const auto g = l2_gram_orthonormal(p1_balanced(model, torus), grid);
    const double scale = model.vol_reference() / (k + 1);
    EXPECT_LT((g.gram / scale - CMatrix::Identity(k + 1, k + 1)).cwiseAbs().maxCoeff(), 1e-9) << "k=" << k;
  }
}

TEST(L2Gram, TransformsUnderChangeOfBasis) {
  const auto model = PolarizedModel::build({{1, 2}});
  const auto torus = TorusSelection::trivial();
  const auto grid = make_grid(model, grid_level_for(model, torus), torus);
  const auto m = random_start(splitting_for(model, torus), Group::full_SL, 6);
  const auto g = l2_gram_orthonormal(m, grid);
  const CMatrix u = oracle::random_unitary(3, 12);
  const auto moved = l2_gram_in_basis(g.basis * u, *m.splitting(), grid);
  EXPECT_LT((moved.gram - u.adjoint() * g.gram * u).norm(), 1e-12);
  EXPECT_NEAR(moved.volume, g.volume, 1e-12);
  const CMatrix monomial = l2_gram(m, grid);
  const CMatrix sinv = g.basis.inverse();
  EXPECT_LT((monomial - sinv.adjoint() * g.gram * sinv).norm(), 1e-12);
}

TEST(L2Gram, OffBlockEntriesVanish) {
  const auto model = PolarizedModel::build({{2, 2}});
  const auto torus = TorusSelection::maximal();
  const auto grid = make_grid(model, 1);
  const auto m = random_start(splitting_for(model, torus), Group::full_SL, 11);
  const auto g = l2_gram_orthonormal(m, grid);
  const auto& sp = *m.splitting();
  for (int i = 0; i < g.gram.rows(); ++i)
    for (int j = 0; j < g.gram.cols(); ++j)
      if (sp.block_of(i) != sp.block_of(j)) EXPECT_EQ(g.gram(i, j), Complex(0.0, 0.0));
}

TEST(L2Gram, CollapsedGridRequiresCompatibleSplitting) {
  const auto model = PolarizedModel::build({{1, 2}});
  const auto grid = make_grid(model, 1, TorusSelection::maximal());
  const auto m = random_start(splitting_for(model, TorusSelection::trivial()), Group::full_SL, 1);
  EXPECT_THROW(
      {
        try {
          fs_volume(m, grid);
        } catch (const Error& e) {
          EXPECT_EQ(e.kind(), ErrorKind::precondition);
          throw;
        }
      },
      Error);
}

TEST(Bergman, ConstantAtBalancedFubiniStudy) {
  for (int k : {1, 3, 10}) {
    const auto model = PolarizedModel::build({{1, k}});
    const auto torus = TorusSelection::maximal();
    const auto grid = make_grid(model, 1, torus);
    const auto m = p1_balanced(model, torus);
    const auto rho = bergman(m, bergman_basis(m, grid), grid);
    const double expected = (k + 1) / model.vol_reference();
    for (double r : rho) ASSERT_NEAR(r / expected, 1.0, 1e-9) << "k=" << k;
  }
}

TEST(Bergman, PerturbedMetricIsNotConstantButIntegratesToDimension) {
  const auto model = PolarizedModel::build({{1, 3}});
  const auto torus = TorusSelection::trivial();
  const auto grid = make_grid(model, grid_level_for(model, torus), torus);
  const auto m0 = p1_balanced(model, torus);
  CMatrix pert = m0.matrix();
  pert(0, 0) *= 1.1;
  pert(3, 3) *= 0.9;
  const InnerProduct m(pert, m0.splitting());
  const auto rho = bergman(m, bergman_basis(m, grid), grid);
  const auto [lo, hi] = std::minmax_element(rho.begin(), rho.end());
  EXPECT_GT(*hi / *lo, 1.0 + 1e-3);
  const auto vol = fs_volume(m, grid);
  double total = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) total += grid.weight(p) * vol.density[p] * rho[p];
  EXPECT_NEAR(total, 4.0, 1e-8);
}

TEST(Bergman, EveryMetricOnTheLineBundleOfDegreeOneIsBalanced) {
  // on P1 with k = 1 each inner product is a projective image of the round one
  const auto model = PolarizedModel::build({{1, 1}});
  const auto torus = TorusSelection::trivial();
  const auto grid = make_grid(model, grid_level_for(model, torus), torus);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto m = random_start(splitting_for(model, torus), Group::full_SL, seed);
    const auto rho = bergman(m, bergman_basis(m, grid), grid);
    const auto [lo, hi] = std::minmax_element(rho.begin(), rho.end());
    EXPECT_LT(*hi / *lo, 1.0 + 1e-9) << "seed " << seed;
  }
}

TEST(Bergman, RejectsBasisThatIsNotOrthonormal) {
  const auto model = PolarizedModel::build({{1, 2}});
  const auto grid = make_grid(model, 1, TorusSelection::maximal());
  const auto m = p1_balanced(model, TorusSelection::maximal());
  const CMatrix b = 2.0 * bergman_basis(m, grid);
  EXPECT_THROW(
      {
        try {
          bergman(m, b, grid);
        } catch (const Error& e) {
          EXPECT_EQ(e.kind(), ErrorKind::precondition);
          throw;
        }
      },
      Error);
}
