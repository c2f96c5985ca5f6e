#include "relbal/splitting.hpp"

#include <chrono>
#include <cmath>
#include <memory>

#include "relbal/error.hpp"

namespace relbal {

namespace {

SplittingPtr product_splitting(const CharacterSplitting& s1, const CharacterSplitting& s2) {
  std::vector<int> w1(s1.dim()), w2(s2.dim());
  std::vector<std::vector<int>> weights;
  weights.reserve(static_cast<std::size_t>(s1.dim()) * s2.dim());
  for (int i = 0; i < s1.dim(); ++i)
    for (int j = 0; j < s2.dim(); ++j) {
      std::vector<int> w = s1.block(s1.block_of(i)).weight;
      const auto& tail = s2.block(s2.block_of(j)).weight;
      w.insert(w.end(), tail.begin(), tail.end());
      weights.push_back(std::move(w));
    }
  return splitting_from_weights(weights);
}

}  // namespace

InnerProduct tensor(const InnerProduct& m1, const InnerProduct& m2) {
  return tensor(m1, m2, product_splitting(*m1.splitting(), *m2.splitting()));
}

InnerProduct tensor(const InnerProduct& m1, const InnerProduct& m2, SplittingPtr splitting) {
  const int n1 = m1.dim(), n2 = m2.dim();
  if (splitting->dim() != n1 * n2) throw Error(ErrorKind::precondition, "splitting does not match the tensor product");
  CMatrix k(n1 * n2, n1 * n2);
  for (int i1 = 0; i1 < n1; ++i1)
    for (int j1 = 0; j1 < n1; ++j1) k.block(i1 * n2, j1 * n2, n2, n2) = m1.matrix()(i1, j1) * m2.matrix();
  double off = 0.0;
  for (int i = 0; i < k.rows(); ++i)
    for (int j = 0; j < k.cols(); ++j)
      if (splitting->block_of(i) != splitting->block_of(j)) off = std::max(off, std::abs(k(i, j)));
  if (off > 1e-12 * k.cwiseAbs().maxCoeff())
    throw Error(ErrorKind::precondition, "tensor product is not compatible with the product splitting");
  return InnerProduct(k, std::move(splitting));
}

ProductWitness nearest_kronecker(const CMatrix& m, int n1, int n2) {
  if (m.rows() != n1 * n2 || m.cols() != n1 * n2)
    throw Error(ErrorKind::precondition, "matrix size is not n1 n2");
  CMatrix r(n1 * n1, n2 * n2);
  for (int i1 = 0; i1 < n1; ++i1)
    for (int j1 = 0; j1 < n1; ++j1)
      for (int i2 = 0; i2 < n2; ++i2)
        for (int j2 = 0; j2 < n2; ++j2) r(i1 * n1 + j1, i2 * n2 + j2) = m(i1 * n2 + i2, j1 * n2 + j2);
  Eigen::JacobiSVD<CMatrix> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double sigma = svd.singularValues()(0);
  CMatrix a(n1, n1), b(n2, n2);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n1; ++j) a(i, j) = sigma * svd.matrixU()(i * n1 + j, 0);
  for (int i = 0; i < n2; ++i)
    for (int j = 0; j < n2; ++j) b(i, j) = std::conj(svd.matrixV()(i * n2 + j, 0));
  // a hermitian pair is fixed up to a common phase; make the traces real and positive
  const Complex phase = std::polar(1.0, -std::arg(a.trace()));
  a *= phase;
  b /= phase;
  if (b.trace().real() < 0.0) {
    a = -a;
    b = -b;
  }
  a = 0.5 * (a + a.adjoint()).eval();
  b = 0.5 * (b + b.adjoint()).eval();
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() == Eigen::Success) {
    const double logdet = 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
    const double c = std::exp(logdet / n1);
    a /= c;
    b *= c;
  }
  ProductWitness w;
  w.first = a;
  w.second = b;
  CMatrix k(n1 * n2, n1 * n2);
  for (int i1 = 0; i1 < n1; ++i1)
    for (int j1 = 0; j1 < n1; ++j1) k.block(i1 * n2, j1 * n2, n2, n2) = a(i1, j1) * b;
  w.residual = (m - k).norm() / m.norm();
  return w;
}

ProductWitness nearest_kronecker(const InnerProduct& m, const PolarizedModel& model) {
  if (model.factor_count() != 2) throw Error(ErrorKind::precondition, "model is not a product of two factors");
  return nearest_kronecker(m.matrix(), model.factor_section_count(0), model.factor_section_count(1));
}

namespace {

StageResult stage(std::string name, double value, double tolerance, std::string note = {}) {
  return {std::move(name), value, tolerance, value < tolerance, std::move(note)};
}

bool record(SplitReport& report, StageResult s) {
  const bool ok = s.passed;
  if (!ok && report.failed_stage.empty()) report.failed_stage = s.name;
  report.stages.push_back(std::move(s));
  return ok;
}

}  // namespace

SplitReport verify_splitting(const PolarizedModel& model, const SplitConfig& cfg, bool keep_field) {
  if (model.factor_count() != 2) throw Error(ErrorKind::precondition, "model is not a product of two factors");
  cfg.solve.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Group group = cfg.solve.group;
  const auto shared = std::make_shared<const PolarizedModel>(model);
  const QuadratureGrid grid = make_grid(shared, cfg.grid_level, cfg.torus);
  const SplittingPtr sp = splitting_for(model, cfg.torus);
  SplitReport report;
  auto finish = [&] {
    report.passed = report.failed_stage.empty();
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
  };

  // product solve from a generic (non-product) start
  const InnerProduct start = random_start(sp, group, cfg.seed, cfg.start_radius);
  const double start_kron = nearest_kronecker(start, model).residual;
  report.product = t_iterate(start, grid, cfg.solve);
  // a residual that moves under grid refinement by more than the factor-scaled
  // tolerance means the grid cannot resolve the requested tolerance
  const double fine_res =
      group_gradient(l2_gram_orthonormal(report.product.final, grid.refined()), *sp, group).norm;
  const bool resolved = record(
      report, stage("accuracy", std::abs(fine_res - report.product.residual),
                    cfg.accuracy_factor * cfg.solve.tolerance,
                    "residual " + std::to_string(fine_res) + " on grid level " + std::to_string(cfg.grid_level + 1)));
  const bool solved = record(report, stage("product-solve", report.product.residual, cfg.solve.tolerance,
                                           report.product.message + "; start Kronecker residual " +
                                               std::to_string(start_kron)));
  if (!resolved || !solved) return finish();

  report.witness = nearest_kronecker(report.product.final, model);
  if (keep_field) {
    report.field = kernel_field(report.product.final, grid);
    double mixed = 0.0;
    for (const auto& s : report.field) mixed = std::max(mixed, s.mixed);
    report.witness.mixed_hessian = mixed;
  } else {
    report.witness.mixed_hessian = mixed_hessian_max(report.product.final, grid);
  }
  record(report, stage("kronecker", report.witness.residual, cfg.kronecker_tolerance));
  record(report, stage("mixed-hessian", report.witness.mixed_hessian, cfg.mixed_tolerance));

  // independent factor solves
  std::vector<InnerProduct> factors;
  for (int f = 0; f < 2; ++f) {
    const auto fm = std::make_shared<const PolarizedModel>(model.factor_model(f));
    // factor grids are small, so they are always refined to the resolved level
    const TorusSelection ftorus = cfg.torus.restrict_to_factor(f);
    const QuadratureGrid fgrid = make_grid(fm, std::max(cfg.grid_level, grid_level_for(*fm, ftorus)), ftorus);
    const SplittingPtr fsp = splitting_for(*fm, cfg.torus.restrict_to_factor(f));
    SolveTrace tr = t_iterate(random_start(fsp, group, cfg.seed + 101 * (f + 1), cfg.start_radius), fgrid, cfg.solve);
    (f == 0 ? report.witness.first_residual : report.witness.second_residual) = tr.residual;
    factors.push_back(tr.final);
    record(report, stage(f == 0 ? "factor-1-solve" : "factor-2-solve", tr.residual, cfg.solve.tolerance, tr.message));
    (f == 0 ? report.first : report.second) = std::move(tr);
  }
  if (!report.failed_stage.empty() && report.failed_stage.rfind("factor", 0) == 0) return finish();

  report.tensor_of_factors = tensor(factors[0], factors[1], sp);
  const FsGram tg = l2_gram_orthonormal(report.tensor_of_factors, grid);
  record(report, stage("tensor-balanced", group_gradient(tg, *sp, group).norm, cfg.tensor_tolerance));
  const double gap = delta_D(report.tensor_of_factors, report.product.final, grid, group, cfg.gap_rule);
  record(report, stage("delta-D-gap", std::abs(gap), cfg.gap_tolerance));

  return finish();
}

DistanceCheck product_distance_check(const InnerProduct& m1, const InnerProduct& m1p, const InnerProduct& m2,
                                     const InnerProduct& m2p, Group group) {
  const GeodesicSegment g1 = geodesic(m1, m1p, group);
  const GeodesicSegment g2 = geodesic(m2, m2p, group);
  DistanceCheck out;
  out.d1 = g1.length;
  out.d2 = g2.length;
  out.coefficient1 = m2.dim();
  out.coefficient2 = m1.dim();
  out.lhs = std::pow(distance(tensor(m1, m2), tensor(m1p, m2p), group), 2);
  out.rhs = out.coefficient1 * out.d1 * out.d1 + out.coefficient2 * out.d2 * out.d2;
  for (int r = 0; r < g1.gamma.size(); ++r)
    for (int j = 0; j < g2.gamma.size(); ++j) out.brute += std::pow(g1.gamma(r) + g2.gamma(j), 2);
  return out;
}

}  // namespace relbal
