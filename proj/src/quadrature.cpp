#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <gsl/gsl_integration.h>

#include "grid_walk.hpp"
#include "relbal/error.hpp"
#include "relbal/geometry.hpp"
#include "relbal/hermitian_space.hpp"

namespace relbal {

void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n));
  if (!table) throw Error(ErrorKind::evaluation, "cannot allocate Gauss–Legendre table");
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i)
    gsl_integration_glfixed_point(0.0, 1.0, static_cast<std::size_t>(i), &nodes[i], &weights[i], table);
  gsl_integration_glfixed_table_free(table);
}

int default_radial_nodes(int k) { return std::max(16, 4 * k + 8); }
int default_angular_nodes(int k) { return 2 * (2 * k + 1); }

namespace {

bool collapses(const TorusSelection& symmetry, int factor) {
  if (symmetry.kind == TorusSelection::Kind::factors)
    return std::find(symmetry.factor_ids.begin(), symmetry.factor_ids.end(), factor) != symmetry.factor_ids.end();
  return symmetry.kind == TorusSelection::Kind::maximal;
}

}  // namespace

int grid_level_for(const PolarizedModel& model, const TorusSelection& symmetry, int min_angular) {
  int level = 1;
  for (int f = 0; f < model.factor_count(); ++f)
    if (!collapses(symmetry, f))
      while (default_angular_nodes(model.factors()[f].k) * (1 << (level - 1)) < min_angular) ++level;
  return level;
}

namespace {

void tabulate_sections(FactorGrid& g) {
  const auto exps = factor_exponents(g.dim, g.k);
  g.sections = static_cast<int>(exps.size());
  g.values.assign(g.size * g.sections, 0.0);
  g.derivs.assign(g.size * g.dim * g.sections, 0.0);
  for (std::size_t p = 0; p < g.size; ++p) {
    const Complex* z = g.z.data() + p * g.dim;
    for (int i = 0; i < g.sections; ++i) {
      Complex v = 1.0;
      for (int c = 0; c < g.dim; ++c)
        for (int e = 0; e < exps[i][c]; ++e) v *= z[c];
      g.values[p * g.sections + i] = v;
      for (int c = 0; c < g.dim; ++c) {
        const int a = exps[i][c];
        Complex d = 0.0;
        if (a > 0) {
          d = static_cast<double>(a);
          for (int cc = 0; cc < g.dim; ++cc)
            for (int e = 0; e < exps[i][cc] - (cc == c ? 1 : 0); ++e) d *= z[cc];
        }
        g.derivs[(p * g.dim + c) * g.sections + i] = d;
      }
    }
  }
}

FactorGrid p1_grid(int k, int level, bool collapsed) {
  const double pi = std::numbers::pi;
  FactorGrid g;
  g.dim = 1;
  g.k = k;
  const int scale = 1 << (level - 1);
  g.radial = default_radial_nodes(k) * scale;
  g.angular = default_angular_nodes(k) * scale;
  g.collapsed = collapsed;
  const int angles = collapsed ? 1 : g.angular;
  std::vector<double> t, wt;
  gauss_legendre_unit(g.radial, t, wt);
  g.size = static_cast<std::size_t>(g.radial) * angles;
  g.z.reserve(g.size);
  const double dtheta = 2.0 * pi / angles;
  for (int i = 0; i < g.radial; ++i) {
    const double one_minus = 1.0 - t[i];
    const double u = t[i] / one_minus;
    const double r = std::sqrt(u);
    for (int j = 0; j < angles; ++j) {
      const double theta = dtheta * j;
      g.z.push_back(std::polar(r, theta));
      // dx dy = (1/2) du dθ, du = dt / (1-t)^2
      g.weight.push_back(0.5 * dtheta * wt[i] / (one_minus * one_minus));
      g.ref_density.push_back(k * one_minus * one_minus);
    }
  }
  tabulate_sections(g);
  return g;
}

FactorGrid p2_grid(int k, int level, bool collapsed) {
  const double pi = std::numbers::pi;
  FactorGrid g;
  g.dim = 2;
  g.k = k;
  const int scale = 1 << (level - 1);
  g.radial = default_radial_nodes(k) * scale;
  g.angular = default_angular_nodes(k) * scale;
  g.collapsed = collapsed;
  const int angles = collapsed ? 1 : g.angular;
  std::vector<double> s, ws;
  gauss_legendre_unit(g.radial, s, ws);
  g.size = static_cast<std::size_t>(g.radial) * g.radial * angles * angles;
  g.z.reserve(2 * g.size);
  const double dtheta = 2.0 * pi / angles;
  for (int i = 0; i < g.radial; ++i) {
    for (int j = 0; j < g.radial; ++j) {
      // collapsed coordinates on the moment simplex: t1 = s, t2 = (1-s) v
      const double t1 = s[i];
      const double t2 = (1.0 - s[i]) * s[j];
      const double t0 = (1.0 - s[i]) * (1.0 - s[j]);
      const double r1 = std::sqrt(t1 / t0), r2 = std::sqrt(t2 / t0);
      const double jac = ws[i] * ws[j] * (1.0 - s[i]) / (t0 * t0 * t0);
      for (int a = 0; a < angles; ++a) {
        for (int b = 0; b < angles; ++b) {
          g.z.push_back(std::polar(r1, dtheta * a));
          g.z.push_back(std::polar(r2, dtheta * b));
          g.weight.push_back(0.25 * dtheta * dtheta * jac);
          g.ref_density.push_back(static_cast<double>(k) * k * t0 * t0 * t0);
        }
      }
    }
  }
  tabulate_sections(g);
  return g;
}

}  // namespace

QuadratureGrid::QuadratureGrid(std::shared_ptr<const PolarizedModel> model, int level,
                               std::vector<FactorGrid> factors, std::string exactness_note,
                               TorusSelection symmetry)
    : model_(std::move(model)), level_(level), factors_(std::move(factors)),
      exactness_note_(std::move(exactness_note)), symmetry_(std::move(symmetry)) {
  for (const auto& f : factors_) size_ *= f.size;
  symmetry_weights_ = torus_weights(*model_, symmetry_);
}

bool QuadratureGrid::supports(const CharacterSplitting& splitting) const {
  if (splitting.dim() != model_->section_count()) return false;
  for (const auto& blk : splitting.blocks())
    for (int i : blk.members)
      if (symmetry_weights_[i] != symmetry_weights_[blk.members.front()]) return false;
  return true;
}

QuadratureGrid QuadratureGrid::refined() const { return make_grid(model_, level_ + 1, symmetry_); }

void QuadratureGrid::unflatten(std::size_t index, std::vector<std::size_t>& per_factor) const {
  per_factor.resize(factors_.size());
  for (int a = static_cast<int>(factors_.size()) - 1; a >= 0; --a) {
    per_factor[a] = index % factors_[a].size;
    index /= factors_[a].size;
  }
}

ChartPoint QuadratureGrid::point(std::size_t index) const {
  std::vector<std::size_t> idx;
  unflatten(index, idx);
  ChartPoint p;
  p.charts.assign(factors_.size(), 0);
  for (std::size_t a = 0; a < factors_.size(); ++a)
    for (int c = 0; c < factors_[a].dim; ++c) p.coords.push_back(factors_[a].z[idx[a] * factors_[a].dim + c]);
  return p;
}

double QuadratureGrid::weight(std::size_t index) const {
  std::vector<std::size_t> idx;
  unflatten(index, idx);
  double w = 1.0;
  for (std::size_t a = 0; a < factors_.size(); ++a) w *= factors_[a].weight[idx[a]];
  return w;
}

double QuadratureGrid::reference_density(std::size_t index) const {
  std::vector<std::size_t> idx;
  unflatten(index, idx);
  double r = 1.0;
  for (std::size_t a = 0; a < factors_.size(); ++a) r *= factors_[a].ref_density[idx[a]];
  return r;
}

QuadratureGrid make_grid(std::shared_ptr<const PolarizedModel> model, int level, const TorusSelection& symmetry) {
  if (level < 1) throw Error(ErrorKind::config, "grid level must be >= 1");
  std::vector<FactorGrid> factors;
  std::ostringstream note;
  note << "level " << level << ";";
  for (int f = 0; f < model->factor_count(); ++f) {
    const auto& fd = model->factors()[f];
    const bool collapsed = collapses(symmetry, f);
    factors.push_back(fd.dim == 1 ? p1_grid(fd.k, level, collapsed) : p2_grid(fd.k, level, collapsed));
    const auto& g = factors.back();
    note << " P" << fd.dim << "(k=" << fd.k << "): ";
    if (g.collapsed)
      note << "angles collapsed to one node by torus symmetry (exact for invariant integrands), ";
    else
      note << g.angular << " angular nodes per angle (exact to trigonometric degree " << g.angular - 1 << "), ";
    note << g.radial
         << " Gauss-Legendre nodes per radial variable (exact to polynomial degree " << 2 * g.radial - 1
         << (fd.dim == 1 ? " in t=u/(1+u))" : " on the collapsed moment simplex)") << ";";
  }
  return QuadratureGrid(std::move(model), level, std::move(factors), note.str(), symmetry);
}

QuadratureGrid make_grid(const PolarizedModel& model, int level, const TorusSelection& symmetry) {
  return make_grid(std::make_shared<const PolarizedModel>(model), level, symmetry);
}

namespace {

CMatrix reference_gram_at(const QuadratureGrid& grid) {
  const auto& model = grid.model();
  const int ns = model.section_count();
  const auto& factors = grid.factors();
  const int nf = static_cast<int>(factors.size());
  return detail::reduce_chunks<CMatrix>(
      grid, false, [&] { return CMatrix(CMatrix::Zero(ns, ns)); },
      [&](CMatrix& acc, const detail::ChunkData& d) {
        RVector scale(d.count);
        for (Eigen::Index q = 0; q < d.count; ++q) {
          double h = 1.0;
          for (int a = 0; a < nf; ++a) {
            const std::size_t p = d.factor_index[q * nf + a];
            double r2 = 0.0;
            for (int c = 0; c < factors[a].dim; ++c) r2 += std::norm(factors[a].z[p * factors[a].dim + c]);
            h *= std::pow(1.0 + r2, -factors[a].k);
          }
          scale(q) = std::sqrt(d.weight(q) * d.ref_density(q) * h);
        }
        const CMatrix v = d.f * scale.asDiagonal();
        acc.noalias() += v.conjugate() * v.transpose();
      },
      [](CMatrix& total, const CMatrix& part) { total += part; });
}

}  // namespace

CMatrix reference_gram(const QuadratureGrid& grid, bool check_convergence) {
  CMatrix g = reference_gram_at(grid);
  // entries between different symmetry weights vanish by invariance of the measure
  const auto& sw = grid.symmetry_weights();
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      if (sw[i] != sw[j]) g(i, j) = 0.0;
  g = 0.5 * (g + g.adjoint()).eval();
  if (check_convergence) {
    const QuadratureGrid fine = grid.refined();
    CMatrix gf = reference_gram_at(fine);
    for (Eigen::Index i = 0; i < gf.rows(); ++i)
      for (Eigen::Index j = 0; j < gf.cols(); ++j)
        if (sw[i] != sw[j]) gf(i, j) = 0.0;
    gf = 0.5 * (gf + gf.adjoint()).eval();
    const double scale = g.cwiseAbs().maxCoeff();
    const double moved = (gf - g).cwiseAbs().maxCoeff();
    if (moved > 1e-8 * scale)
      throw Error(ErrorKind::accuracy, "reference Gram moved by " + std::to_string(moved / scale) +
                                           " relative under grid doubling");
  }
  return g;
}

}  // namespace relbal
