#include "relbal/fubini_study.hpp"

#include <algorithm>
#include <cmath>

#include "grid_walk.hpp"
#include "relbal/error.hpp"

namespace relbal {

namespace {

/// Normalized kernel data of a basis on one chunk of grid points. K = |g|² with
/// g = Sᵀf; the Hessian of log K is assembled from the component of the normalized
/// derivatives orthogonal to g. hessian[c * n + d] holds H_cd at every point.
struct KernelBatch {
  CMatrix ghat;
  RVector kernel;
  RVector density;
  std::vector<CVector> hessian;

  void eval(const CMatrix& st, const detail::ChunkData& d, bool with_hessian) {
    const Eigen::Index p = d.count;
    ghat.noalias() = st * d.f;
    kernel = ghat.colwise().squaredNorm().transpose();
    if (!(kernel.minCoeff() > 0.0) || !kernel.allFinite())
      throw Error(ErrorKind::evaluation, "kernel vanishes or overflows at a grid point");
    const RVector inv = kernel.cwiseSqrt().cwiseInverse();
    ghat = ghat * inv.asDiagonal();
    if (!with_hessian) return;
    const int n = static_cast<int>(d.df.size());
    jperp_.resize(n);
    for (int c = 0; c < n; ++c) {
      jperp_[c].noalias() = st * d.df[c];
      jperp_[c] = jperp_[c] * inv.asDiagonal();
      const CVector alpha = ghat.conjugate().cwiseProduct(jperp_[c]).colwise().sum().transpose();
      jperp_[c] -= ghat * alpha.asDiagonal();
    }
    hessian.resize(static_cast<std::size_t>(n) * n);
    for (int c = 0; c < n; ++c)
      for (int e = c; e < n; ++e) {
        hessian[c * n + e] = jperp_[c].cwiseProduct(jperp_[e].conjugate()).colwise().sum().transpose();
        if (e != c) hessian[e * n + c] = hessian[c * n + e].conjugate();
      }
    density.resize(p);
    Eigen::Matrix4cd h;
    for (Eigen::Index q = 0; q < p; ++q) {
      double det;
      if (n == 1) {
        det = hessian[0](q).real();
      } else if (n == 2) {
        det = hessian[0](q).real() * hessian[3](q).real() - std::norm(hessian[1](q));
      } else {
        for (int c = 0; c < n; ++c)
          for (int e = 0; e < n; ++e) h(c, e) = hessian[c * n + e](q);
        det = h.topLeftCorner(n, n).determinant().real();
      }
      if (!(det > 0.0)) throw Error(ErrorKind::degeneracy, "Fubini–Study form is degenerate at a grid point");
      density(q) = det;
    }
  }

  double mixed(Eigen::Index q, const std::vector<int>& owner) const {
    const int n = static_cast<int>(owner.size());
    double out = 0.0;
    for (int c = 0; c < n; ++c)
      for (int e = 0; e < n; ++e)
        if (owner[c] != owner[e]) out = std::max(out, std::abs(hessian[c * n + e](q)));
    return out;
  }

 private:
  std::vector<CMatrix> jperp_;
};

std::vector<int> factor_of_coordinate(const PolarizedModel& model) {
  std::vector<int> owner;
  for (int f = 0; f < model.factor_count(); ++f)
    for (int c = 0; c < model.factors()[f].dim; ++c) owner.push_back(f);
  return owner;
}

double reference_weight(const PolarizedModel& model, const ChartPoint& point) {
  double log_h = 0.0;
  for (int f = 0; f < model.factor_count(); ++f) {
    double r2 = 0.0;
    for (int c = 0; c < model.factors()[f].dim; ++c) r2 += std::norm(point.coords[model.coord_offset(f) + c]);
    log_h -= model.factors()[f].k * std::log1p(r2);
  }
  return std::exp(log_h);
}

void require_support(const QuadratureGrid& grid, const CharacterSplitting& splitting) {
  if (!grid.supports(splitting))
    throw Error(ErrorKind::precondition, "grid symmetry " + grid.symmetry().describe() +
                                             " is not a symmetry of the inner product splitting");
}

}  // namespace

double h_s_density(const InnerProduct& m, const PolarizedModel& model, const ChartPoint& point) {
  if (m.dim() != model.section_count()) throw Error(ErrorKind::precondition, "inner product does not match the model");
  const CVector f = sections_eval(model, point);
  const CMatrix s = admissible_orthonormal_basis(m);
  const double psi = (s.transpose() * f).squaredNorm() * reference_weight(model, point);
  if (!(psi > 0.0) || !std::isfinite(psi) || !std::isfinite(1.0 / psi))
    throw Error(ErrorKind::evaluation, "kernel underflow at the requested point");
  return 1.0 / psi;
}

FsGram l2_gram_in_basis(const CMatrix& basis, const CharacterSplitting& splitting, const QuadratureGrid& grid) {
  const int ns = splitting.dim();
  if (ns != grid.model().section_count() || basis.rows() != ns || basis.cols() != ns)
    throw Error(ErrorKind::precondition, "basis does not match the model");
  require_support(grid, splitting);
  const CMatrix st = basis.transpose();
  struct Acc {
    CMatrix gram;
    double volume = 0.0;
  };
  auto acc = detail::reduce_chunks<Acc>(
      grid, true, [&] { return Acc{CMatrix::Zero(ns, ns), 0.0}; },
      [&](Acc& a, const detail::ChunkData& d) {
        thread_local KernelBatch k;
        k.eval(st, d, true);
        const RVector w = d.weight.cwiseProduct(k.density);
        a.volume += w.sum();
        const CMatrix scaled = k.ghat * w.cwiseSqrt().asDiagonal();
        a.gram.noalias() += scaled.conjugate() * scaled.transpose();
      },
      [](Acc& total, const Acc& part) {
        total.gram += part.gram;
        total.volume += part.volume;
      });
  for (int c = 0; c < ns; ++c)
    for (int e = 0; e < ns; ++e)
      if (splitting.block_of(c) != splitting.block_of(e)) acc.gram(c, e) = 0.0;
  FsGram out;
  out.basis = basis;
  out.gram = 0.5 * (acc.gram + acc.gram.adjoint());
  out.volume = acc.volume;
  return out;
}

FsGram l2_gram_orthonormal(const InnerProduct& m, const QuadratureGrid& grid) {
  return l2_gram_in_basis(admissible_orthonormal_basis(m), *m.splitting(), grid);
}

CMatrix l2_gram(const InnerProduct& m, const QuadratureGrid& grid) {
  const FsGram g = l2_gram_orthonormal(m, grid);
  const CMatrix sinv = g.basis.inverse();
  CMatrix p = sinv.adjoint() * g.gram * sinv;
  return 0.5 * (p + p.adjoint());
}

InducedMetric fs_volume(const InnerProduct& m, const QuadratureGrid& grid) {
  require_support(grid, *m.splitting());
  InducedMetric out;
  out.density.assign(grid.size(), 0.0);
  const CMatrix st = admissible_orthonormal_basis(m).transpose();
  const auto volume = detail::reduce_chunks<double>(
      grid, true, [] { return 0.0; },
      [&](double& a, const detail::ChunkData& d) {
        thread_local KernelBatch k;
        k.eval(st, d, true);
        for (Eigen::Index q = 0; q < d.count; ++q) out.density[d.begin + q] = k.density(q);
        a += d.weight.dot(k.density);
      },
      [](double& total, double part) { total += part; });
  out.volume = volume;
  return out;
}

std::vector<KernelSample> kernel_field(const InnerProduct& m, const QuadratureGrid& grid) {
  require_support(grid, *m.splitting());
  const auto& model = grid.model();
  const auto owner = factor_of_coordinate(model);
  std::vector<KernelSample> out(grid.size());
  const CMatrix st = admissible_orthonormal_basis(m).transpose();
  const auto& factors = grid.factors();
  const int nf = static_cast<int>(factors.size());
  detail::reduce_chunks<int>(
      grid, true, [] { return 0; },
      [&](int&, const detail::ChunkData& d) {
        thread_local KernelBatch k;
        k.eval(st, d, true);
        for (Eigen::Index q = 0; q < d.count; ++q) {
          double h = 1.0;
          for (int f = 0; f < nf; ++f) {
            const std::size_t i = d.factor_index[q * nf + f];
            double r2 = 0.0;
            for (int c = 0; c < factors[f].dim; ++c) r2 += std::norm(factors[f].z[i * factors[f].dim + c]);
            h *= std::pow(1.0 + r2, -factors[f].k);
          }
          out[d.begin + q] = {k.kernel(q) * h, k.density(q), k.mixed(q, owner)};
        }
      },
      [](int&, int) {});
  return out;
}

double mixed_hessian_max(const InnerProduct& m, const QuadratureGrid& grid) {
  require_support(grid, *m.splitting());
  const auto& model = grid.model();
  const auto owner = factor_of_coordinate(model);
  const CMatrix st = admissible_orthonormal_basis(m).transpose();
  return detail::reduce_chunks<double>(
      grid, true, [] { return 0.0; },
      [&](double& a, const detail::ChunkData& d) {
        thread_local KernelBatch k;
        k.eval(st, d, true);
        for (Eigen::Index q = 0; q < d.count; ++q) a = std::max(a, k.mixed(q, owner));
      },
      [](double& total, double part) { total = std::max(total, part); });
}

CMatrix bergman_basis(const InnerProduct& metric, const QuadratureGrid& grid) {
  const CMatrix p = l2_gram(metric, grid);
  Eigen::LLT<CMatrix> llt(p);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::definiteness, "L2 Gram is not positive definite");
  return llt.matrixU().solve(CMatrix::Identity(p.rows(), p.cols()));
}

std::vector<double> bergman(const InnerProduct& metric, const CMatrix& basis, const QuadratureGrid& grid) {
  const int ns = metric.dim();
  if (basis.rows() != ns || basis.cols() != ns) throw Error(ErrorKind::precondition, "basis has the wrong size");
  require_support(grid, *metric.splitting());
  const CMatrix p = l2_gram(metric, grid);
  const double off = (basis.adjoint() * p * basis - CMatrix::Identity(ns, ns)).cwiseAbs().maxCoeff();
  if (off > 1e-6)
    throw Error(ErrorKind::precondition, "basis is not L2-orthonormal (deviation " + std::to_string(off) + ")");
  // h_m = h / (h K_m) = 1 / K_m in the flat trivialization
  const CMatrix s = admissible_orthonormal_basis(metric);
  std::vector<double> rho(grid.size());
  const CMatrix st = s.transpose();
  const CMatrix bt = basis.transpose();
  detail::reduce_chunks<int>(
      grid, false, [] { return 0; },
      [&](int&, const detail::ChunkData& d) {
        const RVector km = (st * d.f).colwise().squaredNorm();
        const RVector num = (bt * d.f).colwise().squaredNorm();
        for (Eigen::Index q = 0; q < d.count; ++q) rho[d.begin + q] = num(q) / km(q);
      },
      [](int&, int) {});
  return rho;
}

}  // namespace relbal
