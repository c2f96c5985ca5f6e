#include "relbal/kempf_ness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "relbal/error.hpp"

namespace relbal {

double d_prime(const GeodesicSegment& segment, double t, const QuadratureGrid& grid) {
  const FsGram g = l2_gram_in_basis(segment.basis_at(t), *segment.splitting, grid);
  return 2.0 * segment.gamma.dot(g.gram.diagonal().real());
}

namespace {

double integrate_dprime(const GeodesicSegment& segment, const QuadratureGrid& grid, double a, double b, int nodes) {
  std::vector<double> x, w;
  gauss_legendre_unit(nodes, x, w);
  double sum = 0.0;
  for (int i = 0; i < nodes; ++i) sum += w[i] * d_prime(segment, a + (b - a) * x[i], grid);
  return sum * (b - a);
}

}  // namespace

double delta_D(const GeodesicSegment& segment, const QuadratureGrid& grid, const DeltaDRule& rule) {
  if (segment.length == 0.0) return 0.0;
  const double value = integrate_dprime(segment, grid, 0.0, 1.0, rule.nodes);
  if (rule.check_nodes > 0) {
    const double check = integrate_dprime(segment, grid, 0.0, 1.0, rule.check_nodes);
    if (std::abs(check - value) > 1e-7)
      throw Error(ErrorKind::accuracy, "delta_D changed by " + std::to_string(std::abs(check - value)) +
                                           " under node doubling in t");
  }
  return value;
}

double delta_D(const InnerProduct& m1, const InnerProduct& m2, const QuadratureGrid& grid, Group group,
               const DeltaDRule& rule) {
  return delta_D(geodesic(m1, m2, group), grid, rule);
}

MomentValue moment_from_gram(const FsGram& gram, const CharacterSplitting& splitting) {
  MomentValue mv;
  double sq = 0.0;
  for (const auto& blk : splitting.blocks()) {
    const int n = static_cast<int>(blk.members.size());
    CMatrix b(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) b(i, j) = gram.gram(blk.members[i], blk.members[j]);
    b.diagonal().array() -= b.trace() / static_cast<double>(n);
    sq += b.squaredNorm();
    mv.blocks.push_back(std::move(b));
  }
  mv.norm = std::sqrt(sq);
  return mv;
}

MomentValue moment_map(const InnerProduct& m, const QuadratureGrid& grid) {
  return moment_from_gram(l2_gram_orthonormal(m, grid), *m.splitting());
}

RVector block_means(const FsGram& gram, const CharacterSplitting& splitting) {
  RVector means(splitting.block_count());
  for (int k = 0; k < splitting.block_count(); ++k) {
    double s = 0.0;
    for (int i : splitting.block(k).members) s += gram.gram(i, i).real();
    means(k) = s / splitting.block_size(k);
  }
  return means;
}

double balanced_residual(const FsGram& gram, const CharacterSplitting& splitting, const IndexVector& b) {
  if (b.b.size() != splitting.block_count())
    throw Error(ErrorKind::precondition, "index length does not match the number of blocks");
  const double unit = gram.volume / splitting.dim();
  double sq = 0.0;
  for (int k = 0; k < splitting.block_count(); ++k) {
    const auto& members = splitting.block(k).members;
    for (int i : members)
      for (int j : members) {
        const Complex target = (i == j) ? Complex(unit * b.b(k)) : Complex(0.0);
        sq += std::norm(gram.gram(i, j) - target);
      }
  }
  return std::sqrt(sq);
}

double balanced_residual_free(const FsGram& gram, const CharacterSplitting& splitting) {
  return moment_from_gram(gram, splitting).norm;
}

double balanced_residual(const InnerProduct& m, const QuadratureGrid& grid, const IndexVector& b) {
  return balanced_residual(l2_gram_orthonormal(m, grid), *m.splitting(), b);
}

double balanced_residual_free(const InnerProduct& m, const QuadratureGrid& grid) {
  return balanced_residual_free(l2_gram_orthonormal(m, grid), *m.splitting());
}

GroupGradient group_gradient(const FsGram& gram, const CharacterSplitting& splitting, Group group) {
  const int nu = splitting.block_count();
  const RVector sizes = splitting.sizes();
  const RVector means = block_means(gram, splitting);
  const RVector root = sizes.array().sqrt();
  const RMatrix c = splitting.constraint_matrix(group) * root.asDiagonal();
  const RVector u = kernel_projector(c) * root.cwiseProduct(means);
  GroupGradient out;
  out.trace_part = u.cwiseQuotient(root);
  const MomentValue mv = moment_from_gram(gram, splitting);
  out.norm = std::sqrt(mv.norm * mv.norm + u.squaredNorm());
  out.direction = CMatrix::Zero(splitting.dim(), splitting.dim());
  for (int k = 0; k < nu; ++k) {
    const auto& members = splitting.block(k).members;
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = 0; j < members.size(); ++j) out.direction(members[i], members[j]) = mv.blocks[k](i, j);
      out.direction(members[i], members[i]) += out.trace_part(k);
    }
  }
  out.fitted_index = (means - out.trace_part) * (splitting.dim() / gram.volume);
  return out;
}

double group_residual(const InnerProduct& m, const QuadratureGrid& grid, Group group) {
  return group_gradient(l2_gram_orthonormal(m, grid), *m.splitting(), group).norm;
}

EnergyReport convexity_scan(const GeodesicSegment& segment, int samples, const QuadratureGrid& grid) {
  if (samples < 5) throw Error(ErrorKind::precondition, "convexity scan needs at least 5 samples");
  auto scan = [&](const QuadratureGrid& g) {
    EnergyReport r;
    r.grid_level = g.level();
    r.t.resize(samples);
    r.d_prime.resize(samples);
    r.energy.assign(samples, 0.0);
    for (int i = 0; i < samples; ++i) {
      r.t[i] = static_cast<double>(i) / (samples - 1);
      r.d_prime[i] = d_prime(segment, r.t[i], g);
      if (i > 0) r.energy[i] = r.energy[i - 1] + integrate_dprime(segment, g, r.t[i - 1], r.t[i], 4);
    }
    r.delta_D = r.energy.back();
    r.min_second_difference = std::numeric_limits<double>::infinity();
    for (int i = 1; i + 1 < samples; ++i)
      r.min_second_difference =
          std::min(r.min_second_difference, r.energy[i + 1] - 2.0 * r.energy[i] + r.energy[i - 1]);
    r.min_derivative_increment = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < samples; ++i)
      r.min_derivative_increment = std::min(r.min_derivative_increment, r.d_prime[i + 1] - r.d_prime[i]);
    r.convex = r.min_second_difference >= -1e-9 && r.min_derivative_increment >= -1e-9;
    return r;
  };
  EnergyReport report = scan(grid);
  if (!report.convex) report = scan(grid.refined());
  return report;
}

CMatrix random_traceless_direction(const CharacterSplitting& splitting, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const int n = splitting.dim();
  CMatrix d = CMatrix::Zero(n, n);
  for (const auto& blk : splitting.blocks()) {
    const int nk = static_cast<int>(blk.members.size());
    if (nk < 2) continue;
    CMatrix a(nk, nk);
    for (int i = 0; i < nk; ++i)
      for (int j = 0; j < nk; ++j) a(i, j) = Complex(normal(rng), normal(rng));
    CMatrix h = 0.5 * (a + a.adjoint());
    h.diagonal().array() -= h.trace() / static_cast<double>(nk);
    for (int i = 0; i < nk; ++i)
      for (int j = 0; j < nk; ++j) d(blk.members[i], blk.members[j]) = h(i, j);
  }
  const double norm = d.norm();
  return norm > 0.0 ? CMatrix(d / norm) : d;
}

std::vector<CMatrix> criticality_directions(const CharacterSplitting& splitting, const MomentValue& moment,
                                            int random_count, std::uint64_t seed) {
  const int n = splitting.dim();
  std::vector<CMatrix> dirs;
  for (const auto& blk : splitting.blocks())
    for (std::size_t i = 1; i < blk.members.size(); ++i) {
      CMatrix d = CMatrix::Zero(n, n);
      d(blk.members[0], blk.members[0]) = std::sqrt(0.5);
      d(blk.members[i], blk.members[i]) = -std::sqrt(0.5);
      dirs.push_back(std::move(d));
    }
  for (int r = 0; r < random_count; ++r) {
    CMatrix d = random_traceless_direction(splitting, seed + 7919u * static_cast<std::uint64_t>(r + 1));
    if (d.norm() > 0.0) dirs.push_back(std::move(d));
  }
  if (moment.norm > 0.0) {
    // near a zero the moment's diagonal carries the rounding of the Gram, so block traces
    // are removed again after scaling
    CMatrix d = CMatrix::Zero(n, n);
    for (int k = 0; k < splitting.block_count(); ++k) {
      const auto& members = splitting.block(k).members;
      CMatrix b = moment.blocks[k] / moment.norm;
      b.diagonal().array() -= b.trace() / static_cast<double>(members.size());
      for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = 0; j < members.size(); ++j) d(members[i], members[j]) = b(i, j);
    }
    if (d.norm() > 0.0) dirs.push_back(d / d.norm());
  }
  return dirs;
}

double max_directional_derivative(const InnerProduct& m, const QuadratureGrid& grid,
                                  const std::vector<CMatrix>& directions) {
  double best = 0.0;
  for (const auto& d : directions) best = std::max(best, std::abs(d_prime(geodesic_from_direction(m, d), 0.0, grid)));
  return best;
}

std::vector<ProperRow> properness_probe(const InnerProduct& m_min, const std::vector<double>& radii,
                                        const QuadratureGrid& grid, int directions, std::uint64_t seed) {
  const double res = balanced_residual_free(m_min, grid);
  if (res > 1e-6) throw Error(ErrorKind::not_balanced, "properness probe needs a balanced start");
  std::vector<GeodesicSegment> rays;
  for (int d = 0; d < directions; ++d)
    rays.push_back(geodesic_from_direction(m_min, random_traceless_direction(*m_min.splitting(), seed + d)));
  std::vector<ProperRow> rows;
  for (double r : radii) {
    ProperRow row{r, 0.0};
    if (r > 0.0 && !rays.empty()) {
      row.min_increase = std::numeric_limits<double>::infinity();
      for (const auto& ray : rays) {
        GeodesicSegment scaled = ray;
        scaled.gamma *= r;
        scaled.length *= r;
        row.min_increase = std::min(row.min_increase, delta_D(scaled, grid, {12, 0}));
      }
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace relbal
