#pragma once

#include <algorithm>
#include <vector>

#include "relbal/geometry.hpp"
#include "relbal/parallel.hpp"

namespace relbal::detail {

inline constexpr std::size_t kChunkPoints = 2048;

inline std::size_t chunk_count(const QuadratureGrid& grid) {
  return (grid.size() + kChunkPoints - 1) / kChunkPoints;
}

/// Section values of one chunk of grid points, one column per point. df[c] holds
/// ∂f/∂z_c for every chart coordinate c.
struct ChunkData {
  std::size_t begin = 0;
  Eigen::Index count = 0;
  CMatrix f;
  std::vector<CMatrix> df;
  RVector weight;
  RVector ref_density;
  std::vector<std::size_t> factor_index;  // count * factors, per-factor point index
};

inline void assemble_chunk(const QuadratureGrid& grid, std::size_t chunk, bool with_derivs, ChunkData& out) {
  const auto& model = grid.model();
  const auto& factors = grid.factors();
  const int nf = static_cast<int>(factors.size());
  const int ns = model.section_count();
  const int n = model.dim_complex();
  const auto& fidx = model.basis().factor_index;
  out.begin = chunk * kChunkPoints;
  const std::size_t end = std::min(grid.size(), out.begin + kChunkPoints);
  out.count = static_cast<Eigen::Index>(end - out.begin);
  out.f.resize(ns, out.count);
  out.df.resize(with_derivs ? n : 0);
  for (auto& d : out.df) d.resize(ns, out.count);
  out.weight.resize(out.count);
  out.ref_density.resize(out.count);
  out.factor_index.resize(static_cast<std::size_t>(out.count) * nf);

  std::vector<std::size_t> idx;
  for (Eigen::Index q = 0; q < out.count; ++q) {
    grid.unflatten(out.begin + q, idx);
    std::copy(idx.begin(), idx.end(), out.factor_index.begin() + q * nf);
    double w = 1.0, rho = 1.0;
    for (int a = 0; a < nf; ++a) {
      w *= factors[a].weight[idx[a]];
      rho *= factors[a].ref_density[idx[a]];
    }
    out.weight(q) = w;
    out.ref_density(q) = rho;
    if (nf == 1) {
      out.f.col(q) = Eigen::Map<const CVector>(factors[0].values_at(idx[0]), ns);
      if (with_derivs)
        for (int c = 0; c < n; ++c) out.df[c].col(q) = Eigen::Map<const CVector>(factors[0].derivs_at(idx[0], c), ns);
      continue;
    }
    for (int s = 0; s < ns; ++s) {
      Complex v = 1.0;
      for (int a = 0; a < nf; ++a) v *= factors[a].values_at(idx[a])[fidx[s][a]];
      out.f(s, q) = v;
    }
    if (!with_derivs) continue;
    for (int a = 0; a < nf; ++a) {
      const int off = model.coord_offset(a);
      for (int c = 0; c < factors[a].dim; ++c) {
        const Complex* d = factors[a].derivs_at(idx[a], c);
        for (int s = 0; s < ns; ++s) {
          Complex v = d[fidx[s][a]];
          for (int b = 0; b < nf; ++b)
            if (b != a) v *= factors[b].values_at(idx[b])[fidx[s][b]];
          out.df[off + c](s, q) = v;
        }
      }
    }
  }
}

/// Deterministic map-reduce over chunks: each chunk folds into its own accumulator,
/// accumulators are combined in chunk order.
template <class Acc, class Init, class Visit, class Merge>
Acc reduce_chunks(const QuadratureGrid& grid, bool with_derivs, Init&& init, Visit&& visit, Merge&& merge) {
  const std::size_t chunks = chunk_count(grid);
  std::vector<Acc> partial;
  partial.reserve(chunks);
  for (std::size_t c = 0; c < chunks; ++c) partial.push_back(init());
  parallel_chunks(chunks, [&](std::size_t c) {
    thread_local ChunkData data;
    assemble_chunk(grid, c, with_derivs, data);
    visit(partial[c], data);
  });
  Acc total = init();
  for (auto& p : partial) merge(total, p);
  return total;
}

}  // namespace relbal::detail
