#pragma once

#include <vector>

#include "relbal/geometry.hpp"
#include "relbal/hermitian_space.hpp"

namespace relbal {

/// Rescaling factor of h_s = h / Σ|s̃_i|²_h at a point, {s̃_i} m-orthonormal.
/// Throws Error(evaluation) when the kernel underflows or is not finite.
double h_s_density(const InnerProduct& m, const PolarizedModel& model, const ChartPoint& point);

/// Volume density of 𝓕𝓢(m)^n/n! at every grid point and its integral.
struct InducedMetric {
  std::vector<double> density;
  double volume = 0.0;
};

/// Throws Error(degeneracy) if the log-kernel Hessian fails to be positive definite.
InducedMetric fs_volume(const InnerProduct& m, const QuadratureGrid& grid);

/// L2 Gram ∫ h_m(s̃_c, s̃_d) 𝓕𝓢(m)^n/n! of a block-diagonal basis S of V. The metric m is
/// the one for which S is orthonormal; only entries inside splitting blocks are filled.
struct FsGram {
  CMatrix basis;
  CMatrix gram;
  double volume = 0.0;
};

FsGram l2_gram_in_basis(const CMatrix& basis, const CharacterSplitting& splitting, const QuadratureGrid& grid);
FsGram l2_gram_orthonormal(const InnerProduct& m, const QuadratureGrid& grid);
/// Gram of the monomial basis, ⟨s_i, s_j⟩ for the L2 product of (h_m, 𝓕𝓢(m)).
CMatrix l2_gram(const InnerProduct& m, const QuadratureGrid& grid);

/// Pointwise data of the log-kernel of m on the grid.
struct KernelSample {
  double kernel = 0.0;   // Σ|s̃_i|²_h for the reference h
  double density = 0.0;  // det ∂∂̄ log K
  double mixed = 0.0;    // max |∂²log K/∂z_a∂z̄_b| over coordinates of different factors
};

std::vector<KernelSample> kernel_field(const InnerProduct& m, const QuadratureGrid& grid);
/// Maximum of KernelSample::mixed over the grid.
double mixed_hessian_max(const InnerProduct& m, const QuadratureGrid& grid);

/// Orthonormal basis of V for the L2 product of the metric h_m with volume 𝓕𝓢(m)^n/n!.
CMatrix bergman_basis(const InnerProduct& metric, const QuadratureGrid& grid);
/// Bergman density Σ h_m(s_i, s_i) of a basis orthonormal for the L2 product of h_m.
/// Throws Error(precondition) if the basis is not orthonormal within 1e-6.
std::vector<double> bergman(const InnerProduct& metric, const CMatrix& basis, const QuadratureGrid& grid);

}  // namespace relbal
