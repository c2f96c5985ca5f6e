#pragma once

#include <cstdint>
#include <vector>

#include "relbal/fubini_study.hpp"
#include "relbal/hermitian_space.hpp"

namespace relbal {

/// 𝔻'(t) along a geodesic: 2 Σ_j γ_j ∫ h_{m(t)}(s_j(t), s_j(t)) 𝓕𝓢(m(t))^n/n!.
double d_prime(const GeodesicSegment& segment, double t, const QuadratureGrid& grid);

/// Gauss–Legendre nodes in t used by delta_D, and the node count of the convergence check
/// (0 disables it). A check moving the value by more than 1e-7 raises Error(accuracy).
struct DeltaDRule {
  int nodes = 24;
  int check_nodes = 48;
};

double delta_D(const GeodesicSegment& segment, const QuadratureGrid& grid, const DeltaDRule& rule = {});
/// 𝔻(m2) − 𝔻(m1) along the geodesic of the given orbit.
double delta_D(const InnerProduct& m1, const InnerProduct& m2, const QuadratureGrid& grid,
               Group group = Group::full_SL, const DeltaDRule& rule = {});

/// Traceless parts of the blocks of the L2 Gram in an orthonormal basis.
struct MomentValue {
  std::vector<CMatrix> blocks;
  double norm = 0.0;
};

MomentValue moment_map(const InnerProduct& m, const QuadratureGrid& grid);
MomentValue moment_from_gram(const FsGram& gram, const CharacterSplitting& splitting);

/// Block means of the Gram diagonal.
RVector block_means(const FsGram& gram, const CharacterSplitting& splitting);

/// Distance of the Gram from (vol/(N+1)) diag(b): Frobenius over blocks.
double balanced_residual(const FsGram& gram, const CharacterSplitting& splitting, const IndexVector& b);
/// Minimum over all b, i.e. the norm of the moment value.
double balanced_residual_free(const FsGram& gram, const CharacterSplitting& splitting);
double balanced_residual(const InnerProduct& m, const QuadratureGrid& grid, const IndexVector& b);
double balanced_residual_free(const InnerProduct& m, const QuadratureGrid& grid);

/// Gradient of 𝔻 restricted to a group orbit, expressed in the orthonormal basis of the
/// Gram: the traceless blocks plus the admissible block-trace component.
struct GroupGradient {
  CMatrix direction;   // projected Gram Π(G), block diagonal
  RVector trace_part;  // c*_k, the scalar added to block k
  RVector fitted_index;  // b for which the Gram is closest to (vol/(N+1)) b within the group's freedom
  double norm = 0.0;   // Riemannian norm of Π(G)
};

GroupGradient group_gradient(const FsGram& gram, const CharacterSplitting& splitting, Group group);
/// Norm of the group gradient of m: the convergence measure of the solvers.
double group_residual(const InnerProduct& m, const QuadratureGrid& grid, Group group);

/// Samples of 𝔻' and of 𝔻 (up to its constant) along a geodesic.
struct EnergyReport {
  std::vector<double> t;
  std::vector<double> d_prime;
  std::vector<double> energy;  // 𝔻(m(t)) − 𝔻(m(0))
  double delta_D = 0.0;
  double min_second_difference = 0.0;
  double min_derivative_increment = 0.0;
  int grid_level = 0;
  bool convex = true;
};

/// Uniform samples t_i = i/(samples−1). Energies come from 4-node Gauss–Legendre on
/// each interval. A monotonicity violation below −1e-9 triggers a rerun at the doubled
/// grid level, whose result is reported.
EnergyReport convexity_scan(const GeodesicSegment& segment, int samples, const QuadratureGrid& grid);

/// Unit directions used to test criticality: differences of coordinate directions inside
/// every block of size > 1, random traceless block directions, and the moment direction.
std::vector<CMatrix> criticality_directions(const CharacterSplitting& splitting, const MomentValue& moment,
                                            int random_count, std::uint64_t seed);
/// max |𝔻'(0)| over the directions, each evaluated along its own geodesic.
double max_directional_derivative(const InnerProduct& m, const QuadratureGrid& grid,
                                  const std::vector<CMatrix>& directions);

struct ProperRow {
  double radius = 0.0;
  double min_increase = 0.0;
};

/// min over random unit traceless directions of 𝔻(exp_m(r Γ)) − 𝔻(m).
std::vector<ProperRow> properness_probe(const InnerProduct& m_min, const std::vector<double>& radii,
                                        const QuadratureGrid& grid, int directions, std::uint64_t seed);

/// Random block-diagonal hermitian matrix with traceless blocks and unit norm.
CMatrix random_traceless_direction(const CharacterSplitting& splitting, std::uint64_t seed);

}  // namespace relbal
