#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relbal/kempf_ness.hpp"

namespace relbal {

struct SolveConfig {
  Group group = Group::full_SL;
  int max_iters = 200;
  double tolerance = 1e-9;
  double damping = 1.0;
  /// Anderson mixing depth for t_iterate (0 = plain fixed-point steps).
  int anderson = 0;
  /// Record 𝔻(m_{j+1}) − 𝔻(m_j) for every step of t_iterate.
  bool track_energy = false;
  DeltaDRule energy_rule{8, 0};

  /// Throws Error(config) for max_iters < 1, tolerance <= 0, damping outside (0, 1] or
  /// negative anderson depth.
  void validate() const;
};

struct SolveStep {
  int iteration = 0;
  double residual = 0.0;
  double delta_D = 0.0;
  double distance = 0.0;
  double damping = 0.0;
};

struct SolveTrace {
  std::string method;
  std::vector<SolveStep> steps;
  InnerProduct final;
  IndexVector index;
  double residual = 0.0;
  bool converged = false;
  std::string message;
};

/// Fixed-point iteration m ↦ orbit_project((1−δ) m + δ T(m)), T(m) the L2 Gram lifted
/// back through the orthonormal basis and divided by the fitted index. With anderson > 0
/// the step is extrapolated from the last few iterates (same fixed points); an
/// extrapolation that is not positive definite, or a residual increase, restarts the
/// history. Nonconvergence is
/// reported in the trace; degenerate 𝓕𝓢 data throws Error(degeneracy).
SolveTrace t_iterate(const InnerProduct& m0, const QuadratureGrid& grid, const SolveConfig& cfg);

/// Geodesic descent on 𝔻 with Armijo backtracking; stalls (converged = false) when the
/// step falls below 1e-12.
SolveTrace gradient_descent_D(const InnerProduct& m0, const QuadratureGrid& grid, const SolveConfig& cfg);

/// Index of a balanced inner product; Error(not_balanced) if the free residual exceeds 1e-6.
IndexVector recover_index(const InnerProduct& m, const QuadratureGrid& grid);

struct ConstraintFit {
  RVector xi;  // torus parameter, x_k = <w_k, xi>
  RVector x;
  double residual = 0.0;
};

/// Least-squares fit of b_k = (1 + x_k)/(1 + Σ n_l x_l/(N+1)) with x_k = <w_k, ξ>.
/// Error(precondition) when b is not a valid index.
ConstraintFit fit_constraint_t(const IndexVector& b, const CharacterSplitting& splitting);

/// Reference Gram restricted to the blocks and projected to the group's orbit.
InnerProduct default_start(const QuadratureGrid& grid, const SplittingPtr& splitting, Group group);
/// exp(H) for a random block-diagonal hermitian H with ‖H‖_F ≤ radius, projected to the orbit.
InnerProduct random_start(const SplittingPtr& splitting, Group group, std::uint64_t seed, double radius = 1.0);

/// exp of a hermitian matrix.
CMatrix hermitian_exp(const CMatrix& h);

}  // namespace relbal
