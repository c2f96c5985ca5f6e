#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relbal/balance_solver.hpp"

namespace relbal {

/// Kronecker product m1 ⊗ m2 (first factor most significant). Without an explicit
/// splitting, blocks are the concatenated factor weights. Throws Error(precondition)
/// when the product is not block diagonal for the given splitting.
InnerProduct tensor(const InnerProduct& m1, const InnerProduct& m2);
InnerProduct tensor(const InnerProduct& m1, const InnerProduct& m2, SplittingPtr splitting);

/// Best Kronecker approximation A ⊗ B of an (n1 n2)-square matrix, from the dominant
/// singular pair of the rearrangement R[(i1,j1),(i2,j2)] = M[(i1,i2),(j1,j2)].
struct ProductWitness {
  CMatrix first;   // hermitian, det normalized to 1 when positive definite
  CMatrix second;
  double residual = 0.0;         // ‖M − A⊗B‖_F / ‖M‖_F
  double mixed_hessian = -1.0;   // max |∂²log K/∂z_a∂z̄_b| across factors (negative if not computed)
  double first_residual = -1.0;  // balanced residuals of the factor solves
  double second_residual = -1.0;
};

ProductWitness nearest_kronecker(const CMatrix& m, int n1, int n2);
ProductWitness nearest_kronecker(const InnerProduct& m, const PolarizedModel& model);

struct SplitConfig {
  TorusSelection torus = TorusSelection::trivial();
  SolveConfig solve;
  int grid_level = 1;
  std::uint64_t seed = 1;
  double start_radius = 1.0;
  double kronecker_tolerance = 1e-6;
  double mixed_tolerance = 1e-6;
  double gap_tolerance = 1e-7;
  double tensor_tolerance = 1e-7;
  DeltaDRule gap_rule{24, 48};
  /// The product residual may move under grid refinement by at most this multiple of
  /// the solver tolerance; otherwise the grid cannot resolve the tolerance.
  double accuracy_factor = 100.0;
};

struct StageResult {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string note;
};

struct SplitReport {
  std::vector<StageResult> stages;
  bool passed = false;
  std::string failed_stage;
  ProductWitness witness;
  SolveTrace product;
  SolveTrace first;
  SolveTrace second;
  InnerProduct tensor_of_factors;
  std::vector<KernelSample> field;
  double seconds = 0.0;
};

/// Solves on the product from a non-product start, factors the limit, solves each factor,
/// and compares. Error(precondition) unless the model has exactly two factors.
SplitReport verify_splitting(const PolarizedModel& model, const SplitConfig& cfg, bool keep_field = false);

struct DistanceCheck {
  double lhs = 0.0;      // d(m1⊗m2, m1'⊗m2')²
  double rhs = 0.0;      // c1 d1² + c2 d2²
  double brute = 0.0;    // Σ_{r,j} (γ¹_r + γ²_j)²
  double d1 = 0.0;
  double d2 = 0.0;
  int coefficient1 = 0;  // N2 + 1
  int coefficient2 = 0;  // N1 + 1
};

DistanceCheck product_distance_check(const InnerProduct& m1, const InnerProduct& m1p, const InnerProduct& m2,
                                     const InnerProduct& m2p, Group group = Group::full_SL);

}  // namespace relbal
