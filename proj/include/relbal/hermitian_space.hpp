#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "relbal/geometry.hpp"

namespace relbal {

/// Orbit groups acting on torus-compatible inner products.
///  full_SL   : S(Π GL(n_k)), total log-det fixed
///  G_c       : Π SL(n_k), every block log-det fixed
///  G_c_Tperp : block log-dets constrained by Σ_k L_k = 0 and Σ_k w_k L_k = 0
enum class Group { full_SL, G_c, G_c_Tperp };

const char* to_string(Group g);
Group group_from_string(const std::string& s);

/// Decomposition of V into torus weight spaces.
class CharacterSplitting {
 public:
  struct Block {
    std::vector<int> weight;
    std::vector<int> members;
  };

  CharacterSplitting() = default;
  CharacterSplitting(int dim, std::vector<Block> blocks);

  int dim() const { return dim_; }
  int block_count() const { return static_cast<int>(blocks_.size()); }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(int k) const { return blocks_[k]; }
  int block_size(int k) const { return static_cast<int>(blocks_[k].members.size()); }
  int block_of(int index) const { return block_of_[index]; }
  int weight_rank() const { return blocks_.empty() ? 0 : static_cast<int>(blocks_[0].weight.size()); }
  RVector sizes() const;

  /// Linear constraints on the block log-det vector defining the group's orbit.
  RMatrix constraint_matrix(Group group) const;

  bool operator==(const CharacterSplitting& other) const;

 private:
  int dim_ = 0;
  std::vector<Block> blocks_;
  std::vector<int> block_of_;
};

using SplittingPtr = std::shared_ptr<const CharacterSplitting>;

/// Groups section indices by equal weight vector; blocks ordered lexicographically by weight.
SplittingPtr splitting_from_weights(const std::vector<std::vector<int>>& weights);
SplittingPtr splitting_from_weights(const SectionBasis& basis);
SplittingPtr splitting_for(const PolarizedModel& model, const TorusSelection& torus);

/// Orthogonal projector onto ker(C), with C rank-revealed by column-pivoted QR
/// (threshold 1e-10).
RMatrix kernel_projector(const RMatrix& constraints);

/// Positive-definite hermitian form on V, block diagonal for its splitting, stored in
/// the reference (monomial) basis with M_ij = m(s_i, s_j).
class InnerProduct {
 public:
  InnerProduct() = default;
  /// Zeroes off-block entries, symmetrizes, and checks definiteness
  /// (Error(definiteness) otherwise).
  InnerProduct(const CMatrix& matrix, SplittingPtr splitting);

  static InnerProduct identity(SplittingPtr splitting);

  const CMatrix& matrix() const { return matrix_; }
  const SplittingPtr& splitting() const { return splitting_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }

  CMatrix block(int k) const;
  /// Log-determinant of every block.
  RVector block_logdets() const;

  InnerProduct scaled(double c) const;

 private:
  CMatrix matrix_;
  SplittingPtr splitting_;
};

/// Index b of an admissible normal basis: Σ n_k b_k = N + 1.
struct IndexVector {
  RVector b;

  static IndexVector ones(int blocks);
  /// Throws Error(precondition) when entries are non-positive or Σ n_k b_k ≠ N+1 (1e-10).
  void validate(const CharacterSplitting& splitting) const;
};

/// Block-diagonal basis S (columns in the reference basis) with S* M S = diag(b).
CMatrix admissible_normal_basis(const InnerProduct& m, const IndexVector& b);
/// Admissible orthonormal basis, S* M S = I, equivalently S S* = M^{-1}.
CMatrix admissible_orthonormal_basis(const InnerProduct& m);

/// Geodesic m(t) from m1 to m2: the inner product for which S diag(e^{tγ}) is an
/// admissible orthonormal basis.
struct GeodesicSegment {
  CMatrix basis;          // S, m1-orthonormal, co-diagonalizing m2
  CMatrix basis_inv_adj;  // S^{-*}
  RVector gamma;          // m2(s_i, s_i) = e^{-2γ_i}
  double length = 0.0;    // sqrt(Σ γ_i^2)
  SplittingPtr splitting;

  InnerProduct eval(double t) const;
  /// Orthonormal basis of m(t).
  CMatrix basis_at(double t) const;
};

/// Residual of the group's log-det constraints on the block sums of γ.
double orbit_residual(const InnerProduct& m1, const InnerProduct& m2, Group group);

/// Throws Error(orbit) if the pair is not in one orbit (residual > 1e-8).
GeodesicSegment geodesic(const InnerProduct& m1, const InnerProduct& m2, Group group = Group::full_SL);
/// Geodesic starting at m in direction Γ (hermitian, block diagonal, expressed in the
/// admissible orthonormal basis of m): the basis moves as s(t) = S e^{tΓ}.
GeodesicSegment geodesic_from_direction(const InnerProduct& m, const CMatrix& direction);

double distance(const InnerProduct& m1, const InnerProduct& m2, Group group = Group::full_SL);

/// Tr(M1 m^{-1} M2 m^{-1}).
double riemannian_inner(const CMatrix& tangent1, const CMatrix& tangent2, const InnerProduct& m);

/// Rescales blocks so the block log-det vector is projected onto the group's
/// constraint kernel.
InnerProduct orbit_project(const InnerProduct& m, Group group);

nlohmann::json to_json(const InnerProduct& m);
InnerProduct inner_product_from_json(const nlohmann::json& j);

}  // namespace relbal
