#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace relbal {

class CharacterSplitting;

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

/// One factor of a product of projective spaces: P^dim polarized by O(k).
struct FactorDescriptor {
  int dim = 1;
  int k = 1;
};

/// Monomial basis of H^0(X, L). Sections of a product are ordered with the first
/// factor index most significant, so tensor products are Kronecker products.
struct SectionBasis {
  /// Affine multi-exponent of each section, concatenated over factors.
  std::vector<std::vector<int>> labels;
  /// Centered integer torus weights (one coordinate per torus generator).
  std::vector<std::vector<int>> weights;
  /// Index of the section inside each factor basis.
  std::vector<std::vector<int>> factor_index;

  int count() const { return static_cast<int>(labels.size()); }
};

class PolarizedModel {
 public:
  static constexpr std::size_t kDefaultCap = 4096;

  /// Builds the product model. Throws Error(size) when the section count exceeds cap,
  /// Error(unsupported) for factor dimensions other than 1 and 2.
  static PolarizedModel build(const std::vector<FactorDescriptor>& factors,
                              std::size_t cap = kDefaultCap);

  const std::vector<FactorDescriptor>& factors() const { return factors_; }
  int factor_count() const { return static_cast<int>(factors_.size()); }
  int dim_complex() const { return dim_complex_; }
  int torus_rank() const { return dim_complex_; }
  /// Volume of the polarization class, i.e. the integral of ω_h^n/n! for the
  /// Fubini–Study reference metric h on L.
  double vol_reference() const { return vol_reference_; }

  const SectionBasis& basis() const { return basis_; }
  int section_count() const { return basis_.count(); }

  /// Complex-coordinate offset of factor f inside a chart point.
  int coord_offset(int f) const { return coord_offsets_[f]; }
  /// Weight-coordinate offset of factor f inside the weight vectors.
  int weight_offset(int f) const { return coord_offsets_[f]; }
  int factor_section_count(int f) const { return factor_counts_[f]; }

  PolarizedModel factor_model(int f) const;

 private:
  std::vector<FactorDescriptor> factors_;
  SectionBasis basis_;
  std::vector<int> coord_offsets_;
  std::vector<int> factor_counts_;
  int dim_complex_ = 0;
  double vol_reference_ = 0.0;
};

/// Affine exponents of the monomial basis of O(k) on P^dim, graded by total degree.
std::vector<std::vector<int>> factor_exponents(int dim, int k);

/// dim H^0(P^dim, O(k)).
int section_dimension(int dim, int k);

/// Which torus the character splitting is taken with respect to.
struct TorusSelection {
  enum class Kind { trivial, maximal, factors };
  Kind kind = Kind::maximal;
  std::vector<int> factor_ids;  // used when kind == factors

  static TorusSelection trivial() { return {Kind::trivial, {}}; }
  static TorusSelection maximal() { return {Kind::maximal, {}}; }
  static TorusSelection of_factors(std::vector<int> ids) { return {Kind::factors, std::move(ids)}; }

  /// Restriction to factor f of a product, as a selection on the factor model.
  TorusSelection restrict_to_factor(int f) const;
  std::string describe() const;
};

/// Per-section weight vectors restricted to the selected torus coordinates.
std::vector<std::vector<int>> torus_weights(const PolarizedModel& model, const TorusSelection& torus);

/// A point in a standard affine chart of every factor. charts[f] = j means the chart
/// X_j != 0 of factor f (0 is the dense chart used for integration); coords are the
/// affine coordinates X_i/X_j (i != j, increasing), concatenated over factors.
struct ChartPoint {
  std::vector<int> charts;
  std::vector<Complex> coords;

  static ChartPoint dense(std::vector<Complex> coords);
};

/// Chart-trivialized values of all sections. Throws Error(domain) for invalid charts
/// or non-finite coordinates.
CVector sections_eval(const PolarizedModel& model, const ChartPoint& point);

/// Reference (Fubini–Study) metric data at a chart point.
struct ReferenceMetric {
  /// |s_j|^2_h for every section.
  static RVector section_densities(const PolarizedModel& model, const ChartPoint& point);
  /// Volume density of ω_h^n/n! with respect to chart Lebesgue measure.
  static double volume_density(const PolarizedModel& model, const ChartPoint& point);
};

/// Tabulated quadrature for one factor on its dense chart. Angular trapezoid per torus
/// angle times a Gauss–Legendre rule on the compactified radial variables
/// (t = u/(1+u) on P^1, the simplex t_a = u_a/(1+u_1+u_2) on P^2). A collapsed factor
/// keeps a single angle θ = 0 carrying the full 2π weight, which is exact for
/// integrands invariant under the factor torus.
struct FactorGrid {
  int dim = 1;
  int k = 1;
  bool collapsed = false;
  int angular = 0;
  int radial = 0;
  std::size_t size = 0;
  int sections = 0;
  std::vector<Complex> z;          // size * dim
  std::vector<double> weight;      // chart Lebesgue measure weights
  std::vector<double> ref_density; // ω_h^n/n! density
  std::vector<Complex> values;     // size * sections
  std::vector<Complex> derivs;     // size * dim * sections, [p][c][i]

  const Complex* values_at(std::size_t p) const { return values.data() + p * sections; }
  const Complex* derivs_at(std::size_t p, int c) const {
    return derivs.data() + (p * dim + c) * sections;
  }
};

class QuadratureGrid {
 public:
  QuadratureGrid(std::shared_ptr<const PolarizedModel> model, int level, std::vector<FactorGrid> factors,
                 std::string exactness_note, TorusSelection symmetry = TorusSelection::trivial());

  const PolarizedModel& model() const { return *model_; }
  std::shared_ptr<const PolarizedModel> model_ptr() const { return model_; }
  int level() const { return level_; }
  const std::vector<FactorGrid>& factors() const { return factors_; }
  std::size_t size() const { return size_; }
  const std::string& exactness_note() const { return exactness_note_; }
  /// Torus whose angles were collapsed; integrands must be invariant under it.
  const TorusSelection& symmetry() const { return symmetry_; }
  /// Per-section weights of the symmetry torus.
  const std::vector<std::vector<int>>& symmetry_weights() const { return symmetry_weights_; }
  /// True when every block of the splitting lies in one weight space of the symmetry
  /// torus, so block-diagonal data integrates exactly over the collapsed angles.
  bool supports(const CharacterSplitting& splitting) const;
  /// Same symmetry, next level.
  QuadratureGrid refined() const;

  /// Splits a flat point index into per-factor point indices.
  void unflatten(std::size_t index, std::vector<std::size_t>& per_factor) const;
  ChartPoint point(std::size_t index) const;
  double weight(std::size_t index) const;
  double reference_density(std::size_t index) const;

 private:
  std::shared_ptr<const PolarizedModel> model_;
  int level_;
  std::vector<FactorGrid> factors_;
  std::size_t size_ = 1;
  std::string exactness_note_;
  TorusSelection symmetry_;
  std::vector<std::vector<int>> symmetry_weights_;
};

/// Node counts at level 1; each further level doubles every count.
int default_radial_nodes(int k);
int default_angular_nodes(int k);

/// Angular node count below which the trapezoid aliases for inner products far from the
/// reference metric in the noncompact directions of the automorphism group.
inline constexpr int kResolvedAngularNodes = 24;

/// Smallest level at which every factor not collapsed by the symmetry has at least
/// min_angular angular nodes.
int grid_level_for(const PolarizedModel& model, const TorusSelection& symmetry = TorusSelection::trivial(),
                   int min_angular = kResolvedAngularNodes);

/// Full grid, or with symmetry != trivial a grid whose angles acted on by that torus are
/// collapsed to a single node.
QuadratureGrid make_grid(const PolarizedModel& model, int level,
                         const TorusSelection& symmetry = TorusSelection::trivial());
QuadratureGrid make_grid(std::shared_ptr<const PolarizedModel> model, int level,
                         const TorusSelection& symmetry = TorusSelection::trivial());

/// L2 Gram matrix of the monomial basis for the reference metric and volume,
/// G_ij = ∫ conj(s_i) s_j h ω_h^n/n!. With check_convergence, recomputes on the doubled
/// grid and throws Error(accuracy) if any entry moves by more than 1e-8 relative.
CMatrix reference_gram(const QuadratureGrid& grid, bool check_convergence = false);

/// Gauss–Legendre rule on [0,1].
void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace relbal
