#include "relbal/balance_solver.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "relbal/error.hpp"

namespace relbal {

void SolveConfig::validate() const {
  if (max_iters < 1) throw Error(ErrorKind::config, "max_iters must be at least 1");
  if (!(tolerance > 0.0)) throw Error(ErrorKind::config, "tolerance must be positive");
  if (!(damping > 0.0 && damping <= 1.0)) throw Error(ErrorKind::config, "damping must lie in (0, 1]");
  if (anderson < 0) throw Error(ErrorKind::config, "anderson depth must be non-negative");
}

namespace {

IndexVector index_from(const GroupGradient& gg, const CharacterSplitting& sp) {
  IndexVector b{gg.fitted_index};
  // remove rounding drift so Σ n_k b_k = N+1 holds exactly enough for validate()
  b.b *= sp.dim() / sp.sizes().dot(b.b);
  return b;
}

CMatrix lift(const FsGram& g, const CharacterSplitting& sp, const RVector& b) {
  const double scale = sp.dim() / g.volume;
  CMatrix p = CMatrix::Zero(sp.dim(), sp.dim());
  for (int k = 0; k < sp.block_count(); ++k)
    for (int i : sp.block(k).members)
      for (int j : sp.block(k).members) p(i, j) = g.gram(i, j) * (scale / b(k));
  const CMatrix sinv = g.basis.inverse();
  return sinv.adjoint() * p * sinv;
}

// Real coordinates of the block entries of a hermitian matrix.
RVector pack(const CMatrix& m, const CharacterSplitting& sp) {
  std::vector<double> v;
  for (const auto& blk : sp.blocks())
    for (std::size_t a = 0; a < blk.members.size(); ++a)
      for (std::size_t b = a; b < blk.members.size(); ++b) {
        const Complex z = m(blk.members[a], blk.members[b]);
        v.push_back(z.real());
        if (b != a) v.push_back(z.imag());
      }
  return Eigen::Map<RVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

CMatrix unpack(const RVector& v, const CharacterSplitting& sp) {
  CMatrix m = CMatrix::Zero(sp.dim(), sp.dim());
  Eigen::Index e = 0;
  for (const auto& blk : sp.blocks())
    for (std::size_t a = 0; a < blk.members.size(); ++a)
      for (std::size_t b = a; b < blk.members.size(); ++b) {
        const int i = blk.members[a], j = blk.members[b];
        if (b == a) {
          m(i, i) = v(e++);
        } else {
          m(i, j) = Complex(v(e), v(e + 1));
          m(j, i) = std::conj(m(i, j));
          e += 2;
        }
      }
  return m;
}

/// Anderson mixing on the fixed-point map x -> g(x).
class Mixer {
 public:
  explicit Mixer(int depth) : depth_(depth) {}

  void reset() {
    warm_ = false;
    xs_.clear();
    gs_.clear();
  }

  RVector next(const RVector& x, const RVector& g) {
    xs_.push_back(x);
    gs_.push_back(g);
    if (static_cast<int>(xs_.size()) > depth_ + 1) {
      xs_.erase(xs_.begin());
      gs_.erase(gs_.begin());
    }
    const int m = static_cast<int>(xs_.size()) - 1;
    // after a restart, rebuild the full history from plain steps before extrapolating
    if (m < depth_ && !warm_) return g;
    warm_ = true;
    RMatrix df(x.size(), m), dg(x.size(), m);
    for (int i = 0; i < m; ++i) {
      df.col(i) = (gs_[i + 1] - xs_[i + 1]) - (gs_[i] - xs_[i]);
      dg.col(i) = gs_[i + 1] - gs_[i];
    }
    Eigen::CompleteOrthogonalDecomposition<RMatrix> cod(df);
    cod.setThreshold(1e-8);
    const RVector gamma = cod.solve(g - x);
    return g - dg * gamma;
  }

 private:
  int depth_;
  bool warm_ = false;
  std::vector<RVector> xs_;
  std::vector<RVector> gs_;
};

}  // namespace

SolveTrace t_iterate(const InnerProduct& m0, const QuadratureGrid& grid, const SolveConfig& cfg) {
  cfg.validate();
  const auto& sp = *m0.splitting();
  SolveTrace trace;
  trace.method = "t_iterate";
  InnerProduct m = orbit_project(m0, cfg.group);
  double damping = cfg.damping;
  double previous = std::numeric_limits<double>::infinity();
  int increases = 0;
  Mixer mixer(cfg.anderson);
  for (int it = 0;; ++it) {
    const FsGram g = l2_gram_orthonormal(m, grid);
    const GroupGradient gg = group_gradient(g, sp, cfg.group);
    if (!trace.steps.empty()) trace.steps.back().residual = gg.norm;
    trace.final = m;
    trace.residual = gg.norm;
    trace.index = index_from(gg, sp);
    if (gg.norm < cfg.tolerance) {
      trace.converged = true;
      trace.message = "converged";
      break;
    }
    if (gg.norm > previous) {
      mixer.reset();
      if (cfg.anderson == 0) damping *= 0.5;
      if (++increases >= 5) {
        trace.message = "residual grew for 5 consecutive iterations";
        break;
      }
    } else {
      increases = 0;
    }
    previous = gg.norm;
    if (it >= cfg.max_iters) {
      trace.message = "iteration limit reached";
      break;
    }
    RVector b = gg.fitted_index;
    if (!(b.minCoeff() > 0.0)) b = block_means(g, sp) * (sp.dim() / g.volume);
    const CMatrix target = lift(g, sp, b);
    InnerProduct next = orbit_project(InnerProduct((1.0 - damping) * m.matrix() + damping * target, m.splitting()),
                                      cfg.group);
    if (cfg.anderson > 0) {
      const CMatrix mixed = unpack(mixer.next(pack(m.matrix(), sp), pack(next.matrix(), sp)), sp);
      try {
        next = orbit_project(InnerProduct(mixed, m.splitting()), cfg.group);
      } catch (const Error&) {
        mixer.reset();
      }
    }
    SolveStep step;
    step.iteration = it + 1;
    step.damping = damping;
    const GeodesicSegment seg = geodesic(m, next, cfg.group);
    step.distance = seg.length;
    if (cfg.track_energy) step.delta_D = delta_D(seg, grid, cfg.energy_rule);
    trace.steps.push_back(step);
    m = std::move(next);
  }
  return trace;
}

SolveTrace gradient_descent_D(const InnerProduct& m0, const QuadratureGrid& grid, const SolveConfig& cfg) {
  cfg.validate();
  const auto& sp = *m0.splitting();
  SolveTrace trace;
  trace.method = "gradient_descent_D";
  InnerProduct m = orbit_project(m0, cfg.group);
  for (int it = 0;; ++it) {
    const FsGram g = l2_gram_orthonormal(m, grid);
    const GroupGradient gg = group_gradient(g, sp, cfg.group);
    if (!trace.steps.empty()) trace.steps.back().residual = gg.norm;
    trace.final = m;
    trace.residual = gg.norm;
    trace.index = index_from(gg, sp);
    if (gg.norm < cfg.tolerance) {
      trace.converged = true;
      trace.message = "converged";
      break;
    }
    if (it >= cfg.max_iters) {
      trace.message = "iteration limit reached";
      break;
    }
    const CMatrix direction = -gg.direction * (sp.dim() / g.volume);
    const double slope = 2.0 * (direction * g.gram).trace().real();
    const GeodesicSegment ray = geodesic_from_direction(m, direction);
    double tau = 0.5 * cfg.damping;
    bool accepted = false;
    GeodesicSegment step_seg;
    double decrease = 0.0;
    while (tau >= 1e-12) {
      step_seg = ray;
      step_seg.gamma *= tau;
      step_seg.length *= tau;
      decrease = delta_D(step_seg, grid, cfg.energy_rule);
      if (decrease <= 1e-4 * tau * slope) {
        accepted = true;
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) {
      trace.message = "line search stalled";
      break;
    }
    SolveStep step;
    step.iteration = it + 1;
    step.damping = tau;
    step.delta_D = decrease;
    step.distance = step_seg.length;
    trace.steps.push_back(step);
    m = orbit_project(step_seg.eval(1.0), cfg.group);
  }
  return trace;
}

IndexVector recover_index(const InnerProduct& m, const QuadratureGrid& grid) {
  const auto& sp = *m.splitting();
  const FsGram g = l2_gram_orthonormal(m, grid);
  const double res = balanced_residual_free(g, sp);
  if (res > 1e-6)
    throw Error(ErrorKind::not_balanced, "free balanced residual " + std::to_string(res) + " exceeds 1e-6");
  IndexVector b{block_means(g, sp) * (sp.dim() / g.volume)};
  if (std::abs(sp.sizes().dot(b.b) - sp.dim()) > 1e-8)
    throw Error(ErrorKind::accuracy, "recovered index violates sum n_k b_k = N+1");
  return b;
}

ConstraintFit fit_constraint_t(const IndexVector& b, const CharacterSplitting& splitting) {
  b.validate(splitting);
  const int nu = splitting.block_count();
  const int r = splitting.weight_rank();
  const RVector sizes = splitting.sizes();
  RMatrix w(nu, r);
  for (int k = 0; k < nu; ++k)
    for (int a = 0; a < r; ++a) w(k, a) = splitting.block(k).weight[a];
  // the weights are centered, so Σ n_l x_l = 0 and the denominator is 1
  const RVector target = b.b.array() - 1.0;
  const RVector root = sizes.array().sqrt();
  ConstraintFit fit;
  if (r == 0) {
    fit.xi = RVector(0);
    fit.x = RVector::Zero(nu);
  } else {
    const RMatrix a = root.asDiagonal() * w;
    fit.xi = a.completeOrthogonalDecomposition().solve(root.cwiseProduct(target));
    fit.x = w * fit.xi;
  }
  const double denom = 1.0 + sizes.dot(fit.x) / splitting.dim();
  const RVector predicted = (1.0 + fit.x.array()) / denom;
  fit.residual = root.cwiseProduct(predicted - b.b).norm();
  return fit;
}

InnerProduct default_start(const QuadratureGrid& grid, const SplittingPtr& splitting, Group group) {
  return orbit_project(InnerProduct(reference_gram(grid), splitting), group);
}

CMatrix hermitian_exp(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (h + h.adjoint()));
  const RVector e = eig.eigenvalues().array().exp();
  return eig.eigenvectors() * e.asDiagonal() * eig.eigenvectors().adjoint();
}

InnerProduct random_start(const SplittingPtr& splitting, Group group, std::uint64_t seed, double radius) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const int n = splitting->dim();
  CMatrix h = CMatrix::Zero(n, n);
  for (const auto& blk : splitting->blocks())
    for (int i : blk.members)
      for (int j : blk.members) h(i, j) = Complex(normal(rng), normal(rng));
  h = 0.5 * (h + h.adjoint()).eval();
  h *= radius * uniform(rng) / h.norm();
  return orbit_project(InnerProduct(hermitian_exp(h), splitting), group);
}

}  // namespace relbal
