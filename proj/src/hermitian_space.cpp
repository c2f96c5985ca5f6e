#include "relbal/hermitian_space.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "relbal/error.hpp"

namespace relbal {

const char* to_string(Group g) {
  switch (g) {
    case Group::full_SL: return "sl";
    case Group::G_c: return "gc";
    case Group::G_c_Tperp: return "gct";
  }
  return "?";
}

Group group_from_string(const std::string& s) {
  if (s == "sl" || s == "full_SL") return Group::full_SL;
  if (s == "gc" || s == "G_c") return Group::G_c;
  if (s == "gct" || s == "G_c_Tperp") return Group::G_c_Tperp;
  throw Error(ErrorKind::config, "unknown group '" + s + "' (expected sl, gc or gct)");
}

CharacterSplitting::CharacterSplitting(int dim, std::vector<Block> blocks)
    : dim_(dim), blocks_(std::move(blocks)), block_of_(dim, -1) {
  for (int k = 0; k < block_count(); ++k)
    for (int i : blocks_[k].members) {
      if (i < 0 || i >= dim_ || block_of_[i] != -1)
        throw Error(ErrorKind::precondition, "blocks do not partition the basis");
      block_of_[i] = k;
    }
  for (int b : block_of_)
    if (b < 0) throw Error(ErrorKind::precondition, "blocks do not cover the basis");
}

RVector CharacterSplitting::sizes() const {
  RVector n(block_count());
  for (int k = 0; k < block_count(); ++k) n(k) = block_size(k);
  return n;
}

RMatrix CharacterSplitting::constraint_matrix(Group group) const {
  const int nu = block_count();
  switch (group) {
    case Group::full_SL: return RMatrix::Ones(1, nu);
    case Group::G_c: return RMatrix::Identity(nu, nu);
    case Group::G_c_Tperp: {
      const int r = weight_rank();
      RMatrix c(1 + r, nu);
      c.row(0).setOnes();
      for (int k = 0; k < nu; ++k)
        for (int a = 0; a < r; ++a) c(1 + a, k) = blocks_[k].weight[a];
      return c;
    }
  }
  return {};
}

bool CharacterSplitting::operator==(const CharacterSplitting& other) const {
  if (dim_ != other.dim_ || blocks_.size() != other.blocks_.size()) return false;
  for (std::size_t k = 0; k < blocks_.size(); ++k)
    if (blocks_[k].weight != other.blocks_[k].weight || blocks_[k].members != other.blocks_[k].members)
      return false;
  return true;
}

SplittingPtr splitting_from_weights(const std::vector<std::vector<int>>& weights) {
  std::map<std::vector<int>, std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(weights.size()); ++i) groups[weights[i]].push_back(i);
  std::vector<CharacterSplitting::Block> blocks;
  for (auto& [w, members] : groups) blocks.push_back({w, members});
  return std::make_shared<const CharacterSplitting>(static_cast<int>(weights.size()), std::move(blocks));
}

SplittingPtr splitting_from_weights(const SectionBasis& basis) { return splitting_from_weights(basis.weights); }

SplittingPtr splitting_for(const PolarizedModel& model, const TorusSelection& torus) {
  return splitting_from_weights(torus_weights(model, torus));
}

RMatrix kernel_projector(const RMatrix& constraints) {
  const int nu = static_cast<int>(constraints.cols());
  if (constraints.rows() == 0) return RMatrix::Identity(nu, nu);
  Eigen::ColPivHouseholderQR<RMatrix> qr(constraints.transpose());
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  const RMatrix q = RMatrix(qr.householderQ()).leftCols(rank);
  return RMatrix::Identity(nu, nu) - q * q.transpose();
}

namespace {

CMatrix extract_block(const CMatrix& m, const std::vector<int>& members) {
  const int n = static_cast<int>(members.size());
  CMatrix b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = m(members[i], members[j]);
  return b;
}

void place_block(CMatrix& m, const std::vector<int>& members, const CMatrix& b) {
  const int n = static_cast<int>(members.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(members[i], members[j]) = b(i, j);
}

Eigen::LLT<CMatrix> checked_llt(const CMatrix& b) {
  Eigen::LLT<CMatrix> llt(b);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::definiteness, "inner product is not positive definite");
  const auto d = llt.matrixLLT().diagonal().real();
  if (!(d.minCoeff() > 0.0) || !std::isfinite(d.maxCoeff()))
    throw Error(ErrorKind::definiteness, "inner product is not positive definite");
  return llt;
}

}  // namespace

InnerProduct::InnerProduct(const CMatrix& matrix, SplittingPtr splitting) : splitting_(std::move(splitting)) {
  if (!splitting_) throw Error(ErrorKind::precondition, "inner product needs a splitting");
  const int n = splitting_->dim();
  if (matrix.rows() != n || matrix.cols() != n)
    throw Error(ErrorKind::precondition, "inner product dimension does not match its splitting");
  matrix_ = CMatrix::Zero(n, n);
  for (const auto& blk : splitting_->blocks()) {
    CMatrix b = extract_block(matrix, blk.members);
    b = 0.5 * (b + b.adjoint()).eval();
    checked_llt(b);
    place_block(matrix_, blk.members, b);
  }
}

InnerProduct InnerProduct::identity(SplittingPtr splitting) {
  const int n = splitting->dim();
  return InnerProduct(CMatrix::Identity(n, n), std::move(splitting));
}

CMatrix InnerProduct::block(int k) const { return extract_block(matrix_, splitting_->block(k).members); }

RVector InnerProduct::block_logdets() const {
  RVector l(splitting_->block_count());
  for (int k = 0; k < splitting_->block_count(); ++k) {
    const auto llt = checked_llt(block(k));
    l(k) = 2.0 * llt.matrixLLT().diagonal().real().array().log().sum();
  }
  return l;
}

InnerProduct InnerProduct::scaled(double c) const { return InnerProduct(matrix_ * c, splitting_); }

IndexVector IndexVector::ones(int blocks) { return {RVector::Ones(blocks)}; }

void IndexVector::validate(const CharacterSplitting& splitting) const {
  if (b.size() != splitting.block_count())
    throw Error(ErrorKind::precondition, "index length does not match the number of blocks");
  if (!(b.minCoeff() > 0.0)) throw Error(ErrorKind::precondition, "index entries must be positive");
  const double total = splitting.sizes().dot(b);
  if (std::abs(total - splitting.dim()) > 1e-10)
    throw Error(ErrorKind::precondition, "index violates sum n_k b_k = N+1");
}

CMatrix admissible_normal_basis(const InnerProduct& m, const IndexVector& b) {
  const auto& sp = *m.splitting();
  b.validate(sp);
  CMatrix s = CMatrix::Zero(m.dim(), m.dim());
  for (int k = 0; k < sp.block_count(); ++k) {
    const auto llt = checked_llt(m.block(k));
    const int n = sp.block_size(k);
    // S_k = L^{-*} sqrt(b_k):  S_k^* M_k S_k = b_k I
    CMatrix sk = llt.matrixU().solve(CMatrix::Identity(n, n)) * std::sqrt(b.b(k));
    place_block(s, sp.block(k).members, sk);
  }
  return s;
}

CMatrix admissible_orthonormal_basis(const InnerProduct& m) {
  return admissible_normal_basis(m, IndexVector::ones(m.splitting()->block_count()));
}

InnerProduct GeodesicSegment::eval(double t) const {
  const RVector scale = (-2.0 * t * gamma).array().exp();
  CMatrix m = basis_inv_adj * scale.asDiagonal() * basis_inv_adj.adjoint();
  return InnerProduct(m, splitting);
}

CMatrix GeodesicSegment::basis_at(double t) const {
  const RVector scale = (t * gamma).array().exp();
  return basis * scale.asDiagonal();
}

namespace {

void check_same_splitting(const InnerProduct& m1, const InnerProduct& m2) {
  if (!(m1.splitting() == m2.splitting() || *m1.splitting() == *m2.splitting()))
    throw Error(ErrorKind::orbit, "inner products use different splittings");
}

}  // namespace

double orbit_residual(const InnerProduct& m1, const InnerProduct& m2, Group group) {
  check_same_splitting(m1, m2);
  const RVector sigma = -0.5 * (m2.block_logdets() - m1.block_logdets());
  const RMatrix c = m1.splitting()->constraint_matrix(group);
  return (c * sigma).cwiseAbs().maxCoeff();
}

GeodesicSegment geodesic(const InnerProduct& m1, const InnerProduct& m2, Group group) {
  const double res = orbit_residual(m1, m2, group);
  if (res > 1e-8)
    throw Error(ErrorKind::orbit, "inner products are not in one " + std::string(to_string(group)) +
                                      " orbit (residual " + std::to_string(res) + ")");
  const auto& sp = *m1.splitting();
  const int n = m1.dim();
  GeodesicSegment seg;
  seg.splitting = m1.splitting();
  seg.basis = CMatrix::Zero(n, n);
  seg.basis_inv_adj = CMatrix::Zero(n, n);
  seg.gamma = RVector::Zero(n);
  for (int k = 0; k < sp.block_count(); ++k) {
    const auto& members = sp.block(k).members;
    const int nk = sp.block_size(k);
    const auto llt = checked_llt(m1.block(k));
    const CMatrix lower = llt.matrixL();
    // whiten m2 by m1 and diagonalize
    CMatrix w = llt.matrixL().solve(m2.block(k));
    w = llt.matrixL().solve(w.adjoint()).adjoint().eval();
    w = 0.5 * (w + w.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(w);
    if (eig.info() != Eigen::Success) throw Error(ErrorKind::definiteness, "co-diagonalization failed");
    const CMatrix& u = eig.eigenvectors();
    const RVector lambda = eig.eigenvalues();
    if (!(lambda.minCoeff() > 0.0)) throw Error(ErrorKind::definiteness, "second inner product is not definite");
    place_block(seg.basis, members, llt.matrixU().solve(u));
    place_block(seg.basis_inv_adj, members, lower * u);
    for (int i = 0; i < nk; ++i) seg.gamma(members[i]) = -0.5 * std::log(lambda(i));
  }
  seg.length = seg.gamma.norm();
  return seg;
}

GeodesicSegment geodesic_from_direction(const InnerProduct& m, const CMatrix& direction) {
  const auto& sp = *m.splitting();
  const int n = m.dim();
  if (direction.rows() != n || direction.cols() != n)
    throw Error(ErrorKind::precondition, "direction has the wrong size");
  const CMatrix s = admissible_orthonormal_basis(m);
  GeodesicSegment seg;
  seg.splitting = m.splitting();
  seg.basis = CMatrix::Zero(n, n);
  seg.gamma = RVector::Zero(n);
  for (int k = 0; k < sp.block_count(); ++k) {
    const auto& members = sp.block(k).members;
    CMatrix g = extract_block(direction, members);
    g = 0.5 * (g + g.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(g);
    const CMatrix sk = extract_block(s, members) * eig.eigenvectors();
    place_block(seg.basis, members, sk);
    for (std::size_t i = 0; i < members.size(); ++i) seg.gamma(members[i]) = eig.eigenvalues()(i);
  }
  seg.basis_inv_adj = seg.basis.adjoint().inverse();
  seg.length = seg.gamma.norm();
  return seg;
}

double distance(const InnerProduct& m1, const InnerProduct& m2, Group group) {
  return geodesic(m1, m2, group).length;
}

double riemannian_inner(const CMatrix& tangent1, const CMatrix& tangent2, const InnerProduct& m) {
  Eigen::LLT<CMatrix> llt(m.matrix());
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::definiteness, "base point is not positive definite");
  const CMatrix a = llt.solve(tangent1);
  const CMatrix b = llt.solve(tangent2);
  return (a * b).trace().real();
}

InnerProduct orbit_project(const InnerProduct& m, Group group) {
  const auto& sp = *m.splitting();
  const RVector l = m.block_logdets();
  const RVector target = kernel_projector(sp.constraint_matrix(group)) * l;
  CMatrix out = m.matrix();
  for (int k = 0; k < sp.block_count(); ++k) {
    const double f = std::exp((target(k) - l(k)) / sp.block_size(k));
    for (int i : sp.block(k).members)
      for (int j : sp.block(k).members) out(i, j) *= f;
  }
  return InnerProduct(out, m.splitting());
}

nlohmann::json to_json(const InnerProduct& m) {
  nlohmann::json blocks = nlohmann::json::array();
  const auto& sp = *m.splitting();
  for (int k = 0; k < sp.block_count(); ++k) {
    const CMatrix b = m.block(k);
    nlohmann::json cells = nlohmann::json::array();
    for (int i = 0; i < b.rows(); ++i)
      for (int j = 0; j < b.cols(); ++j) cells.push_back({b(i, j).real(), b(i, j).imag()});
    blocks.push_back({{"weight", sp.block(k).weight}, {"members", sp.block(k).members}, {"matrix", cells}});
  }
  return {{"dim", m.dim()}, {"blocks", blocks}};
}

InnerProduct inner_product_from_json(const nlohmann::json& j) {
  try {
    const int n = j.at("dim").get<int>();
    std::vector<CharacterSplitting::Block> blocks;
    CMatrix m = CMatrix::Zero(n, n);
    for (const auto& jb : j.at("blocks")) {
      CharacterSplitting::Block blk;
      blk.weight = jb.at("weight").get<std::vector<int>>();
      blk.members = jb.at("members").get<std::vector<int>>();
      const auto& cells = jb.at("matrix");
      const std::size_t nk = blk.members.size();
      if (cells.size() != nk * nk) throw Error(ErrorKind::config, "block matrix has the wrong number of cells");
      for (std::size_t a = 0; a < nk; ++a)
        for (std::size_t b = 0; b < nk; ++b) {
          const auto& c = cells[a * nk + b];
          m(blk.members[a], blk.members[b]) = Complex(c.at(0).get<double>(), c.at(1).get<double>());
        }
      blocks.push_back(std::move(blk));
    }
    auto sp = std::make_shared<const CharacterSplitting>(n, std::move(blocks));
    return InnerProduct(m, sp);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("malformed inner product: ") + e.what());
  }
}

}  // namespace relbal
