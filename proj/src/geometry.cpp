#include "relbal/geometry.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "relbal/error.hpp"

namespace relbal {

std::vector<std::vector<int>> factor_exponents(int dim, int k) {
  std::vector<std::vector<int>> out;
  if (dim == 1) {
    for (int j = 0; j <= k; ++j) out.push_back({j});
  } else if (dim == 2) {
    for (int total = 0; total <= k; ++total)
      for (int a = total; a >= 0; --a) out.push_back({a, total - a});
  } else {
    throw Error(ErrorKind::unsupported, "projective dimension " + std::to_string(dim));
  }
  return out;
}

int section_dimension(int dim, int k) {
  if (dim == 1) return k + 1;
  if (dim == 2) return (k + 1) * (k + 2) / 2;
  throw Error(ErrorKind::unsupported, "projective dimension " + std::to_string(dim));
}

namespace {

// Centered weights of one factor: a_c * count - sum(a_c), divided by the gcd of the
// coordinate's values so that odd centerings stay integral.
std::vector<std::vector<int>> centered_weights(const std::vector<std::vector<int>>& exps, int dim) {
  const int count = static_cast<int>(exps.size());
  std::vector<std::vector<int>> w(count, std::vector<int>(dim, 0));
  for (int c = 0; c < dim; ++c) {
    int sum = 0;
    for (const auto& e : exps) sum += e[c];
    int g = 0;
    for (int i = 0; i < count; ++i) {
      w[i][c] = exps[i][c] * count - sum;
      g = std::gcd(g, std::abs(w[i][c]));
    }
    if (g > 1)
      for (int i = 0; i < count; ++i) w[i][c] /= g;
  }
  return w;
}

double factor_volume(int dim, int k) {
  const double pi = std::numbers::pi;
  if (dim == 1) return k * pi;
  return 0.5 * k * k * pi * pi;
}

}  // namespace

PolarizedModel PolarizedModel::build(const std::vector<FactorDescriptor>& factors, std::size_t cap) {
  if (factors.empty()) throw Error(ErrorKind::config, "model needs at least one factor");
  PolarizedModel model;
  model.factors_ = factors;
  std::size_t total = 1;
  std::vector<std::vector<std::vector<int>>> exps, weights;
  double vol = 1.0;
  for (const auto& f : factors) {
    if (f.dim != 1 && f.dim != 2)
      throw Error(ErrorKind::unsupported, "projective dimension " + std::to_string(f.dim));
    if (f.k < 1) throw Error(ErrorKind::config, "line bundle power must be >= 1");
    model.coord_offsets_.push_back(model.dim_complex_);
    model.dim_complex_ += f.dim;
    const int n = section_dimension(f.dim, f.k);
    model.factor_counts_.push_back(n);
    total *= static_cast<std::size_t>(n);
    if (total > cap)
      throw Error(ErrorKind::size, "section count exceeds cap of " + std::to_string(cap));
    exps.push_back(factor_exponents(f.dim, f.k));
    weights.push_back(centered_weights(exps.back(), f.dim));
    vol *= factor_volume(f.dim, f.k);
  }
  model.vol_reference_ = vol;

  auto& basis = model.basis_;
  std::vector<int> idx(factors.size(), 0);
  for (std::size_t s = 0; s < total; ++s) {
    std::size_t rem = s;
    for (int f = static_cast<int>(factors.size()) - 1; f >= 0; --f) {
      idx[f] = static_cast<int>(rem % model.factor_counts_[f]);
      rem /= model.factor_counts_[f];
    }
    std::vector<int> label, weight;
    for (std::size_t f = 0; f < factors.size(); ++f) {
      label.insert(label.end(), exps[f][idx[f]].begin(), exps[f][idx[f]].end());
      weight.insert(weight.end(), weights[f][idx[f]].begin(), weights[f][idx[f]].end());
    }
    basis.labels.push_back(std::move(label));
    basis.weights.push_back(std::move(weight));
    basis.factor_index.push_back(idx);
  }
  return model;
}

PolarizedModel PolarizedModel::factor_model(int f) const {
  return build({factors_.at(f)});
}

TorusSelection TorusSelection::restrict_to_factor(int f) const {
  switch (kind) {
    case Kind::trivial: return trivial();
    case Kind::maximal: return maximal();
    case Kind::factors:
      for (int id : factor_ids)
        if (id == f) return maximal();
      return trivial();
  }
  return trivial();
}

std::string TorusSelection::describe() const {
  switch (kind) {
    case Kind::trivial: return "trivial";
    case Kind::maximal: return "maximal";
    case Kind::factors: {
      std::ostringstream os;
      os << "factors[";
      for (std::size_t i = 0; i < factor_ids.size(); ++i) os << (i ? "," : "") << factor_ids[i];
      os << "]";
      return os.str();
    }
  }
  return "?";
}

std::vector<std::vector<int>> torus_weights(const PolarizedModel& model, const TorusSelection& torus) {
  std::vector<int> coords;
  for (int f = 0; f < model.factor_count(); ++f) {
    bool keep = torus.kind == TorusSelection::Kind::maximal;
    if (torus.kind == TorusSelection::Kind::factors) {
      for (int id : torus.factor_ids) {
        if (id < 0 || id >= model.factor_count())
          throw Error(ErrorKind::config, "torus factor index out of range");
        keep = keep || id == f;
      }
    }
    if (keep)
      for (int c = 0; c < model.factors()[f].dim; ++c) coords.push_back(model.weight_offset(f) + c);
  }
  std::vector<std::vector<int>> out;
  out.reserve(model.section_count());
  for (const auto& w : model.basis().weights) {
    std::vector<int> r;
    r.reserve(coords.size());
    for (int c : coords) r.push_back(w[c]);
    out.push_back(std::move(r));
  }
  return out;
}

ChartPoint ChartPoint::dense(std::vector<Complex> coords) {
  ChartPoint p;
  p.coords = std::move(coords);
  return p;
}

namespace {

void check_point(const PolarizedModel& model, const ChartPoint& point) {
  if (static_cast<int>(point.coords.size()) != model.dim_complex())
    throw Error(ErrorKind::domain, "chart point has wrong number of coordinates");
  if (!point.charts.empty() && static_cast<int>(point.charts.size()) != model.factor_count())
    throw Error(ErrorKind::domain, "chart point has wrong number of chart ids");
  for (int f = 0; f < model.factor_count(); ++f) {
    const int chart = point.charts.empty() ? 0 : point.charts[f];
    if (chart < 0 || chart > model.factors()[f].dim)
      throw Error(ErrorKind::domain, "chart id out of range");
  }
  for (const auto& z : point.coords)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw Error(ErrorKind::domain, "point lies outside every chart");
}

// Value of the section with affine exponent a on chart `chart` of P^dim(k).
Complex factor_section(int dim, int k, const std::vector<int>& a, int chart, const Complex* zeta) {
  std::vector<int> e(dim + 1);
  e[0] = k;
  for (int c = 0; c < dim; ++c) {
    e[c + 1] = a[c];
    e[0] -= a[c];
  }
  Complex v = 1.0;
  int slot = 0;
  for (int j = 0; j <= dim; ++j) {
    if (j == chart) continue;
    for (int p = 0; p < e[j]; ++p) v *= zeta[slot];
    ++slot;
  }
  return v;
}

}  // namespace

CVector sections_eval(const PolarizedModel& model, const ChartPoint& point) {
  check_point(model, point);
  const int nf = model.factor_count();
  std::vector<CVector> per_factor(nf);
  for (int f = 0; f < nf; ++f) {
    const auto& fd = model.factors()[f];
    const auto exps = factor_exponents(fd.dim, fd.k);
    const int chart = point.charts.empty() ? 0 : point.charts[f];
    per_factor[f].resize(exps.size());
    for (std::size_t i = 0; i < exps.size(); ++i)
      per_factor[f](i) =
          factor_section(fd.dim, fd.k, exps[i], chart, point.coords.data() + model.coord_offset(f));
  }
  CVector out(model.section_count());
  for (int s = 0; s < model.section_count(); ++s) {
    Complex v = 1.0;
    for (int f = 0; f < nf; ++f) v *= per_factor[f](model.basis().factor_index[s][f]);
    out(s) = v;
  }
  return out;
}

RVector ReferenceMetric::section_densities(const PolarizedModel& model, const ChartPoint& point) {
  const CVector s = sections_eval(model, point);
  double log_h = 0.0;
  for (int f = 0; f < model.factor_count(); ++f) {
    const auto& fd = model.factors()[f];
    double r2 = 0.0;
    for (int c = 0; c < fd.dim; ++c) r2 += std::norm(point.coords[model.coord_offset(f) + c]);
    log_h -= fd.k * std::log1p(r2);
  }
  return s.cwiseAbs2() * std::exp(log_h);
}

double ReferenceMetric::volume_density(const PolarizedModel& model, const ChartPoint& point) {
  check_point(model, point);
  double density = 1.0;
  for (int f = 0; f < model.factor_count(); ++f) {
    const auto& fd = model.factors()[f];
    double r2 = 0.0;
    for (int c = 0; c < fd.dim; ++c) r2 += std::norm(point.coords[model.coord_offset(f) + c]);
    // det of k ∂∂̄ log(1+|z|^2) on P^dim: k^dim / (1+|z|^2)^(dim+1)
    density *= std::pow(fd.k, fd.dim) / std::pow(1.0 + r2, fd.dim + 1);
  }
  return density;
}

}  // namespace relbal
