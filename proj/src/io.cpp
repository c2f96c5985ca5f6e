#include "relbal/io.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "relbal/error.hpp"

namespace relbal {

namespace {

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

nlohmann::json doubles(const RVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

TorusSelection torus_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "trivial") return TorusSelection::trivial();
    if (s == "maximal") return TorusSelection::maximal();
    throw Error(ErrorKind::config, "unknown torus '" + s + "'");
  }
  if (j.is_array()) return TorusSelection::of_factors(j.get<std::vector<int>>());
  throw Error(ErrorKind::config, "torus must be \"trivial\", \"maximal\" or a list of factor ids");
}

nlohmann::json to_json(const TorusSelection& t) {
  switch (t.kind) {
    case TorusSelection::Kind::trivial: return "trivial";
    case TorusSelection::Kind::maximal: return "maximal";
    case TorusSelection::Kind::factors: return t.factor_ids;
  }
  return nullptr;
}

RunConfig parse_run_config(const nlohmann::json& j) {
  RunConfig c;
  try {
    if (!j.is_object()) throw Error(ErrorKind::config, "config must be a JSON object");
    c.raw = j;
    for (const auto& f : j.at("factors")) c.factors.push_back({f.at("dim").get<int>(), f.at("k").get<int>()});
    if (c.factors.empty()) throw Error(ErrorKind::config, "factors must not be empty");
    for (const auto& f : c.factors)
      if (f.k < 1) throw Error(ErrorKind::config, "every power k must be at least 1");
    c.grid_level = get_or(j, "grid_level", c.grid_level);
    if (c.grid_level < 1) throw Error(ErrorKind::config, "grid_level must be at least 1");
    if (j.contains("torus")) c.torus = torus_from_json(j.at("torus"));
    if (j.contains("group")) c.solve.group = group_from_string(j.at("group").get<std::string>());
    c.solve.max_iters = get_or(j, "max_iters", c.solve.max_iters);
    c.solve.tolerance = get_or(j, "tolerance", c.solve.tolerance);
    c.solve.damping = get_or(j, "damping", c.solve.damping);
    c.solve.track_energy = get_or(j, "track_energy", c.solve.track_energy);
    c.solve.anderson = get_or(j, "anderson", c.solve.anderson);
    c.method = get_or(j, "method", c.method);
    if (c.method != "t_iterate" && c.method != "gradient")
      throw Error(ErrorKind::config, "method must be t_iterate or gradient");
    c.start = get_or(j, "start", c.start);
    if (c.start != "default" && c.start != "random") throw Error(ErrorKind::config, "start must be default or random");
    c.start_radius = get_or(j, "start_radius", c.start_radius);
    c.seed = get_or(j, "seed", c.seed);
    c.cap = get_or(j, "cap", c.cap);
    c.samples = get_or(j, "samples", c.samples);
    c.trials = get_or(j, "trials", c.trials);
    c.perturbation = get_or(j, "perturbation", c.perturbation);
    c.m1_file = get_or(j, "m1", c.m1_file);
    c.m2_file = get_or(j, "m2", c.m2_file);
    c.metric_file = get_or(j, "metric", c.metric_file);
    c.index = get_or(j, "index", c.index);
    c.write_field = get_or(j, "write_field", c.write_field);
    if (j.contains("split")) c.split = j.at("split");
    if (c.samples < 5) throw Error(ErrorKind::config, "samples must be at least 5");
    if (c.trials < 1) throw Error(ErrorKind::config, "trials must be at least 1");
    c.solve.validate();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("bad config: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open config " + path);
  try {
    return parse_run_config(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::config, std::string("malformed JSON in ") + path + ": " + e.what());
  }
}

std::uint64_t config_hash(const nlohmann::json& j) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

nlohmann::json to_json(const SolveTrace& trace) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : trace.steps)
    steps.push_back({{"iteration", s.iteration},
                     {"residual", s.residual},
                     {"delta_D", s.delta_D},
                     {"distance", s.distance},
                     {"step", s.damping}});
  return {{"method", trace.method},
          {"converged", trace.converged},
          {"residual", trace.residual},
          {"iterations", trace.steps.size()},
          {"message", trace.message},
          {"index", doubles(trace.index.b)},
          {"steps", steps}};
}

nlohmann::json to_json(const SplitReport& report) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : report.stages)
    stages.push_back({{"stage", s.name},
                      {"value", s.value},
                      {"tolerance", s.tolerance},
                      {"passed", s.passed},
                      {"note", s.note}});
  nlohmann::json j = {{"passed", report.passed},
                      {"failed_stage", report.failed_stage},
                      {"stages", stages},
                      {"kronecker_residual", report.witness.residual},
                      {"mixed_hessian", report.witness.mixed_hessian},
                      {"factor_residuals", {report.witness.first_residual, report.witness.second_residual}},
                      {"product_solve", to_json(report.product)}};
  if (report.witness.first.size() > 0) {
    j["factor_first"] = to_json(InnerProduct(report.witness.first,
                                             splitting_from_weights(std::vector<std::vector<int>>(
                                                 report.witness.first.rows()))));
    j["factor_second"] = to_json(InnerProduct(report.witness.second,
                                              splitting_from_weights(std::vector<std::vector<int>>(
                                                  report.witness.second.rows()))));
  }
  return j;
}

nlohmann::json to_json(const EnergyReport& report) {
  return {{"t", report.t},
          {"d_prime", report.d_prime},
          {"energy", report.energy},
          {"delta_D", report.delta_D},
          {"min_second_difference", report.min_second_difference},
          {"min_derivative_increment", report.min_derivative_increment},
          {"grid_level", report.grid_level},
          {"convex", report.convex}};
}

nlohmann::json to_json(const ConstraintFit& fit) {
  return {{"xi", doubles(fit.xi)}, {"x", doubles(fit.x)}, {"residual", fit.residual}};
}

InnerProduct load_inner_product(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open inner product " + path);
  try {
    return inner_product_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::config, std::string("malformed JSON in ") + path + ": " + e.what());
  }
}

void save_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::config, "cannot write " + path);
  out << j.dump(2) << '\n';
}

void write_matrix_csv(std::ostream& os, const CMatrix& m) {
  os << std::setprecision(17);
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      os << m(i, j).real() << ',' << m(i, j).imag() << (j + 1 < m.cols() ? ',' : '\n');
}

void write_field_csv(std::ostream& os, const QuadratureGrid& grid, const std::vector<std::string>& names,
                     const std::vector<const std::vector<double>*>& columns) {
  const int n = grid.model().dim_complex();
  for (int c = 0; c < n; ++c) os << "re_z" << c << ",im_z" << c << ',';
  os << "weight";
  for (const auto& name : names) os << ',' << name;
  os << '\n' << std::setprecision(17);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const ChartPoint pt = grid.point(p);
    for (const auto& z : pt.coords) os << z.real() << ',' << z.imag() << ',';
    os << grid.weight(p);
    for (const auto* col : columns) os << ',' << (*col)[p];
    os << '\n';
  }
}

void write_energy_csv(std::ostream& os, const EnergyReport& report) {
  os << "t,d_prime,energy\n" << std::setprecision(17);
  for (std::size_t i = 0; i < report.t.size(); ++i)
    os << report.t[i] << ',' << report.d_prime[i] << ',' << report.energy[i] << '\n';
}

}  // namespace relbal
