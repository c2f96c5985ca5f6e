#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <random>

#include "relbal/error.hpp"

namespace relbal::cli {

namespace {

struct Setup {
  std::shared_ptr<const PolarizedModel> model;
  QuadratureGrid grid;
  SplittingPtr splitting;
};

Setup setup(const RunConfig& c) {
  auto model = std::make_shared<const PolarizedModel>(PolarizedModel::build(c.factors, c.cap));
  QuadratureGrid grid = make_grid(model, c.grid_level, c.torus);
  SplittingPtr sp = splitting_for(*model, c.torus);
  return {model, std::move(grid), std::move(sp)};
}

std::string path(const Context& ctx, const std::string& name) {
  return (std::filesystem::path(ctx.out_dir) / name).string();
}

nlohmann::json provenance(const Context& ctx, const QuadratureGrid& grid) {
  return {{"config_hash", hex(config_hash(ctx.config.raw))},
          {"grid_level", grid.level()},
          {"grid_points", grid.size()},
          {"grid_exactness", grid.exactness_note()},
          {"torus", to_json(ctx.config.torus)},
          {"group", to_string(ctx.config.solve.group)},
          {"seed", ctx.config.seed}};
}

InnerProduct starting_point(const RunConfig& c, const Setup& s) {
  if (c.start == "random") return random_start(s.splitting, c.solve.group, c.seed, c.start_radius);
  return default_start(s.grid, s.splitting, c.solve.group);
}

void check_matches(const InnerProduct& m, const PolarizedModel& model) {
  if (m.dim() != model.section_count())
    throw Error(ErrorKind::config, "inner product dimension does not match the model");
}

/// Loaded inner products may carry a finer splitting than the configured torus; fall back
/// to the full grid when the collapsed one cannot integrate them.
void ensure_supported(Setup& s, const InnerProduct& m) {
  if (!s.grid.supports(*m.splitting())) s.grid = make_grid(s.model, s.grid.level());
}

}  // namespace

Context make_context(const std::string& config_path, const std::string& out_dir, const Overrides& o) {
  Context ctx;
  ctx.config = load_run_config(config_path);
  if (o.group) {
    ctx.config.solve.group = group_from_string(*o.group);
    ctx.config.raw["group"] = *o.group;
  }
  if (o.grid_level) {
    ctx.config.grid_level = *o.grid_level;
    ctx.config.raw["grid_level"] = *o.grid_level;
  }
  if (o.seed) {
    ctx.config.seed = *o.seed;
    ctx.config.raw["seed"] = *o.seed;
  }
  if (!o.m1.empty()) ctx.config.m1_file = o.m1;
  if (!o.m2.empty()) ctx.config.m2_file = o.m2;
  ctx.out_dir = out_dir;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::config, "cannot create output directory " + out_dir);
  return ctx;
}

int cmd_balance(const Context& ctx) {
  const auto& c = ctx.config;
  const Setup s = setup(c);
  const InnerProduct start = starting_point(c, s);
  const SolveTrace trace =
      c.method == "gradient" ? gradient_descent_D(start, s.grid, c.solve) : t_iterate(start, s.grid, c.solve);

  nlohmann::json j = provenance(ctx, s.grid);
  j["trace"] = to_json(trace);
  j["refined_residual"] = group_residual(trace.final, s.grid.refined(), c.solve.group);
  if (trace.converged) j["index_fit"] = to_json(fit_constraint_t(trace.index, *s.splitting));
  save_json(path(ctx, "solve_trace.json"), j);
  save_json(path(ctx, "inner_product.json"), to_json(trace.final));

  const auto field = kernel_field(trace.final, s.grid);
  const auto rho = bergman(trace.final, bergman_basis(trace.final, s.grid), s.grid);
  std::vector<double> hs(field.size()), ratio(field.size());
  for (std::size_t p = 0; p < field.size(); ++p) {
    hs[p] = 1.0 / field[p].kernel;
    ratio[p] = field[p].density / s.grid.reference_density(p);
  }
  std::ofstream csv(path(ctx, "bergman_field.csv"));
  write_field_csv(csv, s.grid, {"h_s_density", "volume_ratio", "bergman"}, {&hs, &ratio, &rho});

  if (!trace.converged) {
    std::cerr << "[balance] not converged: " << trace.message << " (residual " << trace.residual << ")\n";
    return 2;
  }
  std::cout << "converged in " << trace.steps.size() << " iterations, residual " << trace.residual << '\n';
  return 0;
}

int cmd_verify_split(const Context& ctx) {
  const auto& c = ctx.config;
  if (c.factors.size() != 2) throw Error(ErrorKind::config, "verify-split needs a product of two factors");
  const auto model = PolarizedModel::build(c.factors, c.cap);
  SplitConfig sc;
  sc.torus = c.torus;
  sc.solve = c.solve;
  sc.grid_level = c.grid_level;
  sc.seed = c.seed;
  sc.start_radius = c.start_radius;
  try {
    const auto& j = c.split;
    if (j.is_object()) {
      sc.kronecker_tolerance = j.value("kronecker_tolerance", sc.kronecker_tolerance);
      sc.mixed_tolerance = j.value("mixed_tolerance", sc.mixed_tolerance);
      sc.gap_tolerance = j.value("gap_tolerance", sc.gap_tolerance);
      sc.tensor_tolerance = j.value("tensor_tolerance", sc.tensor_tolerance);
      sc.accuracy_factor = j.value("accuracy_factor", sc.accuracy_factor);
      sc.gap_rule.nodes = j.value("gap_nodes", sc.gap_rule.nodes);
      sc.gap_rule.check_nodes = j.value("gap_check_nodes", sc.gap_rule.check_nodes);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::config, std::string("bad split section: ") + e.what());
  }
  const SplitReport report = verify_splitting(model, sc, c.write_field);
  const QuadratureGrid grid = make_grid(std::make_shared<const PolarizedModel>(model), c.grid_level, c.torus);
  nlohmann::json j = provenance(ctx, grid);
  j["report"] = to_json(report);
  j["seconds"] = report.seconds;
  save_json(path(ctx, "splitting_report.json"), j);
  if (c.write_field && !report.field.empty()) {
    std::vector<double> mixed(report.field.size());
    for (std::size_t p = 0; p < mixed.size(); ++p) mixed[p] = report.field[p].mixed;
    std::ofstream csv(path(ctx, "mixed_hessian.csv"));
    write_field_csv(csv, grid, {"mixed_hessian"}, {&mixed});
  }
  for (const auto& st : report.stages)
    std::cout << (st.passed ? "pass " : "FAIL ") << st.name << " " << st.value << " (< " << st.tolerance << ")\n";
  if (!report.passed) {
    std::cerr << "[verify-split:" << report.failed_stage << "] stage failed\n";
    return 2;
  }
  return 0;
}

int cmd_energy_scan(const Context& ctx) {
  const auto& c = ctx.config;
  if (c.m1_file.empty() || c.m2_file.empty()) throw Error(ErrorKind::config, "energy-scan needs --m1 and --m2");
  Setup s = setup(c);
  const InnerProduct m1 = load_inner_product(c.m1_file);
  const InnerProduct m2 = load_inner_product(c.m2_file);
  check_matches(m1, *s.model);
  check_matches(m2, *s.model);
  ensure_supported(s, m1);
  ensure_supported(s, m2);
  const GeodesicSegment seg = geodesic(m1, m2, c.solve.group);
  const EnergyReport report = convexity_scan(seg, c.samples, s.grid);
  std::ofstream csv(path(ctx, "energy_scan.csv"));
  write_energy_csv(csv, report);
  nlohmann::json j = provenance(ctx, s.grid);
  j["scan"] = to_json(report);
  j["length"] = seg.length;
  save_json(path(ctx, "energy_report.json"), j);
  if (!report.convex) {
    std::cerr << "[energy-scan] D' is not monotone (min increment " << report.min_derivative_increment << ")\n";
    return 2;
  }
  return 0;
}

int cmd_bergman(const Context& ctx) {
  const auto& c = ctx.config;
  Setup s = setup(c);
  InnerProduct metric = c.metric_file.empty() ? default_start(s.grid, s.splitting, c.solve.group)
                                              : load_inner_product(c.metric_file);
  check_matches(metric, *s.model);
  ensure_supported(s, metric);
  if (c.perturbation > 0.0) {
    const CMatrix basis = admissible_orthonormal_basis(metric);
    const CMatrix inv = basis.inverse();
    const CMatrix h = random_traceless_direction(*metric.splitting(), c.seed) * c.perturbation;
    metric = InnerProduct(inv.adjoint() * hermitian_exp(h) * inv, metric.splitting());
  }
  const auto rho = bergman(metric, bergman_basis(metric, s.grid), s.grid);
  const auto vol = fs_volume(metric, s.grid);
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0, total = 0.0;
  for (std::size_t p = 0; p < rho.size(); ++p) {
    lo = std::min(lo, rho[p]);
    hi = std::max(hi, rho[p]);
    total += s.grid.weight(p) * vol.density[p] * rho[p];
  }
  std::ofstream csv(path(ctx, "bergman.csv"));
  write_field_csv(csv, s.grid, {"bergman"}, {&rho});
  nlohmann::json j = provenance(ctx, s.grid);
  j["min"] = lo;
  j["max"] = hi;
  j["max_over_min"] = hi / lo;
  j["integral"] = total;
  j["perturbation"] = c.perturbation;
  save_json(path(ctx, "bergman_summary.json"), j);
  std::cout << "max/min " << hi / lo << ", integral " << total << '\n';
  return 0;
}

int cmd_distance_check(const Context& ctx) {
  const auto& c = ctx.config;
  if (c.factors.size() != 2) throw Error(ErrorKind::config, "distance-check needs a product of two factors");
  const auto model = PolarizedModel::build(c.factors, c.cap);
  const auto m1 = model.factor_model(0), m2 = model.factor_model(1);
  const auto sp1 = splitting_for(m1, c.torus.restrict_to_factor(0));
  const auto sp2 = splitting_for(m2, c.torus.restrict_to_factor(1));
  double worst_brute = 0.0, worst_rhs = 0.0;
  RMatrix a(c.trials, 2);
  RVector lhs(c.trials);
  nlohmann::json rows = nlohmann::json::array();
  for (int t = 0; t < c.trials; ++t) {
    const std::uint64_t base = c.seed * 1000003ull + 4ull * t;
    const auto r = product_distance_check(
        random_start(sp1, c.solve.group, base), random_start(sp1, c.solve.group, base + 1),
        random_start(sp2, c.solve.group, base + 2), random_start(sp2, c.solve.group, base + 3), c.solve.group);
    worst_brute = std::max(worst_brute, std::abs(r.lhs - r.brute));
    worst_rhs = std::max(worst_rhs, std::abs(r.lhs - r.rhs));
    a(t, 0) = r.d1 * r.d1;
    a(t, 1) = r.d2 * r.d2;
    lhs(t) = r.lhs;
    rows.push_back({{"lhs", r.lhs}, {"brute", r.brute}, {"rhs", r.rhs}, {"d1", r.d1}, {"d2", r.d2}});
  }
  const RVector coef = a.colPivHouseholderQr().solve(lhs);
  nlohmann::json j = {{"config_hash", hex(config_hash(c.raw))},
                      {"trials", rows},
                      {"fitted_coefficients", {coef(0), coef(1)}},
                      {"section_counts", {m1.section_count(), m2.section_count()}},
                      {"max_abs_lhs_minus_brute", worst_brute},
                      {"max_abs_lhs_minus_rhs", worst_rhs}};
  save_json(path(ctx, "distance_check.json"), j);
  std::cout << "coefficients " << coef(0) << ", " << coef(1) << "; max |lhs - brute| " << worst_brute << '\n';
  return worst_brute <= 1e-10 && worst_rhs <= 1e-10 ? 0 : 2;
}

int cmd_index_fit(const Context& ctx) {
  const auto& c = ctx.config;
  const Setup s = setup(c);
  IndexVector b;
  nlohmann::json j = provenance(ctx, s.grid);
  if (!c.index.empty()) {
    b.b = Eigen::Map<const RVector>(c.index.data(), static_cast<Eigen::Index>(c.index.size()));
  } else {
    const SolveTrace trace = t_iterate(starting_point(c, s), s.grid, c.solve);
    if (!trace.converged) {
      std::cerr << "[index-fit] solve did not converge: " << trace.message << '\n';
      return 2;
    }
    b = recover_index(trace.final, s.grid);
    j["trace"] = to_json(trace);
  }
  const ConstraintFit fit = fit_constraint_t(b, *s.splitting);
  j["index"] = std::vector<double>(b.b.data(), b.b.data() + b.b.size());
  j["fit"] = to_json(fit);
  save_json(path(ctx, "index_fit.json"), j);
  std::cout << "fit residual " << fit.residual << '\n';
  return fit.residual < 1e-6 ? 0 : 2;
}

}  // namespace relbal::cli
