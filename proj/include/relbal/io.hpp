#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relbal/splitting.hpp"

namespace relbal {

/// Everything a CLI command needs, read from a JSON config. Unknown keys are ignored.
struct RunConfig {
  std::vector<FactorDescriptor> factors;
  int grid_level = 1;
  TorusSelection torus = TorusSelection::maximal();
  SolveConfig solve;
  std::string method = "t_iterate";  // or "gradient"
  std::string start = "default";     // or "random"
  double start_radius = 1.0;
  std::uint64_t seed = 1;
  std::size_t cap = PolarizedModel::kDefaultCap;
  int samples = 21;
  int trials = 100;
  double perturbation = 0.0;
  bool write_field = true;
  nlohmann::json split;
  std::string m1_file;
  std::string m2_file;
  std::string metric_file;
  std::vector<double> index;
  nlohmann::json raw;
};

/// Throws Error(config) on missing or ill-typed fields.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

/// 64-bit FNV-1a of the compact JSON dump.
std::uint64_t config_hash(const nlohmann::json& j);
std::string hex(std::uint64_t v);

TorusSelection torus_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TorusSelection& t);

nlohmann::json to_json(const SolveTrace& trace);
nlohmann::json to_json(const SplitReport& report);
nlohmann::json to_json(const EnergyReport& report);
nlohmann::json to_json(const ConstraintFit& fit);

InnerProduct load_inner_product(const std::string& path);
void save_json(const std::string& path, const nlohmann::json& j);

/// Row-major complex matrix with "re,im" cells.
void write_matrix_csv(std::ostream& os, const CMatrix& m);
/// One row per grid point: chart coordinates (re, im pairs), then the named columns.
void write_field_csv(std::ostream& os, const QuadratureGrid& grid, const std::vector<std::string>& names,
                     const std::vector<const std::vector<double>*>& columns);
void write_energy_csv(std::ostream& os, const EnergyReport& report);

}  // namespace relbal
