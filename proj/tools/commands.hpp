#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "relbal/io.hpp"

namespace relbal::cli {

/// Command-line overrides applied on top of the config file.
struct Overrides {
  std::optional<std::string> group;
  std::optional<int> grid_level;
  std::optional<std::uint64_t> seed;
  std::string m1;
  std::string m2;
};

struct Context {
  RunConfig config;
  std::string out_dir = ".";
};

Context make_context(const std::string& config_path, const std::string& out_dir, const Overrides& o);

int cmd_balance(const Context& ctx);
int cmd_verify_split(const Context& ctx);
int cmd_energy_scan(const Context& ctx);
int cmd_bergman(const Context& ctx);
int cmd_distance_check(const Context& ctx);
int cmd_index_fit(const Context& ctx);

}  // namespace relbal::cli
