#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "relbal/error.hpp"
#include "relbal/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"relbal: balanced metrics relative to a torus"};
  app.require_subcommand(1);

  std::string config, out_dir = ".";
  relbal::cli::Overrides over;
  unsigned threads = 0;
  std::string group;
  int grid_level = 0;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config, "JSON config")->required();
    sub->add_option("-o,--out", out_dir, "output directory");
    sub->add_option("--group", group, "orbit group")->check(CLI::IsMember({"sl", "gc", "gct"}));
    sub->add_option("--grid-level", grid_level, "quadrature level")->check(CLI::PositiveNumber);
    sub->add_option("--threads", threads, "worker threads (0 = all cores)");
    sub->add_option("--seed", seed, "random seed");
  };
  auto* balance = app.add_subcommand("balance", "solve for a balanced inner product");
  auto* split = app.add_subcommand("verify-split", "verify the splitting of a product");
  auto* scan = app.add_subcommand("energy-scan", "sample D' along the geodesic between two inner products");
  auto* bergman = app.add_subcommand("bergman", "Bergman density of a metric on the grid");
  auto* dist = app.add_subcommand("distance-check", "product distance identity on random pairs");
  auto* fit = app.add_subcommand("index-fit", "fit the torus parameter of an index");
  for (auto* sub : {balance, split, scan, bergman, dist, fit}) add_common(sub);
  scan->add_option("--m1", over.m1, "first inner product JSON");
  scan->add_option("--m2", over.m2, "second inner product JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 3;
  }

  if (!group.empty()) over.group = group;
  if (grid_level > 0) over.grid_level = grid_level;
  if (seed > 0) over.seed = seed;
  relbal::set_thread_count(threads);

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    const auto ctx = relbal::cli::make_context(config, out_dir, over);
    if (*balance) return relbal::cli::cmd_balance(ctx);
    if (*split) return relbal::cli::cmd_verify_split(ctx);
    if (*scan) return relbal::cli::cmd_energy_scan(ctx);
    if (*bergman) return relbal::cli::cmd_bergman(ctx);
    if (*dist) return relbal::cli::cmd_distance_check(ctx);
    if (*fit) return relbal::cli::cmd_index_fit(ctx);
  } catch (const relbal::Error& e) {
    std::cerr << "[" << stage << "] " << e.what() << '\n';
    switch (e.kind()) {
      case relbal::ErrorKind::config:
      case relbal::ErrorKind::size:
      case relbal::ErrorKind::unsupported:
        return 3;
      default:
        return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "[" << stage << "] " << e.what() << '\n';
    return 2;
  }
  return 3;
}
