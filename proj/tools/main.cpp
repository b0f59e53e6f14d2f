// hermite: batch front end for the Hermite advection solver.
//
//   hermite run      --config run.json [--mode fused] [--out-dir out]
//   hermite converge --config run.json --levels 8,16,32
//   hermite bench    --config run.json
//   hermite autotune --config run.json --tiles 1,4,16

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hermite/app.hpp"

int main(int argc, char** argv) {
  using namespace hermite;

  CLI::App app{"High-order Hermite solver for 3D periodic linear advection"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  bool print_config = false;
  std::vector<int> levels;
  std::vector<int> tiles;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--mode", ov.mode, "two_pass or fused");
    sub->add_option("--tile-x1", ov.tile_x1, "cells reconstructed per tile along x1");
    sub->add_option("--threads", ov.threads, "worker threads (default: hardware parallelism)");
    sub->add_flag("--deterministic", ov.deterministic, "static work assignment");
    sub->add_option("--precision", ov.precision, "single or double");
    sub->add_option("--out-dir", ov.out_dir, "directory for artifacts");
    sub->add_flag("--print-config", print_config, "print the resolved config and exit");
  };

  auto* run = app.add_subcommand("run", "advance the configured problem");
  add_common(run);
  auto* converge = app.add_subcommand("converge", "refinement study to a fixed final time");
  add_common(converge);
  converge->add_option("--levels", levels, "grid sizes M, coarse to fine")
      ->delimiter(',')
      ->required();
  auto* bench = app.add_subcommand("bench", "time both pipeline modes on the same run");
  add_common(bench);
  auto* tune = app.add_subcommand("autotune", "pick the fastest tile_x1");
  add_common(tune);
  tune->add_option("--tiles", tiles, "tile_x1 candidates")->delimiter(',')->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    nlohmann::json j = load_config_json(config_path);
    apply_overrides(j, ov);
    const RunConfig cfg = parse_run_config(j);
    if (print_config) {
      std::cout << to_json(resolve(cfg)).dump(2) << '\n';
      return kExitOk;
    }
    if (run->parsed()) return run_command(cfg, std::cout, std::cerr);
    if (converge->parsed()) return converge_command(cfg, levels, std::cout, std::cerr);
    if (bench->parsed()) return bench_command(cfg, std::cout, std::cerr);
    return autotune_command(cfg, tiles, std::cout, std::cerr);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
