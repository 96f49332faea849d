#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "hawkesq/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"hawkesq: occupancy of an infinite-server queue fed by a marked Hawkes process"};
  app.set_version_flag("--version", std::string(hawkesq::version));

  hawkesq::CommandOptions opt;
  std::uint64_t seed = 0;
  app.add_option("command", opt.command, "one of: transient-moments, stationary, pmf-markov, pmf-cluster, "
                                         "simulate, heavy-traffic, tail, reproduce-table2")
      ->required();
  app.add_option("--config", opt.config_path, "experiment config file (key = value)")->required();
  auto* seed_opt = app.add_option("--seed", seed, "override the config seed");
  app.add_option("--out", opt.out_dir, "output directory (default: current directory)");
  app.add_flag("--paper-exact", opt.paper_exact, "use the full 100 x 100,000 simulation budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(hawkesq::ExitCode::usage);
  }
  if (*seed_opt) opt.seed = seed;
  return hawkesq::run_command(opt, std::cerr);
}
