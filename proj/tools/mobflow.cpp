#include "mobflow/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace cli = mobflow::cli;

int main(int argc, char **argv) {
  CLI::App app{"mobflow: minimizing movements for Keller-Segel with nonlinear mobility"};
  std::string command, config, out;
  std::uint64_t seed = 0;
  bool allow_uncovered = false;
  app.add_option("command", command, "wdist, jko, reference, compare, diagnose or sweep")
      ->required()
      ->check(CLI::IsMember({"wdist", "jko", "reference", "compare", "diagnose", "sweep"}));
  app.add_option("--config", config, "TOML run configuration")->required();
  auto *out_opt = app.add_option("--out", out, "output directory (overrides [output].dir)");
  auto *seed_opt = app.add_option("--seed", seed, "seed for randomized initial data");
  app.add_flag("--allow-uncovered", allow_uncovered, "run parameters outside the covered existence regimes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitConfig;
  }

  cli::Overrides over;
  over.command = cli::parse_command(command);
  if (*out_opt)
    over.out = out;
  if (*seed_opt)
    over.seed = seed;
  over.allow_uncovered = allow_uncovered;

  cli::RunSpec spec;
  try {
    spec = cli::parse_config(config, over);
  } catch (const cli::ConfigError &e) {
    std::cerr << "mobflow: invalid configuration " << config << "\n";
    for (const std::string &v : e.violations())
      std::cerr << "  " << v << "\n";
    return cli::kExitConfig;
  }

  const cli::RunOutcome o = cli::run_command(spec);
  if (o.exit_code != cli::kExitOk) {
    std::cerr << "mobflow: " << cli::to_string(spec.command) << " failed in stage '" << o.stage << "': " << o.message
              << "\n";
  } else {
    std::cout << "mobflow: " << cli::to_string(spec.command) << " finished, artifacts in " << o.dir.string() << "\n";
  }
  return o.exit_code;
}
