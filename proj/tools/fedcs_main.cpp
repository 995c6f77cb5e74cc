// fedcs: command-line experiment runner.
//
//   fedcs --print-defaults
//   fedcs validate <config.json>
//   fedcs run <config.json> [--seed N] [--out DIR] [--force] [--parallelism P]

#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "fedcs/error.hpp"
#include "fedcs/experiment.hpp"

namespace {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const fedcs::ConfigError*>(&e)) return 2;
  if (dynamic_cast<const fedcs::IoError*>(&e)) return 3;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated-learning client-selection simulator"};
  app.require_subcommand(0, 1);

  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults, "Print the canonical default configuration");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Parse and validate a configuration file");
  validate->add_option("config", validate_path, "Configuration file (JSON)")->required();

  std::string run_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool force = false;
  int parallelism = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* run = app.add_subcommand("run", "Execute every run described by a configuration");
  run->add_option("config", run_path, "Configuration file (JSON)")->required();
  run->add_option("--seed", seed, "Run only this seed instead of the configured list");
  run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  run->add_flag("--force", force, "Write into an existing output directory");
  run->add_option("--parallelism", parallelism, "Concurrent runs")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (print_defaults) {
      std::cout << fedcs::experiment::config_to_json(fedcs::experiment::default_config()) << '\n';
      return 0;
    }
    if (*validate) {
      const auto config = fedcs::experiment::parse_config(validate_path);
      const auto runs = fedcs::experiment::expand_runs(config);
      std::cout << "ok: " << runs.size() << " run(s), config_hash "
                << fedcs::experiment::config_hash(config) << '\n';
      return 0;
    }
    if (*run) {
      auto config = fedcs::experiment::parse_config(run_path);
      if (seed) config.seeds = {*seed};
      fedcs::experiment::RunOptions options;
      options.out = out_dir.empty() ? config.output_dir : out_dir;
      options.force = force;
      options.parallelism = parallelism;
      const int status = fedcs::experiment::run_all(config, options, std::cerr);
      std::cerr << "wrote " << options.out.string() << '\n';
      return status;
    }
    std::cerr << app.help();
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}
