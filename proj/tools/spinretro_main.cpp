#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "spinretro/commands.hpp"
#include "spinretro/errors.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::int64_t seed = -1;
  std::int64_t reps = -1;
  int theta_count = -1;
};

spinretro::cli::RunConfig load_config(const CommonArgs& args, bool config_required) {
  spinretro::cli::RunConfig config;
  if (!args.config_path.empty()) {
    config = spinretro::cli::parse_run_config(args.config_path);
  } else if (config_required) {
    throw spinretro::ConfigError("--config is required for this command");
  }
  if (args.seed >= 0) config.seed = static_cast<std::uint64_t>(args.seed);
  if (args.reps >= 0) config.repetitions = args.reps;
  if (args.theta_count >= 1) config.theta_count = args.theta_count;
  return config;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* opt = cmd->add_option("--config", args.config_path, "run configuration file");
  if (config_required) opt->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "override the config seed");
  cmd->add_option("--reps", args.reps, "override the repetition count");
  cmd->add_option("--theta-count", args.theta_count, "override the theta grid size");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"QND spin-oscillator retrodiction toolkit"};
  app.require_subcommand(1);

  CommonArgs args;
  std::vector<std::string> record_files;

  CLI::App* theory = app.add_subcommand("theory", "polar retrodiction curves");
  add_common(theory, args, true);
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo measurement records");
  add_common(simulate, args, true);
  CLI::App* estimate = app.add_subcommand("estimate", "covariance-regression analysis");
  add_common(estimate, args, false);
  estimate->add_option("records", record_files, "records.csv files")->required();
  CLI::App* sweep = app.add_subcommand("sweep", "parameter sweep of the protocol");
  add_common(sweep, args, true);
  CLI::App* oracle = app.add_subcommand("oracle-check", "closed forms vs grid oracle");
  add_common(oracle, args, true);

  CLI11_PARSE(app, argc, argv);

  try {
    const std::filesystem::path out_dir(args.out_dir);
    if (theory->parsed()) return spinretro::cli::cmd_theory(load_config(args, true), out_dir);
    if (simulate->parsed()) {
      return spinretro::cli::cmd_simulate(load_config(args, true), out_dir);
    }
    if (estimate->parsed()) {
      std::vector<std::filesystem::path> paths(record_files.begin(), record_files.end());
      return spinretro::cli::cmd_estimate(paths, load_config(args, false), out_dir);
    }
    if (sweep->parsed()) return spinretro::cli::cmd_sweep(load_config(args, true), out_dir);
    if (oracle->parsed()) {
      return spinretro::cli::cmd_oracle_check(load_config(args, true), out_dir);
    }
  } catch (const spinretro::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const spinretro::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const spinretro::OracleError& e) {
    std::fprintf(stderr, "oracle error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
