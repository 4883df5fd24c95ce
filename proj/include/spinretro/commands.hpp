#pragma once

#include <filesystem>
#include <vector>

#include "spinretro/run_config.hpp"

namespace spinretro::cli {

// Each command writes its outputs under `out_dir` and returns the CLI exit
// code (0 on success). Config, data and oracle failures are reported by
// throwing ConfigError / DataError / OracleError.

// theory.csv: theta-gridded prior/retrodicted variances (atomic and optical).
int cmd_theory(const RunConfig& config, const std::filesystem::path& out_dir);

// records.csv: Monte Carlo record set with the config echoed as comments.
int cmd_simulate(const RunConfig& config, const std::filesystem::path& out_dir);

// estimate.json: covariance-regression analysis of one or more record files.
// When two files probe conjugate axes (theta2 = 0 and pi/2) the combined
// uncertainty product is reported.
int cmd_estimate(const std::vector<std::filesystem::path>& record_paths,
                 const RunConfig& config, const std::filesystem::path& out_dir);

// sweep.csv: retrodicted variances / uncertainty product over one protocol
// parameter.
int cmd_sweep(const RunConfig& config, const std::filesystem::path& out_dir);

// oracle_check.json + stdout table: Gaussian closed forms against the grid
// evaluation in the full continuous-wave model. Returns 4 if any gated case
// deviates beyond tolerance.
int cmd_oracle_check(const RunConfig& config, const std::filesystem::path& out_dir);

}  // namespace spinretro::cli
