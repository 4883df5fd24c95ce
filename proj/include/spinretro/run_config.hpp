#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "spinretro/grid_oracle.hpp"
#include "spinretro/record_io.hpp"
#include "spinretro/sequence_sim.hpp"

namespace spinretro::cli {

enum class SweepParam { kappa1_sq, kappa3_sq, tau1_ms, tau3_ms };

// Flat, strictly validated run configuration parsed from a `key = value`
// text file with a mandatory `schema = 1` line. Unknown keys are errors.
struct RunConfig {
  std::optional<std::uint64_t> seed;
  std::int64_t repetitions = 10000;
  double theta2 = 0.0;
  std::array<double, 4> kappa_sq{1.7, 0.81, 3.3, 2.2};
  std::array<double, 4> tau_ms{1.0, 1.0, 2.0, 1.0};
  double duty = 0.14;
  BackactionMode backaction = BackactionMode::ideal_bae;
  bool decoherence_on = false;
  sim::DecoherenceParams decoherence;
  double initial_cov_factor = 1.0;
  double quantum_efficiency = 1.0;
  double strob_coefficient = 1.0;

  double theta_start = 0.0;
  double theta_stop = 2.0 * M_PI;
  int theta_count = 181;
  bool theory_grid_column = false;

  grid::GridSpec grid;

  bool rf_enabled = false;
  sim::RFInjection rf;

  SweepParam sweep_param = SweepParam::kappa1_sq;
  double sweep_start = 0.1;
  double sweep_stop = 5.0;
  int sweep_count = 25;

  int jackknife_blocks = 5;
  double shot_noise_unit = 0.5;

  sim::SequenceConfig sequence() const;
  // Echo of every effective key, parseable back by parse_run_config_text.
  io::EchoLines echo() const;
};

RunConfig parse_run_config(const std::filesystem::path& path);
RunConfig parse_run_config_text(const std::string& text, const std::string& origin = "<text>");

}  // namespace spinretro::cli
