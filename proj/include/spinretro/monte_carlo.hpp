#pragma once

#include "spinretro/random_stream.hpp"
#include "spinretro/sequence_sim.hpp"

namespace spinretro::sim {

struct SequenceRun {
  MeasurementRecord record;
  GaussianOscillatorState final_state = GaussianOscillatorState::vacuum();
  // Prior predictive of each outcome given the earlier ones, from the exact
  // Gaussian chain; useful for cross-validating estimators.
  std::array<OutcomeDistribution, 4> priors{};
};

// One repetition of the four-pulse protocol: per slot, decoherence for the
// pulse duration, then sample the outcome and condition the state.
SequenceRun run_sequence(const SequenceConfig& config, RandomStream& rng,
                         std::int64_t repetition_id = 0);

// repetitions x run_sequence on derived substreams. Results are identical
// for the serial and OpenMP paths (each repetition owns substream(id) and a
// preassigned output slot).
RecordSet monte_carlo(const SequenceConfig& config);
RecordSet monte_carlo_serial(const SequenceConfig& config);

}  // namespace spinretro::sim
