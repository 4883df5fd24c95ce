#include "spinretro/monte_carlo.hpp"

namespace spinretro::sim {

SequenceRun run_sequence(const SequenceConfig& config, RandomStream& rng,
                         std::int64_t repetition_id) {
  config.validate();
  SequenceRun out;
  GaussianOscillatorState state =
      GaussianOscillatorState::scaled_vacuum(config.initial_cov_factor)
          .with_mean_spin_fraction(config.decoherence.initial_polarization);

  out.record.repetition_id = repetition_id;
  out.record.theta2 = config.theta2();

  for (int i = 0; i < 4; ++i) {
    const PulsePhase& phase = config.pulses[static_cast<std::size_t>(i)];
    if (config.decoherence_on) {
      state = apply_decoherence(state, phase.duration_ms, config.decoherence, true);
    }
    if (config.rf && config.rf->before_pulse == i) {
      state = rf_displacement(state, config.rf->rf, config.rf->mean_spin,
                              config.rf->larmor_omega);
    }
    const PulseSpec pulse = config.effective_pulse(i);
    out.priors[static_cast<std::size_t>(i)] = outcome_distribution(state, pulse);
    const double m = sample_outcome(state, pulse, rng);
    out.record.m[static_cast<std::size_t>(i)] = m;
    state = forward_update(state, pulse, m);
  }
  out.final_state = state;
  return out;
}

namespace {

RecordSet monte_carlo_impl(const SequenceConfig& config, bool parallel) {
  config.validate();
  const RandomStream master(config.seed);
  RecordSet out;
  out.theta2 = config.theta2();
  out.records.resize(static_cast<std::size_t>(config.repetitions));

  const std::int64_t n = config.repetitions;
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
      RandomStream sub = master.substream(static_cast<std::uint64_t>(i));
      out.records[static_cast<std::size_t>(i)] = run_sequence(config, sub, i).record;
    }
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      RandomStream sub = master.substream(static_cast<std::uint64_t>(i));
      out.records[static_cast<std::size_t>(i)] = run_sequence(config, sub, i).record;
    }
  }
  return out;
}

}  // namespace

RecordSet monte_carlo(const SequenceConfig& config) { return monte_carlo_impl(config, true); }

RecordSet monte_carlo_serial(const SequenceConfig& config) {
  return monte_carlo_impl(config, false);
}

}  // namespace spinretro::sim
