#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "spinretro/gaussian_state.hpp"
#include "spinretro/qnd_pulse.hpp"

namespace spinretro::sim {

struct DecoherenceParams {
  double t1_ms = 125.0;
  double t2_ms = 20.0;
  // Extra depolarization rate while the probe is on (per ms of probe time),
  // modelling incoherent photon scattering.
  double probe_depol_per_ms = 0.0;
  double initial_polarization = 0.979;
};

struct RFPulseSpec {
  double omega_c = 0.0;      // rad/s, cosine-quadrature Rabi rate
  double omega_s = 0.0;      // rad/s, sine-quadrature Rabi rate
  double duration_s = 0.0;   // T
  double phase = 0.0;        // phi; resonant closed form needs phi = 0
  double drive_omega = 0.0;  // Omega (rad/s)
};

// One slot of the probe sequence: decoherence interval of duration_ms, then
// an instantaneous QND readout.
struct PulsePhase {
  PulseSpec spec;
  double duration_ms = 1.0;
};

struct RFInjection {
  RFPulseSpec rf;
  double larmor_omega = 2.0 * M_PI * 500e3;  // Omega_L (rad/s)
  double mean_spin = 1.0;                    // J_x scale entering the displacement
  int before_pulse = 1;                      // 0-based slot index
};

// Four-pulse sequence: slot 0 probes p_A (theta=0), slot 1 probes the
// configurable theta2, slot 2 probes x_A (theta=pi/2), slot 3 probes p_A.
struct SequenceConfig {
  std::array<PulsePhase, 4> pulses;
  DecoherenceParams decoherence;
  bool decoherence_on = false;
  double initial_cov_factor = 1.0;   // 1.06 for the partially polarized start
  double quantum_efficiency = 1.0;   // scales every kappa_sq
  double strob_coefficient = 1.0;    // kappa_sq -> kappa_tilde_sq for Eq.-5-style noise
  std::uint64_t seed = 1;
  std::int64_t repetitions = 1;
  std::optional<RFInjection> rf;

  double theta2() const { return pulses[1].spec.theta.theta(); }
  // kappa_sq actually coupled to the atoms for slot i (after efficiency).
  double effective_kappa_sq(int i) const {
    return quantum_efficiency * pulses[static_cast<std::size_t>(i)].spec.kappa_sq;
  }
  PulseSpec effective_pulse(int i) const;

  // Paper-style presets. `ideal`: kappa sets with no decoherence, unit
  // efficiency, fully polarized start.
  static SequenceConfig ideal(double k1_sq, double k2_sq, double k3_sq, double k4_sq,
                              double theta2, BackactionMode mode, double duty = 0.14);

  void validate() const;  // throws ConfigError
};

struct MeasurementRecord {
  std::int64_t repetition_id = 0;
  double theta2 = 0.0;
  std::array<double, 4> m{};
};

struct RecordSet {
  std::vector<MeasurementRecord> records;
  double theta2 = 0.0;
};

// Gaussian decoherence toward vacuum: with eps = 1 - exp(-dt/T2) (plus the
// probe depolarization rate when probe_on),
//   mean <- sqrt(1-eps) mean, cov <- (1-eps) cov + eps/2 I,
// and mean_spin_fraction decays with T1 (and the probe term). Vacuum is a
// fixed point and the channel composes exactly over dt.
GaussianOscillatorState apply_decoherence(const GaussianOscillatorState& state, double dt_ms,
                                          const DecoherenceParams& params,
                                          bool probe_on = false);

// Heisenberg-picture counterpart acting on the effect, for chaining E
// backward through the same interval.
EffectState effect_decohere_backward(const EffectState& eff, double dt_ms,
                                     const DecoherenceParams& params, bool probe_on = false);

// Resonant RF displacement (phi = 0, Omega = Omega_L):
// (x_A, p_A) += -(omega_s, omega_c) * sqrt(mean_spin) * T / 2, covariance
// unchanged. Throws on off-resonant or invalid-regime use.
GaussianOscillatorState rf_displacement(const GaussianOscillatorState& state,
                                        const RFPulseSpec& rf, double mean_spin,
                                        double larmor_omega);

Eigen::Vector2d rf_mean_shift(const RFPulseSpec& rf, double mean_spin, double larmor_omega);

// Exact joint Gaussian of the four outcomes propagated through the pulse
// chain (conditioning-free covariance propagation; decoherence and RF
// included). The Schur complement of this matrix is the model-exact
// conditional variance an ideal regression estimator converges to.
struct RecordMoments {
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
};

RecordMoments record_moments_theory(const SequenceConfig& config);

}  // namespace spinretro::sim
