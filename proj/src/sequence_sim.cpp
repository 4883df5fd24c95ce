#include "spinretro/sequence_sim.hpp"

#include <cmath>
#include <stdexcept>

#include "spinretro/errors.hpp"

namespace spinretro::sim {

namespace {

// Combined Gaussian mixing parameter for an interval dt: T2 dephasing plus,
// while the probe is on, the photon-scattering rate.
double mixing_eps(double dt_ms, const DecoherenceParams& p, bool probe_on) {
  double rate = dt_ms / p.t2_ms;
  if (probe_on) rate += p.probe_depol_per_ms * dt_ms;
  return 1.0 - std::exp(-rate);
}

double spin_fraction_decay(double dt_ms, const DecoherenceParams& p, bool probe_on) {
  double rate = dt_ms / p.t1_ms;
  if (probe_on) rate += p.probe_depol_per_ms * dt_ms;
  return std::exp(-rate);
}

}  // namespace

PulseSpec SequenceConfig::effective_pulse(int i) const {
  const PulseSpec& base = pulses[static_cast<std::size_t>(i)].spec;
  return PulseSpec(base.theta, quantum_efficiency * base.kappa_sq, base.duty, base.backaction);
}

SequenceConfig SequenceConfig::ideal(double k1_sq, double k2_sq, double k3_sq, double k4_sq,
                                     double theta2, BackactionMode mode, double duty) {
  SequenceConfig c;
  c.pulses[0] = {PulseSpec(QuadratureDirection(0.0), k1_sq, duty, mode), 1.0};
  c.pulses[1] = {PulseSpec(QuadratureDirection(theta2), k2_sq, duty, mode), 1.0};
  c.pulses[2] = {PulseSpec(QuadratureDirection(M_PI / 2.0), k3_sq, duty, mode), 2.0};
  c.pulses[3] = {PulseSpec(QuadratureDirection(0.0), k4_sq, duty, mode), 1.0};
  c.decoherence_on = false;
  c.initial_cov_factor = 1.0;
  return c;
}

void SequenceConfig::validate() const {
  for (const auto& p : pulses) {
    if (p.duration_ms <= 0.0) throw ConfigError("pulse duration must be positive");
    if (p.spec.kappa_sq < 0.0) throw ConfigError("kappa_sq must be non-negative");
    if (decoherence.probe_depol_per_ms * p.duration_ms >= 1.0) {
      throw ConfigError("probe depolarization per pulse must stay below 1");
    }
  }
  if (decoherence.t1_ms <= 0.0 || decoherence.t2_ms <= 0.0) {
    throw ConfigError("T1 and T2 must be positive");
  }
  if (decoherence.probe_depol_per_ms < 0.0) throw ConfigError("probe depolarization rate < 0");
  if (!(decoherence.initial_polarization > 0.0 && decoherence.initial_polarization <= 1.0)) {
    throw ConfigError("initial polarization must be in (0, 1]");
  }
  if (initial_cov_factor <= 0.0) throw ConfigError("initial covariance factor must be positive");
  if (!(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0)) {
    throw ConfigError("quantum efficiency must be in (0, 1]");
  }
  if (strob_coefficient <= 0.0) throw ConfigError("strob coefficient must be positive");
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  if (rf) {
    const RFPulseSpec& r = rf->rf;
    const double wmax = std::max(std::abs(r.omega_c), std::abs(r.omega_s));
    if (wmax * r.duration_s >= 0.1) throw ConfigError("RF pulse outside omega*T << 1 regime");
    if (r.duration_s > 0.0 && r.drive_omega * r.duration_s <= 10.0) {
      throw ConfigError("RF pulse outside Omega*T >> 1 regime");
    }
    if (rf->before_pulse < 0 || rf->before_pulse > 3) {
      throw ConfigError("RF injection slot must be in 0..3");
    }
  }
}

GaussianOscillatorState apply_decoherence(const GaussianOscillatorState& state, double dt_ms,
                                          const DecoherenceParams& params, bool probe_on) {
  if (dt_ms < 0.0) throw std::invalid_argument("apply_decoherence: dt must be non-negative");
  if (dt_ms == 0.0) return state;
  const double eps = mixing_eps(dt_ms, params, probe_on);
  const Eigen::Vector2d mean = std::sqrt(1.0 - eps) * state.mean();
  const Eigen::Matrix2d cov = (1.0 - eps) * state.cov() +
                              eps * kVacuumVariance * Eigen::Matrix2d::Identity();
  const double fraction =
      state.mean_spin_fraction() * spin_fraction_decay(dt_ms, params, probe_on);
  return {mean, cov, fraction};
}

EffectState effect_decohere_backward(const EffectState& eff, double dt_ms,
                                     const DecoherenceParams& params, bool probe_on) {
  if (dt_ms < 0.0) throw std::invalid_argument("effect_decohere_backward: dt non-negative");
  if (dt_ms == 0.0) return eff;
  const double eps = mixing_eps(dt_ms, params, probe_on);
  const double keep = 1.0 - eps;
  // E'(r) = avg_xi E(sqrt(keep) r + xi): covariance (Sigma_E + eps/2 I)/keep,
  // mean mu_E / sqrt(keep). In information form:
  const Eigen::Matrix2d q = eps * kVacuumVariance * Eigen::Matrix2d::Identity();
  const Eigen::Matrix2d m =
      (Eigen::Matrix2d::Identity() + eff.info_matrix() * q).inverse();
  return {keep * (m * eff.info_matrix()), std::sqrt(keep) * (m * eff.info_vector())};
}

Eigen::Vector2d rf_mean_shift(const RFPulseSpec& rf, double mean_spin, double larmor_omega) {
  if (std::abs(rf.phase) > 1e-12) {
    throw std::invalid_argument("rf_displacement: closed form requires phase = 0");
  }
  if (rf.duration_s > 0.0 && std::abs(rf.drive_omega - larmor_omega) >
                                 1e-9 * std::max(1.0, larmor_omega)) {
    throw std::invalid_argument("rf_displacement: closed form requires resonant drive");
  }
  if (mean_spin < 0.0) throw std::invalid_argument("rf_displacement: mean_spin < 0");
  const double scale = std::sqrt(mean_spin) * rf.duration_s / 2.0;
  return {-rf.omega_s * scale, -rf.omega_c * scale};
}

GaussianOscillatorState rf_displacement(const GaussianOscillatorState& state,
                                        const RFPulseSpec& rf, double mean_spin,
                                        double larmor_omega) {
  const Eigen::Vector2d shift = rf_mean_shift(rf, mean_spin, larmor_omega);
  return {state.mean() + shift, state.cov(), state.mean_spin_fraction()};
}

RecordMoments record_moments_theory(const SequenceConfig& config) {
  config.validate();
  RecordMoments out;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = config.initial_cov_factor * kVacuumVariance *
                        Eigen::Matrix2d::Identity();
  // Cross-covariances Cov(r, m_j) for the outcomes produced so far.
  std::array<Eigen::Vector2d, 4> cross{};

  for (int i = 0; i < 4; ++i) {
    const PulsePhase& phase = config.pulses[static_cast<std::size_t>(i)];
    if (config.decoherence_on) {
      const double eps = mixing_eps(phase.duration_ms, config.decoherence, true);
      const double damp = std::sqrt(1.0 - eps);
      mean *= damp;
      cov = (1.0 - eps) * cov + eps * kVacuumVariance * Eigen::Matrix2d::Identity();
      for (int j = 0; j < i; ++j) cross[static_cast<std::size_t>(j)] *= damp;
    }
    if (config.rf && config.rf->before_pulse == i) {
      mean += rf_mean_shift(config.rf->rf, config.rf->mean_spin, config.rf->larmor_omega);
    }
    const PulseSpec pulse = config.effective_pulse(i);
    const Eigen::Vector2d v = pulse.theta.axis();
    const double k = std::sqrt(pulse.kappa_sq);
    for (int j = 0; j < i; ++j) {
      const double c = k * v.dot(cross[static_cast<std::size_t>(j)]);
      out.cov(i, j) = out.cov(j, i) = c;
    }
    out.cov(i, i) = pulse.kappa_sq * v.dot(cov * v) + PulseSpec::probe_vacuum_var;
    out.mean(i) = k * v.dot(mean);
    cross[static_cast<std::size_t>(i)] = k * (cov * v);
    const double beta = pulse.backaction_beta();
    if (beta > 0.0) {
      const Eigen::Vector2d u = pulse.theta.conjugate_axis();
      cov += (beta * pulse.kappa_sq / 2.0) * (u * u.transpose());
    }
  }
  return out;
}

}  // namespace spinretro::sim
