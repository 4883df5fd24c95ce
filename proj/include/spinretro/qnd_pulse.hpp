#pragma once

#include "spinretro/gaussian_state.hpp"
#include "spinretro/random_stream.hpp"

namespace spinretro {

// How much of the measurement back-action reaches the conjugate quadrature:
//   ideal_bae  -> beta = 0 (perfect stroboscopic evasion)
//   residual   -> beta = (1 - Sinc(pi D)) / (1 + Sinc(pi D)) for duty cycle D
//   full_cw    -> beta = 1 (plain continuous-wave probe; exact POVM channel)
enum class BackactionMode { ideal_bae, residual, full_cw };

double backaction_coefficient(double duty);

// One QND Faraday probe pulse. The outcome scale is probe shot-noise units:
// <m> = sqrt(kappa_sq) * mu_rho(theta), shot-noise floor 1/2.
struct PulseSpec {
  QuadratureDirection theta{0.0};
  double kappa_sq = 0.0;
  double duty = 0.14;
  BackactionMode backaction = BackactionMode::ideal_bae;

  static constexpr double probe_vacuum_var = 0.5;

  PulseSpec() = default;
  PulseSpec(QuadratureDirection theta_, double kappa_sq_, double duty_ = 0.14,
            BackactionMode mode = BackactionMode::ideal_bae);

  // Variance injected on the conjugate quadrature by one pulse: beta*kappa^2/2.
  double backaction_beta() const;
};

struct OutcomeDistribution {
  double mean = 0.0;
  double variance = 0.0;
};

// Prior predictive of the pulse outcome:
// mean = sqrt(kappa^2) mu_rho(theta), variance = kappa^2 sigma_rho^2(theta) + 1/2.
OutcomeDistribution outcome_distribution(const GaussianOscillatorState& state,
                                         const PulseSpec& pulse);

double sample_outcome(const GaussianOscillatorState& state, const PulseSpec& pulse,
                      RandomStream& rng);

// Conditioning on outcome m: exact joint-Gaussian (Kalman) update along the
// measured axis (posterior precision gain 2*kappa^2), plus the lumped
// back-action injection beta*kappa^2/2 on the conjugate axis. The two
// commute, so the pulse is a single well-defined map.
GaussianOscillatorState forward_update(const GaussianOscillatorState& state,
                                       const PulseSpec& pulse, double m);

// Time-reversed counterpart acting on the effect: walking backward past the
// pulse, the effect covariance first picks up the pulse's conjugate-axis
// back-action as diffusion, then gains 2*kappa^2 information along theta.
EffectState backward_update(const EffectState& eff, const PulseSpec& pulse, double m);

// Backward propagation of the effect through a Gaussian displacement-noise
// channel with covariance Q (information form, exact for singular inputs):
// Lambda' = (I + Lambda Q)^-1 Lambda, eta' = (I + Lambda Q)^-1 eta.
EffectState effect_diffuse(const EffectState& eff, const Eigen::Matrix2d& noise_cov);

// Stroboscopic probe output noise in photon shot-noise units:
// 1 + k2 + (k2^2/3) * (1 - Sinc(pi D)) / (1 + Sinc(pi D)).
double strob_noise_variance(double kappa_tilde_sq, double duty);

}  // namespace spinretro
