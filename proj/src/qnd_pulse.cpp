#include "spinretro/qnd_pulse.hpp"

#include <cmath>
#include <stdexcept>

namespace spinretro {

namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

void check_pulse(const PulseSpec& pulse) {
  if (pulse.kappa_sq < 0.0) {
    throw std::invalid_argument("PulseSpec: kappa_sq must be non-negative");
  }
  if (!(pulse.duty > 0.0 && pulse.duty <= 1.0)) {
    throw std::invalid_argument("PulseSpec: duty cycle must be in (0, 1]");
  }
}

}  // namespace

double backaction_coefficient(double duty) {
  if (!(duty > 0.0 && duty <= 1.0)) {
    throw std::invalid_argument("backaction_coefficient: duty must be in (0, 1]");
  }
  const double s = sinc(M_PI * duty);
  return (1.0 - s) / (1.0 + s);
}

PulseSpec::PulseSpec(QuadratureDirection theta_, double kappa_sq_, double duty_,
                     BackactionMode mode)
    : theta(theta_), kappa_sq(kappa_sq_), duty(duty_), backaction(mode) {
  check_pulse(*this);
}

double PulseSpec::backaction_beta() const {
  switch (backaction) {
    case BackactionMode::ideal_bae:
      return 0.0;
    case BackactionMode::residual:
      return backaction_coefficient(duty);
    case BackactionMode::full_cw:
      return 1.0;
  }
  return 0.0;
}

OutcomeDistribution outcome_distribution(const GaussianOscillatorState& state,
                                         const PulseSpec& pulse) {
  check_pulse(pulse);
  const Marginal m = marginal(state, pulse.theta);
  const double k = std::sqrt(pulse.kappa_sq);
  return {k * m.mean, pulse.kappa_sq * m.variance + PulseSpec::probe_vacuum_var};
}

double sample_outcome(const GaussianOscillatorState& state, const PulseSpec& pulse,
                      RandomStream& rng) {
  const OutcomeDistribution d = outcome_distribution(state, pulse);
  return rng.normal(d.mean, std::sqrt(d.variance));
}

GaussianOscillatorState forward_update(const GaussianOscillatorState& state,
                                       const PulseSpec& pulse, double m) {
  check_pulse(pulse);
  if (pulse.kappa_sq == 0.0) return state;

  const Eigen::Vector2d v = pulse.theta.axis();
  const Eigen::Vector2d sv = state.cov() * v;
  const double k = std::sqrt(pulse.kappa_sq);
  const double innovation_var = pulse.kappa_sq * v.dot(sv) + PulseSpec::probe_vacuum_var;
  const Eigen::Vector2d gain = (k / innovation_var) * sv;

  Eigen::Vector2d mean = state.mean() + gain * (m - k * v.dot(state.mean()));
  Eigen::Matrix2d cov =
      state.cov() - (pulse.kappa_sq / innovation_var) * (sv * sv.transpose());

  const double beta = pulse.backaction_beta();
  if (beta > 0.0) {
    const Eigen::Vector2d u = pulse.theta.conjugate_axis();
    cov += (beta * pulse.kappa_sq / 2.0) * (u * u.transpose());
  }
  return {mean, cov, state.mean_spin_fraction()};
}

EffectState backward_update(const EffectState& eff, const PulseSpec& pulse, double m) {
  check_pulse(pulse);
  if (pulse.kappa_sq == 0.0) return eff;

  EffectState out = eff;
  const double beta = pulse.backaction_beta();
  if (beta > 0.0) {
    const Eigen::Vector2d u = pulse.theta.conjugate_axis();
    out = effect_diffuse(out, (beta * pulse.kappa_sq / 2.0) * (u * u.transpose()));
  }
  const Eigen::Vector2d v = pulse.theta.axis();
  const double k = std::sqrt(pulse.kappa_sq);
  const Eigen::Matrix2d info =
      out.info_matrix() + 2.0 * pulse.kappa_sq * (v * v.transpose());
  const Eigen::Vector2d info_vec = out.info_vector() + 2.0 * k * m * v;
  return {info, info_vec};
}

EffectState effect_diffuse(const EffectState& eff, const Eigen::Matrix2d& noise_cov) {
  const Eigen::Matrix2d m =
      (Eigen::Matrix2d::Identity() + eff.info_matrix() * noise_cov).inverse();
  return {m * eff.info_matrix(), m * eff.info_vector()};
}

double strob_noise_variance(double kappa_tilde_sq, double duty) {
  if (kappa_tilde_sq < 0.0) {
    throw std::invalid_argument("strob_noise_variance: kappa_tilde_sq must be non-negative");
  }
  const double beta = backaction_coefficient(duty);
  return 1.0 + kappa_tilde_sq + kappa_tilde_sq * kappa_tilde_sq / 3.0 * beta;
}

}  // namespace spinretro
