#include "spinretro/retrodiction.hpp"

#include <cmath>
#include <limits>

#include "spinretro/errors.hpp"

namespace spinretro {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

grid::GridDensity realize_rho(const grid::GridSpec& spec, const GaussianOscillatorState& rho) {
  return grid::GridDensity::from_gaussian(spec, rho.mean(), rho.cov());
}

double grid_optical_variance(const grid::GridSpec& spec, const GaussianOscillatorState& rho,
                             const EffectState& eff, double kappa2_sq,
                             const QuadratureDirection& dir) {
  const grid::GridDensity rho_g = realize_rho(spec, rho);
  const grid::GridDensity eff_g = grid::GridDensity::from_effect(spec, eff);
  const Marginal fused = combine_rho_effect(rho, eff, dir);
  const Marginal prior = marginal(rho, dir);
  const double k = std::sqrt(kappa2_sq);
  const double center = k * fused.mean;
  const double halfwidth =
      8.0 * std::sqrt(kappa2_sq * prior.variance + PulseSpec::probe_vacuum_var) +
      std::abs(k * (fused.mean - prior.mean));
  const Eigen::VectorXd m2 = grid::make_m2_grid(center, halfwidth);
  return grid::retrodicted_optical_distribution(rho_g, eff_g, kappa2_sq, dir, m2).variance;
}

}  // namespace

GaussianOscillatorState chain_rho(const sim::SequenceConfig& config, double m1) {
  config.validate();
  GaussianOscillatorState state =
      GaussianOscillatorState::scaled_vacuum(config.initial_cov_factor)
          .with_mean_spin_fraction(config.decoherence.initial_polarization);
  if (config.decoherence_on) {
    state = sim::apply_decoherence(state, config.pulses[0].duration_ms, config.decoherence,
                                   true);
  }
  if (config.rf && config.rf->before_pulse == 0) {
    state = sim::rf_displacement(state, config.rf->rf, config.rf->mean_spin,
                                 config.rf->larmor_omega);
  }
  state = forward_update(state, config.effective_pulse(0), m1);
  if (config.decoherence_on) {
    state = sim::apply_decoherence(state, config.pulses[1].duration_ms, config.decoherence,
                                   true);
  }
  if (config.rf && config.rf->before_pulse == 1) {
    state = sim::rf_displacement(state, config.rf->rf, config.rf->mean_spin,
                                 config.rf->larmor_omega);
  }
  return state;
}

EffectState chain_effect(const sim::SequenceConfig& config, double m3, double m4) {
  config.validate();
  EffectState eff = EffectState::flat();
  eff = backward_update(eff, config.effective_pulse(3), m4);
  if (config.decoherence_on) {
    eff = sim::effect_decohere_backward(eff, config.pulses[3].duration_ms, config.decoherence,
                                        true);
  }
  eff = backward_update(eff, config.effective_pulse(2), m3);
  if (config.decoherence_on) {
    eff = sim::effect_decohere_backward(eff, config.pulses[2].duration_ms, config.decoherence,
                                        true);
  }
  return eff;
}

Marginal retrodict_projective(const GaussianOscillatorState& rho, const EffectState& eff,
                              const QuadratureDirection& dir) {
  return combine_rho_effect(rho, eff, dir);
}

double predict_optical(const GaussianOscillatorState& rho, double kappa2_sq,
                       const QuadratureDirection& dir) {
  if (kappa2_sq < 0.0) throw std::invalid_argument("predict_optical: kappa2_sq >= 0 required");
  return kappa2_sq * marginal(rho, dir).variance + PulseSpec::probe_vacuum_var;
}

double retrodict_optical_axis(const GaussianOscillatorState& rho, const EffectState& eff,
                              double kappa2_sq, const QuadratureDirection& dir) {
  if (!dir.is_axis_aligned()) {
    throw std::invalid_argument("retrodict_optical_axis: theta must be 0 or pi/2 (mod pi)");
  }
  return kappa2_sq * combine_rho_effect(rho, eff, dir).variance +
         PulseSpec::probe_vacuum_var;
}

double retrodict_optical(const GaussianOscillatorState& rho, const EffectState& eff,
                         double kappa2_sq, const QuadratureDirection& dir,
                         const grid::GridSpec* grid_spec, bool check_convergence) {
  if (kappa2_sq < 0.0) throw std::invalid_argument("retrodict_optical: kappa2_sq >= 0");
  if (dir.is_axis_aligned()) {
    return retrodict_optical_axis(rho, eff, kappa2_sq, dir);
  }
  if (grid_spec == nullptr) {
    throw OracleError(
        "retrodict_optical: off-axis angles need the grid evaluation; pass a GridSpec");
  }
  const double var = grid_optical_variance(*grid_spec, rho, eff, kappa2_sq, dir);
  if (check_convergence) {
    grid::GridSpec coarse = *grid_spec;
    coarse.points = grid_spec->points / 2;
    coarse.modes = std::min(grid_spec->modes, coarse.points / 2);
    const double var_coarse = grid_optical_variance(coarse, rho, eff, kappa2_sq, dir);
    const double rel = std::abs(var - var_coarse) / var;
    if (rel > 2e-3) {
      throw OracleError("retrodict_optical: grid refinement changed the variance by " +
                        std::to_string(rel) + ", not converged");
    }
  }
  return var;
}

OpticalConditional conditional_optical_theory(const sim::SequenceConfig& config,
                                              double theta2) {
  sim::SequenceConfig c = config;
  c.pulses[1].spec.theta = QuadratureDirection(theta2);
  const sim::RecordMoments mom = sim::record_moments_theory(c);

  OpticalConditional out;
  out.outcome_means = mom.mean;
  out.variance_single = mom.cov(1, 1) - mom.cov(0, 1) * mom.cov(0, 1) / mom.cov(0, 0);

  Eigen::Matrix3d k;
  k << mom.cov(0, 0), mom.cov(0, 2), mom.cov(0, 3),
       mom.cov(2, 0), mom.cov(2, 2), mom.cov(2, 3),
       mom.cov(3, 0), mom.cov(3, 2), mom.cov(3, 3);
  const Eigen::Vector3d c2(mom.cov(1, 0), mom.cov(1, 2), mom.cov(1, 3));
  out.coefficients = k.ldlt().solve(c2);
  out.variance = mom.cov(1, 1) - c2.dot(out.coefficients);
  return out;
}

namespace {

RetrodictionResult polar_sweep_impl(const sim::SequenceConfig& config,
                                    const std::vector<double>& theta_grid,
                                    const SweepOptions& options, bool parallel) {
  if (theta_grid.empty()) throw std::invalid_argument("polar_sweep: empty theta grid");
  config.validate();

  const GaussianOscillatorState rho = chain_rho(config);
  const EffectState eff = chain_effect(config);
  const double k2 = config.effective_kappa_sq(1);

  const std::size_t n = theta_grid.size();
  RetrodictionResult out;
  out.theta = theta_grid;
  out.var_prior.assign(n, 0.0);
  out.var_retro.assign(n, 0.0);
  out.var_optical_prior.assign(n, 0.0);
  out.var_optical_retro.assign(n, 0.0);
  out.var_optical_retro_grid.assign(n, kNaN);
  out.grid_converged.assign(n, 0);
  out.inferred_atomic_prior.assign(n, kNaN);
  out.inferred_atomic_retro.assign(n, kNaN);

  // Grid objects are theta-independent; realize once, rotate per angle.
  std::optional<grid::GridDensity> rho_g, eff_g;
  if (options.optical_grid_column) {
    rho_g = realize_rho(options.grid, rho);
    eff_g = grid::GridDensity::from_effect(options.grid, eff);
    (void)rho_g->workspace()->modes();  // build the rotation basis before the loop
  }

  const auto eval_one = [&](std::size_t i) {
    const QuadratureDirection dir(theta_grid[i]);
    const Marginal prior = marginal(rho, dir);
    const Marginal retro = combine_rho_effect(rho, eff, dir);
    out.var_prior[i] = prior.variance;
    out.var_retro[i] = retro.variance;
    out.var_optical_prior[i] = k2 * prior.variance + PulseSpec::probe_vacuum_var;
    out.var_optical_retro[i] =
        conditional_optical_theory(config, theta_grid[i]).variance;
    if (k2 > 0.0) {
      out.inferred_atomic_prior[i] =
          (out.var_optical_prior[i] - PulseSpec::probe_vacuum_var) / k2;
      out.inferred_atomic_retro[i] =
          (out.var_optical_retro[i] - PulseSpec::probe_vacuum_var) / k2;
    }
    if (options.optical_grid_column) {
      try {
        const double center = std::sqrt(k2) * retro.mean;
        const double halfwidth =
            8.0 * std::sqrt(k2 * prior.variance + PulseSpec::probe_vacuum_var) +
            std::abs(std::sqrt(k2) * (retro.mean - prior.mean));
        const Eigen::VectorXd m2 = grid::make_m2_grid(center, halfwidth);
        out.var_optical_retro_grid[i] =
            grid::retrodicted_optical_distribution(*rho_g, *eff_g, k2, dir, m2).variance;
        out.grid_converged[i] = 1;
      } catch (const OracleError&) {
        out.var_optical_retro_grid[i] = kNaN;
        out.grid_converged[i] = 0;
      }
    }
  };

  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
      eval_one(static_cast<std::size_t>(i));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) eval_one(i);
  }

  const double v0 = combine_rho_effect(rho, eff, QuadratureDirection(0.0)).variance;
  const double v90 = combine_rho_effect(rho, eff, QuadratureDirection(M_PI / 2.0)).variance;
  out.uncertainty_product = std::sqrt(v0 * v90);
  return out;
}

}  // namespace

RetrodictionResult polar_sweep(const sim::SequenceConfig& config,
                               const std::vector<double>& theta_grid,
                               const SweepOptions& options) {
  return polar_sweep_impl(config, theta_grid, options, true);
}

RetrodictionResult polar_sweep_serial(const sim::SequenceConfig& config,
                                      const std::vector<double>& theta_grid,
                                      const SweepOptions& options) {
  return polar_sweep_impl(config, theta_grid, options, false);
}

}  // namespace spinretro
