#pragma once

#include <optional>
#include <vector>

#include "spinretro/grid_oracle.hpp"
#include "spinretro/sequence_sim.hpp"

namespace spinretro {

// ---- Theory chain built from a four-pulse sequence configuration ----------
// Slot 1 is the probed (retrodicted) pulse: rho is conditioned on slot 0 and
// propagated to the probe time; the effect gathers slots 2..3 walked
// backward to the probe time. Outcomes default to zero (conditional
// variances are outcome-independent).

GaussianOscillatorState chain_rho(const sim::SequenceConfig& config, double m1 = 0.0);
EffectState chain_effect(const sim::SequenceConfig& config, double m3 = 0.0, double m4 = 0.0);

// ---- Retrodiction of a hypothetical projective readout ---------------------

// Gaussian product of the two theta-marginals (delegates to
// combine_rho_effect).
Marginal retrodict_projective(const GaussianOscillatorState& rho, const EffectState& eff,
                              const QuadratureDirection& dir);

// ---- Optical (finite-strength) probe predictions ---------------------------

// Var(m2 | prior data) = kappa2^2 sigma_rho^2(theta) + 1/2.
double predict_optical(const GaussianOscillatorState& rho, double kappa2_sq,
                       const QuadratureDirection& dir);

// Retrodicted optical variance Var(m2 | m1, m3, m4).
//  * theta on an axis (0 or pi/2 mod pi): closed form
//    kappa2^2 sigma_rhoE^2(theta) + 1/2, exact.
//  * general theta: the double-integral outcome distribution evaluated on
//    the grid (coherences included); requires rho and eff to be positive
//    Gaussian operators and a grid spec. Throws OracleError when no grid is
//    supplied for an off-axis angle, when the inputs are effective-model
//    states that no positive operator represents, or when the Richardson
//    refinement check fails to converge.
double retrodict_optical(const GaussianOscillatorState& rho, const EffectState& eff,
                         double kappa2_sq, const QuadratureDirection& dir,
                         const grid::GridSpec* grid_spec = nullptr,
                         bool check_convergence = true);

double retrodict_optical_axis(const GaussianOscillatorState& rho, const EffectState& eff,
                              double kappa2_sq, const QuadratureDirection& dir);

// Model-exact conditional optical moments at any theta from the joint record
// Gaussian (Schur complement); equals the grid evaluation in the full_cw
// model and stays exact for the back-action-evasion model where grid
// realization is impossible.
struct OpticalConditional {
  double variance = 0.0;
  double variance_single = 0.0;            // Var(m2 | m1)
  Eigen::Vector3d coefficients = Eigen::Vector3d::Zero();  // on (m1, m3, m4)
  Eigen::Vector4d outcome_means = Eigen::Vector4d::Zero();
};

OpticalConditional conditional_optical_theory(const sim::SequenceConfig& config,
                                              double theta2);

// ---- Polar sweep ------------------------------------------------------------

struct SweepOptions {
  bool optical_grid_column = false;  // also evaluate the grid double integral
  grid::GridSpec grid;
  bool check_convergence = false;
};

struct RetrodictionResult {
  std::vector<double> theta;
  std::vector<double> var_prior;          // sigma_rho^2(theta)
  std::vector<double> var_retro;          // sigma_rhoE^2(theta)
  std::vector<double> var_optical_prior;  // kappa2^2 sigma_rho^2 + 1/2
  std::vector<double> var_optical_retro;  // conditional_optical_theory per theta
  std::vector<double> var_optical_retro_grid;  // optional; NaN where skipped
  std::vector<unsigned char> grid_converged;
  std::vector<double> inferred_atomic_prior;  // (optical - 1/2)/kappa2^2
  std::vector<double> inferred_atomic_retro;
  double uncertainty_product = 0.0;  // sqrt(sigma_rhoE^2(0) * sigma_rhoE^2(pi/2))
};

RetrodictionResult polar_sweep(const sim::SequenceConfig& config,
                               const std::vector<double>& theta_grid,
                               const SweepOptions& options = {});
RetrodictionResult polar_sweep_serial(const sim::SequenceConfig& config,
                                      const std::vector<double>& theta_grid,
                                      const SweepOptions& options = {});

}  // namespace spinretro
