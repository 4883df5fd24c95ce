#pragma once

#include <Eigen/Dense>

namespace spinretro {

// Units: oscillator quadratures r = (x_A, p_A) with [x, p] = i, vacuum
// variance 1/2 on both axes. All covariances are in these vacuum units.
inline constexpr double kVacuumVariance = 0.5;

// Measurement direction in the oscillator phase plane. The measured
// quadrature is q(theta) = p_A*cos(theta) + x_A*sin(theta), i.e. the axis
// vector in (x, p) coordinates is (sin theta, cos theta): theta = 0 probes
// p_A, theta = pi/2 probes x_A.
class QuadratureDirection {
 public:
  explicit QuadratureDirection(double theta);

  double theta() const { return theta_; }
  Eigen::Vector2d axis() const;            // (sin theta, cos theta)
  Eigen::Vector2d conjugate_axis() const;  // axis(theta + pi/2)
  QuadratureDirection conjugate() const;

  bool is_axis_aligned(double tol = 1e-9) const;  // theta = 0 or pi/2 (mod pi)

 private:
  double theta_;  // reduced to [0, 2*pi)
};

struct Marginal {
  double mean = 0.0;
  double variance = 0.0;
};

// Forward-conditioned Gaussian state rho of the atomic oscillator.
class GaussianOscillatorState {
 public:
  GaussianOscillatorState(const Eigen::Vector2d& mean, const Eigen::Matrix2d& cov,
                          double mean_spin_fraction = 1.0);

  static GaussianOscillatorState vacuum();
  // Isotropic cov = factor * 1/2 * I (e.g. 1.06 for the partially polarized
  // ensemble start).
  static GaussianOscillatorState scaled_vacuum(double variance_factor);

  const Eigen::Vector2d& mean() const { return mean_; }
  const Eigen::Matrix2d& cov() const { return cov_; }
  double mean_spin_fraction() const { return mean_spin_fraction_; }

  GaussianOscillatorState with_mean_spin_fraction(double f) const;

 private:
  Eigen::Vector2d mean_;
  Eigen::Matrix2d cov_;
  double mean_spin_fraction_;
};

// Phase-space rotation by `angle` (Larmor rotation in the rotating frame):
// x -> x cos a + p sin a, p -> -x sin a + p cos a. det(cov) is unchanged.
GaussianOscillatorState rotate(const GaussianOscillatorState& state, double angle);

// Mean and variance of the q(theta) marginal: (v.mean, v' cov v).
Marginal marginal(const GaussianOscillatorState& state, const QuadratureDirection& dir);

// One-dimensional marginal in information form: `precision` may be zero
// (flat direction); `weighted_mean` is precision * mean.
struct InfoMarginal {
  double precision = 0.0;
  double weighted_mean = 0.0;
};

// Backward-conditioned effect E in information (precision) form:
// E(r) ~ exp(-1/2 r' info_matrix r + info_vector' r). The all-zero matrix is
// the flat "no posterior information" effect, so the backward recursion can
// start exactly flat.
class EffectState {
 public:
  EffectState(const Eigen::Matrix2d& info_matrix, const Eigen::Vector2d& info_vector);

  static EffectState flat();

  const Eigen::Matrix2d& info_matrix() const { return info_; }
  const Eigen::Vector2d& info_vector() const { return info_vec_; }

  bool has_full_rank(double tol = 1e-12) const;
  // Implied covariance / mean; requires full rank.
  Eigen::Matrix2d covariance() const;
  Eigen::Vector2d mean() const;

  // Radon marginal of the effect Gaussian along q(theta), in information
  // form. Zero precision along directions the effect knows nothing about
  // (including every non-axis direction of a rank-1 effect: a tilted ridge
  // marginalizes to flat).
  InfoMarginal marginal_information(const QuadratureDirection& dir) const;

 private:
  Eigen::Matrix2d info_;
  Eigen::Vector2d info_vec_;
};

// Retrodicted marginal: 1-D Gaussian product of the rho marginal and the
// effect marginal along theta. Variance is the harmonic combination
// 1/(1/var_rho + 1/var_E); a flat effect returns the rho marginal unchanged.
Marginal combine_rho_effect(const GaussianOscillatorState& rho, const EffectState& eff,
                            const QuadratureDirection& dir);

}  // namespace spinretro
