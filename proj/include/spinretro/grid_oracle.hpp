#pragma once

#include <Eigen/Dense>
#include <memory>

#include "spinretro/gaussian_state.hpp"

namespace spinretro::grid {

struct GridSpec {
  double length = 8.0;  // grid covers a in [-L, L]
  int points = 512;
  int modes = 128;  // oscillator-eigenbasis truncation used for rotations

  bool operator==(const GridSpec&) const = default;
};

// Shared immutable grid data. The quadrature-rotation basis (eigenvectors of
// the Colbert-Miller DVR harmonic Hamiltonian, exactly orthonormal discrete
// oscillator modes) is built lazily so mask-only usage never pays for the
// eigendecomposition. Workspaces are cached per GridSpec.
class GridWorkspace {
 public:
  static std::shared_ptr<const GridWorkspace> get(const GridSpec& spec);

  const GridSpec& spec() const { return spec_; }
  const Eigen::VectorXd& points() const { return points_; }
  double spacing() const { return spacing_; }
  const Eigen::MatrixXcd& modes() const;  // points x modes, lazily built

 private:
  explicit GridWorkspace(const GridSpec& spec);

  GridSpec spec_;
  Eigen::VectorXd points_;
  double spacing_;
  mutable Eigen::MatrixXcd modes_;
  mutable bool modes_ready_ = false;
};

// Discretized position-representation kernel of a density operator (trace
// normalized to 1) or of an unnormalized positive effect operator.
struct PovmResult;

class GridDensity {
 public:
  // Pure oscillator ground state; marginal variance 1/2 to high accuracy.
  static GridDensity vacuum(const GridSpec& spec);
  // Identity matrix: the flat (no-information) effect.
  static GridDensity flat_effect(const GridSpec& spec);
  // General Gaussian state/operator from phase-space mean and covariance;
  // requires det(cov) >= 1/4 (a positive Gaussian operator), else throws
  // OracleError.
  static GridDensity from_gaussian(const GridSpec& spec, const Eigen::Vector2d& mean,
                                   const Eigen::Matrix2d& cov, bool normalize = true);
  // Effect realization from information form; rank-deficient directions are
  // regularized with a large flat variance.
  static GridDensity from_effect(const GridSpec& spec, const EffectState& eff);

  const Eigen::MatrixXcd& kernel() const { return kernel_; }
  const std::shared_ptr<const GridWorkspace>& workspace() const { return ws_; }

  double trace() const;
  double purity() const;  // Tr(rho^2) for trace-normalized states
  // Hermiticity defect max|K - K^dag| and smallest eigenvalue, for invariant
  // checks.
  double hermiticity_defect() const;
  double min_eigenvalue() const;

  // U(phi) K U(phi)^dag with U = exp(-i phi n) through the truncated mode
  // basis. Exactly unitary on the retained modes; the projection loss is
  // recorded in rotation_loss().
  GridDensity rotated(double phi) const;

  // Fraction of diagonal mass within one unit of the grid boundary.
  double boundary_mass() const;

  double rotation_loss() const { return rotation_loss_; }

  GridDensity normalized() const;

 private:
  GridDensity(std::shared_ptr<const GridWorkspace> ws, Eigen::MatrixXcd kernel);

  std::shared_ptr<const GridWorkspace> ws_;
  Eigen::MatrixXcd kernel_;
  double rotation_loss_ = 0.0;

  friend PovmResult povm_apply(const GridDensity&, double, const QuadratureDirection&, double);
};

struct PovmResult {
  GridDensity post;
  double weight = 0.0;  // trace(after) / trace(before)
  bool boundary_ok = true;
};

// Exact POVM conditioning on outcome m along q(theta): the kernel is
// multiplied by psi(m - kappa a) on both sides in the theta frame. This is
// the full continuous-wave channel, including the intrinsic kappa^2/2
// back-action on the conjugate quadrature.
PovmResult povm_apply(const GridDensity& rho, double kappa_sq, const QuadratureDirection& dir,
                      double m);

// Mean and variance of the diagonal distribution in the theta frame (the
// Radon marginal of the operator's Wigner function).
Marginal radon_marginal(const GridDensity& rho, const QuadratureDirection& dir);

// Distribution over a projective q(theta) readout retrodicted from rho and
// an effect: p(a) proportional to rho_theta(a,a) * eff_theta(a,a).
Marginal projective_retrodiction(const GridDensity& rho, const GridDensity& eff,
                                 const QuadratureDirection& dir);

struct OpticalDistribution {
  Eigen::VectorXd m2;
  Eigen::VectorXd pdf;  // normalized; non-negative up to clipped -1e-12 noise
  double mean = 0.0;
  double variance = 0.0;
  double min_raw = 0.0;  // most negative raw value before clipping, relative
};

// Double-integral retrodicted outcome distribution of the middle optical
// pulse: Pr(m2) ~ sum_{a,a'} psi(m2-k a) psi(m2-k a') rho_theta(a,a')
// eff_theta(a',a). Flat effect reduces to the prior predictive.
OpticalDistribution retrodicted_optical_distribution(const GridDensity& rho,
                                                     const GridDensity& eff, double kappa2_sq,
                                                     const QuadratureDirection& dir,
                                                     const Eigen::VectorXd& m2_grid);

// Uniform m2 grid spanning center +- halfwidth.
Eigen::VectorXd make_m2_grid(double center, double halfwidth, int points = 401);

}  // namespace spinretro::grid
