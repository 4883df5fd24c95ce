#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "spinretro/sequence_sim.hpp"

namespace spinretro::est {

// Sample moments of the four outcome columns. Covariances use the unbiased
// (n-1) normalization; entry standard errors are delete-1 jackknife.
struct CovarianceSummary {
  long long n = 0;
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d cov_se = Eigen::Matrix4d::Zero();
  Eigen::Vector4d mean_se = Eigen::Vector4d::Zero();

  // Synthetic summary without per-record data (no standard errors).
  static CovarianceSummary from_moments(const Eigen::Vector4d& mean,
                                        const Eigen::Matrix4d& cov, long long n);
};

// Chunked accumulation with a fixed pairwise merge tree, so the result is
// identical for the serial and OpenMP paths and independent of thread count.
CovarianceSummary covariance_summary(const sim::RecordSet& records);
CovarianceSummary covariance_summary_serial(const sim::RecordSet& records);

struct SingleConditional {
  double variance = 0.0;
  double alpha = 0.0;
  bool degenerate = false;
};

// Var(m2|m1) = Var(m2) - Cov^2(m2,m1)/Var(m1), alpha = Cov(m2,m1)/Var(m1).
SingleConditional conditional_variance_single(const CovarianceSummary& summary);

struct TripleConditional {
  double variance = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double lambda = 0.0;    // determinant of the (m1,m3,m4) covariance block
  bool pseudo_inverse = false;  // collinear conditioners fallback
};

// Closed-form linear-feedback coefficients for Var(m2|m1,m3,m4); equals the
// least-squares normal-equation solution. Falls back to a pseudo-inverse
// solve (flagged) when the conditioning block is singular.
TripleConditional conditional_variance_triple(const CovarianceSummary& summary);

// Jackknife standard errors for derived statistics. The functor maps a
// leave-out summary to a statistic vector. `blocks` = 0 requests delete-1;
// otherwise delete-block over that many contiguous blocks.
using StatFn = std::function<Eigen::VectorXd(const CovarianceSummary&)>;
Eigen::VectorXd jackknife_se(const sim::RecordSet& records, const StatFn& stat,
                             int blocks = 0);

struct CalibrationModel {
  double shot_noise_unit = 0.5;  // measured optical variance floor (raw units)
  static constexpr double thermal_factor = 1.25;
  double polarization_correction = 1.06;
  double kappa2_sq = 0.0;
  double sql_atomic = 0.5;
};

struct AtomicVariance {
  double value = 0.0;
  double std_err = 0.0;
  bool clamped = false;
};

// (optical_var - 1/2)/kappa2^2 in SQL units of 1/2 after rescaling raw
// optical units by the calibrated shot-noise floor. Values below the floor
// within error bars clamp to zero (flagged); more than 5 standard errors
// below is a data inconsistency.
AtomicVariance infer_atomic_variance(double optical_var, const CalibrationModel& cal,
                                     double std_err = 0.0);

double uncertainty_product(double var_p_atomic, double var_x_atomic);

struct WinelandResult {
  double xi_sq = 0.0;
  double db = 0.0;
};

// Standard-definition metrological squeezing parameter:
// xi^2 = (var/(1/2)) / mean_spin_fraction^2.
WinelandResult wineland_xi_sq(double var_atomic, double mean_spin_fraction);

struct ShotNoiseFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double unit_at(double power) const { return slope * power + intercept; }
};

// Least-squares line through (probe power, optical variance) points with the
// linearity gate R^2 > 0.99; needs at least 3 powers. Throws DataError on a
// nonlinear scaling.
ShotNoiseFit calibrate_shot_noise(const std::vector<std::pair<double, double>>& points);

// Thermal-state calibration: the unpolarized-ensemble spin noise is 5/4 of
// the coherent-spin-state variance, so
// sql_atomic = (thermal_optical - shot_noise)/(1.25 * kappa_cal_sq) in units
// where the shot-noise floor is 1/2.
CalibrationModel calibrate_sql(double thermal_optical_var, double shot_noise_unit,
                               double kappa_cal_sq);

}  // namespace spinretro::est
