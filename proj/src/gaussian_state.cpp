#include "spinretro/gaussian_state.hpp"

#include <cmath>
#include <stdexcept>

namespace spinretro {

namespace {

double wrap_angle(double theta) {
  const double two_pi = 2.0 * M_PI;
  double t = std::fmod(theta, two_pi);
  if (t < 0.0) t += two_pi;
  return t;
}

void check_symmetric_psd(const Eigen::Matrix2d& m, const char* what) {
  if (std::abs(m(0, 1) - m(1, 0)) > 1e-10 * (1.0 + m.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument(std::string(what) + ": matrix not symmetric");
  }
  const double tr = m.trace();
  const double det = m.determinant();
  const double tol = 1e-12 * (1.0 + tr * tr);
  if (tr < -1e-12 || det < -tol) {
    throw std::invalid_argument(std::string(what) + ": matrix not positive semi-definite");
  }
}

}  // namespace

QuadratureDirection::QuadratureDirection(double theta) : theta_(wrap_angle(theta)) {}

Eigen::Vector2d QuadratureDirection::axis() const {
  return {std::sin(theta_), std::cos(theta_)};
}

Eigen::Vector2d QuadratureDirection::conjugate_axis() const {
  return {std::cos(theta_), -std::sin(theta_)};
}

QuadratureDirection QuadratureDirection::conjugate() const {
  return QuadratureDirection(theta_ + M_PI / 2.0);
}

bool QuadratureDirection::is_axis_aligned(double tol) const {
  const double s = std::sin(theta_);
  const double c = std::cos(theta_);
  return std::abs(s * c) < tol;
}

GaussianOscillatorState::GaussianOscillatorState(const Eigen::Vector2d& mean,
                                                 const Eigen::Matrix2d& cov,
                                                 double mean_spin_fraction)
    : mean_(mean), cov_(0.5 * (cov + cov.transpose())), mean_spin_fraction_(mean_spin_fraction) {
  check_symmetric_psd(cov, "GaussianOscillatorState");
  if (!(mean_spin_fraction >= 0.0 && mean_spin_fraction <= 1.0)) {
    throw std::invalid_argument("GaussianOscillatorState: mean_spin_fraction outside [0,1]");
  }
}

GaussianOscillatorState GaussianOscillatorState::vacuum() {
  return {Eigen::Vector2d::Zero(), kVacuumVariance * Eigen::Matrix2d::Identity()};
}

GaussianOscillatorState GaussianOscillatorState::scaled_vacuum(double variance_factor) {
  if (variance_factor <= 0.0) {
    throw std::invalid_argument("scaled_vacuum: factor must be positive");
  }
  return {Eigen::Vector2d::Zero(),
          variance_factor * kVacuumVariance * Eigen::Matrix2d::Identity()};
}

GaussianOscillatorState GaussianOscillatorState::with_mean_spin_fraction(double f) const {
  return {mean_, cov_, f};
}

GaussianOscillatorState rotate(const GaussianOscillatorState& state, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix2d r;
  r << c, s, -s, c;
  return {r * state.mean(), r * state.cov() * r.transpose(), state.mean_spin_fraction()};
}

Marginal marginal(const GaussianOscillatorState& state, const QuadratureDirection& dir) {
  const Eigen::Vector2d v = dir.axis();
  return {v.dot(state.mean()), v.dot(state.cov() * v)};
}

EffectState::EffectState(const Eigen::Matrix2d& info_matrix, const Eigen::Vector2d& info_vector)
    : info_(0.5 * (info_matrix + info_matrix.transpose())), info_vec_(info_vector) {
  check_symmetric_psd(info_matrix, "EffectState");
}

EffectState EffectState::flat() {
  return {Eigen::Matrix2d::Zero(), Eigen::Vector2d::Zero()};
}

bool EffectState::has_full_rank(double tol) const {
  const double scale = 1.0 + info_.trace();
  return info_.determinant() > tol * scale * scale;
}

Eigen::Matrix2d EffectState::covariance() const {
  if (!has_full_rank()) {
    throw std::domain_error("EffectState::covariance: information matrix is singular");
  }
  return info_.inverse();
}

Eigen::Vector2d EffectState::mean() const { return covariance() * info_vec_; }

InfoMarginal EffectState::marginal_information(const QuadratureDirection& dir) const {
  const Eigen::Vector2d v = dir.axis();
  const Eigen::Vector2d u = dir.conjugate_axis();
  const double lvv = v.dot(info_ * v);
  const double lvu = v.dot(info_ * u);
  const double luu = u.dot(info_ * u);
  const double ev = v.dot(info_vec_);
  const double eu = u.dot(info_vec_);
  const double tol = 1e-12 * (1.0 + info_.trace());
  if (luu <= tol) {
    // PSD forces lvu ~ 0 here; the u-direction carries no information and
    // integrates out without touching the v-marginal.
    return {std::max(lvv, 0.0), ev};
  }
  const double precision = std::max(lvv - lvu * lvu / luu, 0.0);
  return {precision, ev - lvu * eu / luu};
}

Marginal combine_rho_effect(const GaussianOscillatorState& rho, const EffectState& eff,
                            const QuadratureDirection& dir) {
  const Marginal mr = marginal(rho, dir);
  if (mr.variance <= 0.0) {
    throw std::domain_error("combine_rho_effect: rho marginal variance must be positive");
  }
  const double j_rho = 1.0 / mr.variance;
  const InfoMarginal me = eff.marginal_information(dir);
  const double j = j_rho + me.precision;
  return {(j_rho * mr.mean + me.weighted_mean) / j, 1.0 / j};
}

}  // namespace spinretro
