#include "spinretro/grid_oracle.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "spinretro/errors.hpp"

namespace spinretro::grid {

namespace {

std::mutex g_workspace_mutex;

void validate_spec(const GridSpec& spec) {
  if (spec.points < 64) throw OracleError("grid: need at least 64 points");
  if (spec.length < 6.0) throw OracleError("grid: half-length must be >= 6");
  const double spacing = 2.0 * spec.length / (spec.points - 1);
  if (spacing > 0.1) throw OracleError("grid: spacing exceeds 0.1, grid too coarse");
  if (spec.modes < 8 || spec.modes > spec.points) {
    throw OracleError("grid: mode count must be in [8, points]");
  }
}

double psi_probe(double y) {
  return std::pow(M_PI, -0.25) * std::exp(-0.5 * y * y);
}

// Rotation angle taking the grid coordinate onto q(theta): the diagonal of
// U(phi) K U(phi)^dag with phi = pi/2 - theta is the q(theta) distribution.
double frame_angle(const QuadratureDirection& dir) {
  double phi = M_PI / 2.0 - dir.theta();
  phi = std::remainder(phi, 2.0 * M_PI);
  return phi;
}

bool needs_rotation(double phi) { return std::abs(phi) > 1e-14; }

}  // namespace

GridWorkspace::GridWorkspace(const GridSpec& spec) : spec_(spec) {
  validate_spec(spec);
  points_ = Eigen::VectorXd::LinSpaced(spec.points, -spec.length, spec.length);
  spacing_ = points_(1) - points_(0);
}

std::shared_ptr<const GridWorkspace> GridWorkspace::get(const GridSpec& spec) {
  static std::map<std::tuple<double, int, int>, std::shared_ptr<const GridWorkspace>> cache;
  std::lock_guard<std::mutex> lock(g_workspace_mutex);
  auto key = std::make_tuple(spec.length, spec.points, spec.modes);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto ws = std::shared_ptr<const GridWorkspace>(new GridWorkspace(spec));
  cache.emplace(key, ws);
  return ws;
}

const Eigen::MatrixXcd& GridWorkspace::modes() const {
  std::lock_guard<std::mutex> lock(g_workspace_mutex);
  if (!modes_ready_) {
    const int n = spec_.points;
    const double dx = spacing_;
    Eigen::MatrixXd h(n, n);
    const double kin = 1.0 / (2.0 * dx * dx);
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k <= j; ++k) {
        double t;
        if (j == k) {
          t = kin * M_PI * M_PI / 3.0;
        } else {
          const int djk = j - k;
          t = kin * 2.0 * ((djk % 2 == 0) ? 1.0 : -1.0) / (double(djk) * double(djk));
        }
        h(j, k) = t;
        h(k, j) = t;
      }
      h(j, j) += 0.5 * points_(j) * points_(j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    modes_ = solver.eigenvectors().leftCols(spec_.modes).cast<std::complex<double>>();
    modes_ready_ = true;
  }
  return modes_;
}

GridDensity::GridDensity(std::shared_ptr<const GridWorkspace> ws, Eigen::MatrixXcd kernel)
    : ws_(std::move(ws)), kernel_(std::move(kernel)) {}

GridDensity GridDensity::vacuum(const GridSpec& spec) {
  auto ws = GridWorkspace::get(spec);
  const Eigen::VectorXd& a = ws->points();
  Eigen::VectorXd psi = (-0.5 * a.array().square()).exp();
  psi /= psi.norm();
  Eigen::MatrixXcd k = (psi * psi.transpose()).cast<std::complex<double>>();
  return GridDensity(ws, std::move(k));
}

GridDensity GridDensity::flat_effect(const GridSpec& spec) {
  auto ws = GridWorkspace::get(spec);
  return GridDensity(ws, Eigen::MatrixXcd::Identity(spec.points, spec.points));
}

GridDensity GridDensity::from_gaussian(const GridSpec& spec, const Eigen::Vector2d& mean,
                                       const Eigen::Matrix2d& cov, bool normalize) {
  const double det = cov.determinant();
  if (cov(0, 0) <= 0.0 || det < 0.25 * (1.0 - 1e-6)) {
    throw OracleError(
        "grid: Gaussian with det(cov) < 1/4 is not a positive operator and cannot be "
        "realized on the grid (effective back-action-evasion model state)");
  }
  auto ws = GridWorkspace::get(spec);
  const Eigen::VectorXd& a = ws->points();
  const int n = spec.points;
  Eigen::MatrixXcd k(n, n);
  const double sxx = cov(0, 0);
  const double sxp = cov(0, 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double s = 0.5 * (a(i) + a(j)) - mean(0);
      const double d = a(i) - a(j);
      const double re = -s * s / (2.0 * sxx) - d * d * det / (2.0 * sxx);
      const double im = d * (mean(1) + sxp / sxx * s);
      k(i, j) = std::exp(re) * std::complex<double>(std::cos(im), std::sin(im));
    }
  }
  GridDensity out(ws, std::move(k));
  return normalize ? out.normalized() : out;
}

GridDensity GridDensity::from_effect(const GridSpec& spec, const EffectState& eff) {
  const Eigen::Matrix2d info = eff.info_matrix();
  if (info.cwiseAbs().maxCoeff() < 1e-14) return flat_effect(spec);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(info);
  const Eigen::Vector2d lam = es.eigenvalues();
  const Eigen::Matrix2d v = es.eigenvectors();
  constexpr double kFlatVariance = 1e4;
  Eigen::Vector2d var;
  for (int i = 0; i < 2; ++i) {
    var(i) = lam(i) > 1e-10 ? 1.0 / lam(i) : kFlatVariance;
  }
  const Eigen::Matrix2d cov = v * var.asDiagonal() * v.transpose();
  const Eigen::Vector2d mean = cov * eff.info_vector();
  return from_gaussian(spec, mean, cov, /*normalize=*/false);
}

double GridDensity::trace() const { return kernel_.trace().real(); }

double GridDensity::purity() const { return (kernel_ * kernel_).trace().real(); }

double GridDensity::hermiticity_defect() const {
  return (kernel_ - kernel_.adjoint()).cwiseAbs().maxCoeff();
}

double GridDensity::min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(kernel_,
                                                     Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

GridDensity GridDensity::rotated(double phi) const {
  if (!needs_rotation(phi)) return *this;
  const Eigen::MatrixXcd& basis = ws_->modes();
  Eigen::MatrixXcd km = basis.adjoint() * (kernel_ * basis);
  const double trace_before = trace();
  const double trace_mode = km.trace().real();
  const int nm = ws_->spec().modes;
  Eigen::VectorXcd phase(nm);
  for (int i = 0; i < nm; ++i) {
    phase(i) = std::complex<double>(std::cos(-phi * i), std::sin(-phi * i));
  }
  for (int i = 0; i < nm; ++i) {
    for (int j = 0; j < nm; ++j) {
      km(i, j) *= phase(i) * std::conj(phase(j));
    }
  }
  GridDensity out(ws_, basis * km * basis.adjoint());
  out.rotation_loss_ = rotation_loss_;
  if (std::abs(trace_before) > 1e-12) {
    out.rotation_loss_ += std::abs(1.0 - trace_mode / trace_before);
  }
  return out;
}

double GridDensity::boundary_mass() const {
  const Eigen::VectorXd& a = ws_->points();
  const double edge = ws_->spec().length - 1.0;
  double inner = 0.0, outer = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double p = std::abs(kernel_(i, i).real());
    (std::abs(a(i)) > edge ? outer : inner) += p;
  }
  const double total = inner + outer;
  return total > 0.0 ? outer / total : 0.0;
}

GridDensity GridDensity::normalized() const {
  GridDensity out = *this;
  const double t = trace();
  if (t <= 0.0) throw OracleError("grid: cannot normalize kernel with non-positive trace");
  out.kernel_ /= t;
  return out;
}

PovmResult povm_apply(const GridDensity& rho, double kappa_sq, const QuadratureDirection& dir,
                      double m) {
  if (kappa_sq < 0.0) throw std::invalid_argument("povm_apply: kappa_sq must be non-negative");
  const double trace_before = rho.trace();
  if (kappa_sq == 0.0) {
    return {rho, 1.0, true};
  }
  const double phi = frame_angle(dir);
  GridDensity work = needs_rotation(phi) ? rho.rotated(phi) : rho;

  const Eigen::VectorXd& a = work.workspace()->points();
  const double k = std::sqrt(kappa_sq);
  Eigen::VectorXd mask(a.size());
  for (int i = 0; i < a.size(); ++i) mask(i) = psi_probe(m - k * a(i));

  Eigen::MatrixXcd kern = mask.asDiagonal() * work.kernel() * mask.asDiagonal();
  GridDensity post = GridDensity(work.workspace(), std::move(kern));
  post.rotation_loss_ = work.rotation_loss();
  // The conditioning acts along the measured axis, so the off-grid leak of
  // the posterior is judged in the measurement frame.
  const bool boundary_ok = post.boundary_mass() <= 1e-8;
  post = needs_rotation(phi) ? post.rotated(-phi) : post;

  PovmResult out{post, 0.0, boundary_ok};
  const double trace_after = out.post.trace();
  out.weight = trace_before > 0.0 ? trace_after / trace_before : 0.0;
  if (trace_after > 0.0) out.post = out.post.normalized();
  return out;
}

Marginal radon_marginal(const GridDensity& rho, const QuadratureDirection& dir) {
  const double phi = frame_angle(dir);
  const GridDensity work = needs_rotation(phi) ? rho.rotated(phi) : rho;
  const Eigen::VectorXd& a = work.workspace()->points();
  double norm = 0.0, mu = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double p = std::max(work.kernel()(i, i).real(), 0.0);
    norm += p;
    mu += p * a(i);
  }
  if (norm <= 0.0) throw OracleError("radon_marginal: empty diagonal");
  mu /= norm;
  double var = 0.0;
  for (int i = 0; i < a.size(); ++i) {
    const double p = std::max(work.kernel()(i, i).real(), 0.0);
    var += p * (a(i) - mu) * (a(i) - mu);
  }
  return {mu, var / norm};
}

Marginal projective_retrodiction(const GridDensity& rho, const GridDensity& eff,
                                 const QuadratureDirection& dir) {
  const double phi = frame_angle(dir);
  const GridDensity r = needs_rotation(phi) ? rho.rotated(phi) : rho;
  const GridDensity e = needs_rotation(phi) ? eff.rotated(phi) : eff;
  const Eigen::VectorXd& a = r.workspace()->points();
  double norm = 0.0, mu = 0.0;
  Eigen::VectorXd p(a.size());
  for (int i = 0; i < a.size(); ++i) {
    p(i) = std::max(r.kernel()(i, i).real(), 0.0) * std::max(e.kernel()(i, i).real(), 0.0);
    norm += p(i);
    mu += p(i) * a(i);
  }
  if (norm <= 0.0) throw OracleError("projective_retrodiction: empty product distribution");
  mu /= norm;
  double var = 0.0;
  for (int i = 0; i < a.size(); ++i) var += p(i) * (a(i) - mu) * (a(i) - mu);
  return {mu, var / norm};
}

OpticalDistribution retrodicted_optical_distribution(const GridDensity& rho,
                                                     const GridDensity& eff, double kappa2_sq,
                                                     const QuadratureDirection& dir,
                                                     const Eigen::VectorXd& m2_grid) {
  if (kappa2_sq < 0.0) throw std::invalid_argument("kappa2_sq must be non-negative");
  if (rho.workspace()->spec() != eff.workspace()->spec()) {
    throw OracleError("retrodicted_optical_distribution: incompatible grids");
  }
  const double phi = frame_angle(dir);
  const GridDensity r = needs_rotation(phi) ? rho.rotated(phi) : rho;
  const GridDensity e = needs_rotation(phi) ? eff.rotated(phi) : eff;
  // M(a,a') = rho(a,a') eff(a',a); Pr(m2) = psi' M psi is then real >= 0 up
  // to rounding.
  const Eigen::MatrixXcd m = r.kernel().cwiseProduct(e.kernel().transpose());
  const Eigen::VectorXd& a = r.workspace()->points();
  const double k = std::sqrt(kappa2_sq);

  OpticalDistribution out;
  out.m2 = m2_grid;
  out.pdf.resize(m2_grid.size());
  Eigen::VectorXcd psi(a.size());
  for (int i = 0; i < m2_grid.size(); ++i) {
    for (int j = 0; j < a.size(); ++j) psi(j) = psi_probe(m2_grid(i) - k * a(j));
    out.pdf(i) = (psi.dot(m * psi)).real();  // psi real: dot = psi' M psi
  }
  const double peak = out.pdf.maxCoeff();
  if (peak <= 0.0) throw OracleError("retrodicted_optical_distribution: empty distribution");
  out.min_raw = out.pdf.minCoeff() / peak;
  if (out.min_raw < -1e-9) {
    throw OracleError("retrodicted_optical_distribution: distribution significantly negative");
  }
  out.pdf = out.pdf.cwiseMax(0.0);
  const double dm = m2_grid(1) - m2_grid(0);
  const double norm = out.pdf.sum() * dm;
  out.pdf /= norm;
  out.mean = (out.pdf.array() * m2_grid.array()).sum() * dm;
  out.variance =
      (out.pdf.array() * (m2_grid.array() - out.mean).square()).sum() * dm;
  return out;
}

Eigen::VectorXd make_m2_grid(double center, double halfwidth, int points) {
  if (points < 51) throw std::invalid_argument("make_m2_grid: need at least 51 points");
  return Eigen::VectorXd::LinSpaced(points, center - halfwidth, center + halfwidth);
}

}  // namespace spinretro::grid
