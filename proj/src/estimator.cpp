#include "spinretro/estimator.hpp"

#include <cmath>
#include <stdexcept>

#include "spinretro/errors.hpp"

namespace spinretro::est {

namespace {

constexpr std::size_t kChunk = 1024;

struct MomentAccumulator {
  long long n = 0;
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Matrix4d m2 = Eigen::Matrix4d::Zero();  // sum of outer(x-mean, x-mean)

  void add(const Eigen::Vector4d& x) {
    n += 1;
    const Eigen::Vector4d delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean).transpose();
  }

  static MomentAccumulator merge(const MomentAccumulator& a, const MomentAccumulator& b) {
    if (a.n == 0) return b;
    if (b.n == 0) return a;
    MomentAccumulator out;
    out.n = a.n + b.n;
    const Eigen::Vector4d delta = b.mean - a.mean;
    const double na = static_cast<double>(a.n);
    const double nb = static_cast<double>(b.n);
    const double nt = static_cast<double>(out.n);
    out.mean = a.mean + delta * (nb / nt);
    out.m2 = a.m2 + b.m2 + (delta * delta.transpose()) * (na * nb / nt);
    return out;
  }
};

Eigen::Vector4d record_vec(const sim::MeasurementRecord& r) {
  return {r.m[0], r.m[1], r.m[2], r.m[3]};
}

MomentAccumulator tree_merge(const std::vector<MomentAccumulator>& chunks, std::size_t lo,
                             std::size_t hi) {
  if (hi - lo == 1) return chunks[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return MomentAccumulator::merge(tree_merge(chunks, lo, mid), tree_merge(chunks, mid, hi));
}

CovarianceSummary summary_from_accumulator(const MomentAccumulator& acc) {
  if (acc.n < 2) throw DataError("covariance_summary: need at least 2 records");
  CovarianceSummary out;
  out.n = acc.n;
  out.mean = acc.mean;
  out.cov = acc.m2 / static_cast<double>(acc.n - 1);
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

// Raw sums for O(1) leave-out summaries.
struct RawSums {
  long long n = 0;
  Eigen::Vector4d s1 = Eigen::Vector4d::Zero();
  Eigen::Matrix4d s2 = Eigen::Matrix4d::Zero();

  CovarianceSummary without(const RawSums& part) const {
    CovarianceSummary out;
    out.n = n - part.n;
    const double m = static_cast<double>(out.n);
    const Eigen::Vector4d s1p = s1 - part.s1;
    out.mean = s1p / m;
    out.cov = ((s2 - part.s2) - (s1p * s1p.transpose()) / m) / (m - 1.0);
    out.cov = 0.5 * (out.cov + out.cov.transpose());
    return out;
  }
};

RawSums raw_sums(const sim::RecordSet& records) {
  RawSums out;
  for (const auto& r : records.records) {
    const Eigen::Vector4d x = record_vec(r);
    out.n += 1;
    out.s1 += x;
    out.s2 += x * x.transpose();
  }
  return out;
}

void fill_entry_standard_errors(const sim::RecordSet& records, CovarianceSummary& summary) {
  const RawSums total = raw_sums(records);
  const long long n = total.n;
  if (n < 3) return;
  Eigen::Matrix4d sum_cov = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d sum_cov2 = Eigen::Matrix4d::Zero();
  Eigen::Vector4d sum_mean = Eigen::Vector4d::Zero();
  Eigen::Vector4d sum_mean2 = Eigen::Vector4d::Zero();
  for (const auto& r : records.records) {
    const Eigen::Vector4d x = record_vec(r);
    RawSums part;
    part.n = 1;
    part.s1 = x;
    part.s2 = x * x.transpose();
    const CovarianceSummary loo = total.without(part);
    sum_cov += loo.cov;
    sum_cov2 += loo.cov.cwiseProduct(loo.cov);
    sum_mean += loo.mean;
    sum_mean2 += loo.mean.cwiseProduct(loo.mean);
  }
  const double dn = static_cast<double>(n);
  const double factor = (dn - 1.0) / dn;
  const Eigen::Matrix4d var_cov =
      (sum_cov2 / dn - (sum_cov / dn).cwiseProduct(sum_cov / dn)) * dn * factor;
  const Eigen::Vector4d var_mean =
      (sum_mean2 / dn - (sum_mean / dn).cwiseProduct(sum_mean / dn)) * dn * factor;
  summary.cov_se = var_cov.cwiseMax(0.0).cwiseSqrt();
  summary.mean_se = var_mean.cwiseMax(0.0).cwiseSqrt();
}

}  // namespace

CovarianceSummary CovarianceSummary::from_moments(const Eigen::Vector4d& mean,
                                                  const Eigen::Matrix4d& cov, long long n) {
  CovarianceSummary out;
  out.n = n;
  out.mean = mean;
  out.cov = 0.5 * (cov + cov.transpose());
  return out;
}

CovarianceSummary covariance_summary_serial(const sim::RecordSet& records) {
  MomentAccumulator acc;
  std::vector<MomentAccumulator> chunks;
  for (std::size_t start = 0; start < records.records.size(); start += kChunk) {
    MomentAccumulator chunk;
    const std::size_t stop = std::min(records.records.size(), start + kChunk);
    for (std::size_t i = start; i < stop; ++i) chunk.add(record_vec(records.records[i]));
    chunks.push_back(chunk);
  }
  if (chunks.empty()) throw DataError("covariance_summary: empty record set");
  acc = tree_merge(chunks, 0, chunks.size());
  CovarianceSummary out = summary_from_accumulator(acc);
  fill_entry_standard_errors(records, out);
  return out;
}

CovarianceSummary covariance_summary(const sim::RecordSet& records) {
  const std::size_t n = records.records.size();
  if (n == 0) throw DataError("covariance_summary: empty record set");
  const std::size_t num_chunks = (n + kChunk - 1) / kChunk;
  std::vector<MomentAccumulator> chunks(num_chunks);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(num_chunks); ++c) {
    const std::size_t start = static_cast<std::size_t>(c) * kChunk;
    const std::size_t stop = std::min(n, start + kChunk);
    for (std::size_t i = start; i < stop; ++i) {
      chunks[static_cast<std::size_t>(c)].add(record_vec(records.records[i]));
    }
  }
  CovarianceSummary out = summary_from_accumulator(tree_merge(chunks, 0, chunks.size()));
  fill_entry_standard_errors(records, out);
  return out;
}

SingleConditional conditional_variance_single(const CovarianceSummary& summary) {
  SingleConditional out;
  const double var1 = summary.cov(0, 0);
  const double var2 = summary.cov(1, 1);
  if (var1 <= 1e-14 * std::max(1.0, var2)) {
    out.variance = var2;
    out.alpha = 0.0;
    out.degenerate = true;
    return out;
  }
  out.alpha = summary.cov(1, 0) / var1;
  out.variance = var2 - summary.cov(1, 0) * summary.cov(1, 0) / var1;
  return out;
}

TripleConditional conditional_variance_triple(const CovarianceSummary& summary) {
  const Eigen::Matrix4d& c = summary.cov;
  const double c11 = c(0, 0), c12 = c(0, 1), c13 = c(0, 2), c14 = c(0, 3);
  const double c22 = c(1, 1), c23 = c(1, 2), c24 = c(1, 3);
  const double c33 = c(2, 2), c34 = c(2, 3), c44 = c(3, 3);

  TripleConditional out;
  out.lambda = 2.0 * c13 * c14 * c34 - c14 * c14 * c33 - c13 * c13 * c44 +
               c11 * c33 * c44 - c11 * c34 * c34;

  const double scale = std::max({std::abs(c11), std::abs(c33), std::abs(c44), 1e-300});
  if (std::abs(out.lambda) <= 1e-12 * scale * scale * scale) {
    Eigen::Matrix3d k;
    k << c11, c13, c14, c13, c33, c34, c14, c34, c44;
    const Eigen::Vector3d rhs(c12, c23, c24);
    const Eigen::Vector3d coef =
        k.completeOrthogonalDecomposition().solve(rhs);
    out.alpha = coef(0);
    out.beta = coef(1);
    out.gamma = coef(2);
    out.pseudo_inverse = true;
  } else {
    out.alpha = (c14 * c23 * c34 + c13 * c24 * c34 - c12 * c34 * c34 - c14 * c24 * c33 -
                 c13 * c23 * c44 + c12 * c33 * c44) /
                out.lambda;
    out.beta = (c13 * c14 * c24 + c12 * c14 * c34 - c23 * c14 * c14 - c24 * c34 * c11 -
                c12 * c13 * c44 + c11 * c23 * c44) /
               out.lambda;
    out.gamma = (c13 * c14 * c23 + c12 * c13 * c34 - c24 * c13 * c13 - c23 * c34 * c11 -
                 c12 * c14 * c33 + c24 * c11 * c33) /
                out.lambda;
  }
  out.variance = c22 - (out.alpha * c12 + out.beta * c23 + out.gamma * c24);
  if (out.variance < 0.0 && out.variance > -1e-12 * c22) out.variance = 0.0;
  return out;
}

Eigen::VectorXd jackknife_se(const sim::RecordSet& records, const StatFn& stat, int blocks) {
  const long long n = static_cast<long long>(records.records.size());
  if (n < 3) throw DataError("jackknife_se: need at least 3 records");
  const RawSums total = raw_sums(records);

  std::vector<RawSums> parts;
  if (blocks <= 0) {
    parts.resize(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const Eigen::Vector4d x = record_vec(records.records[i]);
      parts[i].n = 1;
      parts[i].s1 = x;
      parts[i].s2 = x * x.transpose();
    }
  } else {
    if (blocks < 2 || blocks > n) throw DataError("jackknife_se: invalid block count");
    parts.resize(static_cast<std::size_t>(blocks));
    for (long long i = 0; i < n; ++i) {
      auto& p = parts[static_cast<std::size_t>(i * blocks / n)];
      const Eigen::Vector4d x = record_vec(records.records[static_cast<std::size_t>(i)]);
      p.n += 1;
      p.s1 += x;
      p.s2 += x * x.transpose();
    }
  }

  const std::size_t g = parts.size();
  Eigen::VectorXd sum, sum2;
  for (std::size_t i = 0; i < g; ++i) {
    const Eigen::VectorXd t = stat(total.without(parts[i]));
    if (i == 0) {
      sum = Eigen::VectorXd::Zero(t.size());
      sum2 = Eigen::VectorXd::Zero(t.size());
    }
    sum += t;
    sum2 += t.cwiseProduct(t);
  }
  const double dg = static_cast<double>(g);
  const Eigen::VectorXd var =
      (sum2 / dg - (sum / dg).cwiseProduct(sum / dg)) * dg * ((dg - 1.0) / dg);
  return var.cwiseMax(0.0).cwiseSqrt();
}

AtomicVariance infer_atomic_variance(double optical_var, const CalibrationModel& cal,
                                     double std_err) {
  if (cal.shot_noise_unit <= 0.0) throw ConfigError("calibration: shot-noise unit must be > 0");
  if (cal.kappa2_sq <= 0.0) throw ConfigError("calibration: kappa2_sq must be > 0");
  const double scale = PulseSpec::probe_vacuum_var / cal.shot_noise_unit;
  const double v = optical_var * scale;
  const double se = std::abs(std_err) * scale;
  AtomicVariance out;
  out.std_err = se / cal.kappa2_sq;
  const double excess = v - PulseSpec::probe_vacuum_var;
  if (excess < -5.0 * se) {
    throw DataError("infer_atomic_variance: optical variance more than 5 standard errors "
                    "below the shot-noise floor");
  }
  if (excess < 0.0) {
    out.value = 0.0;
    out.clamped = true;
  } else {
    out.value = excess / cal.kappa2_sq;
  }
  return out;
}

double uncertainty_product(double var_p_atomic, double var_x_atomic) {
  if (var_p_atomic < 0.0 || var_x_atomic < 0.0) {
    throw std::invalid_argument("uncertainty_product: variances must be non-negative");
  }
  return std::sqrt(var_p_atomic * var_x_atomic);
}

WinelandResult wineland_xi_sq(double var_atomic, double mean_spin_fraction) {
  if (!(mean_spin_fraction > 0.0 && mean_spin_fraction <= 1.0)) {
    throw std::invalid_argument("wineland_xi_sq: mean spin fraction must be in (0, 1]");
  }
  if (var_atomic < 0.0) throw std::invalid_argument("wineland_xi_sq: negative variance");
  WinelandResult out;
  out.xi_sq = (var_atomic / kVacuumVariance) / (mean_spin_fraction * mean_spin_fraction);
  out.db = 10.0 * std::log10(out.xi_sq);
  return out;
}

ShotNoiseFit calibrate_shot_noise(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) {
    throw DataError("calibrate_shot_noise: need at least 3 probe powers");
  }
  const double n = static_cast<double>(points.size());
  double sp = 0, sv = 0, spp = 0, spv = 0;
  for (const auto& [p, v] : points) {
    sp += p;
    sv += v;
    spp += p * p;
    spv += p * v;
  }
  const double denom = n * spp - sp * sp;
  if (std::abs(denom) < 1e-12) throw DataError("calibrate_shot_noise: degenerate powers");
  ShotNoiseFit fit;
  fit.slope = (n * spv - sp * sv) / denom;
  fit.intercept = (sv - fit.slope * sp) / n;
  double ss_res = 0, ss_tot = 0;
  const double vbar = sv / n;
  for (const auto& [p, v] : points) {
    const double r = v - (fit.slope * p + fit.intercept);
    ss_res += r * r;
    ss_tot += (v - vbar) * (v - vbar);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  if (!(fit.r_squared > 0.99)) {
    throw DataError("calibrate_shot_noise: nonlinear shot-noise scaling (R^2 = " +
                    std::to_string(fit.r_squared) + ")");
  }
  return fit;
}

CalibrationModel calibrate_sql(double thermal_optical_var, double shot_noise_unit,
                               double kappa_cal_sq) {
  if (shot_noise_unit <= 0.0) throw ConfigError("calibrate_sql: shot-noise unit must be > 0");
  if (kappa_cal_sq <= 0.0) throw ConfigError("calibrate_sql: kappa_cal_sq must be > 0");
  if (thermal_optical_var <= shot_noise_unit) {
    throw DataError("calibrate_sql: thermal variance does not exceed the shot-noise unit; "
                    "no atomic signal to calibrate on");
  }
  const double scale = PulseSpec::probe_vacuum_var / shot_noise_unit;
  const double excess = (thermal_optical_var - shot_noise_unit) * scale;
  CalibrationModel cal;
  cal.shot_noise_unit = shot_noise_unit;
  cal.kappa2_sq = kappa_cal_sq;
  cal.sql_atomic = excess / (CalibrationModel::thermal_factor * kappa_cal_sq);
  return cal;
}

}  // namespace spinretro::est
