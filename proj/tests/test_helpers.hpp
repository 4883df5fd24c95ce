#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "spinretro/random_stream.hpp"

namespace test_helpers {

// Independent 1-D oracle: pointwise product of two sampled Gaussian
// densities, moments by direct summation. Used to check the closed-form
// Gaussian fusion against brute force.
struct GridMoments {
  double mean;
  double variance;
};

inline GridMoments product_density_moments(double mu1, double var1, double mu2, double var2,
                                           double lo = -20.0, double hi = 20.0,
                                           int n = 40001) {
  const double dx = (hi - lo) / (n - 1);
  double norm = 0.0, mean = 0.0;
  std::vector<double> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double x = lo + dx * i;
    const double g1 = std::exp(-0.5 * (x - mu1) * (x - mu1) / var1);
    const double g2 = std::exp(-0.5 * (x - mu2) * (x - mu2) / var2);
    p[static_cast<std::size_t>(i)] = g1 * g2;
    norm += p[static_cast<std::size_t>(i)];
    mean += p[static_cast<std::size_t>(i)] * x;
  }
  mean /= norm;
  double var = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + dx * i;
    var += p[static_cast<std::size_t>(i)] * (x - mean) * (x - mean);
  }
  return {mean, var / norm};
}

// Random symmetric positive-definite 4x4 with comfortable conditioning.
inline Eigen::Matrix4d random_spd4(spinretro::RandomStream& rng, double ridge = 0.3) {
  Eigen::Matrix4d g;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) g(i, j) = rng.normal();
  }
  return g * g.transpose() + ridge * Eigen::Matrix4d::Identity();
}

}  // namespace test_helpers
