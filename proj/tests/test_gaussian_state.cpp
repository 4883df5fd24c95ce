#include <doctest.h>

#include <cmath>

#include "spinretro/gaussian_state.hpp"
#include "spinretro/random_stream.hpp"
#include "test_helpers.hpp"

using namespace spinretro;

namespace {

GaussianOscillatorState random_state(RandomStream& rng) {
  Eigen::Matrix2d g;
  g << rng.normal(), rng.normal(), rng.normal(), rng.normal();
  const Eigen::Matrix2d cov = g * g.transpose() + 0.1 * Eigen::Matrix2d::Identity();
  return {Eigen::Vector2d(rng.normal(), rng.normal()), cov};
}

}  // namespace

TEST_CASE("direction convention: theta=0 probes p, pi/2 probes x") {
  GaussianOscillatorState s(Eigen::Vector2d(1.0, 2.0),
                            (Eigen::Matrix2d() << 0.7, 0.0, 0.0, 0.1852).finished());
  const Marginal mp = marginal(s, QuadratureDirection(0.0));
  CHECK(mp.mean == doctest::Approx(2.0));
  CHECK(mp.variance == doctest::Approx(0.1852));
  const Marginal mx = marginal(s, QuadratureDirection(M_PI / 2.0));
  CHECK(mx.mean == doctest::Approx(1.0));
  CHECK(mx.variance == doctest::Approx(0.7));
  const Marginal mq = marginal(s, QuadratureDirection(M_PI / 4.0));
  CHECK(mq.variance == doctest::Approx(0.5 * (0.7 + 0.1852)));  // 0.4426
}

TEST_CASE("vacuum marginal is 1/2 in every direction") {
  const GaussianOscillatorState v = GaussianOscillatorState::vacuum();
  for (double t : {0.0, 0.3, M_PI / 4.0, 1.9, 5.5}) {
    CHECK(marginal(v, QuadratureDirection(t)).variance == doctest::Approx(0.5));
    CHECK(marginal(v, QuadratureDirection(t)).mean == doctest::Approx(0.0));
  }
}

TEST_CASE("rotation: isotropic vacuum invariant, quarter turn swaps axes") {
  const GaussianOscillatorState v = GaussianOscillatorState::vacuum();
  const GaussianOscillatorState vr = rotate(v, 1.234);
  CHECK((vr.cov() - v.cov()).cwiseAbs().maxCoeff() < 1e-14);

  GaussianOscillatorState s(Eigen::Vector2d(1.0, 0.0),
                            (Eigen::Matrix2d() << 0.3, 0.0, 0.0, 0.7).finished());
  const GaussianOscillatorState q = rotate(s, M_PI / 2.0);
  CHECK(std::abs(q.mean()(0)) < 1e-12);
  CHECK(std::abs(q.mean()(1)) == doctest::Approx(1.0));
  CHECK(q.cov()(0, 0) == doctest::Approx(0.7));
  CHECK(q.cov()(1, 1) == doctest::Approx(0.3));
}

TEST_CASE("rotation properties: inverse, full turn, det invariance") {
  RandomStream rng(42);
  for (int i = 0; i < 50; ++i) {
    const GaussianOscillatorState s = random_state(rng);
    const double angle = rng.normal(0.0, 2.0);
    const GaussianOscillatorState back = rotate(rotate(s, angle), -angle);
    CHECK((back.mean() - s.mean()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((back.cov() - s.cov()).cwiseAbs().maxCoeff() < 1e-12);
    const GaussianOscillatorState full = rotate(s, 2.0 * M_PI);
    CHECK((full.cov() - s.cov()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(rotate(s, angle).cov().determinant() ==
          doctest::Approx(s.cov().determinant()).epsilon(1e-12));
  }
}

TEST_CASE("rotating the state shifts the measured direction") {
  RandomStream rng(7);
  for (int i = 0; i < 20; ++i) {
    const GaussianOscillatorState s = random_state(rng);
    const double alpha = rng.normal(0.0, 1.5);
    const double theta = rng.normal(0.0, 1.5);
    const Marginal a = marginal(rotate(s, alpha), QuadratureDirection(theta));
    const Marginal b = marginal(s, QuadratureDirection(theta - alpha));
    CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-10));
    CHECK(a.variance == doctest::Approx(b.variance).epsilon(1e-10));
  }
}

TEST_CASE("invalid states are rejected") {
  const Eigen::Matrix2d asym = (Eigen::Matrix2d() << 0.5, 0.2, -0.2, 0.5).finished();
  CHECK_THROWS(GaussianOscillatorState(Eigen::Vector2d::Zero(), asym));
  const Eigen::Matrix2d indef = (Eigen::Matrix2d() << 0.5, 0.9, 0.9, 0.5).finished();
  CHECK_THROWS(GaussianOscillatorState(Eigen::Vector2d::Zero(), indef));
  CHECK_THROWS(GaussianOscillatorState::vacuum().with_mean_spin_fraction(1.5));
}

TEST_CASE("flat effect is the neutral element of fusion") {
  const EffectState flat = EffectState::flat();
  RandomStream rng(11);
  for (int i = 0; i < 20; ++i) {
    const GaussianOscillatorState s = random_state(rng);
    const QuadratureDirection dir(rng.normal(0.0, 2.0));
    const Marginal m = marginal(s, dir);
    const Marginal c = combine_rho_effect(s, flat, dir);
    CHECK(c.mean == doctest::Approx(m.mean).epsilon(1e-12));
    CHECK(c.variance == doctest::Approx(m.variance).epsilon(1e-12));
  }
}

TEST_CASE("equal-precision fusion halves the variance") {
  const double s = 0.37, mu = 0.8;
  GaussianOscillatorState rho(Eigen::Vector2d(0.0, mu),
                              (Eigen::Matrix2d() << 1.0, 0.0, 0.0, s).finished());
  // effect with the same marginal along theta=0
  const Eigen::Matrix2d info = (Eigen::Matrix2d() << 0.0, 0.0, 0.0, 1.0 / s).finished();
  const EffectState eff(info, Eigen::Vector2d(0.0, mu / s));
  const Marginal c = combine_rho_effect(rho, eff, QuadratureDirection(0.0));
  CHECK(c.mean == doctest::Approx(mu));
  CHECK(c.variance == doctest::Approx(s / 2.0));
}

TEST_CASE("harmonic fusion of the chain marginals") {
  // 1/(1/0.185185 + 1/0.227273) = 0.102041
  GaussianOscillatorState rho(Eigen::Vector2d::Zero(),
                              (Eigen::Matrix2d() << 0.5, 0.0, 0.0, 1.0 / 5.4).finished());
  const EffectState eff((Eigen::Matrix2d() << 0.0, 0.0, 0.0, 4.4).finished(),
                        Eigen::Vector2d::Zero());
  const Marginal c = combine_rho_effect(rho, eff, QuadratureDirection(0.0));
  CHECK(c.variance == doctest::Approx(1.0 / 9.8).epsilon(1e-12));
}

TEST_CASE("fusion equals the 1-D density-product oracle") {
  RandomStream rng(17);
  for (int i = 0; i < 10; ++i) {
    const GaussianOscillatorState s = random_state(rng);
    const double theta = rng.normal(0.0, 2.0);
    const QuadratureDirection dir(theta);
    // effect carrying information only along `dir` with a random 1-D Gaussian
    const double var_e = 0.2 + std::abs(rng.normal(0.0, 0.5));
    const double mu_e = rng.normal();
    const Eigen::Vector2d v = dir.axis();
    const EffectState eff((v * v.transpose()) / var_e, v * (mu_e / var_e));
    const Marginal fused = combine_rho_effect(s, eff, dir);
    const Marginal mr = marginal(s, dir);
    const auto oracle =
        test_helpers::product_density_moments(mr.mean, mr.variance, mu_e, var_e);
    CHECK(fused.mean == doctest::Approx(oracle.mean).epsilon(1e-6));
    CHECK(fused.variance == doctest::Approx(oracle.variance).epsilon(1e-6));
  }
}

TEST_CASE("fusion is symmetric and never above either input variance") {
  RandomStream rng(23);
  for (int i = 0; i < 30; ++i) {
    const GaussianOscillatorState s = random_state(rng);
    const QuadratureDirection dir(rng.normal(0.0, 2.0));
    Eigen::Matrix2d g;
    g << rng.normal(), rng.normal(), rng.normal(), rng.normal();
    const Eigen::Matrix2d info = g * g.transpose() + 0.05 * Eigen::Matrix2d::Identity();
    const EffectState eff(info, Eigen::Vector2d(rng.normal(), rng.normal()));
    const Marginal fused = combine_rho_effect(s, eff, dir);
    const double var_rho = marginal(s, dir).variance;
    const InfoMarginal ie = eff.marginal_information(dir);
    CHECK(fused.variance <= var_rho + 1e-12);
    if (ie.precision > 0.0) {
      CHECK(fused.variance <= 1.0 / ie.precision + 1e-12);
      // swap roles: treat the effect marginal as a state marginal
      const double j = 1.0 / var_rho + ie.precision;
      CHECK(fused.variance == doctest::Approx(1.0 / j).epsilon(1e-12));
    }
  }
}

TEST_CASE("rank-1 effect marginalizes to flat off its own axis") {
  const double theta0 = 0.7;
  const Eigen::Vector2d w = QuadratureDirection(theta0).axis();
  const EffectState ridge(6.6 * (w * w.transpose()), Eigen::Vector2d::Zero());
  CHECK(ridge.marginal_information(QuadratureDirection(theta0)).precision ==
        doctest::Approx(6.6));
  // any other direction: a tilted ridge integrates out to a flat marginal
  for (double dt : {0.4, 1.0, -0.9}) {
    const InfoMarginal m = ridge.marginal_information(QuadratureDirection(theta0 + dt));
    CHECK(m.precision < 1e-9);
  }
}

TEST_CASE("effect covariance requires full rank") {
  const EffectState flat = EffectState::flat();
  CHECK(!flat.has_full_rank());
  CHECK_THROWS(flat.covariance());
  const EffectState full(2.0 * Eigen::Matrix2d::Identity(), Eigen::Vector2d(1.0, 0.0));
  CHECK(full.has_full_rank());
  CHECK(full.covariance()(0, 0) == doctest::Approx(0.5));
  CHECK(full.mean()(0) == doctest::Approx(0.5));
}
