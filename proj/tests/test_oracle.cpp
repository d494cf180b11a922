#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "oracles.hpp"
#include "smallball/closed_forms.hpp"
#include "smallball/oracle.hpp"
#include "smallball/small_dev.hpp"

using namespace smallball;

TEST(LaplaceTransform, RealArgumentIsSurvival) {
  for (double x : {0.0, 1.0, 2.5}) {
    for (double T : {0.5, 2.0, 30.0}) {
      for (double g : {0.3, 1.0}) {
        const auto l = log_laplace_transform(std::complex<double>(0.5 * g * g, 0.0), x, T);
        EXPECT_NEAR(l.real(), log_survival_probability(x, T, g), 1e-13);
        EXPECT_NEAR(l.imag(), 0.0, 1e-15);
      }
    }
  }
}

TEST(LaplaceTransform, ConjugateSymmetric) {
  const std::complex<double> s(0.7, 3.1);
  const auto a = log_laplace_transform(s, 1.2, 3.0);
  const auto b = log_laplace_transform(std::conj(s), 1.2, 3.0);
  EXPECT_NEAR(a.real(), b.real(), 1e-14);
  EXPECT_NEAR(a.imag(), -b.imag(), 1e-14);
}

TEST(Inversion, ReferenceValues) {
  for (const auto& c : oracle::ref::cdf_cases) {
    const auto est = cdf_laplace_inversion(c.x, c.T, c.y);
    EXPECT_NEAR(est.value / c.value, 1.0, 1e-9) << "x=" << c.x << " T=" << c.T << " y=" << c.y;
    EXPECT_NEAR(est.log_value, std::log(c.value), 1e-9);
    EXPECT_EQ(est.method, CdfMethod::inversion);
    EXPECT_LE(est.error_indicator, 1e-10);
  }
}

TEST(Inversion, Limits) {
  EXPECT_EQ(cdf_laplace_inversion(0, 1, std::numeric_limits<double>::infinity()).value, 1.0);
  EXPECT_GE(cdf_laplace_inversion(0, 1, 1).value, 0.5);
  EXPECT_NEAR(cdf_laplace_inversion(0, 1, 50).value, 1.0, 1e-12);
  EXPECT_THROW(cdf_laplace_inversion(0, 1, 0), std::domain_error);
  EXPECT_THROW(cdf_laplace_inversion(0, 0, 1), std::domain_error);
  EXPECT_THROW(cdf_laplace_inversion(0, 1, 1, 0.0), std::domain_error);
}

TEST(Inversion, UnreachableToleranceThrows) {
  try {
    cdf_laplace_inversion(0, 1, 0.25, 1e-18);
    FAIL() << "expected inversion_error";
  } catch (const inversion_error& e) {
    EXPECT_GT(e.error_estimate(), 0.0);
    EXPECT_LT(e.error_estimate(), 1e-10);
  }
}

TEST(Inversion, DeepSmallDeviationInLogSpace) {
  // y / T^2 = 1e-5: the probability underflows, its logarithm does not
  const auto est = cdf_laplace_inversion(0, 10, 1e-3);
  EXPECT_TRUE(std::isfinite(est.log_value));
  EXPECT_EQ(est.value, 0.0);
  const auto sb = smallball_asymptotic(0, 10, 1e-3, false);
  EXPECT_NEAR(est.log_value / sb.log_probability, 1.0, 1e-3);
  const auto shifted = cdf_laplace_inversion(3, 10, 0.01);
  EXPECT_TRUE(std::isfinite(shifted.log_value));
  EXPECT_LT(shifted.log_value, 0.0);
}

TEST(Inversion, MonotoneInLevel) {
  for (double x : {0.0, 1.0}) {
    for (double T : {1.0, 10.0}) {
      double prev = -std::numeric_limits<double>::infinity();
      for (int i = 0; i < 50; ++i) {
        const double y = T * T * std::pow(10.0, -3.0 + 4.0 * i / 49.0);
        const double lv = cdf_laplace_inversion(x, T, y).log_value;
        EXPECT_GE(lv, prev) << "x=" << x << " T=" << T << " y=" << y;
        EXPECT_LE(lv, 0.0);
        prev = lv;
      }
    }
  }
}

TEST(Inversion, AndersonMonotoneInStart) {
  // the centred ball is the most likely
  for (double y : {0.1, 1.0, 5.0}) {
    double prev = 1.0;
    for (double x : {0.0, 0.5, 1.0, 2.0}) {
      const double v = cdf_laplace_inversion(x, 2.0, y).value;
      EXPECT_LE(v, prev);
      prev = v;
    }
  }
}

TEST(Inversion, SignSymmetric) {
  for (double y : {0.2, 1.0, 4.0}) {
    EXPECT_EQ(cdf_laplace_inversion(1.5, 2.0, y).value, cdf_laplace_inversion(-1.5, 2.0, y).value);
  }
}

TEST(Inversion, ScalingInvariance) {
  // P_x(I_T <= y) = P_{x/q}(I_{T/q^2} <= y/q^4), here q = 2
  const double a = cdf_laplace_inversion(1.0, 4.0, 3.0).value;
  const double b = cdf_laplace_inversion(0.5, 1.0, 3.0 / 16.0).value;
  EXPECT_NEAR(a / b, 1.0, 1e-10);
}

TEST(KlMonteCarlo, AgreesWithInversion) {
  const auto mc = cdf_kl_montecarlo(0, 1, 0.25, 1000, 1'000'000, 11, 1);
  const double exact = cdf_laplace_inversion(0, 1, 0.25).value;
  EXPECT_NEAR(mc.value, exact, 3.0 * mc.standard_error);
  EXPECT_EQ(mc.method, CdfMethod::kl_monte_carlo);
  EXPECT_NEAR(mc.error_indicator, tail_mass(1000), 1e-15);
}

TEST(KlMonteCarlo, ShiftedStartAndSignSymmetry) {
  const auto a = cdf_kl_montecarlo(1, 2, 0.5, 1000, 200'000, 3, 1);
  const auto b = cdf_kl_montecarlo(-1, 2, 0.5, 1000, 200'000, 4, 1);
  EXPECT_NEAR(a.value, b.value, 3.0 * std::hypot(a.standard_error, b.standard_error));
  EXPECT_NEAR(a.value, oracle::ref::cdf_cases[2].value, 3.0 * a.standard_error);
}

TEST(KlMonteCarlo, HugeLevelAndWorkerIndependence) {
  const auto all = cdf_kl_montecarlo(0, 1, 1e6, 100, 5000, 1, 1);
  EXPECT_EQ(all.value, 1.0);
  EXPECT_EQ(all.standard_error, 0.0);
  const auto w1 = cdf_kl_montecarlo(0, 1, 0.5, 200, 10'000, 5, 1);
  const auto w3 = cdf_kl_montecarlo(0, 1, 0.5, 200, 10'000, 5, 3);
  EXPECT_EQ(w1.value, w3.value);
  Stream rng(5);
  const auto single = cdf_kl_montecarlo(0, 1, 0.5, 200, 10'000, rng);
  EXPECT_NEAR(single.value, w1.value, 4.0 * w1.standard_error);
  EXPECT_THROW(cdf_kl_montecarlo(0, 1, 0.5, 0, 10, 1, 1), std::domain_error);
}

TEST(KlFunctional, MeanOfQuadraticFunctional) {
  // E_x I_T = T^2/2 + x^2 T, less the truncated tail
  const SpectralBasis basis(500);
  Stream rng(21);
  constexpr int n = 50'000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = kl_quadratic_functional(basis, 1.0, 2.0, rng);
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  EXPECT_NEAR(mean, 2.0 + 2.0, 3.0 * se + 4.0 * (1.0 + 2.0 * 0.5) * tail_mass(500));
}

TEST(PhiDensity, NormalisedAndReference) {
  const double T = 30, eps = 1;
  const double mass = oracle::integrate([&](double y) { return phi_density(0, T, eps, y); }, 0.0,
                                        300.0, 1e-10);
  EXPECT_NEAR(mass, 1.0, 1e-3);
  EXPECT_NEAR(phi_density(0, T, eps, 30.0) / oracle::ref::phi_30_at_30, 1.0, 1e-8);
  EXPECT_NEAR(phi_normal_density(T, eps, 30.0), oracle::ref::phi_normal_30_at_30, 1e-15);
  EXPECT_NEAR(phi_normal_density(T, eps, 30.0), 1.0 / std::sqrt(240.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(phi_density(0, T, eps, 30.0) / phi_normal_density(T, eps, 30.0), 1.0, 0.15);
  EXPECT_EQ(phi_density(0, T, eps, 0.0), 0.0);
  EXPECT_LT(phi_density(0, T, eps, 1e-3), 1e-100);
}

TEST(PhiDensity, NormalApproximationMass) {
  for (double M : {1.0, 2.0, 3.0}) {
    const double sd = std::sqrt(4.0 * 30.0);
    const double mass = oracle::integrate([&](double y) { return phi_normal_density(30, 1, y); },
                                          30.0 - M * sd, 30.0 + M * sd);
    EXPECT_NEAR(mass, std::erf(M / std::numbers::sqrt2), 1e-10);
  }
}
