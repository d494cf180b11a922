#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "oracles.hpp"
#include "smallball/oracle.hpp"
#include "smallball/small_dev.hpp"

using namespace smallball;

TEST(SpectralFunctionals, ReferenceAtGammaTwo) {
  const auto sf = spectral_functionals(2.0);
  EXPECT_NEAR(sf.psi, oracle::ref::psi2, 1e-14);
  EXPECT_NEAR(sf.chi, oracle::ref::chi2, 1e-14);
  EXPECT_NEAR(sf.chi_prime, oracle::ref::chi_prime2, 1e-14);
  EXPECT_NEAR(sf.psi_prime, oracle::ref::psi_prime2, 1e-14);
  EXPECT_NEAR(sf.chi_second, oracle::ref::chi_second2, 1e-14);
  EXPECT_NEAR(sf.psi_second, oracle::ref::psi_second2, 1e-14);
  // tanh(2)/4 and 1/2 log cosh 2 to seven digits
  EXPECT_NEAR(sf.chi_prime, 0.2410069, 1e-7);
  EXPECT_NEAR(sf.chi, 0.6625014, 1e-7);
}

TEST(SpectralFunctionals, LimitsAtZero) {
  const auto sf = spectral_functionals(0.0);
  EXPECT_EQ(sf.psi, 0.0);
  EXPECT_EQ(sf.chi, 0.0);
  EXPECT_EQ(sf.psi_prime, 1.0);
  EXPECT_EQ(sf.chi_prime, 0.5);
  EXPECT_DOUBLE_EQ(sf.psi_second, -4.0 / 3.0);
  EXPECT_DOUBLE_EQ(sf.chi_second, -1.0 / 3.0);
  EXPECT_THROW(spectral_functionals(-1e-9), std::domain_error);
}

TEST(SpectralFunctionals, ContinuousAcrossSeriesCutoff) {
  const double c = detail::kSeriesCutoff;
  const auto lo = spectral_functionals(c * (1.0 - 1e-9));
  const auto hi = spectral_functionals(c * (1.0 + 1e-9));
  EXPECT_NEAR(lo.psi, hi.psi, 1e-11);
  EXPECT_NEAR(lo.chi, hi.chi, 1e-11);
  EXPECT_NEAR(lo.psi_prime, hi.psi_prime, 1e-10);
  EXPECT_NEAR(lo.chi_prime, hi.chi_prime, 1e-10);
  EXPECT_NEAR(lo.psi_second, hi.psi_second, 1e-6);
  EXPECT_NEAR(lo.chi_second, hi.chi_second, 1e-6);
}

TEST(SpectralFunctionals, ClosedFormsMatchSpectralSeries) {
  constexpr std::size_t J = 100'000;
  for (double g : {1e-4, 0.01, 0.3, 1.0, 7.0, 100.0, 1e4}) {
    const auto sf = spectral_functionals(g);
    const auto s = oracle::series_functionals(g, J);
    const auto tail = oracle::series_tail_bound(g, J);
    EXPECT_LE(std::abs(sf.psi - s.psi), tail.psi + 1e-13 * sf.psi) << "g=" << g;
    EXPECT_LE(std::abs(sf.chi - s.chi), tail.chi + 1e-13 * sf.chi) << "g=" << g;
    EXPECT_LE(std::abs(sf.psi_prime - s.psi_prime), tail.psi_prime + 1e-13) << "g=" << g;
    EXPECT_LE(std::abs(sf.chi_prime - s.chi_prime), tail.chi_prime + 1e-13) << "g=" << g;
    // the series only misses a positive tail
    EXPECT_GE(sf.chi + 1e-13, s.chi);
  }
}

TEST(SpectralFunctionals, SecondDerivativesByFiniteDifferences) {
  for (double g : {0.01, 0.5, 2.0, 40.0}) {
    const double h = 1e-5 * g;
    const auto p = spectral_functionals(g + h), m = spectral_functionals(g - h);
    const auto sf = spectral_functionals(g);
    EXPECT_NEAR(sf.chi_second, (p.chi_prime - m.chi_prime) / (2 * h),
                1e-6 * std::abs(sf.chi_second));
    EXPECT_NEAR(sf.psi_second, (p.psi_prime - m.psi_prime) / (2 * h),
                1e-6 * std::abs(sf.psi_second));
    EXPECT_NEAR(sf.chi_prime, (p.chi - m.chi) / (2 * h), 1e-7 * sf.chi_prime);
    EXPECT_NEAR(sf.psi_prime, (p.psi - m.psi) / (2 * h), 1e-7 * sf.psi_prime);
  }
}

TEST(SpectralFunctionals, LargeGammaDerivative) {
  // tanh(s) = 1 to double precision at s = 100
  EXPECT_NEAR(spectral_functionals(5000.0).chi_prime, 0.005, 1e-3);
  EXPECT_DOUBLE_EQ(spectral_functionals(5000.0).chi_prime, 1.0 / 200.0);
}

TEST(SpectralFunctionals, Monotonicity) {
  double prev_psi = -1, prev_chi = -1, prev_pp = 2, prev_cp = 1;
  for (double g = 1e-5; g < 1e6; g *= 1.7) {
    const auto sf = spectral_functionals(g);
    EXPECT_GT(sf.psi, prev_psi);
    EXPECT_GT(sf.chi, prev_chi);
    EXPECT_LT(sf.psi_prime, prev_pp);
    EXPECT_LT(sf.chi_prime, prev_cp);
    EXPECT_LT(sf.chi_second, 0.0);
    EXPECT_LT(sf.psi_second, 0.0);
    prev_psi = sf.psi;
    prev_chi = sf.chi;
    prev_pp = sf.psi_prime;
    prev_cp = sf.chi_prime;
  }
}

TEST(SolveGamma, Examples) {
  EXPECT_NEAR(solve_gamma({0.0, 0.01}) / 1250.0, 1.0, 1e-9);
  EXPECT_THROW(solve_gamma({0.0, 0.5}), no_root_error);
  EXPECT_THROW(solve_gamma({1.0, 1.6}), no_root_error);
  EXPECT_THROW(solve_gamma({-1.0, 0.1}), std::domain_error);
  EXPECT_THROW(solve_gamma({0.0, 0.0}), std::domain_error);
}

TEST(SolveGamma, ResidualOnGrid) {
  for (double f : {0.0, 1e-3, 0.1, 1.0, 10.0}) {
    for (double R : {1e-5, 1e-3, 0.05, 0.3, 0.49}) {
      if (R >= f + 0.5) continue;
      const double g = solve_gamma({f, R});
      EXPECT_GT(g, 0.0);
      EXPECT_LE(std::abs(saddle_rhs(f, g) - R), 1e-10 * R) << "f=" << f << " R=" << R;
    }
  }
}

TEST(LiLinde, MatchesClosedFormAsymptoticDeepInRegime) {
  // P_0(I_T <= y) depends on y / T^2 only: R = 1e-4 is T = 100, y = 1
  const auto ll = lilinde_probability({0.0, 1e-4});
  const auto sb = smallball_asymptotic(0.0, 100.0, 1.0);
  EXPECT_NEAR(ll.log_probability / sb.log_probability, 1.0, 1e-3);
  EXPECT_LE(std::abs(ll.residual), 1e-12 * 1e-4);
  EXPECT_GT(ll.beta, 0.0);
}

TEST(LiLinde, ConsistencyChain) {
  for (double x : {0.0, 1.0}) {
    for (double T : {100.0, 200.0, 400.0}) {
      const auto ll = lilinde_probability(SmallDevProblem::from_path_problem(x, T, T));
      const auto sb = smallball_asymptotic(x, T, T);
      EXPECT_NEAR(std::exp(ll.log_probability - sb.log_probability), 1.0, 0.02)
          << "x=" << x << " T=" << T;
      const auto exact = cdf_laplace_inversion(x, T, T);
      EXPECT_NEAR(std::exp(exact.log_value - sb.log_probability), 1.0, 0.05);
    }
  }
}

TEST(LiLinde, ModerateRadiusIsAProbability) {
  const auto ll = lilinde_probability({0.0, 0.3});
  EXPECT_GT(ll.probability, 0.0);
  EXPECT_LT(ll.probability, 1.5);
}

TEST(SmallBall, ReferenceValues) {
  const auto sb = smallball_asymptotic(0, 100, 100);
  EXPECT_NEAR(sb.probability / oracle::ref::smallball_0_100_100, 1.0, 1e-13);
  EXPECT_TRUE(sb.in_uniform_regime);
  EXPECT_NEAR(smallball_asymptotic(1, 100, 100).probability / sb.probability,
              oracle::ref::smallball_ratio_x1, 1e-13);
  EXPECT_NEAR(smallball_asymptotic(0, 30, 30, false).probability / oracle::ref::smallball_0_30_30,
              1.0, 1e-13);
}

TEST(SmallBall, DecreasingInStart) {
  double prev = 2.0;
  for (double x = 0.0; x < 3.0; x += 0.25) {
    const double p = smallball_asymptotic(x, 100, 100, false).probability;
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(SmallBall, RegimeWarning) {
  std::ostringstream captured;
  auto* old = std::clog.rdbuf(captured.rdbuf());
  const auto sb = smallball_asymptotic(0, 5, 5);
  std::clog.rdbuf(old);
  EXPECT_FALSE(sb.in_uniform_regime);
  EXPECT_NE(captured.str().find("warning"), std::string::npos);
  EXPECT_GT(sb.probability, 0.0);
}

TEST(RatioG, Examples) {
  EXPECT_DOUBLE_EQ(ratio_g(0, 1, 1, 0, 1), 1.0);
  EXPECT_NEAR(ratio_g(0, 2, 0, 8, 1), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(ratio_g(1, 1, 0, 0, 0.5), std::exp(1.0), 1e-15);
  EXPECT_THROW(ratio_g(0, 1, 0, 0, 0), std::domain_error);
  EXPECT_THROW(ratio_g(0, 0, 0, 0, 1), std::domain_error);
  EXPECT_THROW(ratio_g(0, 1, 0, -1, 1), std::domain_error);
}

TEST(RatioG, Telescopes) {
  for (double eps : {0.5, 1.0, 2.0}) {
    const double lhs = ratio_g(0.3, 1.0, 1.1, 2.0, eps) * ratio_g(1.1, 0.5, -0.4, 1.0, eps);
    EXPECT_NEAR(lhs / ratio_g(0.3, 1.5, -0.4, 3.0, eps), 1.0, 1e-14);
  }
}
