#pragma once

// Test oracles that share no code with the library: direct spectral series,
// Boost quadrature, and values frozen from tests/reference/compute_reference_values.py
// (mpmath, 40 digits).

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

// --- frozen mpmath values ---------------------------------------------------
namespace ref {
inline constexpr double lambda1 = 0.40528473456935109;
inline constexpr double lambda2 = 0.045031637174372343;
inline constexpr double alpha1 = 0.90031631615710607;
inline constexpr double tail_mass1 = 0.094715265430648914;

// spectral functionals at gamma = 2 (series summed to infinity)
inline constexpr double psi2 = 0.96402758007581688;
inline constexpr double chi2 = 0.66250137367893222;
inline constexpr double chi_prime2 = 0.24100689501895422;
inline constexpr double psi_prime2 = 0.27633230744553645;
inline constexpr double chi_second2 = -0.051420370648092997;
inline constexpr double psi_second2 = -0.085475042504871257;

inline constexpr double survival_0_1_1 = 0.80501818219459205;
inline constexpr double survival_0_30_half = 7.8217941739961064e-4;
inline constexpr double survival_asym_0_30_half = 7.821794173996472e-4;
inline constexpr double killed_1_0_0_1 = 0.36800519870756081;
inline constexpr double tilted_1_0_0_1 = 0.60673799883738282;

inline constexpr double smallball_0_100_100 = 8.4101556047279613e-7;
inline constexpr double smallball_ratio_x1 = 0.77782789027724021;
inline constexpr double smallball_0_30_30 = 0.0096899184148416980;

struct CdfCase {
  double x, T, y, value;
};
inline constexpr CdfCase cdf_cases[] = {
    {0, 1, 0.25, 0.44874441831668711},
    {0, 1, 1, 0.86389775435456221},
    {1, 2, 0.5, 0.047934561549376166},
    {1, 1, 2, 0.73807306134608480},
    {0, 100, 100, 8.1077308125424428e-7},
    {0, 200, 200, 2.1742964928834776e-12},
    {0, 400, 400, 2.1552198980114918e-23},
    {1, 100, 100, 6.2481378526410874e-7},
    {1, 200, 200, 1.684171638864891e-12},
    {1, 400, 400, 1.6738575542030745e-23},
    {0, 30, 30, 0.0087255552975900983},
    {0, 16, 16, 0.064347090293784955},
    {1, 4, 16, 0.75518712912726890},
};

inline constexpr double phi_30_at_30 = 0.032793849367625281;
inline constexpr double phi_normal_30_at_30 = 0.036418281019735969;
// law of eta given survival, eps = 1
inline constexpr double phi_40_mean = 48.0;
inline constexpr double phi_40_variance = 224.0;
}  // namespace ref

// --- direct series over the KL spectrum --------------------------------------
inline double lam(std::size_t j) {
  const double h = (static_cast<double>(j) - 0.5) * std::numbers::pi;
  return 1.0 / (h * h);
}

struct SeriesFunctionals {
  double psi, chi, psi_prime, chi_prime;
};

/// psi = sum a_j^2 g/(1+2 l_j g), chi = 1/2 sum log(1+2 l_j g) and their
/// derivatives, truncated at J and summed from the smallest terms.
inline SeriesFunctionals series_functionals(double g, std::size_t J) {
  SeriesFunctionals s{0, 0, 0, 0};
  for (std::size_t j = J; j >= 1; --j) {
    const double l = lam(j);
    const double a2 = 2.0 * l;
    const double d = 1.0 + 2.0 * l * g;
    s.psi += a2 * g / d;
    s.chi += 0.5 * std::log1p(2.0 * l * g);
    s.psi_prime += a2 / (d * d);
    s.chi_prime += l / d;
  }
  return s;
}

/// Upper bounds of the omitted tails j > J (using 1 + 2 l g >= 1, log1p(u) <= u).
inline SeriesFunctionals series_tail_bound(double g, std::size_t J) {
  // sum_{j>J} l_j <= 1/(pi^2 (J - 1/2))
  const double tail = 1.0 / (std::numbers::pi * std::numbers::pi * (static_cast<double>(J) - 0.5));
  return {2.0 * g * tail, g * tail, 2.0 * tail, tail};
}

// --- quadrature ---------------------------------------------------------------
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  return GK::integrate(f, a, b, 20, tol);
}

inline double gaussian_pdf(double y, double mean, double var) {
  return std::exp(-0.5 * (y - mean) * (y - mean) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace oracle
