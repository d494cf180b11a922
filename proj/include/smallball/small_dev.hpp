#pragma once

// Li-Linde small-deviation asymptotics for the shifted Brownian motion
// W - sqrt(f) * 1 in L2[0,1]:
//
//   P(||W - sqrt(f)||^2 < R) ~ (2 pi beta)^{-1/2} exp(gamma R - f psi(gamma) - chi(gamma))
//
// where gamma solves R = f psi'(gamma) + chi'(gamma) and
// beta = -f gamma^2 psi''(gamma) - gamma^2 chi''(gamma). For Brownian motion
// psi and chi have closed forms in s = sqrt(2 gamma):
//
//   chi   = 1/2 log cosh s,      chi' = tanh(s) / (2 s),
//   psi   = s tanh(s) / 2,       psi' = chi' + sech(s)^2 / 2.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "smallball/closed_forms.hpp"
#include "smallball/error.hpp"

namespace smallball {

struct SpectralFunctionals {
  double psi;
  double chi;
  double psi_prime;
  double chi_prime;
  double psi_second;
  double chi_second;
};

namespace detail {

// tanh(s)/s = sum_k a_k gamma^k with s^2 = 2 gamma.
inline constexpr std::array<double, 5> kTanhOverS = {
    1.0, -2.0 / 3.0, 8.0 / 15.0, -136.0 / 315.0, 992.0 / 2835.0};

inline SpectralFunctionals spectral_functionals_series(double gamma) {
  SpectralFunctionals out{0, 0, 0, 0, 0, 0};
  double pk = 1.0;  // gamma^k
  for (std::size_t k = 0; k < kTanhOverS.size(); ++k) {
    const double a = kTanhOverS[k];
    const double kd = static_cast<double>(k);
    out.chi_prime += 0.5 * a * pk;
    out.chi += 0.5 * a * pk * gamma / (kd + 1.0);
    out.psi += a * pk * gamma;
    out.psi_prime += (kd + 1.0) * a * pk;
    if (k >= 1) {
      const double pkm1 = pk / gamma;
      out.chi_second += 0.5 * kd * a * pkm1;
      out.psi_second += (kd + 1.0) * kd * a * pkm1;
    }
    pk *= gamma;
  }
  return out;
}

inline constexpr double kSeriesCutoff = 1e-3;

}  // namespace detail

/// psi, chi and their first two derivatives at gamma >= 0. At gamma = 0 the
/// limits psi = chi = 0, psi' = 1, chi' = 1/2, psi'' = -4/3, chi'' = -1/3
/// are returned.
inline SpectralFunctionals spectral_functionals(double gamma) {
  detail::require(gamma >= 0.0, "spectral_functionals: gamma must be non-negative");
  if (gamma == 0.0) return {0.0, 0.0, 1.0, 0.5, -4.0 / 3.0, -1.0 / 3.0};
  if (gamma < detail::kSeriesCutoff) {
    // closed forms cancel catastrophically in the second derivatives here
    return detail::spectral_functionals_series(gamma);
  }
  const double s = std::sqrt(2.0 * gamma);
  const double q = std::exp(-2.0 * s);
  const double th = (1.0 - q) / (1.0 + q);
  const double sech2 = 4.0 * q / ((1.0 + q) * (1.0 + q));

  SpectralFunctionals out{};
  out.chi_prime = th / (2.0 * s);
  out.psi_prime = out.chi_prime + 0.5 * sech2;
  out.chi = 0.5 * detail::log_cosh(s);
  out.psi = 0.5 * s * th;
  // d/dgamma = (1/s) d/ds
  out.chi_second = sech2 / (2.0 * s * s) - th / (2.0 * s * s * s);
  out.psi_second = out.chi_second - sech2 * th / s;
  return out;
}

/// Inputs of the Li-Linde machine: shift scale f >= 0 and squared radius R > 0.
struct SmallDevProblem {
  double f;
  double R;

  /// The rescaling P_x(I_T <= y) = P(||W - sqrt(f)||^2 <= R) with
  /// f = x^2 / T, R = y / T^2.
  static SmallDevProblem from_path_problem(double x, double T, double y) {
    detail::require(T > 0.0 && y > 0.0, "SmallDevProblem: T and y must be positive");
    return {x * x / T, y / (T * T)};
  }
};

struct AsymptoticSolution {
  double gamma;
  double psi;
  double chi;
  double psi_prime;
  double chi_prime;
  double psi_second;
  double chi_second;
  double beta;
  double log_probability;
  double probability;
  double residual;
};

/// f psi'(gamma) + chi'(gamma), strictly decreasing from f + 1/2 to 0.
inline double saddle_rhs(double f, double gamma) {
  const auto sf = spectral_functionals(gamma);
  return f * sf.psi_prime + sf.chi_prime;
}

/// Root of R = f psi'(gamma) + chi'(gamma); |residual| <= tol * R on return.
inline double solve_gamma(const SmallDevProblem& problem, double tol = 1e-12) {
  const double f = problem.f;
  const double R = problem.R;
  detail::require(f >= 0.0, "solve_gamma: f must be non-negative");
  detail::require(R > 0.0, "solve_gamma: R must be positive");
  detail::require(tol > 0.0, "solve_gamma: tol must be positive");
  if (R >= f + 0.5) {
    throw no_root_error("solve_gamma: no positive root, R must be below f + 1/2");
  }
  auto residual = [&](double g) { return saddle_rhs(f, g) - R; };

  double lo = 1e-8;
  while (residual(lo) <= 0.0) {
    lo *= 0.5;
    if (lo < 1e-300) throw no_root_error("solve_gamma: R too close to f + 1/2");
  }
  // leading order of the root for small R
  double hi = std::max(2.0 * lo, (1.0 + f) * (1.0 + f) / (8.0 * R * R));
  while (residual(hi) >= 0.0) {
    hi *= 2.0;
    if (!std::isfinite(hi)) throw no_root_error("solve_gamma: R too small to bracket");
  }
  if (!(residual(lo) > 0.0 && residual(hi) < 0.0)) {
    throw std::logic_error("solve_gamma: invalid bracket");
  }

  for (int iter = 0; iter < 200; ++iter) {
    const double mid = std::sqrt(lo) * std::sqrt(hi);
    const double r = residual(mid);
    if (std::abs(r) <= tol * R) return mid;
    if (r > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
      // bracket exhausted at double resolution; keep the better endpoint
      return std::abs(residual(lo)) < std::abs(residual(hi)) ? lo : hi;
    }
  }
  throw std::logic_error("solve_gamma: bisection did not converge in 200 steps");
}

inline AsymptoticSolution lilinde_probability(const SmallDevProblem& problem,
                                              double tol = 1e-12) {
  const double gamma = solve_gamma(problem, tol);
  const auto sf = spectral_functionals(gamma);
  AsymptoticSolution out{};
  out.gamma = gamma;
  out.psi = sf.psi;
  out.chi = sf.chi;
  out.psi_prime = sf.psi_prime;
  out.chi_prime = sf.chi_prime;
  out.psi_second = sf.psi_second;
  out.chi_second = sf.chi_second;
  out.beta = -problem.f * gamma * gamma * sf.psi_second - gamma * gamma * sf.chi_second;
  out.residual = problem.R - problem.f * sf.psi_prime - sf.chi_prime;
  out.log_probability = -0.5 * std::log(2.0 * std::numbers::pi * out.beta) +
                        gamma * problem.R - problem.f * sf.psi - sf.chi;
  out.probability = std::exp(out.log_probability);
  return out;
}

struct SmallBallAsymptotic {
  double probability;
  double log_probability;
  /// False outside x^2 <= T^{1/4}, T^2/y >= 50, where no uniform guarantee
  /// is available.
  bool in_uniform_regime;
};

/// P_x(I_T <= y) ~ 4 / sqrt(pi T^2 / y) * exp(-(T + x^2)^2 / (8 y)).
inline SmallBallAsymptotic smallball_asymptotic(double x, double T, double y,
                                                bool warn = true) {
  detail::require(T > 0.0 && y > 0.0, "smallball_asymptotic: T and y must be positive");
  const double scale = T * T / y;
  const double shifted = T + x * x;
  const double log_p = std::log(4.0) - 0.5 * std::log(std::numbers::pi * scale) -
                       shifted * shifted / (8.0 * y);
  const bool regime = scale >= 50.0 && x * x <= std::pow(T, 0.25);
  if (warn && !regime) {
    detail::warn("smallball_asymptotic outside the regime x^2 <= T^{1/4}, T^2/y >= 50");
  }
  return {std::exp(log_p), log_p, regime};
}

/// lim_{T->inf} P_{z,T-t0}(y - y0) / P_{x,T}(y) for y ~ eps T.
inline double ratio_g(double x, double t0, double z, double y0, double eps) {
  detail::require(eps > 0.0, "ratio_g: eps must be positive");
  detail::require(t0 > 0.0, "ratio_g: t0 must be positive");
  detail::require(y0 >= 0.0, "ratio_g: y0 must be non-negative");
  return std::exp((t0 - z * z + x * x) / (4.0 * eps) - y0 / (8.0 * eps * eps));
}

}  // namespace smallball
