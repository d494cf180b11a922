#pragma once

// Exact finite-horizon formulas for Brownian motion killed at rate
// gamma^2 z^2 / 2, i.e. conditioned on {I_T <= eta} with eta ~ Exp(gamma^2/2)
// independent of W. All hyperbolic expressions are evaluated in log space so
// that horizons with T * gamma far beyond the overflow point of cosh work.

#include <cmath>
#include <limits>
#include <numbers>

#include "smallball/error.hpp"

namespace smallball {

namespace detail {

inline constexpr double kLn2 = std::numbers::ln2;

// log cosh(u) for real u, overflow free.
inline double log_cosh(double u) {
  const double a = std::abs(u);
  return a + std::log1p(std::exp(-2.0 * a)) - kLn2;
}

// log sinh(u) for u > 0, overflow free and accurate near 0.
inline double log_sinh(double u) {
  return u + std::log(-std::expm1(-2.0 * u)) - kLn2;
}

}  // namespace detail

/// Killing intensity. `gamma` parametrises the rate gamma^2 z^2 / 2 at level
/// z; `lambda` = gamma^2 / 2 is the rate of the exponential threshold eta.
struct KillingSpec {
  double gamma;
  double lambda;

  static KillingSpec from_gamma(double gamma) {
    detail::require(gamma > 0.0, "KillingSpec: gamma must be positive");
    return {gamma, 0.5 * gamma * gamma};
  }

  static KillingSpec from_lambda(double lambda) {
    detail::require(lambda > 0.0, "KillingSpec: lambda must be positive");
    return {std::sqrt(2.0 * lambda), lambda};
  }

  /// The killing that mixes the hard constraints I_T <= y around y = eps*T:
  /// lambda = 1/(8 eps^2), gamma = 1/(2 eps).
  static KillingSpec from_hard_level(double eps) {
    detail::require(eps > 0.0, "KillingSpec: eps must be positive");
    return {0.5 / eps, 0.125 / (eps * eps)};
  }

  double threshold_mean() const noexcept { return 1.0 / lambda; }
};

inline double gaussian_density(double y, double mean, double variance) {
  const double z = y - mean;
  return std::exp(-0.5 * z * z / variance) /
         std::sqrt(2.0 * std::numbers::pi * variance);
}

inline double gaussian_cdf(double y, double mean, double variance) {
  return 0.5 * std::erfc(-(y - mean) / std::sqrt(2.0 * variance));
}

/// log P_x(I_T <= eta) = -1/2 log cosh(T gamma) - x^2 gamma tanh(T gamma) / 2.
inline double log_survival_probability(double x, double T, double gamma) {
  detail::require(T > 0.0, "survival_probability: horizon must be positive");
  detail::require(gamma > 0.0, "survival_probability: gamma must be positive");
  const double u = T * gamma;
  return -0.5 * detail::log_cosh(u) - 0.5 * x * x * gamma * std::tanh(u);
}

/// P_x(I_T <= eta) = E_x exp(-gamma^2/2 I_T).
inline double survival_probability(double x, double T, double gamma) {
  return std::exp(log_survival_probability(x, T, gamma));
}

/// Large-horizon form sqrt(2) exp(-T gamma/2 - x^2 gamma/2).
inline double survival_probability_asymptotic(double x, double T, double gamma) {
  detail::require(T > 0.0 && gamma > 0.0,
                  "survival_probability_asymptotic: T and gamma must be positive");
  return std::numbers::sqrt2 * std::exp(-0.5 * T * gamma - 0.5 * x * x * gamma);
}

/// Log of the Lebesgue density of W_t at y on {I_t <= eta}, started at x.
inline double log_killed_transition_density(double t, double x, double y,
                                            double gamma) {
  detail::require(t > 0.0, "killed_transition_density: t must be positive");
  detail::require(gamma > 0.0, "killed_transition_density: gamma must be positive");
  const double u = t * gamma;
  const double log_sh = detail::log_sinh(u);
  const double coth = 1.0 / std::tanh(u);
  const double csch = std::exp(-log_sh);
  return 0.5 * std::log(gamma) - 0.5 * std::log(2.0 * std::numbers::pi) -
         0.5 * log_sh - 0.5 * gamma * ((x * x + y * y) * coth - 2.0 * x * y * csch);
}

inline double killed_transition_density(double t, double x, double y, double gamma) {
  return std::exp(log_killed_transition_density(t, x, y, gamma));
}

/// Killed kernel tilted by e^{t gamma/2} e^{-gamma y^2/2} / e^{-gamma x^2/2};
/// this is the Ornstein-Uhlenbeck transition density with rate gamma.
inline double tilted_transition_density(double t, double x, double y, double gamma) {
  return std::exp(log_killed_transition_density(t, x, y, gamma) + 0.5 * t * gamma -
                  0.5 * gamma * (y * y - x * x));
}

struct OuMoments {
  double mean;
  double variance;
};

/// Moments of X_{s+t} given X_s = x for dX = dB - gamma X dt. t may be +inf.
inline OuMoments ou_transition_moments(double x, double t, double gamma) {
  detail::require(t >= 0.0, "ou_transition_moments: t must be non-negative");
  detail::require(gamma > 0.0, "ou_transition_moments: gamma must be positive");
  return {std::exp(-gamma * t) * x, -std::expm1(-2.0 * gamma * t) / (2.0 * gamma)};
}

/// lim_{T->inf} P_y(I_{T-t} <= eta) / P_x(I_T <= eta).
inline double survival_ratio_limit(double t, double x, double y, double gamma) {
  detail::require(t >= 0.0, "survival_ratio_limit: t must be non-negative");
  detail::require(gamma > 0.0, "survival_ratio_limit: gamma must be positive");
  return std::exp(0.5 * t * gamma - 0.5 * gamma * (y * y - x * x));
}

/// Density of W_t (0 < t <= T) under P_x( . | I_T <= eta):
///   p_t(x,y) P_y(I_{T-t} <= eta) / P_x(I_T <= eta).
inline double killed_conditional_density(double t, double x, double y, double T,
                                         double gamma) {
  detail::require(t > 0.0 && t <= T, "killed_conditional_density: need 0 < t <= T");
  const double tail =
      t < T ? log_survival_probability(y, T - t, gamma) : 0.0;
  return std::exp(log_killed_transition_density(t, x, y, gamma) + tail -
                  log_survival_probability(x, T, gamma));
}

/// The density above is Gaussian; its moments in closed form.
inline OuMoments killed_conditional_moments(double t, double x, double T,
                                            double gamma) {
  detail::require(t > 0.0 && t <= T, "killed_conditional_moments: need 0 < t <= T");
  detail::require(gamma > 0.0, "killed_conditional_moments: gamma must be positive");
  const double u = t * gamma;
  const double precision =
      gamma * (1.0 / std::tanh(u) + std::tanh((T - t) * gamma));
  const double linear = gamma * x * std::exp(-detail::log_sinh(u));
  return {linear / precision, 1.0 / precision};
}

}  // namespace smallball
