#pragma once

// Exact (non-asymptotic) distribution of I_T = int_0^T W_s^2 ds under P_x.
//
// Two independent routes to P_x(I_T <= y):
//  * numerical inversion of the Laplace transform
//      E_x e^{-s I_T} = cosh(T u)^{-1/2} exp(-x^2 u tanh(T u) / 2),  u = sqrt(2 s),
//    along the parabola sqrt(2 s) = sqrt(2 s*) + i v through the real saddle s* of
//    s -> s y + log E_x e^{-s I_T} - log s;
//  * Monte Carlo over the truncated Karhunen-Loeve expansion
//      P_x(I_T <= y) = P(sum_j (sqrt(lambda_j) xi_j - sqrt(f) alpha_j)^2 <= y / T^2),
//    f = x^2 / T.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "smallball/closed_forms.hpp"
#include "smallball/error.hpp"
#include "smallball/parallel.hpp"
#include "smallball/random.hpp"
#include "smallball/spectrum.hpp"

namespace smallball {

enum class CdfMethod { inversion, kl_monte_carlo };

inline const char* to_string(CdfMethod m) {
  return m == CdfMethod::inversion ? "inversion" : "kl_monte_carlo";
}

struct CdfEstimate {
  double value;
  double standard_error;
  CdfMethod method;
  /// log(value); finite even when value underflows (inversion only).
  double log_value;
  /// Inversion: relative change between the last two node counts.
  /// Monte Carlo: mean of the omitted KL tail of I_T, (1 + 2f) T^2 tail_mass(J).
  double error_indicator;
};

/// log E_x exp(-s I_T) as a function of sigma = sqrt(2 s), Re sigma > 0.
inline std::complex<double> log_laplace_transform_sqrt(std::complex<double> sigma,
                                                       double x, double T) {
  using cd = std::complex<double>;
  const cd w = T * sigma;
  const cd q = std::exp(-2.0 * w);  // |q| < 1 since Re w > 0
  const cd log_cosh = w - detail::kLn2 + std::log(1.0 + q);
  const cd tanh = (1.0 - q) / (1.0 + q);
  return -0.5 * log_cosh - 0.5 * x * x * sigma * tanh;
}

/// log E_x exp(-s I_T) on the cut plane C \ (-inf, 0], continuous branch
/// (cosh^{-1/2} is never formed as a principal-branch power).
inline std::complex<double> log_laplace_transform(std::complex<double> s, double x,
                                                  double T) {
  return log_laplace_transform_sqrt(std::sqrt(2.0 * s), x, T);
}

namespace detail {

struct SaddleData {
  double point;      // s* > 0 with phi'(s*) = 0
  double value;      // phi(s*)
  double curvature;  // phi''(s*)
};

// phi(s) = s y + L(s) - log s restricted to real s > 0, with derivatives.
struct RealExponent {
  double x, T, y;

  double value(double s) const {
    const double u = std::sqrt(2.0 * s);
    const double w = T * u;
    return s * y - 0.5 * log_cosh(w) - 0.5 * x * x * u * std::tanh(w) - std::log(s);
  }

  // returns (phi', phi'')
  std::pair<double, double> derivatives(double s) const {
    const double u = std::sqrt(2.0 * s);
    const double w = T * u;
    const double th = std::tanh(w);
    const double q = std::exp(-2.0 * w);
    const double sech2 = 4.0 * q / ((1.0 + q) * (1.0 + q));
    // dL/du and d^2L/du^2 with u = sqrt(2 s)
    const double g = -0.5 * T * th - 0.5 * x * x * (th + w * sech2);
    const double gprime =
        -0.5 * T * T * sech2 - 0.5 * x * x * (2.0 * T * sech2 - 2.0 * T * w * sech2 * th);
    const double l1 = g / u;
    const double l2 = (gprime - g / u) / (u * u);
    return {y + l1 - 1.0 / s, l2 + 1.0 / (s * s)};
  }
};

inline SaddleData find_saddle(double x, double T, double y) {
  const RealExponent phi{x, T, y};
  auto slope = [&](double s) { return phi.derivatives(s).first; };
  double lo = 0.5 / y;
  while (slope(lo) >= 0.0) lo *= 0.5;
  double hi = 2.0 / y;
  while (slope(hi) <= 0.0) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = std::sqrt(lo * hi);
    (slope(mid) < 0.0 ? lo : hi) = mid;
  }
  const double s = 0.5 * (lo + hi);
  return {s, phi.value(s), phi.derivatives(s).second};
}

// Trapezoidal rule with step h along the parabola sqrt(2 s) = p + i v through
// the saddle (p = sqrt(2 s*)), returning
//   e^{-phi*} (1/2 pi i) int e^{s y} E(s) / s ds = (1/pi) int_0^inf Re[e^{phi - phi*} sigma] dv.
// On this parabola Re sqrt(2 s) is constant, so the integrand stays away from
// the branch points of cosh^{-1/2} and the poles of tanh on the negative axis.
inline double parabola_sum(double x, double T, double y, const SaddleData& saddle,
                           double h) {
  using cd = std::complex<double>;
  const double p = std::sqrt(2.0 * saddle.point);
  auto term = [&](double v) {
    const cd sigma(p, v);
    const cd s = 0.5 * sigma * sigma;
    const cd expo = s * y + log_laplace_transform_sqrt(sigma, x, T) -
                    (2.0 * std::log(sigma) - kLn2) - saddle.value;
    if (expo.real() < -745.0) return 0.0;
    return (std::exp(expo) * sigma).real();
  };
  double acc = 0.5 * term(0.0);
  int quiet = 0;
  for (long k = 1; k < 1'000'000; ++k) {
    const double t = term(k * h);
    acc += t;
    quiet = std::abs(t) <= 1e-18 * std::abs(acc) ? quiet + 1 : 0;
    if (quiet >= 8) break;
  }
  return acc * h / std::numbers::pi;
}

}  // namespace detail

/// P_x(I_T <= y) by contour inversion. The returned value has relative error
/// at most tol (hence absolute error at most tol).
inline CdfEstimate cdf_laplace_inversion(double x, double T, double y,
                                         double tol = 1e-10) {
  detail::require(T > 0.0, "cdf_laplace_inversion: horizon must be positive");
  detail::require(y > 0.0, "cdf_laplace_inversion: level must be positive");
  detail::require(tol > 0.0, "cdf_laplace_inversion: tol must be positive");
  if (std::isinf(y)) return {1.0, 0.0, CdfMethod::inversion, 0.0, 0.0};

  const auto saddle = detail::find_saddle(x, T, y);
  // Gaussian width of the integrand in v at the saddle
  const double width = 1.0 / (std::sqrt(2.0 * saddle.point) * std::sqrt(saddle.curvature));
  double h = width;
  double previous = detail::parabola_sum(x, T, y, saddle, h);
  double change = std::numeric_limits<double>::infinity();
  for (int level = 0; level < 10; ++level) {
    h *= 0.5;
    const double current = detail::parabola_sum(x, T, y, saddle, h);
    change = std::abs(current - previous) / std::abs(current);
    if (current > 0.0 && change <= tol) {
      const double log_value = std::min(0.0, saddle.value + std::log(current));
      return {std::exp(log_value), 0.0, CdfMethod::inversion, log_value, change};
    }
    previous = current;
  }
  throw inversion_error("cdf_laplace_inversion: contour quadrature did not converge",
                        change);
}

/// One draw of I_T via the KL expansion truncated at basis.max_index().
inline double kl_quadratic_functional(const SpectralBasis& basis, double x, double T,
                                      Stream& rng) {
  const double shift = std::abs(x) / std::sqrt(T);
  const auto& sl = basis.sqrt_lambdas();
  const auto& al = basis.alphas();
  double acc = 0.0;
  for (std::size_t j = 0; j < sl.size(); ++j) {
    const double d = sl[j] * rng.normal() - shift * al[j];
    acc += d * d;
  }
  return T * T * acc;
}

namespace detail {

// Counts draws with truncated KL norm <= bound; stops a draw early once its
// partial sum exceeds the bound (all terms are non-negative).
inline std::uint64_t kl_count_below(const SpectralBasis& basis, double shift,
                                    double bound, std::uint64_t n, Stream& rng) {
  const auto& sl = basis.sqrt_lambdas();
  const auto& al = basis.alphas();
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < n; ++i) {
    double acc = 0.0;
    std::size_t j = 0;
    for (; j < sl.size(); ++j) {
      const double d = sl[j] * rng.normal() - shift * al[j];
      acc += d * d;
      if (acc > bound) break;
    }
    if (j == sl.size()) ++hits;
  }
  return hits;
}

inline CdfEstimate kl_estimate(std::uint64_t hits, std::uint64_t n,
                               const SpectralBasis& basis, double x, double T) {
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  const double f = x * x / T;
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n)),
          CdfMethod::kl_monte_carlo, std::log(p), (1.0 + 2.0 * f) * T * T * basis.tail_mass()};
}

inline constexpr std::uint64_t kKlChunk = 1024;

}  // namespace detail

/// Monte Carlo frequency of {I_T <= y} from N truncated KL draws on one stream.
inline CdfEstimate cdf_kl_montecarlo(double x, double T, double y, std::size_t J,
                                     std::uint64_t N, Stream& rng) {
  detail::require(T > 0.0 && y > 0.0, "cdf_kl_montecarlo: T and y must be positive");
  detail::require(J >= 1 && N >= 1, "cdf_kl_montecarlo: need J >= 1 and N >= 1");
  const SpectralBasis basis(J);
  const auto hits =
      detail::kl_count_below(basis, std::abs(x) / std::sqrt(T), y / (T * T), N, rng);
  return detail::kl_estimate(hits, N, basis, x, T);
}

/// Same estimator with draws split into fixed chunks; chunk c uses
/// Stream(seed, kKarhunenLoeve, c). The result does not depend on `workers`.
inline CdfEstimate cdf_kl_montecarlo(double x, double T, double y, std::size_t J,
                                     std::uint64_t N, std::uint64_t seed,
                                     unsigned workers) {
  detail::require(T > 0.0 && y > 0.0, "cdf_kl_montecarlo: T and y must be positive");
  detail::require(J >= 1 && N >= 1, "cdf_kl_montecarlo: need J >= 1 and N >= 1");
  const SpectralBasis basis(J);
  const std::uint64_t chunks = (N + detail::kKlChunk - 1) / detail::kKlChunk;
  std::vector<std::uint64_t> hits(chunks, 0);
  const double shift = std::abs(x) / std::sqrt(T);
  parallel_for(chunks, workers, [&](std::size_t c) {
    Stream rng(seed, stream_tag::kKarhunenLoeve, c);
    const std::uint64_t begin = c * detail::kKlChunk;
    const std::uint64_t n = std::min<std::uint64_t>(detail::kKlChunk, N - begin);
    hits[c] = detail::kl_count_below(basis, shift, y / (T * T), n, rng);
  });
  std::uint64_t total = 0;
  for (auto h : hits) total += h;
  return detail::kl_estimate(total, N, basis, x, T);
}

/// Density of eta given survival {I_T <= eta}, eta ~ Exp(1/(8 eps^2)):
///   phi_T(y) = lambda e^{-lambda y} P_x(I_T <= y) / P_x(I_T <= eta).
inline double phi_density(double x, double T, double eps, double y, double tol = 1e-9) {
  detail::require(T > 0.0 && eps > 0.0, "phi_density: T and eps must be positive");
  if (y <= 0.0) return 0.0;
  const auto killing = KillingSpec::from_hard_level(eps);
  const auto cdf = cdf_laplace_inversion(x, T, y, tol);
  return std::exp(std::log(killing.lambda) - killing.lambda * y + cdf.log_value -
                  log_survival_probability(x, T, killing.gamma));
}

/// Normal approximation N(eps T, 4 eps^3 T) of phi_T.
inline double phi_normal_density(double T, double eps, double y) {
  detail::require(T > 0.0 && eps > 0.0, "phi_normal_density: T and eps must be positive");
  return gaussian_density(y, eps * T, 4.0 * eps * eps * eps * T);
}

}  // namespace smallball
