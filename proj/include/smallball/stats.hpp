#pragma once

// Kolmogorov-Smirnov distances and self-normalized moment estimators.
//
// Weighted samples enter through their weighted ECDF
//   F_w(v) = sum_{i: v_i <= v} w_i / sum_i w_i,
// and p-values use the Kish effective size (sum w)^2 / sum w^2 in place of n.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "smallball/error.hpp"

namespace smallball {

struct KsResult {
  double statistic;
  double approx_p;
  /// Sample size used for the p-value (effective size for weighted samples).
  double effective_n;
};

/// Asymptotic Kolmogorov survival function Q(t) = 2 sum_{k>=1} (-1)^{k-1} e^{-2 k^2 t^2}.
inline double kolmogorov_q(double t) {
  if (t < 1e-3) return 1.0;
  if (t < 1.18) {
    // small-t form from the theta-function identity: converges fast here
    constexpr double pi = std::numbers::pi;
    const double c = pi * pi / (8.0 * t * t);
    double s = 0.0;
    for (int k = 1; k <= 7; k += 2) s += std::exp(-static_cast<double>(k * k) * c);
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / t * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

/// p-value of a KS distance d at effective size n (small-sample corrected
/// argument (sqrt(n) + 0.12 + 0.11/sqrt(n)) d).
inline double ks_pvalue(double d, double n) {
  const double rn = std::sqrt(n);
  return kolmogorov_q((rn + 0.12 + 0.11 / rn) * d);
}

inline double effective_sample_size(const std::vector<double>& weights) {
  double s = 0.0, s2 = 0.0;
  for (double w : weights) {
    s += w;
    s2 += w * w;
  }
  detail::require(s > 0.0, "effective_sample_size: weights sum to zero");
  return s * s / s2;
}

namespace detail {

struct WeightedPoint {
  double value;
  double weight;
};

inline std::vector<WeightedPoint> sorted_points(const std::vector<double>& values,
                                                const std::vector<double>* weights) {
  require(!values.empty(), "ks: empty sample");
  if (weights) require(weights->size() == values.size(), "ks: weights length mismatch");
  std::vector<WeightedPoint> pts(values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = weights ? (*weights)[i] : 1.0;
    require(w >= 0.0 && std::isfinite(w), "ks: weights must be finite and non-negative");
    require(std::isfinite(values[i]), "ks: sample values must be finite");
    pts[i] = {values[i], w};
    total += w;
  }
  require(total > 0.0, "ks: weights sum to zero");
  for (auto& p : pts) p.weight /= total;
  std::sort(pts.begin(), pts.end(),
            [](const WeightedPoint& a, const WeightedPoint& b) { return a.value < b.value; });
  return pts;
}

inline double one_sample_distance(const std::vector<WeightedPoint>& pts,
                                  const std::function<double(double)>& cdf) {
  double d = 0.0;
  double below = 0.0;  // F_w just left of the current value
  double previous_ref = 0.0;
  std::size_t i = 0;
  while (i < pts.size()) {
    const double v = pts[i].value;
    double at = below;
    while (i < pts.size() && pts[i].value == v) at += pts[i++].weight;
    const double ref = cdf(v);
    if (!(ref >= 0.0 && ref <= 1.0) || ref < previous_ref) {
      throw std::domain_error("ks_one_sample: reference CDF is not monotone in [0,1]");
    }
    previous_ref = ref;
    d = std::max({d, std::abs(at - ref), std::abs(below - ref)});
    below = at;
  }
  return d;
}

inline double two_sample_distance(const std::vector<WeightedPoint>& a,
                                  const std::vector<WeightedPoint>& b) {
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, d = 0.0;
  while (i < a.size() || j < b.size()) {
    const double v = j == b.size() || (i < a.size() && a[i].value <= b[j].value)
                         ? a[i].value
                         : b[j].value;
    while (i < a.size() && a[i].value == v) fa += a[i++].weight;
    while (j < b.size() && b[j].value == v) fb += b[j++].weight;
    d = std::max(d, std::abs(fa - fb));
  }
  return std::min(d, 1.0);
}

}  // namespace detail

/// sup |F_a - F_b| over right-continuous ECDFs.
inline KsResult ks_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
  const double d =
      detail::two_sample_distance(detail::sorted_points(a, nullptr), detail::sorted_points(b, nullptr));
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ne = na * nb / (na + nb);
  return {d, ks_pvalue(d, ne), ne};
}

inline KsResult ks_two_sample_weighted(const std::vector<double>& a,
                                       const std::vector<double>& wa,
                                       const std::vector<double>& b,
                                       const std::vector<double>& wb) {
  const double d =
      detail::two_sample_distance(detail::sorted_points(a, &wa), detail::sorted_points(b, &wb));
  const double na = effective_sample_size(wa);
  const double nb = effective_sample_size(wb);
  const double ne = na * nb / (na + nb);
  return {d, ks_pvalue(d, ne), ne};
}

/// One-sample KS against a reference CDF; the CDF is checked to be monotone
/// with values in [0,1] at the sample points.
inline KsResult ks_one_sample(const std::vector<double>& sample,
                              const std::function<double(double)>& cdf) {
  const double d = detail::one_sample_distance(detail::sorted_points(sample, nullptr), cdf);
  const double n = static_cast<double>(sample.size());
  return {d, ks_pvalue(d, n), n};
}

inline KsResult ks_one_sample_weighted(const std::vector<double>& sample,
                                       const std::vector<double>& weights,
                                       const std::function<double(double)>& cdf) {
  const double d = detail::one_sample_distance(detail::sorted_points(sample, &weights), cdf);
  const double n = effective_sample_size(weights);
  return {d, ks_pvalue(d, n), n};
}

/// One-sample KS against a reference given by its density: the CDF is
/// lower_mass + integrate(lower, v), accumulated along the sorted sample.
/// The caller supplies `integrate(a, b)` (e.g. adaptive quadrature).
inline KsResult ks_one_sample_vs_density(const std::vector<double>& sample,
                                         const std::vector<double>* weights,
                                         const std::function<double(double, double)>& integrate,
                                         double lower, double lower_mass = 0.0) {
  const auto pts = detail::sorted_points(sample, weights);
  double mass = lower_mass;
  double at = lower;
  // one_sample_distance queries the CDF at increasing values
  const auto cdf = [&](double v) {
    if (v > at) {
      mass += integrate(at, v);
      at = v;
    }
    return std::min(mass, 1.0);
  };
  const double d = detail::one_sample_distance(pts, cdf);
  const double n = weights ? effective_sample_size(*weights) : static_cast<double>(pts.size());
  return {d, ks_pvalue(d, n), n};
}

struct WeightedMoments {
  double mean;
  double variance;
  double effective_sample_size;
  double se_mean;
};

/// Self-normalized mean and variance. se_mean is the delta-method error
/// sqrt(sum w_i^2 (v_i - mean)^2) / sum w_i.
inline WeightedMoments weighted_moments(const std::vector<double>& values,
                                        const std::vector<double>& weights) {
  detail::require(!values.empty(), "weighted_moments: empty sample");
  detail::require(values.size() == weights.size(), "weighted_moments: length mismatch");
  double s = 0.0, s2 = 0.0, sv = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    detail::require(weights[i] >= 0.0 && std::isfinite(weights[i]),
                    "weighted_moments: weights must be finite and non-negative");
    s += weights[i];
    s2 += weights[i] * weights[i];
    sv += weights[i] * values[i];
  }
  detail::require(s > 0.0, "weighted_moments: all weights are zero");
  const double mean = sv / s;
  double var = 0.0, err = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    var += weights[i] * d * d;
    err += weights[i] * weights[i] * d * d;
  }
  return {mean, var / s, s * s / s2, std::sqrt(err) / s};
}

inline WeightedMoments unweighted_moments(const std::vector<double>& values) {
  detail::require(values.size() >= 2, "moments: need at least two values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double var = ss / (n - 1.0);
  return {mean, var, n, std::sqrt(var / n)};
}

}  // namespace smallball
