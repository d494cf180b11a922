#pragma once

// Path-level simulation on uniform grids t_k = k * step.
//
// Conditionings:
//  * hard:     accept a Brownian proposal iff I_T <= eps T (rejection);
//  * killed:   survive {I_T <= eta}, eta ~ Exp(gamma^2 / 2), either by
//              rejection or by the exact importance weight exp(-gamma^2 I_T / 2);
//  * rescaled: hard conditioning at level eps_T T, read through the map
//              W -> eps_T^{-1/2} W_{eps_T t}.
// I_T is always the composite trapezoid sum over the grid.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "smallball/closed_forms.hpp"
#include "smallball/error.hpp"
#include "smallball/random.hpp"

namespace smallball {

struct PathSample {
  double start = 0.0;
  double step = 0.0;
  std::vector<double> values;

  double horizon() const {
    return values.empty() ? 0.0 : step * static_cast<double>(values.size() - 1);
  }
  std::size_t steps() const { return values.empty() ? 0 : values.size() - 1; }
  double time(std::size_t k) const { return step * static_cast<double>(k); }

  /// Value at a grid time; t must be a multiple of step up to 1e-9 relative.
  double at(double t) const {
    const double k = std::round(t / step);
    detail::require(k >= 0.0 && k <= static_cast<double>(steps()) &&
                        std::abs(k * step - t) <= 1e-9 * std::max(1.0, t),
                    "PathSample::at: time is not a grid point of the path");
    return values[static_cast<std::size_t>(k)];
  }
};

/// Number of grid steps covering [0, T]. T is snapped to the nearest multiple
/// of step (with a warning when it moves).
inline std::size_t grid_steps(double T, double step) {
  detail::require(step > 0.0, "grid: step must be positive");
  detail::require(step < T, "grid: step must be smaller than the horizon");
  const double n = std::round(T / step);
  if (std::abs(n * step - T) > 1e-9 * T) {
    detail::warn("horizon " + std::to_string(T) + " snapped to " +
                 std::to_string(n * step) + " on grid step " + std::to_string(step));
  }
  return static_cast<std::size_t>(n);
}

inline PathSample sample_bm_path(double x, double T, double step, Stream& rng) {
  const std::size_t n = grid_steps(T, step);
  PathSample path{x, step, std::vector<double>(n + 1)};
  const double sd = std::sqrt(step);
  path.values[0] = x;
  for (std::size_t k = 0; k < n; ++k) path.values[k + 1] = path.values[k] + sd * rng.normal();
  return path;
}

/// Trapezoid sum over the first `steps` intervals (all of them by default).
inline double path_quadratic_integral(const PathSample& path,
                                      std::size_t steps = static_cast<std::size_t>(-1)) {
  const std::size_t n = std::min(steps, path.steps());
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    acc += path.values[k] * path.values[k] + path.values[k + 1] * path.values[k + 1];
  }
  return 0.5 * path.step * acc;
}

/// The AR(1) coefficients of an exact OU step of length dt.
struct OuStep {
  double decay;  // e^{-gamma dt}
  double sd;     // sqrt((1 - e^{-2 gamma dt}) / (2 gamma))

  static OuStep make(double gamma, double dt) {
    const auto m = ou_transition_moments(1.0, dt, gamma);
    return {m.mean, std::sqrt(m.variance)};
  }
};

/// Exact OU path dX = dB - gamma X dt on the uniform grid of [0, T].
inline PathSample sample_ou_path(double x, double gamma, double T, double step,
                                 Stream& rng) {
  detail::require(gamma > 0.0, "sample_ou_path: gamma must be positive");
  const std::size_t n = grid_steps(T, step);
  const auto ar = OuStep::make(gamma, step);
  PathSample path{x, step, std::vector<double>(n + 1)};
  path.values[0] = x;
  for (std::size_t k = 0; k < n; ++k) {
    path.values[k + 1] = ar.decay * path.values[k] + ar.sd * rng.normal();
  }
  return path;
}

/// Exact OU values at arbitrary non-decreasing times >= 0 (X_0 = x).
inline std::vector<double> sample_ou_at(double x, double gamma,
                                        const std::vector<double>& times, Stream& rng) {
  detail::require(gamma > 0.0, "sample_ou_at: gamma must be positive");
  std::vector<double> out(times.size());
  double t = 0.0;
  double v = x;
  for (std::size_t i = 0; i < times.size(); ++i) {
    detail::require(times[i] >= t, "sample_ou_at: times must be non-decreasing and >= 0");
    if (times[i] > t) {
      const auto ar = OuStep::make(gamma, times[i] - t);
      v = ar.decay * v + ar.sd * rng.normal();
    }
    t = times[i];
    out[i] = v;
  }
  return out;
}

/// A conditioned draw together with the number of proposals it consumed.
struct ConditionedDraw {
  PathSample path;
  double weight = 1.0;
  double log_weight = 0.0;
  /// Killed conditioning: a draw of the threshold eta given survival.
  double eta = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t proposals = 1;
};

namespace detail {

// One Brownian proposal, abandoned as soon as the running trapezoid sum
// exceeds `bound`. Returns the path when the full integral is <= bound.
inline std::optional<PathSample> propose_below(double x, double step, std::size_t n,
                                               double bound, Stream& rng,
                                               double* integral = nullptr) {
  PathSample path{x, step, std::vector<double>(n + 1)};
  const double sd = std::sqrt(step);
  path.values[0] = x;
  double acc = 0.0;  // twice the trapezoid sum divided by step
  const double limit = 2.0 * bound / step;
  for (std::size_t k = 0; k < n; ++k) {
    const double next = path.values[k] + sd * rng.normal();
    acc += path.values[k] * path.values[k] + next * next;
    if (acc > limit) return std::nullopt;
    path.values[k + 1] = next;
  }
  if (integral) *integral = 0.5 * step * acc;
  return path;
}

}  // namespace detail

/// One proposal of the hard-conditioned sampler: the path if I_T <= eps T.
inline std::optional<PathSample> propose_conditioned_hard(double x, double T, double eps,
                                                          double step, Stream& rng) {
  detail::require(eps > 0.0, "sample_conditioned_hard: eps must be positive");
  return detail::propose_below(x, step, grid_steps(T, step), eps * T, rng);
}

/// Rejection sampler for the law of W given I_T <= eps T. Throws
/// exhaustion_error after max_proposals rejections.
inline ConditionedDraw sample_conditioned_hard(double x, double T, double eps,
                                               double step, Stream& rng,
                                               std::uint64_t max_proposals) {
  detail::require(eps > 0.0, "sample_conditioned_hard: eps must be positive");
  const std::size_t n = grid_steps(T, step);
  for (std::uint64_t i = 1; i <= max_proposals; ++i) {
    if (auto path = detail::propose_below(x, step, n, eps * T, rng)) {
      ConditionedDraw out;
      out.path = std::move(*path);
      out.proposals = i;
      return out;
    }
  }
  throw exhaustion_error("sample_conditioned_hard: no proposal accepted", max_proposals, 0);
}

enum class KilledMode { rejection, weighted };

inline const char* to_string(KilledMode m) {
  return m == KilledMode::rejection ? "rejection" : "weighted";
}

/// One proposal of the killed sampler. Rejection: survives iff I_T <= eta with
/// eta ~ Exp(gamma^2/2) drawn first (so the path is abandoned once I exceeds
/// eta); weight 1. Weighted: always survives with weight exp(-gamma^2 I_T / 2)
/// and eta = I_T + Exp(gamma^2/2), which under the weight has the law of eta
/// given survival.
inline std::optional<ConditionedDraw> propose_conditioned_killed(double x, double T,
                                                                 double gamma, double step,
                                                                 Stream& rng,
                                                                 KilledMode mode) {
  const auto killing = KillingSpec::from_gamma(gamma);
  const std::size_t n = grid_steps(T, step);
  ConditionedDraw out;
  if (mode == KilledMode::rejection) {
    const double eta = rng.exponential(killing.lambda);
    auto path = detail::propose_below(x, step, n, eta, rng);
    if (!path) return std::nullopt;
    out.path = std::move(*path);
    out.eta = eta;
    return out;
  }
  out.path = sample_bm_path(x, T, step, rng);
  const double integral = path_quadratic_integral(out.path);
  out.log_weight = -killing.lambda * integral;
  out.weight = std::exp(out.log_weight);
  out.eta = integral + rng.exponential(killing.lambda);
  return out;
}

inline ConditionedDraw sample_conditioned_killed(double x, double T, double gamma,
                                                 double step, Stream& rng,
                                                 KilledMode mode = KilledMode::weighted,
                                                 std::uint64_t max_proposals = 100'000'000) {
  for (std::uint64_t i = 1; i <= max_proposals; ++i) {
    if (auto draw = propose_conditioned_killed(x, T, gamma, step, rng, mode)) {
      draw->proposals = i;
      return std::move(*draw);
    }
  }
  throw exhaustion_error("sample_conditioned_killed: no proposal survived", max_proposals,
                         0);
}

/// Lambda = exp(t0/(4 eps) - W_t0^2/(4 eps) + x^2/(4 eps) - I_t0/(8 eps^2)),
/// the density of OU(1/(2 eps)) against Brownian motion on [0, t0] with
/// t0 = path.horizon(), from the endpoint and the trapezoid integral.
inline double log_girsanov_weight(const PathSample& path, double eps) {
  detail::require(eps > 0.0, "girsanov_weight: eps must be positive");
  const double t0 = path.horizon();
  const double w = path.values.back();
  const double x = path.start;
  return (t0 - w * w + x * x) / (4.0 * eps) - path_quadratic_integral(path) / (8.0 * eps * eps);
}

inline double girsanov_weight(const PathSample& path, double eps) {
  return std::exp(log_girsanov_weight(path, eps));
}

/// The scaling map W -> q^{-1} W_{q^2 t}: start x/q, horizon T/q^2, step
/// step/q^2. With target_step the result is resampled onto that grid, by
/// subsampling when target_step is a multiple of step/q^2, else by linear
/// interpolation if allowed.
inline PathSample scale_path(const PathSample& path, double q,
                             std::optional<double> target_step = std::nullopt,
                             bool allow_interpolation = false) {
  detail::require(q > 0.0, "scale_path: q must be positive");
  detail::require(path.values.size() >= 2, "scale_path: path needs at least two points");
  PathSample out{path.start / q, path.step / (q * q), {}};
  out.values.reserve(path.values.size());
  for (double v : path.values) out.values.push_back(v / q);
  if (!target_step || std::abs(*target_step - out.step) <= 1e-12 * out.step) return out;

  const double h = *target_step;
  detail::require(h > 0.0 && h <= out.horizon(), "scale_path: invalid target step");
  const double ratio = h / out.step;
  const double k = std::round(ratio);
  const double horizon = out.horizon();
  const auto n = static_cast<std::size_t>(std::round(horizon / h));
  if (k >= 1.0 && std::abs(ratio - k) <= 1e-9 * ratio &&
      std::abs(n * h - horizon) <= 1e-9 * horizon) {
    const auto stride = static_cast<std::size_t>(k);
    PathSample sub{out.start, h, std::vector<double>(n + 1)};
    for (std::size_t i = 0; i <= n; ++i) sub.values[i] = out.values[i * stride];
    return sub;
  }
  if (!allow_interpolation) {
    throw std::domain_error(
        "scale_path: target grid does not embed in the scaled grid (enable interpolation)");
  }
  PathSample lin{out.start, h, std::vector<double>(n + 1)};
  for (std::size_t i = 0; i <= n; ++i) {
    const double pos = std::min(static_cast<double>(i) * h / out.step,
                                static_cast<double>(out.steps()));
    const auto lo = std::min(static_cast<std::size_t>(pos), out.steps() - 1);
    const double frac = pos - static_cast<double>(lo);
    lin.values[i] = (1.0 - frac) * out.values[lo] + frac * out.values[lo + 1];
  }
  return lin;
}

/// Which conditioning applies to an ensemble.
struct ConditioningSpec {
  enum class Kind { hard, killed, rescaled };
  Kind kind;
  /// hard: eps; killed: gamma; rescaled: eps_T.
  double parameter;

  static ConditioningSpec hard(double eps) {
    detail::require(eps > 0.0, "ConditioningSpec: eps must be positive");
    return {Kind::hard, eps};
  }
  static ConditioningSpec killed(double gamma) {
    detail::require(gamma > 0.0, "ConditioningSpec: gamma must be positive");
    return {Kind::killed, gamma};
  }
  static ConditioningSpec killed_from_lambda(double lambda) {
    return killed(KillingSpec::from_lambda(lambda).gamma);
  }
  static ConditioningSpec rescaled(double eps_T) {
    detail::require(eps_T > 0.0, "ConditioningSpec: eps_T must be positive");
    return {Kind::rescaled, eps_T};
  }

  /// Hard threshold on I_T at horizon T (hard and rescaled).
  double threshold(double T) const {
    detail::require(kind != Kind::killed, "ConditioningSpec: killed has no fixed threshold");
    return parameter * T;
  }

  /// The rescaled regime needs eps_T < T at the configured horizon.
  void validate(double T) const {
    if (kind == Kind::rescaled) {
      detail::require(parameter < T, "ConditioningSpec: rescaled needs eps_T < T");
    }
  }
};

}  // namespace smallball
