#pragma once

// Experiment recipes: each theorem kind builds its ensembles, compares them
// with a reference law and emits named records {statistic, threshold, pass}.
//
//   main             hard-conditioned marginals vs exact OU(1/(2 eps)) draws (two-sample KS),
//                    acceptance rate vs the closed-form small-ball asymptotic
//   killed           killed marginals vs the exact finite-T conditional density
//                    p_t(x,.) S(., T-t) / S(x, T), and vs the OU(gamma) marginal
//   scaled           eps_T^{-1/2} W_{eps_T t} given I_T <= eps_T T vs the eps = 1 ensemble at T/eps_T
//   smalldev_ratio   exact CDF / closed-form asymptotic over a horizon grid
//   phi_normal       law of eta given survival vs N(eps T, 4 eps^3 T) and vs exact phi_T moments
//   scaling_identity q^{-1} W_{q^2 t} given I_T <= q^2 T vs W from x/q given I_{T/q^2} <= T/q^2
//   girsanov         Lambda-weighted Brownian motion vs OU(1/(2 eps))
//
// Every record passes iff statistic < threshold.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <json.hpp>

#include "smallball/closed_forms.hpp"
#include "smallball/ensemble.hpp"
#include "smallball/error.hpp"
#include "smallball/oracle.hpp"
#include "smallball/parallel.hpp"
#include "smallball/random.hpp"
#include "smallball/samplers.hpp"
#include "smallball/small_dev.hpp"
#include "smallball/stats.hpp"

namespace smallball {

enum class Theorem { main, scaled, killed, smalldev_ratio, phi_normal, scaling_identity, girsanov };

inline const char* to_string(Theorem t) {
  switch (t) {
    case Theorem::main: return "main";
    case Theorem::scaled: return "scaled";
    case Theorem::killed: return "killed";
    case Theorem::smalldev_ratio: return "smalldev_ratio";
    case Theorem::phi_normal: return "phi_normal";
    case Theorem::scaling_identity: return "scaling_identity";
    case Theorem::girsanov: return "girsanov";
  }
  return "?";
}

inline Theorem parse_theorem(const std::string& name) {
  for (auto t : {Theorem::main, Theorem::scaled, Theorem::killed, Theorem::smalldev_ratio,
                 Theorem::phi_normal, Theorem::scaling_identity, Theorem::girsanov}) {
    if (name == to_string(t)) return t;
  }
  throw std::invalid_argument("unknown theorem kind: " + name);
}

class spec_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ExperimentSpec {
  Theorem theorem = Theorem::main;
  /// Named reals; scalars are one-element lists.
  std::map<std::string, std::vector<double>> parameters;
  std::map<std::string, double> tolerances;

  bool has(const std::string& key) const { return parameters.count(key) != 0; }

  double get(const std::string& key) const {
    const auto it = parameters.find(key);
    if (it == parameters.end()) {
      throw spec_error(std::string(to_string(theorem)) + ": missing parameter '" + key + "'");
    }
    if (it->second.size() != 1) throw spec_error("parameter '" + key + "' must be a scalar");
    return it->second.front();
  }

  double get_or(const std::string& key, double fallback) const {
    return has(key) ? get(key) : fallback;
  }

  std::vector<double> list_or(const std::string& key, std::vector<double> fallback) const {
    const auto it = parameters.find(key);
    return it == parameters.end() ? fallback : it->second;
  }

  double tolerance_or(const std::string& key, double fallback) const {
    const auto it = tolerances.find(key);
    return it == tolerances.end() ? fallback : it->second;
  }

  ExperimentSpec& set(const std::string& key, double v) {
    parameters[key] = {v};
    return *this;
  }
  ExperimentSpec& set(const std::string& key, std::vector<double> v) {
    parameters[key] = std::move(v);
    return *this;
  }
  ExperimentSpec& tolerance(const std::string& key, double v) {
    tolerances[key] = v;
    return *this;
  }
};

struct Record {
  std::string name;
  double statistic;
  double threshold;
  bool pass;
};

struct ExperimentReport {
  ExperimentSpec spec;
  std::vector<Record> records;
  std::uint64_t seed = 0;
  double elapsed_s = 0.0;
  std::uint64_t n_accepted = 0;
  std::uint64_t n_proposals = 0;
  double acceptance_rate = 0.0;

  bool pass() const {
    return std::all_of(records.begin(), records.end(), [](const Record& r) { return r.pass; });
  }

  const Record& record(const std::string& name) const {
    for (const auto& r : records) {
      if (r.name == name) return r;
    }
    throw std::out_of_range("no record named " + name);
  }
};

inline nlohmann::ordered_json spec_to_json(const ExperimentSpec& spec) {
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [k, v] : spec.parameters) {
    if (v.size() == 1) {
      params[k] = v.front();
    } else {
      params[k] = v;
    }
  }
  nlohmann::ordered_json tols = nlohmann::ordered_json::object();
  for (const auto& [k, v] : spec.tolerances) tols[k] = v;
  return {{"theorem", to_string(spec.theorem)}, {"parameters", params}, {"tolerances", tols}};
}

/// With include_timing = false, elapsed_s is written as null so that reports
/// of identical runs are byte-identical.
inline nlohmann::ordered_json report_to_json(const ExperimentReport& report,
                                             bool include_timing = true) {
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (const auto& r : report.records) {
    records.push_back(
        {{"name", r.name}, {"statistic", r.statistic}, {"threshold", r.threshold}, {"pass", r.pass}});
  }
  nlohmann::ordered_json meta;
  meta["seed"] = report.seed;
  meta["elapsed_s"] = include_timing ? nlohmann::ordered_json(report.elapsed_s) : nullptr;
  meta["n_accepted"] = report.n_accepted;
  meta["n_proposals"] = report.n_proposals;
  meta["acceptance_rate"] = report.acceptance_rate;
  meta["pass"] = report.pass();
  return {{"spec", spec_to_json(report.spec)}, {"records", records}, {"meta", meta}};
}

/// P_{z,T-t0}(y - y0) / P_{x,T}(y) from the exact CDF, in log space.
inline double limit_ratio_oracle(double x, double T, double y, double t0, double z, double y0,
                                 double tol = 1e-10) {
  detail::require(t0 > 0.0 && t0 < T, "limit_ratio_oracle: need 0 < t0 < T");
  detail::require(y0 >= 0.0 && y0 < y, "limit_ratio_oracle: need 0 <= y0 < y");
  const auto num = cdf_laplace_inversion(z, T - t0, y - y0, tol);
  const auto den = cdf_laplace_inversion(x, T, y, tol);
  return std::exp(num.log_value - den.log_value);
}

struct RatioRow {
  double horizon;
  double oracle;
  double asymptotic;
  double ratio;
};

/// Exact CDF at y = eps T against the closed-form asymptotic, per horizon.
inline std::vector<RatioRow> ratio_rows(double x, double eps, const std::vector<double>& horizons,
                                        double tol = 1e-10) {
  detail::require(!horizons.empty(), "ratio table: empty horizon grid");
  std::vector<RatioRow> rows;
  for (double T : horizons) {
    const auto cdf = cdf_laplace_inversion(x, T, eps * T, tol);
    const auto asym = smallball_asymptotic(x, T, eps * T, false);
    rows.push_back({T, cdf.value, asym.probability, std::exp(cdf.log_value - asym.log_probability)});
  }
  return rows;
}

namespace detail {

inline std::string fmt_time(double t) {
  std::ostringstream os;
  os << t;
  return os.str();
}

inline std::uint64_t count_param(const ExperimentSpec& spec, const std::string& key,
                                 double fallback) {
  const double v = spec.get_or(key, fallback);
  if (!(v >= 100.0) || v != std::floor(v)) {
    throw spec_error(std::string(to_string(spec.theorem)) + ": '" + key +
                     "' must be an integer >= 100");
  }
  return static_cast<std::uint64_t>(v);
}

inline double positive_param(const ExperimentSpec& spec, const std::string& key,
                             std::optional<double> fallback = std::nullopt) {
  const double v = fallback ? spec.get_or(key, *fallback) : spec.get(key);
  if (!(v > 0.0)) {
    throw spec_error(std::string(to_string(spec.theorem)) + ": '" + key + "' must be positive");
  }
  return v;
}

inline std::vector<double> observation_times(const ExperimentSpec& spec,
                                             std::vector<double> fallback, double window,
                                             double advised) {
  auto times = spec.list_or("t_obs", std::move(fallback));
  if (times.empty()) throw spec_error("t_obs must not be empty");
  for (double t : times) {
    if (!(t > 0.0 && t <= window)) {
      throw spec_error("observation time " + fmt_time(t) + " outside (0, " +
                       fmt_time(window) + "]");
    }
    if (t > advised) {
      warn("observation time " + fmt_time(t) + " beyond the initial window T/3 = " +
           fmt_time(advised));
    }
  }
  return times;
}

inline Record make_record(std::string name, double statistic, double threshold) {
  return {std::move(name), statistic, threshold, statistic < threshold};
}

// Values at the observation times of a path on its own grid.
inline std::vector<double> observe(const PathSample& path, const std::vector<double>& times) {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(path.at(t));
  return out;
}

inline Ensemble hard_ensemble(double x, double T, double eps, double step,
                              const std::vector<double>& times, std::uint64_t target,
                              std::uint64_t max_proposals, std::uint64_t seed, std::uint64_t tag,
                              unsigned workers,
                              const std::function<PathSample(PathSample)>& map = nullptr) {
  const std::size_t n = grid_steps(T, step);
  EnsembleConfig cfg{seed, tag, target, max_proposals, workers};
  return collect(cfg, [&](Stream& rng) -> std::optional<Observation> {
    auto path = propose_below(x, step, n, eps * T, rng);
    if (!path) return std::nullopt;
    Observation o;
    o.values = observe(map ? map(std::move(*path)) : *path, times);
    return o;
  });
}

struct MomentComparison {
  double mean_z;
  double second_z;
};

inline MomentComparison compare_moments(const std::vector<double>& a,
                                        const std::vector<double>& b) {
  auto squares = [](const std::vector<double>& v) {
    std::vector<double> s(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) s[i] = v[i] * v[i];
    return s;
  };
  const auto ma = unweighted_moments(a), mb = unweighted_moments(b);
  const auto sa = unweighted_moments(squares(a)), sb = unweighted_moments(squares(b));
  return {std::abs(ma.mean - mb.mean) / std::hypot(ma.se_mean, mb.se_mean),
          std::abs(sa.mean - sb.mean) / std::hypot(sa.se_mean, sb.se_mean)};
}

// --- recipes ---------------------------------------------------------------

inline void run_main(const ExperimentSpec& spec, ExperimentReport& rep, unsigned workers) {
  const double eps = positive_param(spec, "eps");
  const double x = spec.get_or("x", 0.0);
  const double T = positive_param(spec, "horizon", 30.0);
  const double step = positive_param(spec, "step", 0.01);
  const auto times = observation_times(spec, {1.0, 2.0}, T, T / 3.0);
  const auto target = count_param(spec, "n_accepted", 2000);
  const auto n_ref = count_param(spec, "n_reference", 100000);
  const auto budget = static_cast<std::uint64_t>(spec.get_or("max_proposals", 1e9));
  const double gamma = KillingSpec::from_hard_level(eps).gamma;

  const auto ens = hard_ensemble(x, T, eps, step, times, target, budget, rep.seed,
                                 stream_tag::kHardConditioned, workers);
  rep.n_accepted = ens.accepted.size();
  rep.n_proposals = ens.proposals;
  rep.acceptance_rate = ens.acceptance_rate();

  // exact OU reference draws at the same times
  std::vector<std::vector<double>> ref(times.size(), std::vector<double>(n_ref));
  parallel_for(n_ref, workers, [&](std::size_t i) {
    Stream rng(rep.seed, stream_tag::kOrnsteinUhlenbeck, i);
    const auto v = sample_ou_at(x, gamma, times, rng);
    for (std::size_t k = 0; k < times.size(); ++k) ref[k][i] = v[k];
  });
  const double ks_tol = spec.tolerance_or("ks", 0.05);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto ks = ks_two_sample(ens.column(k), ref[k]);
    rep.records.push_back(make_record("ks_ou_t=" + fmt_time(times[k]), ks.statistic, ks_tol));
  }
  const auto asym = smallball_asymptotic(x, T, eps * T, false);
  rep.records.push_back(make_record("acceptance_rate_rel_error",
                                    std::abs(rep.acceptance_rate / asym.probability - 1.0),
                                    spec.tolerance_or("acceptance_rel", 0.25)));
}

inline void run_killed(const ExperimentSpec& spec, ExperimentReport& rep, unsigned workers) {
  const double gamma = positive_param(spec, "gamma");
  const double x = spec.get_or("x", 0.0);
  const double T = positive_param(spec, "horizon", 30.0);
  const double step = positive_param(spec, "step", 0.01);
  const auto times = observation_times(spec, {1.0}, T, T / 3.0);
  const auto n = count_param(spec, "n_proposals", 100000);
  const auto mode = spec.get_or("rejection", 0.0) != 0.0 ? KilledMode::rejection : KilledMode::weighted;

  EnsembleConfig cfg{rep.seed, stream_tag::kKilled, n, n, workers};
  cfg.allow_shortfall = true;
  const auto ens = collect(cfg, [&](Stream& rng) -> std::optional<Observation> {
    auto d = propose_conditioned_killed(x, T, gamma, step, rng, mode);
    if (!d) return std::nullopt;
    Observation o;
    o.values = observe(d->path, times);
    o.weight = d->weight;
    o.eta = d->eta;
    return o;
  });
  rep.n_proposals = ens.proposals;
  rep.n_accepted = ens.accepted.size();
  if (ens.accepted.empty()) {
    throw exhaustion_error("killed: no surviving proposal", ens.proposals, 0);
  }
  const auto weights = ens.weights();
  // survival estimate: accepted fraction (rejection) or mean weight (weighted)
  double mean_weight = 0.0;
  for (double w : weights) mean_weight += w;
  rep.acceptance_rate = mode == KilledMode::rejection
                            ? ens.acceptance_rate()
                            : mean_weight / static_cast<double>(ens.proposals);

  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    const auto column = ens.column(k);
    const std::vector<double>* w = mode == KilledMode::weighted ? &weights : nullptr;
    // reference CDF: quadrature of the exact normalized density from far in the left tail
    const auto mom = killed_conditional_moments(t, x, T, gamma);
    const double lower = mom.mean - 40.0 * std::sqrt(mom.variance);
    const double sd = std::sqrt(mom.variance);
    const auto density = [&](double y) { return killed_conditional_density(t, x, y, T, gamma); };
    // gaps between neighbouring sample points are tiny; one GK15 panel is exact there
    const auto integrate = [&](double a, double b) {
      return b - a <= 0.25 * sd ? GK::integrate(density, a, b, 0)
                                : GK::integrate(density, a, b, 12, 1e-13);
    };
    const auto exact = ks_one_sample_vs_density(column, w, integrate, lower);
    rep.records.push_back(make_record("ks_exact_t=" + fmt_time(t), exact.statistic,
                                      spec.tolerance_or("ks_exact", 0.02)));
    const auto ou = ou_transition_moments(x, t, gamma);
    const auto cdf = [&](double y) { return gaussian_cdf(y, ou.mean, ou.variance); };
    const auto limit = w ? ks_one_sample_weighted(column, *w, cdf) : ks_one_sample(column, cdf);
    rep.records.push_back(make_record("ks_ou_t=" + fmt_time(t), limit.statistic,
                                      spec.tolerance_or("ks_ou", 0.05)));
  }
  // survival frequency against the closed form (binomial / weight-mean error)
  const double s = survival_probability(x, T, gamma);
  double se = std::sqrt(s * (1.0 - s) / static_cast<double>(ens.proposals));
  if (mode == KilledMode::weighted) {
    double ss = 0.0;
    for (double wi : weights) ss += (wi - rep.acceptance_rate) * (wi - rep.acceptance_rate);
    se = std::sqrt(ss / static_cast<double>(ens.proposals)) /
         std::sqrt(static_cast<double>(ens.proposals));
  }
  rep.records.push_back(make_record("survival_z", std::abs(rep.acceptance_rate - s) / se,
                                    spec.tolerance_or("z", 3.0)));
}

inline void run_scaled(const ExperimentSpec& spec, ExperimentReport& rep, unsigned workers) {
  const double e = positive_param(spec, "eps_t");
  const double x = spec.get_or("x", 0.0);
  const double T = positive_param(spec, "horizon", 64.0);
  ConditioningSpec::rescaled(e).validate(T);
  const double step = positive_param(spec, "step", 0.04);
  const double q = std::sqrt(e);
  const double target_T = T / e;
  const auto times = observation_times(spec, {1.0, 2.0}, target_T, target_T / 3.0);
  const auto target = count_param(spec, "n_accepted", 3000);
  const auto budget = static_cast<std::uint64_t>(spec.get_or("max_proposals", 1e9));

  const auto source = hard_ensemble(x, T, e, step, times, target, budget, rep.seed,
                                    stream_tag::kScaledSource, workers,
                                    [q](PathSample p) { return scale_path(p, q); });
  const auto direct = hard_ensemble(x / q, target_T, 1.0, step / e, times, target, budget,
                                    rep.seed, stream_tag::kScaledTarget, workers);
  rep.n_accepted = source.accepted.size();
  rep.n_proposals = source.proposals;
  rep.acceptance_rate = source.acceptance_rate();
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto ks = ks_two_sample(source.column(k), direct.column(k));
    rep.records.push_back(
        make_record("ks_t=" + fmt_time(times[k]), ks.statistic, spec.tolerance_or("ks", 0.07)));
  }
}

inline void run_smalldev_ratio(const ExperimentSpec& spec, ExperimentReport& rep) {
  const double eps = positive_param(spec, "eps");
  const double x = spec.get_or("x", 0.0);
  const auto horizons = spec.list_or("horizons", {100.0, 200.0, 400.0});
  const auto rows = ratio_rows(x, eps, horizons);
  const double band = spec.tolerance_or("ratio_band", 1.0);
  double worst_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string key = "ratio_band_" + fmt_time(rows[i].horizon);
    rep.records.push_back(make_record("ratio_distance_T=" + fmt_time(rows[i].horizon),
                                      std::abs(rows[i].ratio - 1.0),
                                      spec.tolerance_or(key, band)));
    if (i > 0) {
      worst_increase = std::max(worst_increase, std::abs(rows[i].ratio - 1.0) -
                                                    std::abs(rows[i - 1].ratio - 1.0));
    }
  }
  if (rows.size() > 1) {
    // strictly decreasing |ratio - 1| along the grid
    rep.records.push_back(make_record("ratio_distance_increase", worst_increase, 0.0));
  }
}

/// Mean and variance of phi_T by quadrature of the exact density.
inline std::pair<double, double> phi_moments(double x, double T, double eps) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  const double inf = std::numeric_limits<double>::infinity();
  const auto f = [&](double y) { return phi_density(x, T, eps, y); };
  const double m0 = GK::integrate(f, 0.0, inf, 15, 1e-10);
  const double m1 = GK::integrate([&](double y) { return y * f(y); }, 0.0, inf, 15, 1e-10);
  const double m2 = GK::integrate([&](double y) { return y * y * f(y); }, 0.0, inf, 15, 1e-10);
  const double mean = m1 / m0;
  return {mean, m2 / m0 - mean * mean};
}

inline void run_phi_normal(const ExperimentSpec& spec, ExperimentReport& rep, unsigned workers) {
  const double eps = positive_param(spec, "eps");
  const double x = spec.get_or("x", 0.0);
  const double T = positive_param(spec, "horizon", 40.0);
  const double step = positive_param(spec, "step", 0.01);
  const auto n = count_param(spec, "n_proposals", 100000);
  const double gamma = KillingSpec::from_hard_level(eps).gamma;

  EnsembleConfig cfg{rep.seed, stream_tag::kKilled, n, n, workers};
  const auto ens = collect(cfg, [&](Stream& rng) -> std::optional<Observation> {
    auto d = propose_conditioned_killed(x, T, gamma, step, rng, KilledMode::weighted);
    Observation o;
    o.weight = d->weight;
    o.eta = d->eta;
    return o;
  });
  rep.n_accepted = ens.accepted.size();
  rep.n_proposals = ens.proposals;
  rep.acceptance_rate = 1.0;

  const auto etas = ens.etas();
  const auto w = ens.weights();
  const auto m = weighted_moments(etas, w);
  // delta-method error of the self-normalized variance
  double s = 0.0, err = 0.0;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    const double d = (etas[i] - m.mean) * (etas[i] - m.mean) - m.variance;
    s += w[i];
    err += w[i] * w[i] * d * d;
  }
  const double se_var = std::sqrt(err) / s;

  rep.records.push_back(make_record("eta_mean_vs_normal", std::abs(m.mean - eps * T),
                                    spec.tolerance_or("mean_band", 2.0)));
  rep.records.push_back(make_record("eta_variance_vs_normal",
                                    std::abs(m.variance - 4.0 * eps * eps * eps * T),
                                    spec.tolerance_or("variance_band", 25.0)));
  const auto [exact_mean, exact_var] = phi_moments(x, T, eps);
  const double z = spec.tolerance_or("z", 3.0);
  rep.records.push_back(make_record("eta_mean_vs_exact_z", std::abs(m.mean - exact_mean) / m.se_mean, z));
  rep.records.push_back(make_record("eta_variance_vs_exact_z", std::abs(m.variance - exact_var) / se_var, z));
}

inline void run_scaling_identity(const ExperimentSpec& spec, ExperimentReport& rep,
                                 unsigned workers) {
  const double q = positive_param(spec, "q");
  const double x = spec.get_or("x", 1.0);
  const double T = positive_param(spec, "horizon", 4.0);
  const double step = positive_param(spec, "step", 1e-3);
  const double target_T = T / (q * q);
  const auto times = observation_times(spec, {0.25 * target_T, 0.5 * target_T, target_T},
                                       target_T, target_T);
  const auto target = count_param(spec, "n_accepted", 10000);
  const auto budget = static_cast<std::uint64_t>(spec.get_or("max_proposals", 1e9));

  // left side: I_T <= q^2 T, i.e. eps = q^2 at horizon T
  const auto source = hard_ensemble(x, T, q * q, step, times, target, budget, rep.seed,
                                    stream_tag::kScaledSource, workers,
                                    [q](PathSample p) { return scale_path(p, q); });
  // right side: from x/q, I_{T/q^2} <= T/q^2 on the matching grid
  const auto direct = hard_ensemble(x / q, target_T, 1.0, step / (q * q), times, target, budget,
                                    rep.seed, stream_tag::kScaledTarget, workers);
  rep.n_accepted = source.accepted.size();
  rep.n_proposals = source.proposals;
  rep.acceptance_rate = source.acceptance_rate();
  const double z = spec.tolerance_or("z", 3.0);
  for (std::size_t k = 0; k < times.size(); ++k) {
    const auto c = compare_moments(source.column(k), direct.column(k));
    rep.records.push_back(make_record("mean_z_t=" + fmt_time(times[k]), c.mean_z, z));
    rep.records.push_back(make_record("second_moment_z_t=" + fmt_time(times[k]), c.second_z, z));
  }
}

inline void run_girsanov(const ExperimentSpec& spec, ExperimentReport& rep, unsigned workers) {
  const double eps = positive_param(spec, "eps");
  const double x = spec.get_or("x", 0.0);
  const double t0 = positive_param(spec, "t0", 1.0);
  const double step = positive_param(spec, "step", 1e-3);
  const auto n = count_param(spec, "n_paths", 100000);
  const double gamma = KillingSpec::from_hard_level(eps).gamma;

  EnsembleConfig cfg{rep.seed, stream_tag::kBrownian, n, n, workers};
  const auto ens = collect(cfg, [&](Stream& rng) -> std::optional<Observation> {
    const auto path = sample_bm_path(x, t0, step, rng);
    Observation o;
    o.values = {path.values.back()};
    o.weight = girsanov_weight(path, eps);
    return o;
  });
  rep.n_accepted = ens.accepted.size();
  rep.n_proposals = ens.proposals;
  rep.acceptance_rate = 1.0;

  const auto w = ens.weights();
  const auto end = ens.column(0);
  const double z = spec.tolerance_or("z", 3.0);
  const auto lm = unweighted_moments(w);
  rep.records.push_back(make_record("lambda_mean_z", std::abs(lm.mean - 1.0) / lm.se_mean, z));

  const auto ou = ou_transition_moments(x, t0, gamma);
  std::vector<double> sq(end.size());
  for (std::size_t i = 0; i < end.size(); ++i) sq[i] = end[i] * end[i];
  const auto m2 = weighted_moments(sq, w);
  const double target2 = ou.variance + ou.mean * ou.mean;
  rep.records.push_back(
      make_record("weighted_second_moment_z", std::abs(m2.mean - target2) / m2.se_mean, z));
  const auto ks = ks_one_sample_weighted(
      end, w, [&](double y) { return gaussian_cdf(y, ou.mean, ou.variance); });
  rep.records.push_back(make_record("weighted_ks_ou", ks.statistic, spec.tolerance_or("ks", 0.03)));
}

}  // namespace detail

/// Checks the parameters a theorem kind needs without running it.
inline void validate(const ExperimentSpec& spec) {
  static const std::map<Theorem, std::vector<std::string>> required = {
      {Theorem::main, {"eps"}},          {Theorem::killed, {"gamma"}},
      {Theorem::scaled, {"eps_t"}},      {Theorem::smalldev_ratio, {"eps"}},
      {Theorem::phi_normal, {"eps"}},    {Theorem::scaling_identity, {"q"}},
      {Theorem::girsanov, {"eps"}}};
  for (const auto& key : required.at(spec.theorem)) {
    if (!spec.has(key)) {
      throw spec_error(std::string(to_string(spec.theorem)) + ": missing parameter '" + key + "'");
    }
  }
}

/// Runs the recipe of spec.theorem. The report depends only on the spec
/// (including its seed), never on the worker count.
inline ExperimentReport run_experiment(const ExperimentSpec& spec,
                                       unsigned workers = default_workers()) {
  validate(spec);
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport rep;
  rep.spec = spec;
  rep.seed = static_cast<std::uint64_t>(spec.get_or("seed", 1.0));
  switch (spec.theorem) {
    case Theorem::main: detail::run_main(spec, rep, workers); break;
    case Theorem::killed: detail::run_killed(spec, rep, workers); break;
    case Theorem::scaled: detail::run_scaled(spec, rep, workers); break;
    case Theorem::smalldev_ratio: detail::run_smalldev_ratio(spec, rep); break;
    case Theorem::phi_normal: detail::run_phi_normal(spec, rep, workers); break;
    case Theorem::scaling_identity: detail::run_scaling_identity(spec, rep, workers); break;
    case Theorem::girsanov: detail::run_girsanov(spec, rep, workers); break;
  }
  rep.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

enum class TableKind { ratio, ks };

/// CSV text. ratio: `T,oracle,asymptotic,ratio`; ks: `T,ks_statistic,n_accepted`
/// from the `main` recipe at the first observation time, one run per horizon.
inline std::string convergence_table(TableKind kind, const std::vector<double>& horizons,
                                     const ExperimentSpec& base,
                                     unsigned workers = default_workers()) {
  detail::require(!horizons.empty(), "convergence_table: empty horizon grid");
  std::ostringstream out;
  out.precision(17);
  if (kind == TableKind::ratio) {
    out << "T,oracle,asymptotic,ratio\n";
    const double eps = detail::positive_param(base, "eps", 1.0);
    for (const auto& r : ratio_rows(base.get_or("x", 0.0), eps, horizons)) {
      out << r.horizon << ',' << r.oracle << ',' << r.asymptotic << ',' << r.ratio << '\n';
    }
    return out.str();
  }
  out << "T,ks_statistic,n_accepted\n";
  for (double T : horizons) {
    ExperimentSpec spec = base;
    spec.theorem = Theorem::main;
    spec.set("horizon", T);
    if (!spec.has("eps")) spec.set("eps", 1.0);
    spec.set("t_obs", std::vector<double>{spec.list_or("t_obs", {1.0}).front()});
    const auto rep = run_experiment(spec, workers);
    out << T << ',' << rep.records.front().statistic << ',' << rep.n_accepted << '\n';
  }
  return out.str();
}

}  // namespace smallball
