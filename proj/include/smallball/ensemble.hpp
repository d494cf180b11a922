#pragma once

// Deterministic collection of accepted proposals.
//
// Proposal i always draws from Stream(seed, tag, i). Proposals are evaluated
// in batches (in parallel); accepted observations are kept in proposal order
// and the ensemble stops at the target-th acceptance, so the accepted set and
// the proposal count are the same for every worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "smallball/error.hpp"
#include "smallball/parallel.hpp"
#include "smallball/random.hpp"

namespace smallball {

/// What an experiment keeps from one accepted path.
struct Observation {
  std::vector<double> values;  // path values at the observation times
  double weight = 1.0;
  double eta = std::numeric_limits<double>::quiet_NaN();
  double integral = std::numeric_limits<double>::quiet_NaN();
};

struct Ensemble {
  std::vector<Observation> accepted;
  std::uint64_t proposals = 0;

  double acceptance_rate() const {
    return proposals == 0 ? 0.0
                          : static_cast<double>(accepted.size()) /
                                static_cast<double>(proposals);
  }

  /// Column k of the observation values.
  std::vector<double> column(std::size_t k) const {
    std::vector<double> out;
    out.reserve(accepted.size());
    for (const auto& o : accepted) out.push_back(o.values.at(k));
    return out;
  }

  std::vector<double> weights() const {
    std::vector<double> out;
    out.reserve(accepted.size());
    for (const auto& o : accepted) out.push_back(o.weight);
    return out;
  }

  std::vector<double> etas() const {
    std::vector<double> out;
    out.reserve(accepted.size());
    for (const auto& o : accepted) out.push_back(o.eta);
    return out;
  }
};

struct EnsembleConfig {
  std::uint64_t seed = 0;
  std::uint64_t tag = 0;
  std::uint64_t target = 1000;          // accepted observations wanted
  std::uint64_t max_proposals = 100'000'000;
  unsigned workers = 1;
  std::uint64_t batch = 4096;
  /// Stop quietly at max_proposals instead of throwing exhaustion_error.
  bool allow_shortfall = false;
};

/// propose(Stream&) -> std::optional<Observation>, called once per proposal.
/// Throws exhaustion_error when max_proposals are used up first (unless
/// allow_shortfall).
template <class Propose>
Ensemble collect(const EnsembleConfig& cfg, Propose&& propose) {
  detail::require(cfg.target >= 1, "collect: target must be positive");
  detail::require(cfg.batch >= 1, "collect: batch must be positive");
  Ensemble out;
  out.accepted.reserve(static_cast<std::size_t>(cfg.target));
  std::uint64_t next = 0;
  while (out.accepted.size() < cfg.target) {
    if (next >= cfg.max_proposals) {
      if (cfg.allow_shortfall) break;
      throw exhaustion_error("collect: proposal budget exhausted", next,
                             out.accepted.size());
    }
    const std::uint64_t n = std::min(cfg.batch, cfg.max_proposals - next);
    std::vector<std::optional<Observation>> slots(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), cfg.workers, [&](std::size_t i) {
      Stream rng(cfg.seed, cfg.tag, next + i);
      slots[i] = propose(rng);
    });
    for (std::uint64_t i = 0; i < n; ++i) {
      if (!slots[i]) continue;
      out.accepted.push_back(std::move(*slots[i]));
      if (out.accepted.size() == cfg.target) {
        out.proposals = next + i + 1;
        return out;
      }
    }
    next += n;
  }
  out.proposals = next;
  return out;
}

}  // namespace smallball
