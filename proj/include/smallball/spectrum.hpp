#pragma once

// Karhunen-Loeve data of standard Brownian motion on [0,1]:
//
//   W_t = sum_j sqrt(lambda_j) xi_j e_j(t),
//   lambda_j = 1 / ((j - 1/2)^2 pi^2),  e_j(t) = sqrt(2) sin((j - 1/2) pi t),
//   alpha_j = <1, e_j> = sqrt(2) / ((j - 1/2) pi).
//
// Indices are 1-based throughout, matching the formulas above. Containers
// returned by SpectralBasis store index j at position j - 1.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "smallball/error.hpp"

namespace smallball {

inline double eigenvalue(std::size_t j) {
  detail::require(j >= 1, "eigenvalue: index must be >= 1");
  const double h = (static_cast<double>(j) - 0.5) * std::numbers::pi;
  return 1.0 / (h * h);
}

inline double coefficient(std::size_t j) {
  detail::require(j >= 1, "coefficient: index must be >= 1");
  return std::numbers::sqrt2 / ((static_cast<double>(j) - 0.5) * std::numbers::pi);
}

inline double eigenfunction(std::size_t j, double t) {
  detail::require(j >= 1, "eigenfunction: index must be >= 1");
  detail::require(t >= 0.0 && t <= 1.0, "eigenfunction: t must lie in [0,1]");
  return std::numbers::sqrt2 *
         std::sin((static_cast<double>(j) - 0.5) * std::numbers::pi * t);
}

/// sum_{j > J} lambda_j, computed as 1/2 - sum_{j <= J} lambda_j.
inline double tail_mass(std::size_t J) {
  // Summing smallest terms first keeps the subtraction accurate for large J.
  double partial = 0.0;
  for (std::size_t j = J; j >= 1; --j) partial += eigenvalue(j);
  return 0.5 - partial;
}

/// Truncated basis with precomputed lambda_j, sqrt(lambda_j) and alpha_j.
class SpectralBasis {
 public:
  explicit SpectralBasis(std::size_t max_index) : max_index_(max_index) {
    detail::require(max_index >= 1, "SpectralBasis: max_index must be >= 1");
    lambda_.reserve(max_index);
    sqrt_lambda_.reserve(max_index);
    alpha_.reserve(max_index);
    for (std::size_t j = 1; j <= max_index; ++j) {
      lambda_.push_back(eigenvalue(j));
      sqrt_lambda_.push_back(std::sqrt(lambda_.back()));
      alpha_.push_back(coefficient(j));
    }
  }

  std::size_t max_index() const noexcept { return max_index_; }

  double lambda(std::size_t j) const { return lambda_.at(j - 1); }
  double alpha(std::size_t j) const { return alpha_.at(j - 1); }
  double e(std::size_t j, double t) const { return eigenfunction(j, t); }

  const std::vector<double>& lambdas() const noexcept { return lambda_; }
  const std::vector<double>& sqrt_lambdas() const noexcept { return sqrt_lambda_; }
  const std::vector<double>& alphas() const noexcept { return alpha_; }

  double tail_mass() const { return smallball::tail_mass(max_index_); }

 private:
  std::size_t max_index_;
  std::vector<double> lambda_;
  std::vector<double> sqrt_lambda_;
  std::vector<double> alpha_;
};

}  // namespace smallball
