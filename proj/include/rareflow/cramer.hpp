#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "rareflow/mc.hpp"
#include "rareflow/tilt.hpp"

namespace rareflow {

/// P[S_n / n >= x] for i.i.d. draws from `family`.
struct EmpiricalMeanProblem {
  TiltableFamily family;
  std::size_t n = 1;
  double x = 0.0;

  bool rare() const { return x >= family_mean(family); }
};

EstimatorResult naive_tail(const EmpiricalMeanProblem& problem, std::size_t replications, std::uint64_t seed);

/// Tilted estimator: X_i ~ tilt(family, theta), value exp(-theta S_n + n Gamma(theta)) 1{S_n >= n x}.
EstimatorResult is_tail(const EmpiricalMeanProblem& problem, double theta, std::size_t replications,
                        std::uint64_t seed);

/// exp(-n (theta x - Gamma(theta))), a pointwise bound on every is_tail sample value.
double is_sample_bound(const EmpiricalMeanProblem& problem, double theta);

/// Value of one is_tail replication given the realized sum S_n.
double is_sample_value(const EmpiricalMeanProblem& problem, double theta, double sum);

struct RateLadder {
  std::vector<double> scales;
  std::vector<EstimatorResult> results;
  DecayFit prob_fit;
  DecayFit second_moment_fit;
};

/// is_tail on each rung of the ladder, with theta = saddle_theta(x) unless given. Rung k uses
/// stream k so rungs are independent.
RateLadder run_rate_ladder(const TiltableFamily& family, double x, const std::vector<std::size_t>& ladder,
                           std::size_t replications, std::uint64_t seed,
                           std::optional<double> theta = std::nullopt);

/// Fit of (n, ln p_n); the slope approximates -legendre(family, x).rate.
DecayFit verify_rate(const TiltableFamily& family, double x, const std::vector<std::size_t>& ladder,
                     std::size_t replications, std::uint64_t seed);

}  // namespace rareflow
