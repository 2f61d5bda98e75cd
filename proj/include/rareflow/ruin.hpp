#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "rareflow/mc.hpp"
#include "rareflow/tilt.hpp"

namespace rareflow {

struct InvestParams {
  double b;      // drift of the risky asset
  double sigma;  // volatility of the risky asset
};

/// Cramer-Lundberg reserve x + p t - sum of claims, claims arriving at Poisson rate lambda.
struct RuinModel {
  double premium;
  double intensity;
  BasicFamily claims;
  std::optional<InvestParams> invest;

  /// (p - lambda E[Y]) / (lambda E[Y]).
  double safety_loading() const;
  /// Throws DomainError for invalid parameters or claims with mass below zero.
  void validate() const;
};

enum class ExponentKind { lundberg, invest };

struct ExponentSolution {
  double value;
  double residual;
  ExponentKind kind;
};

/// Positive root of lambda (E[e^{theta Y}] - 1) = p theta.
ExponentSolution adjustment_coefficient(const RuinModel& model);

double lundberg_bound(const RuinModel& model, double x);

/// psi(x) by the tilted embedded random walk, stopped when it first exceeds x.
EstimatorResult simulate_ruin_is(const RuinModel& model, double x, std::size_t replications, std::uint64_t seed);

/// Positive root of lambda (E[e^{theta Y}] - 1) = p theta + b^2 / (2 sigma^2).
ExponentSolution invest_exponent(const RuinModel& model);

/// b / (sigma^2 theta*).
double optimal_fraction(const RuinModel& model);

/// Ruin before `horizon` with a constant amount alpha held in the risky asset. The Brownian part is
/// advanced on a grid of spacing `step` (default horizon / 4096) refined by the claim times, and a
/// Brownian-bridge test catches crossings of zero between grid points. The finite horizon
/// underestimates the infinite-horizon ruin probability.
EstimatorResult simulate_wealth_ruin(const RuinModel& model, double x, double alpha, double horizon,
                                     std::size_t replications, std::uint64_t seed,
                                     std::optional<double> step = std::nullopt);

/// Ruin before `horizon` without investment, checked at claim instants only.
EstimatorResult simulate_ruin_walk(const RuinModel& model, double x, double horizon, std::size_t replications,
                                   std::uint64_t seed);

/// sup over z >= 0 of E[e^{theta (Y - z)} | Y > z].
double uniform_exp_tail_check(const BasicFamily& claims, double theta);

}  // namespace rareflow
