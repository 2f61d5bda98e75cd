#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>

#include "rareflow/mc.hpp"

namespace rareflow {

/// Level used for an absent barrier side.
inline constexpr double kNoBarrier = 1e300;

/// Time-dependent corridor (L(t), U(t)) with derivatives. A single upper barrier has
/// L = -kNoBarrier.
struct BarrierSpec {
  enum class Kind { single_up, double_sided };

  Kind kind = Kind::single_up;
  std::function<double(double)> upper;
  std::function<double(double)> upper_slope;
  std::function<double(double)> lower;
  std::function<double(double)> lower_slope;

  static BarrierSpec constant_up(double u);
  static BarrierSpec constant_double(double l, double u);
  static BarrierSpec none();

  /// Throws InvalidBarrier unless L < U with finite slopes at every time in `times`.
  void validate(const std::vector<double>& times) const;
};

/// Euler scheme x_{i+1} = x_i + b(x_i) eps + sigma(x_i) sqrt(eps) Z_i on [0, T] with n steps.
struct EulerModel {
  std::function<double(double)> drift;
  std::function<double(double)> vol;
  double maturity;
  std::size_t steps;
  double x0;
  double rate = 0.0;  // discount rate

  double eps() const { return maturity / static_cast<double>(steps); }
};

/// Exact probability that a Brownian bridge from x_i to x_next over time eps reaches U.
double crossing_prob_single(double x_i, double x_next, double upper, double sigma, double eps);

/// Large-deviation rate of leaving (L, U) between the two grid values.
double crossing_rate_double(double x_i, double x_next, double lower, double upper, double sigma);

/// First-order correction to the exit rate for moving barriers.
double sharp_correction_double(double x_i, double x_next, double lower, double upper, double lower_slope,
                               double upper_slope, double sigma);

/// min(1, exp(-I / eps - w)) with the corridor frozen at time t.
double crossing_prob_double(double x_i, double x_next, const BarrierSpec& spec, double t, double sigma,
                            double eps);

enum class KnockoutMethod { naive, corrected };

using Payoff = std::function<double(double)>;

/// Discounted E[g(X_T) 1{path stays in the corridor}]. Naive checks grid values only; corrected
/// also kills inside each step with probability p_i. Every step consumes one normal and one
/// uniform in both methods so that estimators run on common random numbers.
EstimatorResult price_knockout(const EulerModel& model, const Payoff& payoff, const BarrierSpec& spec,
                               std::size_t replications, std::uint64_t seed, KnockoutMethod method);

/// Both methods evaluated on the same paths: {naive, corrected}.
std::array<EstimatorResult, 2> price_knockout_paired(const EulerModel& model, const Payoff& payoff,
                                                     const BarrierSpec& spec, std::size_t replications,
                                                     std::uint64_t seed);

/// Discounted E[g(X_T)] on the same draws as price_knockout.
EstimatorResult price_vanilla(const EulerModel& model, const Payoff& payoff, std::size_t replications,
                              std::uint64_t seed);

}  // namespace rareflow
