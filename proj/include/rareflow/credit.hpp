#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "rareflow/mc.hpp"

namespace rareflow {

/// Loss threshold q fixed across portfolio sizes.
struct FixedThreshold {
  double q;
};

/// Loss threshold q_n = 1 - c n^{-a}.
struct ThresholdSchedule {
  double c = 0.5;
  double a = 1.0;
};

/// Single-factor Gaussian copula: obligor k defaults when rho Z + sqrt(1 - rho^2) eps_k < Phi^{-1}(p).
struct PortfolioModel {
  double p;
  double rho;
  std::variant<FixedThreshold, ThresholdSchedule> threshold;

  double q(std::size_t n) const;
  /// 1 - q(n), computed without cancellation.
  double q_tail(std::size_t n) const;
  /// Throws DomainError / RegimeError when parameters are invalid or q(n) <= p.
  void validate(std::size_t n) const;
};

/// p(z) = Phi((rho z + Phi^{-1}(p)) / sqrt(1 - rho^2)).
double conditional_default_prob(const PortfolioModel& model, double z);

/// Relative entropy q ln(q/p) + (1-q) ln((1-q)/(1-p)).
double independent_decay(double p, double q);

/// a (1 - rho^2) / rho^2.
double dependent_decay(double a, double rho);

/// Factor level where p(z) equals q(n).
double factor_threshold(const PortfolioModel& model, std::size_t n);

/// ln[q (1 - p(z)) / ((1 - q) p(z))] when q > p(z), else 0.
double conditional_twist(const PortfolioModel& model, double z, double q);

/// F_n(z) = -n H(q_n | p(z)) below the factor threshold, 0 above it.
double loss_exponent(const PortfolioModel& model, std::size_t n, double z);
double loss_exponent_derivative(const PortfolioModel& model, std::size_t n, double z);

/// Root of F_n'(mu) = mu on [0, z_n].
double factor_shift(const PortfolioModel& model, std::size_t n);

struct FactorShift {
  enum class Kind { mu_n, z_n, custom };
  Kind kind = Kind::mu_n;
  double value = 0.0;  // used by custom

  static FactorShift custom(double mu) { return {Kind::custom, mu}; }
};

double resolve_shift(const PortfolioModel& model, std::size_t n, const FactorShift& shift);

/// Z ~ N(mu, 1), defaults twisted to mean q given Z, returns the likelihood-weighted indicator of
/// L_n >= n q_n. Unbiased for P[L_n >= n q_n] under any shift.
EstimatorResult two_step_is(const PortfolioModel& model, std::size_t n, std::size_t replications,
                            std::uint64_t seed, const FactorShift& shift = {});

/// Direct simulation of the portfolio loss indicator.
EstimatorResult plain_loss_mc(const PortfolioModel& model, std::size_t n, std::size_t replications,
                              std::uint64_t seed);

struct LossDecay {
  std::vector<double> n;
  std::vector<EstimatorResult> results;
  DecayFit fit;  // points (ln n, ln P)
};

/// two_step_is with the mu_n shift on each rung, fitted against ln n.
LossDecay measure_loss_decay(const PortfolioModel& model, const std::vector<std::size_t>& ladder,
                             std::size_t replications, std::uint64_t seed);

}  // namespace rareflow
