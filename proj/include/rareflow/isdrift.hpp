#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "rareflow/mc.hpp"

namespace rareflow {

using Vec = std::vector<double>;

/// Payoff G(Z) of a Gaussian vector Z of dimension steps * factors, with F = ln G.
struct PathPayoff {
  std::size_t steps = 1;
  std::size_t factors = 1;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> log_gradient;  // optional closed form of grad F

  std::size_t dim() const { return steps * factors; }
  bool in_domain(const Vec& z) const { return value(z) > 0.0; }
  double log_value(const Vec& z) const;
  /// Closed form when supplied, otherwise central differences with step 1e-5.
  Vec gradient(const Vec& z) const;
  Vec numeric_gradient(const Vec& z) const;
};

/// G(z) = exp(c'z + d).
PathPayoff exp_linear_payoff(const Vec& c, double d = 0.0);

/// Arithmetic-average call on a Black-Scholes path observed at `steps` equally spaced dates.
/// Z_j drives the j-th log-return.
PathPayoff asian_call_payoff(double s0, double strike, double sigma, double maturity, std::size_t steps,
                             double rate = 0.0);

struct DriftResult {
  Vec mu;
  double objective = 0.0;  // F(mu) - mu'mu / 2
  std::size_t iterations = 0;
  bool converged = false;
  double residual = 0.0;   // ||grad F(mu) - mu||_inf
};

/// Maximizes F(z) - z'z/2 by the damped fixed-point map z <- (1 - eta) z + eta grad F(z). Each
/// iteration first tries eta = initial_step and halves it until the objective does not decrease
/// and the trial stays where G > 0. Throws DomainEscape if the start or every trial is outside
/// that set; returns converged = false when the iteration budget runs out or steps stall.
DriftResult ghs_drift(const PathPayoff& payoff, const Vec& start, double tol = 1e-10, std::size_t max_iter = 1000,
                      double initial_step = 1.0);

/// Throws NotConverged when the drift search did not converge.
const DriftResult& require_converged(const DriftResult& r);

/// Average of G(Z) exp(-mu'Z + mu'mu/2) with Z ~ N(mu, I).
EstimatorResult mu_is_estimator(const PathPayoff& payoff, const Vec& mu, std::size_t replications,
                                std::uint64_t seed);

/// {plain G(xi), shifted G(mu + xi) * weight} on the same normal draws xi.
std::array<EstimatorResult, 2> mu_is_paired(const PathPayoff& payoff, const Vec& mu, std::size_t replications,
                                            std::uint64_t seed);

/// Largest (F(z) - F(0)) / z'z seen on far-out sample points; a growth coefficient below 1/4
/// is needed for the scaled second moment to have a finite limit.
double estimate_growth_coefficient(const std::function<double(const Vec&)>& log_payoff, std::size_t dim,
                                   std::uint64_t seed);

struct SecondMomentRate {
  DecayFit fit;                       // points (1/eps, ln M2_eps)
  std::vector<double> relative_error;  // of each M2_eps estimate
  double growth_coefficient = 0.0;     // sample estimate checked against 1/4
};

/// For each eps, estimates M2_eps = E[theta_eps^2] with
/// theta_eps = exp((F(sqrt(eps) Z) - mu' sqrt(eps) Z + mu'mu / 2) / eps), Z ~ N(mu / sqrt(eps), I).
/// The slope of ln M2 against 1/eps approaches sup_z [2F(z) - mu'z + mu'mu/2 - z'z/2].
/// Throws MomentConditionViolated when the sampled growth coefficient is not below 1/4.
SecondMomentRate scaled_second_moment_rate(const std::function<double(const Vec&)>& log_payoff, const Vec& mu,
                                           const std::vector<double>& eps_ladder, std::size_t replications,
                                           std::uint64_t seed);

/// |ln(s/K)| / sigma.
double fw_distance_bs(double s, double barrier, double sigma);

/// ln(s/K) / (sigma (T - t)).
double fw_drift_bs(double t, double s, double barrier, double sigma, double maturity);

enum class Monitoring { grid, bridge };

struct UpInBond {
  double s0;
  double barrier;
  double sigma;
  double maturity;
  std::size_t steps;
};

/// Probability that a driftless-in-price Black-Scholes asset touches `barrier` before maturity.
/// With use_fw_drift the log-price is simulated under the measure with drift -sigma^2/2 - sigma phi,
/// phi = fw_drift_bs at the left end of each step, and each hit is weighted by the likelihood.
/// Bridge monitoring counts crossings between grid dates through their conditional probability;
/// grid monitoring counts grid dates only.
EstimatorResult price_up_in_bond(const UpInBond& spec, std::size_t replications, std::uint64_t seed,
                                 bool use_fw_drift, Monitoring monitoring = Monitoring::bridge);

/// Terminal likelihood exp(sum phi dW - sum phi^2 dt / 2) along paths simulated under the shifted
/// measure with drift function phi(t, s).
EstimatorResult simulate_likelihood(const std::function<double(double, double)>& phi, const UpInBond& spec,
                                    std::size_t replications, std::uint64_t seed);

}  // namespace rareflow
