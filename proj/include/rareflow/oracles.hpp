#pragma once

// Reference values computed by routes independent of the estimators: exact enumeration, closed
// forms from classical probability, and deterministic quadrature. Used by the tests and by the
// CLI --oracle flag.

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

namespace rareflow::oracle {

double log_binomial_pmf(std::size_t n, std::size_t k, double p);

/// P[Bin(n, p) >= k].
double binomial_tail(std::size_t n, std::size_t k, double p);

/// P[Poisson(mean) <= k] and P[Poisson(mean) >= k], each summed directly over its own side.
double poisson_cdf(double mean, std::size_t k);
double poisson_tail(double mean, std::size_t k);
/// Smallest integer k with k >= n x (with snapping of rounding noise).
std::size_t lattice_threshold(std::size_t n, double x);

struct TiltedMoments {
  double prob;           // P[S_n >= n x]
  double second_moment;  // E_theta[(exp(-theta S_n + n Gamma(theta)) 1{S_n >= n x})^2]
};

/// Exact first and second moments of the tilted Bernoulli tail estimator, summing over the
/// binomial law of S_n.
TiltedMoments bernoulli_tilted_moments(double p, std::size_t n, double x, double theta);

/// Expectation of the tilted Bernoulli estimator by enumerating all 2^n outcomes (n <= 20).
double bernoulli_is_enumeration(double p, std::size_t n, double x, double theta);

/// Ruin probability with exponential(nu) claims: lambda / (p nu) exp(-(nu - lambda / p) x).
double exponential_ruin_prob(double nu, double lambda, double premium, double x);

/// P[max_{t <= T} (mu t + sigma W_t) >= b] for b > 0.
double drifted_bm_max_prob(double mu, double sigma, double horizon, double level);

/// P[max of a Brownian bridge from a to b over time eps >= U] from the reflection principle, as a
/// ratio of the reflected and direct Gaussian transition densities.
double bridge_max_prob(double a, double b, double upper, double sigma, double eps);

/// Black-Scholes up-and-out call with continuous monitoring.
double up_out_call(double s0, double strike, double barrier, double rate, double sigma, double maturity);

/// Probabilists' Gauss-Hermite rule: sum w_i f(x_i) approximates E[f(Z)], Z ~ N(0,1).
std::pair<std::vector<double>, std::vector<double>> gauss_hermite(std::size_t n);

/// Gauss-Legendre nodes and weights on [-1, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(std::size_t n);

/// Integral of f over [a, b] with `panels` panels of an order-20 Gauss-Legendre rule.
double integrate(const std::function<double(double)>& f, double a, double b, std::size_t panels = 200);

/// P[L_n >= n q] in the single-factor Gaussian copula, integrating the exact conditional binomial
/// tail over the factor with a 200-node Gauss-Hermite rule.
double copula_loss_prob_hermite(double p, double rho, std::size_t n, double q);

/// Same probability by composite Gauss-Legendre on [-12, 40], robust for steep integrands.
double copula_loss_prob(double p, double rho, std::size_t n, double q);

/// Nelder-Mead minimizer.
std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> start, double step, double tol = 1e-13,
                                std::size_t max_iter = 200000);

/// sup over a uniform theta grid on [lo, hi] of theta x - gamma(theta), refined by ternary search
/// around the best grid point.
double legendre_grid(const std::function<double(double)>& gamma, double x, double lo, double hi,
                     std::size_t points = 20001);

}  // namespace rareflow::oracle
