#pragma once

#include <cmath>
#include <functional>
#include <numbers>

namespace rareflow::numeric {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double normal_pdf(double x) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

/// Standard normal CDF, relative accuracy ~1e-15 in both tails (erfc based).
inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x * kInvSqrt2); }

/// Upper tail 1 - Phi(x) without cancellation.
inline double normal_sf(double x) noexcept { return 0.5 * std::erfc(x * kInvSqrt2); }

/// Inverse of normal_cdf on (0,1). Rational initial guess refined by Halley steps.
double normal_quantile(double p);

/// x with normal_sf(x) = tail, accurate when tail is tiny.
inline double normal_upper_quantile(double tail) { return -normal_quantile(tail); }

/// Bisection on a sign change of f over [lo, hi]. Returns the midpoint of the final bracket.
double bisect(const std::function<double(double)>& f, double lo, double hi, double x_tol = 1e-15,
              int max_iter = 400);

/// Safeguarded Newton: keeps a sign-change bracket and falls back to bisection when a Newton
/// step leaves it. Stops when |f| <= f_tol or the bracket collapses.
double newton_bisect(const std::function<double(double)>& f, const std::function<double(double)>& df,
                     double lo, double hi, double f_tol, int max_iter = 500);

/// Maximizer of a unimodal function on [lo, hi].
double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                          double x_tol = 1e-12, int max_iter = 500);

}  // namespace rareflow::numeric
