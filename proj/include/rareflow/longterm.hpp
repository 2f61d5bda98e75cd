#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rareflow/mc.hpp"

namespace rareflow {

/// Market with bond rate a0 + b0 Y, stock drift a + b Y, stock volatility sigma.
struct MarketSpec {
  double a0;
  double b0;
  double a;
  double b;
  double sigma;
};

/// Log-wealth dynamics in normalized form (beta1 = -1/2, beta5 = 0):
///   dX = (beta0 Y^2 - a^2/2 + beta2 Y a + beta3 Y + beta4 a) dt + (delta0 Y + delta1 a + delta2) dW,
///   dY = -k Y dt + dB, with W and B independent.
struct LqModel {
  double beta0 = 0.0;
  double beta2 = 0.0;
  double beta3 = 0.0;
  double beta4 = 0.0;
  double delta0 = 0.0;
  double delta1 = 1.0;
  double delta2 = 0.0;
  double k = 1.0;
  std::optional<MarketSpec> market;

  /// Normalizes the market model: the position is measured as sigma * alpha and the bond drift
  /// a0 is moved into the target.
  static LqModel from_market(const MarketSpec& m, double k);

  /// Normalized position -> fraction of wealth in the stock.
  double market_alpha(double normalized) const;
  /// Target growth rate in market units -> normalized target.
  double normalized_target(double x) const;

  void validate() const;
};

/// I(x, alpha) = ((alpha mu - x) / (alpha sigma))^2 / 2; empty means +infinity.
std::optional<double> static_rate(double x, double alpha, double mu, double sigma);

/// theta / (1 - theta) * ((a - a0) / sigma^2)^2 / 2 for theta < 1.
double bs_dual_cgf(double a, double a0, double sigma, double theta);

struct BsOutperformance {
  double v;
  double theta_x;
  double alpha_star;
};

BsOutperformance bs_outperformance(double a, double a0, double sigma, double x);

struct LqDualPoint {
  double A;
  double B;
  double Lambda;
  double dLambda;  // derivative in theta
};

/// Quadratic-ansatz solution of the ergodic HJB equation at theta.
LqDualPoint lq_dual(const LqModel& model, double theta);

/// k^2 - 2 R(theta), the discriminant of the quadratic for A (negative beyond theta_bar).
double lq_discriminant(const LqModel& model, double theta);

struct ThetaBar {
  double value;
  bool steep;
};

ThetaBar theta_bar(const LqModel& model);

/// Maximizer in a of the HJB Hamiltonian.
double feedback_policy(const LqModel& model, double theta, double y);

struct DualSolution {
  std::function<double(double)> Lambda;
  std::function<double(double)> dLambda;
  std::function<double(double)> A;
  std::function<double(double)> B;
  double theta_bar = 0.0;
  bool steep = true;
};

DualSolution solve_dual(const LqModel& model);

struct DualValue {
  double v;
  double theta_x;
};

/// v(x) = -sup_{theta in [0, theta_bar)} [theta x - Lambda(theta)] and its maximizer.
DualValue dual_to_value(const DualSolution& dual, double x);

struct OutperformancePolicy {
  enum class Kind { nearly_optimal, constant };
  Kind kind = Kind::nearly_optimal;
  double index = 1.0;  // n in theta(x + 1/n)
  double alpha = 0.0;  // normalized position for the constant policy

  static OutperformancePolicy constant(double a) { return {Kind::constant, 1.0, a}; }
  static OutperformancePolicy nearly_optimal(double n) { return {Kind::nearly_optimal, n, 0.0}; }
};

struct OutperformanceFit {
  std::vector<double> horizons;
  std::vector<EstimatorResult> results;
  std::optional<DecayFit> fit;  // points (T, ln P[X_T / T >= x]); empty with fewer than 3 nonzero rungs
  double theta_policy = 0.0;
};

/// Euler simulation of (X, Y) from X0 = Y0 = 0 under the policy; estimates P[X_T / T >= x] for each
/// horizon. x is in normalized units.
OutperformanceFit mc_outperformance(const LqModel& model, const OutperformancePolicy& policy, double x,
                                    const std::vector<double>& horizons, std::size_t replications,
                                    std::uint64_t seed, double step = 1e-2);

/// Samples exp(theta X_T) under the feedback policy at theta; (1/T) ln of the mean estimates
/// Lambda(theta).
EstimatorResult risk_sensitive_mc(const LqModel& model, double theta, double horizon, std::size_t replications,
                                  std::uint64_t seed, double step = 1e-2);

}  // namespace rareflow
