#include "rareflow/longterm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rareflow/error.hpp"
#include "rareflow/numeric.hpp"

namespace rareflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Coefficients of the HJB equation after maximizing over the position:
//   c = theta / (1 - theta delta1^2), P = beta2 + theta delta0 delta1, Q = beta4 + theta delta1 delta2,
//   R = theta beta0 + theta^2 delta0^2 / 2 + c P^2 / 2  (the y^2 coefficient).
struct Coeffs {
  double c, dc, P, dP, Q, dQ, R, dR;
};

Coeffs coeffs(const LqModel& m, double t) {
  const double g = 1.0 - t * m.delta1 * m.delta1;
  Coeffs k{};
  k.c = t / g;
  k.dc = 1.0 / (g * g);
  k.P = m.beta2 + t * m.delta0 * m.delta1;
  k.dP = m.delta0 * m.delta1;
  k.Q = m.beta4 + t * m.delta1 * m.delta2;
  k.dQ = m.delta1 * m.delta2;
  k.R = t * m.beta0 + 0.5 * t * t * m.delta0 * m.delta0 + 0.5 * k.c * k.P * k.P;
  k.dR = m.beta0 + t * m.delta0 * m.delta0 + 0.5 * k.dc * k.P * k.P + k.c * k.P * k.dP;
  return k;
}

double theta_cap(const LqModel& m) { return m.delta1 == 0.0 ? kInf : 1.0 / (m.delta1 * m.delta1); }

}  // namespace

LqModel LqModel::from_market(const MarketSpec& mk, double k) {
  if (!(mk.sigma > 0.0)) throw DomainError("market volatility must be > 0");
  LqModel m;
  m.beta0 = 0.0;
  m.beta2 = (mk.b - mk.b0) / mk.sigma;
  m.beta3 = mk.b0;
  m.beta4 = (mk.a - mk.a0) / mk.sigma;
  m.delta0 = 0.0;
  m.delta1 = 1.0;
  m.delta2 = 0.0;
  m.k = k;
  m.market = mk;
  return m;
}

double LqModel::market_alpha(double normalized) const { return market ? normalized / market->sigma : normalized; }

double LqModel::normalized_target(double x) const { return market ? x - market->a0 : x; }

void LqModel::validate() const {
  if (!(k > 0.0)) throw DomainError("mean-reversion rate k must be > 0");
  for (double v : {beta0, beta2, beta3, beta4, delta0, delta1, delta2})
    if (!std::isfinite(v)) throw NonFiniteInput("model coefficients must be finite");
  if (market && delta1 == 0.0) throw DomainError("market-derived model needs delta1 != 0");
}

std::optional<double> static_rate(double x, double alpha, double mu, double sigma) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be > 0");
  if (alpha == 0.0) {
    if (x == 0.0) return 0.0;
    return std::nullopt;
  }
  const double z = (alpha * mu - x) / (alpha * sigma);
  return 0.5 * z * z;
}

double bs_dual_cgf(double a, double a0, double sigma, double theta) {
  if (!(theta < 1.0)) throw DomainError("Black-Scholes dual c.g.f. needs theta < 1");
  const double r = (a - a0) / (sigma * sigma);
  return 0.5 * theta / (1.0 - theta) * r * r;
}

BsOutperformance bs_outperformance(double a, double a0, double sigma, double x) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be > 0");
  if (x < 0.0) throw NegativeTarget("target x must be >= 0");
  const double r = (a - a0) / (sigma * sigma);
  const double xbar = 0.5 * r * r;
  if (x < xbar) return {0.0, 0.0, r};
  const double d = std::sqrt(x) - std::sqrt(xbar);
  return {-d * d, 1.0 - std::sqrt(xbar / x), std::sqrt(2.0 * x)};
}

double lq_discriminant(const LqModel& model, double theta) {
  return model.k * model.k - 2.0 * coeffs(model, theta).R;
}

LqDualPoint lq_dual(const LqModel& model, double theta) {
  model.validate();
  if (!(theta >= 0.0) || !(theta < theta_cap(model)))
    throw OutOfDomain("theta = " + std::to_string(theta) + " outside [0, 1/delta1^2)");
  const Coeffs k = coeffs(model, theta);
  const double D = model.k * model.k - 2.0 * k.R;
  if (D < 0.0) throw OutOfDomain("negative discriminant at theta = " + std::to_string(theta));
  const double s = std::sqrt(D);
  // Ergodic root: A(0) = 0 and k - A > 0 keeps the tilted factor mean-reverting.
  const double A = model.k - s;
  const double nb = theta * (model.beta3 + theta * model.delta0 * model.delta2) + k.c * k.P * k.Q;
  const double B = nb / s;
  const double d2 = model.delta2 * model.delta2;
  const double lam = 0.5 * A + 0.5 * B * B + 0.5 * theta * theta * d2 + 0.5 * k.c * k.Q * k.Q;

  const double dA = k.dR / s;
  const double ds = -k.dR / s;
  const double dnb = model.beta3 + 2.0 * theta * model.delta0 * model.delta2 + k.dc * k.P * k.Q +
                     k.c * (k.dP * k.Q + k.P * k.dQ);
  const double dB = (dnb * s - nb * ds) / (s * s);
  const double dlam = 0.5 * dA + B * dB + theta * d2 + 0.5 * k.dc * k.Q * k.Q + k.c * k.Q * k.dQ;
  return {A, B, lam, dlam};
}

ThetaBar theta_bar(const LqModel& model) {
  model.validate();
  const double cap = theta_cap(model);
  auto disc = [&](double t) { return lq_discriminant(model, t); };
  // Scan toward the cap on a grid that refines geometrically near it, then bisect the first sign
  // change of the discriminant.
  double bar = cap;
  double prev = 0.0;
  const double span = std::isfinite(cap) ? cap : 1e6;
  for (int i = 1; i <= 4000; ++i) {
    const double frac = i <= 2000 ? i / 2000.0 * 0.99 : 1.0 - 0.01 * std::pow(1e-10, (i - 2000) / 2000.0);
    const double t = span * frac;
    if (t >= cap) break;
    if (disc(t) < 0.0) {
      bar = numeric::bisect(disc, prev, t, 1e-13);
      // Land on the nonnegative side so lq_dual is defined up to theta_bar.
      while (bar > prev && disc(bar) < 0.0) bar = std::nextafter(bar, prev);
      break;
    }
    prev = t;
  }
  if (!std::isfinite(bar)) return {kInf, false};
  // Steepness: Lambda' keeps growing as theta approaches the endpoint.
  auto dl = [&](double t) { return lq_dual(model, t).dLambda; };
  const double far = bar * (1.0 - 1e-3), near = bar * (1.0 - 1e-9);
  const double d_far = dl(far), d_near = dl(near);
  const bool steep = !std::isfinite(d_near) || d_near > 100.0 * std::max(std::abs(d_far), 1e-12);
  return {bar, steep};
}

double feedback_policy(const LqModel& model, double theta, double y) {
  const double g = 1.0 - theta * model.delta1 * model.delta1;
  if (!(g > 0.0)) throw OutOfDomain("feedback policy needs theta < 1/delta1^2");
  return ((model.beta2 + theta * model.delta0 * model.delta1) * y + model.beta4 + theta * model.delta1 * model.delta2) /
         g;
}

DualSolution solve_dual(const LqModel& model) {
  const ThetaBar tb = theta_bar(model);
  DualSolution d;
  d.Lambda = [model](double t) { return lq_dual(model, t).Lambda; };
  d.dLambda = [model](double t) { return lq_dual(model, t).dLambda; };
  d.A = [model](double t) { return lq_dual(model, t).A; };
  d.B = [model](double t) { return lq_dual(model, t).B; };
  d.theta_bar = tb.value;
  d.steep = tb.steep;
  return d;
}

DualValue dual_to_value(const DualSolution& dual, double x) {
  if (x <= dual.dLambda(0.0)) return {0.0, 0.0};
  // Largest usable theta: just inside theta_bar, or far enough out that Lambda' exceeds x.
  double hi;
  if (std::isfinite(dual.theta_bar)) {
    hi = dual.theta_bar * (1.0 - 1e-12);
    if (!(dual.dLambda(hi) > x)) {
      if (!dual.steep) throw OutOfDualDomain("target beyond Lambda'(theta_bar) for a non-steep dual");
      throw OutOfDualDomain("target beyond the resolvable range of Lambda'");
    }
  } else {
    hi = 1.0;
    while (!(dual.dLambda(hi) > x)) {
      hi *= 2.0;
      if (hi > 1e12) throw OutOfDualDomain("Lambda' stays below the target");
    }
  }
  auto obj = [&](double t) { return t * x - dual.Lambda(t); };
  const double t0 = numeric::golden_section_max(obj, 0.0, hi, 1e-10 * std::max(1.0, hi));
  // Polish on the first-order condition Lambda'(theta) = x within a bracket around t0.
  auto g = [&](double t) { return dual.dLambda(t) - x; };
  double lo_b = t0, hi_b = t0;
  double w = 1e-6 * std::max(hi, 1e-3);
  while (lo_b > 0.0 && g(lo_b) > 0.0) lo_b = std::max(0.0, lo_b - (w *= 2.0));
  w = 1e-6 * std::max(hi, 1e-3);
  while (hi_b < hi && g(hi_b) < 0.0) hi_b = std::min(hi, hi_b + (w *= 2.0));
  auto dg = [&](double t) {
    const double h = 1e-7 * std::max(1.0, t);
    const double a = std::max(0.0, t - h), b = std::min(hi, t + h);
    return (dual.dLambda(b) - dual.dLambda(a)) / (b - a);
  };
  double t = t0;
  if (g(lo_b) <= 0.0 && g(hi_b) >= 0.0 && lo_b < hi_b) t = numeric::newton_bisect(g, dg, lo_b, hi_b, 1e-15);
  return {-(t * x - dual.Lambda(t)), t};
}

namespace {

// Euler step of (X, Y) from the origin; alpha maps the current factor value to a position.
template <class Alpha>
double terminal_wealth(const LqModel& m, Alpha alpha, std::size_t steps, double h, Rng& rng) {
  const double sh = std::sqrt(h);
  double X = 0.0, Y = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double a = alpha(Y);
    const double drift = m.beta0 * Y * Y - 0.5 * a * a + m.beta2 * Y * a + m.beta3 * Y + m.beta4 * a;
    const double vol = m.delta0 * Y + m.delta1 * a + m.delta2;
    X += drift * h + vol * sh * rng.normal();
    Y += -m.k * Y * h + sh * rng.normal();
  }
  return X;
}

std::size_t step_count(double horizon, double step) {
  if (!(horizon > 0.0)) throw DomainError("horizons must be > 0");
  if (!(step > 0.0)) throw DomainError("Euler step must be > 0");
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(horizon / step)));
}

double policy_theta(const LqModel& model, const OutperformancePolicy& policy, double x) {
  const DualSolution dual = solve_dual(model);
  const double base = std::max(x, dual.dLambda(0.0));
  return dual_to_value(dual, base + 1.0 / policy.index).theta_x;
}

}  // namespace

OutperformanceFit mc_outperformance(const LqModel& model, const OutperformancePolicy& policy, double x,
                                    const std::vector<double>& horizons, std::size_t replications,
                                    std::uint64_t seed, double step) {
  model.validate();
  OutperformanceFit out;
  const bool feedback = policy.kind == OutperformancePolicy::Kind::nearly_optimal;
  if (feedback) {
    if (!(policy.index > 0.0)) throw DomainError("policy index n must be > 0");
    out.theta_policy = policy_theta(model, policy, x);
  }
  const double theta = out.theta_policy;
  for (std::size_t r = 0; r < horizons.size(); ++r) {
    const double T = horizons[r];
    const std::size_t steps = step_count(T, step);
    const double h = T / static_cast<double>(steps);
    out.horizons.push_back(T);
    out.results.push_back(run_replications(
        [&](Rng& rng) {
          const double X = feedback
                               ? terminal_wealth(model, [&](double y) { return feedback_policy(model, theta, y); },
                                                 steps, h, rng)
                               : terminal_wealth(model, [&](double) { return policy.alpha; }, steps, h, rng);
          return X >= x * T ? 1.0 : 0.0;
        },
        replications, seed, static_cast<std::uint32_t>(r)));
  }
  try {
    out.fit = fit_decay(out.horizons, out.results);
  } catch (const InsufficientData&) {
  }
  return out;
}

EstimatorResult risk_sensitive_mc(const LqModel& model, double theta, double horizon, std::size_t replications,
                                  std::uint64_t seed, double step) {
  model.validate();
  feedback_policy(model, theta, 0.0);
  const std::size_t steps = step_count(horizon, step);
  const double h = horizon / static_cast<double>(steps);
  return run_replications(
      [&](Rng& rng) {
        return std::exp(theta * terminal_wealth(model, [&](double y) { return feedback_policy(model, theta, y); },
                                                steps, h, rng));
      },
      replications, seed);
}

}  // namespace rareflow
