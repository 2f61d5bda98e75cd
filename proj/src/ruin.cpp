#include "rareflow/ruin.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "rareflow/error.hpp"
#include "rareflow/numeric.hpp"

namespace rareflow {

namespace {

constexpr std::size_t kMaxSteps = 10'000'000;

double claim_cgf(const RuinModel& m, double t) { return cgf_eval(to_family(m.claims), t); }

double upper_cgf_end(const RuinModel& m) { return cgf_domain(to_family(m.claims)).hi; }

// Positive root of lambda*gamma_Y(theta) - p*theta - shift, where gamma_Y = e^{Gamma_Y} - 1.
// The function is convex, nonpositive near 0 and blows up at the end of the claim domain.
double solve_exponent(const RuinModel& m, double shift, double& residual) {
  const double lam = m.intensity, p = m.premium;
  auto h = [&](double t) { return lam * std::expm1(claim_cgf(m, t)) - p * t - shift; };
  auto dh = [&](double t) {
    return lam * std::exp(claim_cgf(m, t)) * cgf_derivative(to_family(m.claims), t) - p;
  };
  const double lo = 1e-12;
  const double end = upper_cgf_end(m);
  double hi;
  if (std::isfinite(end)) {
    hi = end - 1e-9;
    if (!(h(hi) > 0.0)) throw NoRoot("exponent equation has no root inside the claim c.g.f. domain");
  } else {
    hi = 1.0;
    while (!(h(hi) > 0.0)) {
      hi *= 2.0;
      if (hi > 1e6) throw NoRoot("exponent equation has no root below 1e6");
    }
  }
  if (h(lo) > 0.0) throw NoRoot("exponent equation is positive at the lower bracket end");
  double t = numeric::bisect(h, lo, hi, 1e-14);
  // Newton polish: bisection alone stalls at |h| ~ 1e-13 * |h'|.
  for (int i = 0; i < 4; ++i) {
    const double d = dh(t);
    if (d == 0.0) break;
    const double next = t - h(t) / d;
    if (!(next > lo && next < hi) || std::abs(h(next)) >= std::abs(h(t))) break;
    t = next;
  }
  residual = h(t);
  return t;
}

}  // namespace

double RuinModel::safety_loading() const {
  const double ey = family_mean(to_family(claims));
  return (premium - intensity * ey) / (intensity * ey);
}

void RuinModel::validate() const {
  rareflow::validate(to_family(claims));
  if (!(premium > 0.0 && std::isfinite(premium))) throw DomainError("premium must be > 0");
  if (!(intensity > 0.0 && std::isfinite(intensity))) throw DomainError("intensity must be > 0");
  if (std::holds_alternative<Normal>(claims)) throw DomainError("claim sizes must be nonnegative");
  if (invest && !(invest->sigma > 0.0)) throw DomainError("investment volatility must be > 0");
}

ExponentSolution adjustment_coefficient(const RuinModel& model) {
  model.validate();
  if (!(model.safety_loading() > 0.0)) throw NetProfitViolated("net profit condition p > lambda E[Y] fails");
  double res = 0.0;
  const double t = solve_exponent(model, 0.0, res);
  return {t, res, ExponentKind::lundberg};
}

double lundberg_bound(const RuinModel& model, double x) {
  return std::exp(-adjustment_coefficient(model).value * x);
}

EstimatorResult simulate_ruin_is(const RuinModel& model, double x, std::size_t replications, std::uint64_t seed) {
  if (!(x >= 0.0)) throw DomainError("initial reserve must be >= 0");
  const double theta = adjustment_coefficient(model).value;
  const BasicFamily claims = tilt(model.claims, theta);
  const double rate = model.intensity + model.premium * theta;
  const double p = model.premium;
  return run_replications(
      [&](Rng& rng) {
        double s = 0.0;
        for (std::size_t k = 0; k < kMaxSteps; ++k) {
          s += sample(claims, rng) - p * rng.exponential(rate);
          if (s > x) return std::exp(-theta * s);
        }
        throw MaxStepsExceeded("tilted walk did not exceed x within 1e7 steps");
      },
      replications, seed);
}

ExponentSolution invest_exponent(const RuinModel& model) {
  model.validate();
  if (!model.invest) throw DomainError("model has no investment parameters");
  const double b = model.invest->b, s = model.invest->sigma;
  if (b == 0.0) {
    const ExponentSolution l = adjustment_coefficient(model);
    return {l.value, l.residual, ExponentKind::invest};
  }
  double res = 0.0;
  const double t = solve_exponent(model, b * b / (2.0 * s * s), res);
  return {t, res, ExponentKind::invest};
}

double optimal_fraction(const RuinModel& model) {
  const ExponentSolution sol = invest_exponent(model);
  return model.invest->b / (model.invest->sigma * model.invest->sigma * sol.value);
}

EstimatorResult simulate_wealth_ruin(const RuinModel& model, double x, double alpha, double horizon,
                                     std::size_t replications, std::uint64_t seed, std::optional<double> step) {
  model.validate();
  if (!(horizon > 0.0)) throw DomainError("horizon must be > 0");
  const double b = model.invest ? model.invest->b : 0.0;
  const double sig = model.invest ? model.invest->sigma : 0.0;
  const double delta = step.value_or(horizon / 4096.0);
  if (!(delta > 0.0)) throw DomainError("step must be > 0");
  const double drift = model.premium + alpha * b;
  const double vol = std::abs(alpha) * sig;
  return run_replications(
      [&](Rng& rng) {
        if (x < 0.0) return 1.0;
        double w = x, t = 0.0;
        double next_claim = rng.exponential(model.intensity);
        while (t < horizon) {
          const double grid_next = std::min(horizon, (std::floor(t / delta + 1e-12) + 1.0) * delta);
          const bool claim_now = next_claim <= grid_next && next_claim <= horizon;
          const double t_next = claim_now ? next_claim : grid_next;
          const double dt = t_next - t;
          if (dt > 0.0) {
            const double w_next = w + drift * dt + vol * std::sqrt(dt) * rng.normal();
            if (w_next < 0.0) return 1.0;
            if (vol > 0.0 && rng.uniform() < std::exp(-2.0 * w * w_next / (vol * vol * dt))) return 1.0;
            w = w_next;
          }
          t = t_next;
          if (claim_now) {
            w -= sample(model.claims, rng);
            if (w < 0.0) return 1.0;
            next_claim = t + rng.exponential(model.intensity);
          }
        }
        return 0.0;
      },
      replications, seed);
}

EstimatorResult simulate_ruin_walk(const RuinModel& model, double x, double horizon, std::size_t replications,
                                   std::uint64_t seed) {
  model.validate();
  return run_replications(
      [&](Rng& rng) {
        double t = 0.0, s = 0.0;
        for (;;) {
          const double xi = rng.exponential(model.intensity);
          t += xi;
          if (t > horizon) return 0.0;
          s += sample(model.claims, rng) - model.premium * xi;
          if (s > x) return 1.0;
        }
      },
      replications, seed);
}

double uniform_exp_tail_check(const BasicFamily& claims, double theta) {
  validate(to_family(claims));
  if (!(theta >= 0.0)) throw DomainError("theta must be >= 0");
  if (theta == 0.0) return 1.0;
  return std::visit(
      [theta](const auto& f) -> double {
        using F = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<F, Exponential>) {
          if (theta >= f.rate) throw DivergentTail("overshoot transform diverges for theta >= rate");
          return f.rate / (f.rate - theta);
        } else if constexpr (std::is_same_v<F, Bernoulli>) {
          // Y > z forces Y = 1; the worst case is z = 0.
          return std::exp(theta);
        } else if constexpr (std::is_same_v<F, Poisson>) {
          // For theta >= 0 the supremum over z in [k, k+1) sits at z = k, so integers suffice.
          const double lam = f.lambda;
          const int kmax = static_cast<int>(lam + 40.0 * std::sqrt(lam) + 60.0);
          std::vector<double> log_pmf(kmax + 1);
          for (int j = 0; j <= kmax; ++j) log_pmf[j] = j * std::log(lam) - lam - std::lgamma(j + 1.0);
          double best = 0.0;
          for (int k = 0; k < kmax - 1; ++k) {
            double mass = 0.0, weighted = 0.0;
            for (int j = kmax; j > k; --j) {
              mass += std::exp(log_pmf[j]);
              weighted += std::exp(theta * (j - k) + log_pmf[j]);
            }
            if (mass < 1e-250) break;
            best = std::max(best, weighted / mass);
          }
          return best;
        } else {
          throw DomainError("claims must be nonnegative");
        }
      },
      claims);
}

}  // namespace rareflow
