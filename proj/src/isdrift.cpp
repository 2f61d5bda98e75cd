#include "rareflow/isdrift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rareflow/error.hpp"

namespace rareflow {

namespace {

constexpr double kFdStep = 1e-5;

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double objective(const PathPayoff& p, const Vec& z) { return p.log_value(z) - 0.5 * dot(z, z); }

double sup_residual(const Vec& g, const Vec& z) {
  double r = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) r = std::max(r, std::abs(g[i] - z[i]));
  return r;
}

}  // namespace

double PathPayoff::log_value(const Vec& z) const {
  const double g = value(z);
  return g > 0.0 ? std::log(g) : -std::numeric_limits<double>::infinity();
}

Vec PathPayoff::numeric_gradient(const Vec& z) const {
  Vec g(z.size());
  Vec w = z;
  for (std::size_t i = 0; i < z.size(); ++i) {
    w[i] = z[i] + kFdStep;
    const double up = log_value(w);
    w[i] = z[i] - kFdStep;
    const double down = log_value(w);
    w[i] = z[i];
    if (!std::isfinite(up) || !std::isfinite(down))
      throw DomainEscape("finite-difference stencil leaves the payoff support");
    g[i] = (up - down) / (2.0 * kFdStep);
  }
  return g;
}

Vec PathPayoff::gradient(const Vec& z) const { return log_gradient ? log_gradient(z) : numeric_gradient(z); }

PathPayoff exp_linear_payoff(const Vec& c, double d) {
  PathPayoff p;
  p.steps = c.size();
  p.value = [c, d](const Vec& z) { return std::exp(dot(c, z) + d); };
  p.log_gradient = [c](const Vec&) { return c; };
  return p;
}

PathPayoff asian_call_payoff(double s0, double strike, double sigma, double maturity, std::size_t steps,
                             double rate) {
  if (!(s0 > 0.0 && strike > 0.0 && sigma > 0.0 && maturity > 0.0) || steps == 0)
    throw DomainError("asian call needs positive s0, strike, sigma, maturity and steps");
  const double h = maturity / static_cast<double>(steps);
  const double step_drift = (rate - 0.5 * sigma * sigma) * h;
  const double step_vol = sigma * std::sqrt(h);
  const double disc = std::exp(-rate * maturity);
  const double m = static_cast<double>(steps);

  auto prices = [=](const Vec& z) {
    Vec s(steps);
    double x = std::log(s0);
    for (std::size_t i = 0; i < steps; ++i) {
      x += step_drift + step_vol * z[i];
      s[i] = std::exp(x);
    }
    return s;
  };
  auto average = [=](const Vec& s) {
    double a = 0.0;
    for (double v : s) a += v;
    return a / m;
  };

  PathPayoff p;
  p.steps = steps;
  p.value = [=](const Vec& z) { return disc * std::max(average(prices(z)) - strike, 0.0); };
  // dA/dz_j = step_vol / m * sum_{i >= j} S_i, and grad F = grad A / (A - K).
  p.log_gradient = [=](const Vec& z) {
    const Vec s = prices(z);
    const double excess = average(s) - strike;
    if (!(excess > 0.0)) throw DomainEscape("asian call gradient requested outside the money");
    Vec g(steps);
    double tail = 0.0;
    for (std::size_t j = steps; j-- > 0;) {
      tail += s[j];
      g[j] = step_vol * tail / m / excess;
    }
    return g;
  };
  return p;
}

DriftResult ghs_drift(const PathPayoff& payoff, const Vec& start, double tol, std::size_t max_iter,
                      double initial_step) {
  if (start.size() != payoff.dim()) throw DomainError("start vector has the wrong dimension");
  if (!payoff.in_domain(start)) throw DomainEscape("start point outside {G > 0}");
  DriftResult r;
  Vec z = start;
  double j = objective(payoff, z);
  Vec g = payoff.gradient(z);
  r.residual = sup_residual(g, z);
  while (r.residual > tol && r.iterations < max_iter) {
    double eta = initial_step;
    Vec trial(z.size());
    bool accepted = false;
    bool any_inside = false;
    for (int halvings = 0; halvings < 60; ++halvings, eta *= 0.5) {
      for (std::size_t i = 0; i < z.size(); ++i) trial[i] = (1.0 - eta) * z[i] + eta * g[i];
      if (!payoff.in_domain(trial)) continue;
      any_inside = true;
      // Near the optimum the objective is flat to rounding; a smaller residual also counts as progress.
      const double jt = objective(payoff, trial);
      const bool flat = std::abs(jt - j) <= 1e-13 * (1.0 + std::abs(j));
      if (jt > j || (flat && sup_residual(payoff.gradient(trial), trial) < r.residual)) {
        accepted = true;
        break;
      }
    }
    if (!any_inside) throw DomainEscape("every damped step leaves {G > 0}");
    if (!accepted) break;
    const bool moved = trial != z;
    z = trial;
    j = objective(payoff, z);
    g = payoff.gradient(z);
    r.residual = sup_residual(g, z);
    ++r.iterations;
    if (!moved) break;
  }
  r.mu = z;
  r.objective = j;
  r.converged = r.residual <= tol;
  return r;
}

const DriftResult& require_converged(const DriftResult& r) {
  if (!r.converged)
    throw NotConverged("drift search stopped after " + std::to_string(r.iterations) +
                       " iterations with residual " + std::to_string(r.residual));
  return r;
}

EstimatorResult mu_is_estimator(const PathPayoff& payoff, const Vec& mu, std::size_t replications,
                                std::uint64_t seed) {
  return mu_is_paired(payoff, mu, replications, seed)[1];
}

std::array<EstimatorResult, 2> mu_is_paired(const PathPayoff& payoff, const Vec& mu, std::size_t replications,
                                            std::uint64_t seed) {
  if (mu.size() != payoff.dim()) throw DomainError("drift vector has the wrong dimension");
  for (double v : mu)
    if (!std::isfinite(v)) throw NonFiniteInput("drift vector must be finite");
  const double half_norm = 0.5 * dot(mu, mu);
  const std::size_t d = mu.size();
  return run_replications_multi<2>(
      [&](Rng& rng) {
        Vec xi(d), z(d);
        for (std::size_t i = 0; i < d; ++i) {
          xi[i] = rng.normal();
          z[i] = mu[i] + xi[i];
        }
        // -mu'Z + mu'mu/2 = -mu'xi - mu'mu/2
        const double w = std::exp(-dot(mu, xi) - half_norm);
        return std::array<double, 2>{payoff.value(xi), payoff.value(z) * w};
      },
      replications, seed);
}

double estimate_growth_coefficient(const std::function<double(const Vec&)>& log_payoff, std::size_t dim,
                                   std::uint64_t seed) {
  const double f0 = log_payoff(Vec(dim, 0.0));
  const double base = std::isfinite(f0) ? f0 : 0.0;
  Rng rng(seed, 0x6772u, 0);
  double worst = -std::numeric_limits<double>::infinity();
  for (double radius : {32.0, 64.0, 128.0}) {
    for (int k = 0; k < 2048; ++k) {
      Vec z(dim);
      double norm = 0.0;
      for (auto& v : z) {
        v = rng.normal();
        norm += v * v;
      }
      const double scale = radius / std::sqrt(norm);
      for (auto& v : z) v *= scale;
      const double f = log_payoff(z);
      if (std::isfinite(f)) worst = std::max(worst, (f - base) / (radius * radius));
    }
  }
  return worst;
}

SecondMomentRate scaled_second_moment_rate(const std::function<double(const Vec&)>& log_payoff, const Vec& mu,
                                           const std::vector<double>& eps_ladder, std::size_t replications,
                                           std::uint64_t seed) {
  SecondMomentRate out;
  out.growth_coefficient = estimate_growth_coefficient(log_payoff, mu.size(), seed);
  if (!(out.growth_coefficient < 0.25))
    throw MomentConditionViolated("sampled growth coefficient " + std::to_string(out.growth_coefficient) +
                                  " is not below 1/4");
  const std::size_t d = mu.size();
  const double mm = dot(mu, mu);
  std::vector<DecayPoint> pts;
  for (std::size_t k = 0; k < eps_ladder.size(); ++k) {
    const double eps = eps_ladder[k];
    if (!(eps > 0.0)) throw DomainError("eps must be > 0");
    const double se = std::sqrt(eps);
    // Samples are divided by their value at the center of the sampling law to avoid overflow.
    const double shift = 2.0 * (log_payoff(mu) - 0.5 * mm) / eps;
    const EstimatorResult r = run_replications(
        [&](Rng& rng) {
          Vec y(d);
          for (std::size_t i = 0; i < d; ++i) y[i] = mu[i] + se * rng.normal();
          const double e = (log_payoff(y) - dot(mu, y) + 0.5 * mm) / eps;
          return std::exp(2.0 * e - shift);
        },
        replications, seed, static_cast<std::uint32_t>(k));
    if (!(r.mean > 0.0)) throw NonFiniteInput("second moment estimate is zero");
    pts.push_back({1.0 / eps, std::log(r.mean) + shift});
    out.relative_error.push_back(r.relative_error.value_or(0.0));
  }
  out.fit = fit_decay(pts);
  return out;
}

double fw_distance_bs(double s, double barrier, double sigma) {
  if (!(s > 0.0 && barrier > 0.0)) throw DomainError("prices must be > 0");
  return std::abs(std::log(s / barrier)) / sigma;
}

double fw_drift_bs(double t, double s, double barrier, double sigma, double maturity) {
  if (t >= maturity) throw AtMaturity("fw drift undefined at or after maturity");
  if (!(s > 0.0 && barrier > 0.0)) throw DomainError("prices must be > 0");
  return std::log(s / barrier) / (sigma * (maturity - t));
}

namespace {

void check_bond(const UpInBond& b) {
  if (!(b.s0 > 0.0 && b.barrier > 0.0 && b.sigma > 0.0 && b.maturity > 0.0) || b.steps < 1)
    throw DomainError("up-in bond needs positive s0, barrier, sigma, maturity and steps");
  if (!(b.s0 < b.barrier)) throw DomainError("up-in bond needs s0 < barrier");
}

}  // namespace

EstimatorResult price_up_in_bond(const UpInBond& spec, std::size_t replications, std::uint64_t seed,
                                 bool use_fw_drift, Monitoring monitoring) {
  check_bond(spec);
  const double h = spec.maturity / static_cast<double>(spec.steps);
  const double sh = std::sqrt(h);
  const double sig = spec.sigma;
  const double k = std::log(spec.barrier);
  const double x0 = std::log(spec.s0);
  return run_replications(
      [&](Rng& rng) {
        double x = x0, log_l = 0.0, survive = 1.0;
        for (std::size_t i = 0; i < spec.steps; ++i) {
          const double t = static_cast<double>(i) * h;
          const double phi = use_fw_drift ? (x - k) / (sig * (spec.maturity - t)) : 0.0;
          const double dw = sh * rng.normal();
          const double next = x + (-0.5 * sig * sig - sig * phi) * h + sig * dw;
          log_l += phi * dw - 0.5 * phi * phi * h;
          if (next >= k) return std::exp(log_l);
          if (monitoring == Monitoring::bridge)
            survive *= -std::expm1(-2.0 * (k - x) * (k - next) / (sig * sig * h));
          x = next;
        }
        return monitoring == Monitoring::bridge ? (1.0 - survive) * std::exp(log_l) : 0.0;
      },
      replications, seed);
}

EstimatorResult simulate_likelihood(const std::function<double(double, double)>& phi, const UpInBond& spec,
                                    std::size_t replications, std::uint64_t seed) {
  check_bond(spec);
  const double h = spec.maturity / static_cast<double>(spec.steps);
  const double sh = std::sqrt(h);
  const double sig = spec.sigma;
  return run_replications(
      [&](Rng& rng) {
        double x = std::log(spec.s0), log_l = 0.0;
        for (std::size_t i = 0; i < spec.steps; ++i) {
          const double f = phi(static_cast<double>(i) * h, std::exp(x));
          const double dw = sh * rng.normal();
          x += (-0.5 * sig * sig - sig * f) * h + sig * dw;
          log_l += f * dw - 0.5 * f * f * h;
        }
        return std::exp(log_l);
      },
      replications, seed);
}

}  // namespace rareflow
