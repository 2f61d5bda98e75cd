#include "rareflow/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rareflow/error.hpp"

namespace rareflow {

BarrierSpec BarrierSpec::constant_up(double u) {
  BarrierSpec s;
  s.kind = Kind::single_up;
  s.upper = [u](double) { return u; };
  s.upper_slope = [](double) { return 0.0; };
  s.lower = [](double) { return -kNoBarrier; };
  s.lower_slope = [](double) { return 0.0; };
  return s;
}

BarrierSpec BarrierSpec::constant_double(double l, double u) {
  BarrierSpec s = constant_up(u);
  s.kind = Kind::double_sided;
  s.lower = [l](double) { return l; };
  return s;
}

BarrierSpec BarrierSpec::none() { return constant_up(kNoBarrier); }

void BarrierSpec::validate(const std::vector<double>& times) const {
  if (!upper || !upper_slope || !lower || !lower_slope) throw InvalidBarrier("barrier functions missing");
  for (double t : times) {
    const double l = lower(t), u = upper(t);
    if (!(l < u)) throw InvalidBarrier("need L(t) < U(t) at t = " + std::to_string(t));
    if (!std::isfinite(lower_slope(t)) || !std::isfinite(upper_slope(t)))
      throw InvalidBarrier("barrier slope not finite at t = " + std::to_string(t));
  }
}

double crossing_prob_single(double x_i, double x_next, double upper, double sigma, double eps) {
  if (x_i >= upper || x_next >= upper) return 1.0;
  return std::exp(-2.0 * (upper - x_i) * (upper - x_next) / (sigma * sigma * eps));
}

namespace {

bool upper_branch(double x_i, double x_next, double lower, double upper) {
  return x_i + x_next >= lower + upper;
}

bool outside(double x_i, double x_next, double lower, double upper) {
  return !(x_i > lower && x_i < upper && x_next > lower && x_next < upper);
}

}  // namespace

double crossing_rate_double(double x_i, double x_next, double lower, double upper, double sigma) {
  if (!(lower < upper)) throw InvalidBarrier("need L < U");
  if (outside(x_i, x_next, lower, upper)) return 0.0;
  const double c = 2.0 / (sigma * sigma);
  if (upper_branch(x_i, x_next, lower, upper)) return c * (upper - x_i) * (upper - x_next);
  return c * (x_i - lower) * (x_next - lower);
}

double sharp_correction_double(double x_i, double x_next, double lower, double upper, double lower_slope,
                               double upper_slope, double sigma) {
  if (!(lower < upper)) throw InvalidBarrier("need L < U");
  if (outside(x_i, x_next, lower, upper)) return 0.0;
  const double c = 2.0 / (sigma * sigma);
  if (upper_branch(x_i, x_next, lower, upper)) return c * (upper - x_i) * upper_slope;
  // Mirror image of the upper branch: a rising lower barrier moves toward the path.
  return -c * (x_i - lower) * lower_slope;
}

double crossing_prob_double(double x_i, double x_next, const BarrierSpec& spec, double t, double sigma,
                            double eps) {
  const double l = spec.lower(t), u = spec.upper(t);
  if (!(l < u)) throw InvalidBarrier("need L < U");
  if (outside(x_i, x_next, l, u)) return 1.0;
  const double rate = crossing_rate_double(x_i, x_next, l, u, sigma);
  const double w = sharp_correction_double(x_i, x_next, l, u, spec.lower_slope(t), spec.upper_slope(t), sigma);
  return std::clamp(std::exp(-rate / eps - w), 0.0, 1.0);
}

namespace {

struct PathOutcome {
  double terminal;
  bool alive_naive;
  bool alive_corrected;
};

PathOutcome simulate_path(const EulerModel& m, const BarrierSpec& spec, Rng& rng) {
  const double eps = m.eps();
  const double sq = std::sqrt(eps);
  double x = m.x0;
  bool naive = x > spec.lower(0.0) && x < spec.upper(0.0);
  bool corrected = naive;
  for (std::size_t i = 0; i < m.steps; ++i) {
    const double t = static_cast<double>(i) * eps;
    const double s = m.vol(x);
    const double next = x + m.drift(x) * eps + s * sq * rng.normal();
    const double u = rng.uniform();
    const double t_next = static_cast<double>(i + 1) * eps;
    if (naive && !(next > spec.lower(t_next) && next < spec.upper(t_next))) naive = false;
    if (corrected) {
      if (!naive || u < crossing_prob_double(x, next, spec, t, s, eps)) corrected = false;
    }
    x = next;
  }
  return {x, naive, corrected};
}

void check_model(const EulerModel& m, const BarrierSpec& spec) {
  if (m.steps < 2) throw DomainError("Euler scheme needs at least 2 steps");
  if (!(m.maturity > 0.0)) throw DomainError("maturity must be > 0");
  std::vector<double> times;
  for (std::size_t i = 0; i <= m.steps; ++i) times.push_back(static_cast<double>(i) * m.eps());
  spec.validate(times);
}

}  // namespace

EstimatorResult price_knockout(const EulerModel& model, const Payoff& payoff, const BarrierSpec& spec,
                               std::size_t replications, std::uint64_t seed, KnockoutMethod method) {
  const auto both = price_knockout_paired(model, payoff, spec, replications, seed);
  return method == KnockoutMethod::naive ? both[0] : both[1];
}

std::array<EstimatorResult, 2> price_knockout_paired(const EulerModel& model, const Payoff& payoff,
                                                     const BarrierSpec& spec, std::size_t replications,
                                                     std::uint64_t seed) {
  check_model(model, spec);
  const double disc = std::exp(-model.rate * model.maturity);
  return run_replications_multi<2>(
      [&](Rng& rng) {
        const PathOutcome o = simulate_path(model, spec, rng);
        const double g = disc * payoff(o.terminal);
        return std::array<double, 2>{o.alive_naive ? g : 0.0, o.alive_corrected ? g : 0.0};
      },
      replications, seed);
}

EstimatorResult price_vanilla(const EulerModel& model, const Payoff& payoff, std::size_t replications,
                              std::uint64_t seed) {
  const BarrierSpec spec = BarrierSpec::none();
  check_model(model, spec);
  const double disc = std::exp(-model.rate * model.maturity);
  return run_replications(
      [&](Rng& rng) { return disc * payoff(simulate_path(model, spec, rng).terminal); }, replications, seed);
}

}  // namespace rareflow
