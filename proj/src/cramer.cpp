#include "rareflow/cramer.hpp"

#include <cmath>
#include <variant>

#include "rareflow/error.hpp"

namespace rareflow {

namespace {

bool is_lattice(const TiltableFamily& f) {
  return std::holds_alternative<Bernoulli>(f) || std::holds_alternative<Poisson>(f);
}

// For lattice families S_n is an exact integer, so the event S_n >= n x becomes S_n >= k with k
// the smallest integer not below n x. Products like 10 * 0.3 that land a rounding error away from
// an integer are snapped to it.
double event_threshold(const EmpiricalMeanProblem& p) {
  const double t = static_cast<double>(p.n) * p.x;
  if (!is_lattice(p.family)) return t;
  const double r = std::round(t);
  if (std::abs(t - r) <= 1e-9 * std::max(1.0, std::abs(t))) return r;
  return std::ceil(t);
}

double draw_sum(const TiltableFamily& f, std::size_t n, Rng& rng) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += sample(f, rng);
  return s;
}

void check_problem(const EmpiricalMeanProblem& p) {
  validate(p.family);
  if (p.n < 1) throw DomainError("empirical mean needs n >= 1");
  if (!std::isfinite(p.x)) throw NonFiniteInput("threshold x must be finite");
}

EstimatorResult is_tail_stream(const EmpiricalMeanProblem& problem, double theta, std::size_t replications,
                               std::uint64_t seed, std::uint32_t stream) {
  check_problem(problem);
  if (theta < 0.0) throw DomainError("is_tail needs theta >= 0");
  const TiltableFamily tilted = tilt(problem.family, theta);
  const double k = event_threshold(problem);
  const double log_norm = static_cast<double>(problem.n) * cgf_eval(problem.family, theta);
  return run_replications(
      [&](Rng& rng) {
        const double s = draw_sum(tilted, problem.n, rng);
        return s >= k ? std::exp(-theta * s + log_norm) : 0.0;
      },
      replications, seed, stream);
}

}  // namespace

EstimatorResult naive_tail(const EmpiricalMeanProblem& problem, std::size_t replications, std::uint64_t seed) {
  check_problem(problem);
  const double k = event_threshold(problem);
  return run_replications(
      [&](Rng& rng) { return draw_sum(problem.family, problem.n, rng) >= k ? 1.0 : 0.0; }, replications, seed);
}

double is_sample_bound(const EmpiricalMeanProblem& problem, double theta) {
  const double n = static_cast<double>(problem.n);
  return std::exp(-n * (theta * problem.x - cgf_eval(problem.family, theta)));
}

double is_sample_value(const EmpiricalMeanProblem& problem, double theta, double sum) {
  if (sum < event_threshold(problem)) return 0.0;
  const double n = static_cast<double>(problem.n);
  return std::exp(-theta * sum + n * cgf_eval(problem.family, theta));
}

EstimatorResult is_tail(const EmpiricalMeanProblem& problem, double theta, std::size_t replications,
                        std::uint64_t seed) {
  return is_tail_stream(problem, theta, replications, seed, 0);
}

RateLadder run_rate_ladder(const TiltableFamily& family, double x, const std::vector<std::size_t>& ladder,
                           std::size_t replications, std::uint64_t seed, std::optional<double> theta) {
  const double t = theta ? *theta : (x == family_mean(family) ? 0.0 : saddle_theta(family, x));
  RateLadder out;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    out.scales.push_back(static_cast<double>(ladder[i]));
    out.results.push_back(
        is_tail_stream({family, ladder[i], x}, t, replications, seed, static_cast<std::uint32_t>(i)));
  }
  out.prob_fit = fit_decay(out.scales, out.results);
  out.second_moment_fit = fit_decay(out.scales, out.results, true);
  return out;
}

DecayFit verify_rate(const TiltableFamily& family, double x, const std::vector<std::size_t>& ladder,
                     std::size_t replications, std::uint64_t seed) {
  return run_rate_ladder(family, x, ladder, replications, seed).prob_fit;
}

}  // namespace rareflow
