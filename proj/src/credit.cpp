#include "rareflow/credit.hpp"

#include <cmath>
#include <string>

#include "rareflow/error.hpp"
#include "rareflow/numeric.hpp"

namespace rareflow {

namespace {

using numeric::normal_cdf;
using numeric::normal_pdf;
using numeric::normal_quantile;
using numeric::normal_sf;

struct CondProb {
  double p;   // p(z)
  double pc;  // 1 - p(z)
  double arg;
};

CondProb cond(const PortfolioModel& m, double z) {
  const double arg = (m.rho * z + normal_quantile(m.p)) / std::sqrt(1.0 - m.rho * m.rho);
  return {normal_cdf(arg), normal_sf(arg), arg};
}

// Bin(n, p) using the better-conditioned side when p is close to 1.
std::uint64_t draw_binomial(Rng& rng, std::uint64_t n, double p, double pc) {
  return p > 0.5 ? n - rng.binomial(n, pc) : rng.binomial(n, p);
}

}  // namespace

double PortfolioModel::q(std::size_t n) const { return 1.0 - q_tail(n); }

double PortfolioModel::q_tail(std::size_t n) const {
  if (const auto* f = std::get_if<FixedThreshold>(&threshold)) return 1.0 - f->q;
  const auto& s = std::get<ThresholdSchedule>(threshold);
  return s.c * std::pow(static_cast<double>(n), -s.a);
}

void PortfolioModel::validate(std::size_t n) const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("default probability p must lie in (0,1)");
  if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("factor loading rho must lie in [0,1)");
  if (const auto* s = std::get_if<ThresholdSchedule>(&threshold)) {
    if (!(s->c > 0.0)) throw DomainError("schedule constant c must be > 0");
    if (!(s->a > 0.0 && s->a <= 1.0)) throw DomainError("schedule exponent a must lie in (0,1]");
  }
  const double qt = q_tail(n);
  if (!(qt > 0.0 && qt < 1.0)) throw DomainError("threshold q must lie in (0,1)");
  if (!(1.0 - qt > p)) throw RegimeError("threshold q must exceed p (n = " + std::to_string(n) + ")");
}

double conditional_default_prob(const PortfolioModel& model, double z) { return cond(model, z).p; }

double independent_decay(double p, double q) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("p must lie in (0,1)");
  if (!(q > p)) throw RegimeError("independent decay needs q > p");
  if (q > 1.0) throw DomainError("q must be <= 1");
  if (q == 1.0) return -std::log(p);
  return q * std::log(q / p) + (1.0 - q) * std::log((1.0 - q) / (1.0 - p));
}

double dependent_decay(double a, double rho) {
  if (rho == 0.0) throw RegimeError("rho = 0 is the independent regime; use independent_decay");
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("rho must lie in (0,1)");
  if (!(a > 0.0 && a <= 1.0)) throw DomainError("a must lie in (0,1]");
  return a * (1.0 - rho * rho) / (rho * rho);
}

double factor_threshold(const PortfolioModel& model, std::size_t n) {
  model.validate(n);
  if (model.rho == 0.0) throw RegimeError("factor threshold undefined for rho = 0");
  const double qz = numeric::normal_upper_quantile(model.q_tail(n));
  return (std::sqrt(1.0 - model.rho * model.rho) * qz - normal_quantile(model.p)) / model.rho;
}

double conditional_twist(const PortfolioModel& model, double z, double q) {
  const CondProb c = cond(model, z);
  if (!(q > c.p)) return 0.0;
  return std::log(q) - std::log(c.p) + std::log(c.pc) - std::log1p(-q);
}

double loss_exponent(const PortfolioModel& model, std::size_t n, double z) {
  const double qt = model.q_tail(n), q = 1.0 - qt;
  const CondProb c = cond(model, z);
  if (!(c.p < q)) return 0.0;
  const double h = q * (std::log(q) - std::log(c.p)) + qt * (std::log(qt) - std::log(c.pc));
  return -static_cast<double>(n) * std::max(h, 0.0);
}

double loss_exponent_derivative(const PortfolioModel& model, std::size_t n, double z) {
  const double qt = model.q_tail(n), q = 1.0 - qt;
  const CondProb c = cond(model, z);
  if (!(c.p < q)) return 0.0;
  const double s = std::sqrt(1.0 - model.rho * model.rho);
  return static_cast<double>(n) * (q / c.p - qt / c.pc) * normal_pdf(c.arg) * model.rho / s;
}

double factor_shift(const PortfolioModel& model, std::size_t n) {
  const double zn = factor_threshold(model, n);
  if (zn <= 0.0) return 0.0;
  auto g = [&](double mu) { return loss_exponent_derivative(model, n, mu) - mu; };
  if (!(g(0.0) > 0.0)) return 0.0;
  if (!(g(zn) < 0.0)) throw NoRoot("F_n' - id has no sign change on [0, z_n]");
  return numeric::bisect(g, 0.0, zn, 1e-15);
}

double resolve_shift(const PortfolioModel& model, std::size_t n, const FactorShift& shift) {
  switch (shift.kind) {
    case FactorShift::Kind::mu_n: return model.rho == 0.0 ? 0.0 : factor_shift(model, n);
    case FactorShift::Kind::z_n: return model.rho == 0.0 ? 0.0 : factor_threshold(model, n);
    case FactorShift::Kind::custom: return shift.value;
  }
  return 0.0;
}

namespace {

EstimatorResult two_step_stream(const PortfolioModel& model, std::size_t n, std::size_t replications,
                                std::uint64_t seed, std::uint32_t stream, const FactorShift& shift) {
  model.validate(n);
  const double mu = resolve_shift(model, n, shift);
  if (!std::isfinite(mu)) throw NonFiniteInput("factor shift must be finite");
  const double qt = model.q_tail(n), q = 1.0 - qt;
  const double nd = static_cast<double>(n);
  const double level = nd - nd * qt;  // n q_n
  const double log_q = std::log(q), log_qt = std::log(qt);
  return run_replications(
      [&](Rng& rng) {
        const double z = mu + rng.normal();
        const double factor_weight = std::exp(-mu * z + 0.5 * mu * mu);
        const CondProb c = cond(model, z);
        if (c.p < q) {
          // Twisted defaults have probability exactly q; the conditional weight is
          // exp(-theta L + n Gamma(theta, z)) with n Gamma = n ln((1 - p(z)) / (1 - q)).
          const double theta = log_q - std::log(c.p) + std::log(c.pc) - log_qt;
          const double l = static_cast<double>(draw_binomial(rng, n, q, qt));
          if (l < level) return 0.0;
          return factor_weight * std::exp(-theta * l + nd * (std::log(c.pc) - log_qt));
        }
        const double l = static_cast<double>(draw_binomial(rng, n, c.p, c.pc));
        return l >= level ? factor_weight : 0.0;
      },
      replications, seed, stream);
}

}  // namespace

EstimatorResult two_step_is(const PortfolioModel& model, std::size_t n, std::size_t replications,
                            std::uint64_t seed, const FactorShift& shift) {
  return two_step_stream(model, n, replications, seed, 0, shift);
}

EstimatorResult plain_loss_mc(const PortfolioModel& model, std::size_t n, std::size_t replications,
                              std::uint64_t seed) {
  model.validate(n);
  const double nd = static_cast<double>(n);
  const double level = nd - nd * model.q_tail(n);
  return run_replications(
      [&](Rng& rng) {
        const CondProb c = cond(model, rng.normal());
        return static_cast<double>(draw_binomial(rng, n, c.p, c.pc)) >= level ? 1.0 : 0.0;
      },
      replications, seed);
}

LossDecay measure_loss_decay(const PortfolioModel& model, const std::vector<std::size_t>& ladder,
                             std::size_t replications, std::uint64_t seed) {
  LossDecay out;
  std::vector<double> log_n;
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    out.n.push_back(static_cast<double>(ladder[i]));
    log_n.push_back(std::log(static_cast<double>(ladder[i])));
    out.results.push_back(
        two_step_stream(model, ladder[i], replications, seed, static_cast<std::uint32_t>(i), FactorShift{}));
  }
  out.fit = fit_decay(log_n, out.results);
  return out;
}

}  // namespace rareflow
