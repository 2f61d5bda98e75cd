#include "rareflow/tilt.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "rareflow/error.hpp"
#include "rareflow/numeric.hpp"

namespace rareflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEdge = 1e-9;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_theta(const TiltableFamily& f, double theta) {
  if (!std::isfinite(theta) || !cgf_domain(f).contains(theta))
    throw DomainError("theta = " + std::to_string(theta) + " outside the c.g.f. domain");
}

// Basic-family helpers; the ClaimStep cases add the interarrival term on top.
double basic_cgf(const BasicFamily& f, double t) {
  return std::visit(overloaded{
                        [t](const Bernoulli& b) { return std::log1p(b.p * std::expm1(t)); },
                        [t](const Poisson& p) { return p.lambda * std::expm1(t); },
                        [t](const Normal& n) { return t * n.mean + 0.5 * t * t * n.variance; },
                        [t](const Exponential& e) { return -std::log1p(-t / e.rate); },
                    },
                    f);
}

double basic_cgf_d1(const BasicFamily& f, double t) {
  return std::visit(overloaded{
                        [t](const Bernoulli& b) { return b.p / (b.p + (1.0 - b.p) * std::exp(-t)); },
                        [t](const Poisson& p) { return p.lambda * std::exp(t); },
                        [t](const Normal& n) { return n.mean + t * n.variance; },
                        [t](const Exponential& e) { return 1.0 / (e.rate - t); },
                    },
                    f);
}

double basic_cgf_d2(const BasicFamily& f, double t) {
  return std::visit(overloaded{
                        [t](const Bernoulli& b) {
                          const double q = b.p / (b.p + (1.0 - b.p) * std::exp(-t));
                          return q * (1.0 - q);
                        },
                        [t](const Poisson& p) { return p.lambda * std::exp(t); },
                        [](const Normal& n) { return n.variance; },
                        [t](const Exponential& e) { return 1.0 / ((e.rate - t) * (e.rate - t)); },
                    },
                    f);
}

}  // namespace

TiltableFamily to_family(const BasicFamily& f) {
  return std::visit([](const auto& v) -> TiltableFamily { return v; }, f);
}

void validate(const TiltableFamily& family) {
  std::visit(overloaded{
                 [](const Bernoulli& b) {
                   if (!(b.p > 0.0 && b.p < 1.0)) throw DomainError("Bernoulli p must lie in (0,1)");
                 },
                 [](const Poisson& p) {
                   if (!(p.lambda > 0.0 && std::isfinite(p.lambda))) throw DomainError("Poisson rate must be > 0");
                 },
                 [](const Normal& n) {
                   if (!std::isfinite(n.mean) || !(n.variance > 0.0 && std::isfinite(n.variance)))
                     throw DomainError("Normal needs finite mean and variance > 0");
                 },
                 [](const Exponential& e) {
                   if (!(e.rate > 0.0 && std::isfinite(e.rate))) throw DomainError("Exponential rate must be > 0");
                 },
                 [](const ClaimStep& c) {
                   validate(to_family(c.claim));
                   if (!(c.premium > 0.0) || !(c.intensity > 0.0))
                     throw DomainError("ClaimStep needs premium > 0 and intensity > 0");
                 },
             },
             family);
}

Interval cgf_domain(const TiltableFamily& family) {
  return std::visit(overloaded{
                        [](const Exponential& e) { return Interval{-kInf, e.rate}; },
                        [](const ClaimStep& c) {
                          const double hi = std::holds_alternative<Exponential>(c.claim)
                                                ? std::get<Exponential>(c.claim).rate
                                                : kInf;
                          return Interval{-c.intensity / c.premium, hi};
                        },
                        [](const auto&) { return Interval{-kInf, kInf}; },
                    },
                    family);
}

double family_mean(const TiltableFamily& family) {
  return std::visit(overloaded{
                        [](const Bernoulli& b) { return b.p; },
                        [](const Poisson& p) { return p.lambda; },
                        [](const Normal& n) { return n.mean; },
                        [](const Exponential& e) { return 1.0 / e.rate; },
                        [](const ClaimStep& c) { return family_mean(to_family(c.claim)) - c.premium / c.intensity; },
                    },
                    family);
}

double family_variance(const TiltableFamily& family) {
  return std::visit(overloaded{
                        [](const Bernoulli& b) { return b.p * (1.0 - b.p); },
                        [](const Poisson& p) { return p.lambda; },
                        [](const Normal& n) { return n.variance; },
                        [](const Exponential& e) { return 1.0 / (e.rate * e.rate); },
                        [](const ClaimStep& c) {
                          const double s = c.premium / c.intensity;
                          return family_variance(to_family(c.claim)) + s * s;
                        },
                    },
                    family);
}

double cgf_eval(const TiltableFamily& family, double theta) {
  check_theta(family, theta);
  return std::visit(overloaded{
                        [theta](const ClaimStep& c) {
                          return basic_cgf(c.claim, theta) - std::log1p(c.premium * theta / c.intensity);
                        },
                        [theta](const auto& f) { return basic_cgf(BasicFamily{f}, theta); },
                    },
                    family);
}

double cgf_derivative(const TiltableFamily& family, double theta) {
  check_theta(family, theta);
  return std::visit(overloaded{
                        [theta](const ClaimStep& c) {
                          return basic_cgf_d1(c.claim, theta) - c.premium / (c.intensity + c.premium * theta);
                        },
                        [theta](const auto& f) { return basic_cgf_d1(BasicFamily{f}, theta); },
                    },
                    family);
}

double cgf_second_derivative(const TiltableFamily& family, double theta) {
  check_theta(family, theta);
  return std::visit(overloaded{
                        [theta](const ClaimStep& c) {
                          const double r = c.premium / (c.intensity + c.premium * theta);
                          return basic_cgf_d2(c.claim, theta) + r * r;
                        },
                        [theta](const auto& f) { return basic_cgf_d2(BasicFamily{f}, theta); },
                    },
                    family);
}

BasicFamily tilt(const BasicFamily& family, double theta) {
  check_theta(to_family(family), theta);
  return std::visit(overloaded{
                        [theta](const Bernoulli& b) -> BasicFamily {
                          return Bernoulli{b.p / (b.p + (1.0 - b.p) * std::exp(-theta))};
                        },
                        [theta](const Poisson& p) -> BasicFamily { return Poisson{p.lambda * std::exp(theta)}; },
                        [theta](const Normal& n) -> BasicFamily {
                          return Normal{n.mean + theta * n.variance, n.variance};
                        },
                        [theta](const Exponential& e) -> BasicFamily { return Exponential{e.rate - theta}; },
                    },
                    family);
}

TiltableFamily tilt(const TiltableFamily& family, double theta) {
  check_theta(family, theta);
  return std::visit(overloaded{
                        [theta](const ClaimStep& c) -> TiltableFamily {
                          return ClaimStep{tilt(c.claim, theta), c.premium, c.intensity + c.premium * theta};
                        },
                        [theta](const auto& f) -> TiltableFamily { return to_family(tilt(BasicFamily{f}, theta)); },
                    },
                    family);
}

double sample(const BasicFamily& family, Rng& rng) {
  return std::visit(overloaded{
                        [&rng](const Bernoulli& b) { return rng.uniform() < b.p ? 1.0 : 0.0; },
                        [&rng](const Poisson& p) { return static_cast<double>(rng.poisson(p.lambda)); },
                        [&rng](const Normal& n) { return n.mean + std::sqrt(n.variance) * rng.normal(); },
                        [&rng](const Exponential& e) { return rng.exponential(e.rate); },
                    },
                    family);
}

double sample(const TiltableFamily& family, Rng& rng) {
  return std::visit(overloaded{
                        [&rng](const ClaimStep& c) {
                          const double y = sample(c.claim, rng);
                          return y - c.premium * rng.exponential(c.intensity);
                        },
                        [&rng](const auto& f) { return sample(BasicFamily{f}, rng); },
                    },
                    family);
}

double saddle_theta_numeric(const TiltableFamily& family, double x) {
  const Interval dom = cgf_domain(family);
  const double m = family_mean(family);
  if (x == m) return 0.0;
  auto g = [&](double t) { return cgf_derivative(family, t) - x; };
  auto dg = [&](double t) { return cgf_second_derivative(family, t); };
  const double dir = x > m ? 1.0 : -1.0;
  const double edge = dir > 0 ? dom.hi : dom.lo;
  const double limit = std::isfinite(edge) ? edge - dir * kEdge * std::max(1.0, std::abs(edge)) : dir * 1e6;
  double step = 1.0;
  double inner = 0.0, outer = dir * step;
  for (;;) {
    if (dir * outer >= dir * limit) outer = limit;
    if (dir * g(outer) > 0.0) break;
    if (outer == limit) throw NotAttained("saddle point not attained for x = " + std::to_string(x));
    inner = outer;
    step *= 2.0;
    outer = dir * step;
  }
  const double lo = std::min(inner, outer), hi = std::max(inner, outer);
  return numeric::newton_bisect(g, dg, lo, hi, 1e-12);
}

double saddle_theta(const TiltableFamily& family, double x) {
  validate(family);
  auto not_attained = [x]() { return NotAttained("no interior saddle point for x = " + std::to_string(x)); };
  return std::visit(overloaded{
                        [&](const Bernoulli& b) {
                          if (!(x > 0.0 && x < 1.0)) throw not_attained();
                          return std::log(x * (1.0 - b.p) / ((1.0 - x) * b.p));
                        },
                        [&](const Poisson& p) {
                          if (!(x > 0.0)) throw not_attained();
                          return std::log(x / p.lambda);
                        },
                        [&](const Normal& n) { return (x - n.mean) / n.variance; },
                        [&](const Exponential& e) {
                          if (!(x > 0.0)) throw not_attained();
                          return e.rate - 1.0 / x;
                        },
                        [&](const ClaimStep& c) {
                          if (std::holds_alternative<Bernoulli>(c.claim) && x >= 1.0) throw not_attained();
                          return saddle_theta_numeric(family, x);
                        },
                    },
                    family);
}

LegendreResult legendre(const TiltableFamily& family, double x) {
  validate(family);
  LegendreResult r;
  r.x = x;
  std::visit(overloaded{
                 [&](const Bernoulli& b) {
                   const double p = b.p;
                   if (x < 0.0 || x > 1.0) return;
                   if (x == 0.0) {
                     r.theta_star = -kInf;
                     r.rate = -std::log1p(-p);
                   } else if (x == 1.0) {
                     r.theta_star = kInf;
                     r.rate = -std::log(p);
                   } else if (x == p) {
                     r.rate = 0.0;
                     r.attained = true;
                   } else {
                     r.theta_star = std::log(x * (1.0 - p) / ((1.0 - x) * p));
                     r.rate = x * std::log(x / p) + (1.0 - x) * std::log((1.0 - x) / (1.0 - p));
                     r.attained = true;
                   }
                 },
                 [&](const Poisson& p) {
                   if (x < 0.0) return;
                   if (x == 0.0) {
                     r.theta_star = -kInf;
                     r.rate = p.lambda;
                   } else {
                     r.theta_star = std::log(x / p.lambda);
                     r.rate = x == p.lambda ? 0.0 : x * std::log(x / p.lambda) + p.lambda - x;
                     r.attained = true;
                   }
                 },
                 [&](const Normal& n) {
                   const double d = x - n.mean;
                   r.theta_star = d / n.variance;
                   r.rate = d * d / (2.0 * n.variance);
                   r.attained = true;
                 },
                 [&](const Exponential& e) {
                   if (x <= 0.0) return;
                   const double lx = e.rate * x;
                   r.theta_star = e.rate - 1.0 / x;
                   r.rate = lx == 1.0 ? 0.0 : lx - 1.0 - std::log(lx);
                   r.attained = true;
                 },
                 [&](const ClaimStep& c) {
                   if (std::holds_alternative<Bernoulli>(c.claim) && x >= 1.0) return;
                   const double t = saddle_theta_numeric(family, x);
                   r.theta_star = t;
                   r.rate = t == 0.0 ? 0.0 : std::max(0.0, t * x - cgf_eval(family, t));
                   r.attained = true;
                 },
             },
             family);
  return r;
}

}  // namespace rareflow
