#pragma once

#include <optional>
#include <variant>

#include "rareflow/rng.hpp"

namespace rareflow {

struct Bernoulli {
  double p;
  bool operator==(const Bernoulli&) const = default;
};

struct Poisson {
  double lambda;
  bool operator==(const Poisson&) const = default;
};

struct Normal {
  double mean;
  double variance;
  bool operator==(const Normal&) const = default;
};

struct Exponential {
  double rate;
  bool operator==(const Exponential&) const = default;
};

using BasicFamily = std::variant<Bernoulli, Poisson, Normal, Exponential>;

/// Net step of a risk reserve walk: Z = Y - premium * xi, with Y ~ claim and xi ~ Exp(intensity).
struct ClaimStep {
  BasicFamily claim;
  double premium;
  double intensity;
  bool operator==(const ClaimStep&) const = default;
};

using TiltableFamily = std::variant<Bernoulli, Poisson, Normal, Exponential, ClaimStep>;

/// Interval on which the c.g.f. is finite. Infinite endpoints are open.
struct Interval {
  double lo;
  double hi;
  bool lo_closed = false;
  bool hi_closed = false;

  bool contains(double t) const noexcept {
    return (lo_closed ? t >= lo : t > lo) && (hi_closed ? t <= hi : t < hi);
  }
};

struct LegendreResult {
  double x = 0.0;
  double theta_star = 0.0;
  std::optional<double> rate;  // empty means +infinity
  bool attained = false;

  bool infinite() const noexcept { return !rate.has_value(); }
};

/// Throws DomainError when the parameters do not describe a distribution.
void validate(const TiltableFamily& family);

TiltableFamily to_family(const BasicFamily& f);

Interval cgf_domain(const TiltableFamily& family);
double family_mean(const TiltableFamily& family);
double family_variance(const TiltableFamily& family);

double cgf_eval(const TiltableFamily& family, double theta);
double cgf_derivative(const TiltableFamily& family, double theta);
double cgf_second_derivative(const TiltableFamily& family, double theta);

TiltableFamily tilt(const TiltableFamily& family, double theta);
BasicFamily tilt(const BasicFamily& family, double theta);

double sample(const TiltableFamily& family, Rng& rng);
double sample(const BasicFamily& family, Rng& rng);

LegendreResult legendre(const TiltableFamily& family, double x);

/// Root of cgf_derivative(theta) = x. Closed form where available.
double saddle_theta(const TiltableFamily& family, double x);

/// Root of cgf_derivative(theta) = x by safeguarded Newton on an expanding bracket, for any
/// family. Used directly for ClaimStep and as a cross-check of the closed forms.
double saddle_theta_numeric(const TiltableFamily& family, double x);

}  // namespace rareflow
