#include <doctest.h>

#include <cmath>
#include <vector>

#include "rareflow/error.hpp"
#include "rareflow/mc.hpp"
#include "rareflow/oracles.hpp"
#include "rareflow/tilt.hpp"

using namespace rareflow;

namespace {

std::vector<TiltableFamily> catalog() {
  return {Bernoulli{0.3},
          Poisson{2.0},
          Normal{0.5, 4.0},
          Exponential{1.5},
          ClaimStep{Exponential{1.0}, 2.0, 1.0},
          ClaimStep{Bernoulli{0.4}, 1.0, 2.0},
          ClaimStep{Poisson{0.5}, 1.5, 2.0}};
}

// Interior points of the c.g.f. domain, kept away from the edges.
std::vector<double> interior_grid(const TiltableFamily& f) {
  const Interval d = cgf_domain(f);
  const double lo = std::isfinite(d.lo) ? d.lo + 0.05 * std::min(1.0, -d.lo) : -2.0;
  const double hi = std::isfinite(d.hi) ? d.hi - 0.05 * std::min(1.0, d.hi) : 2.0;
  std::vector<double> g;
  for (int i = 0; i <= 40; ++i) g.push_back(lo + (hi - lo) * i / 40.0);
  return g;
}

double fd_derivative(const TiltableFamily& f, double t, double h = 1e-5) {
  return (cgf_eval(f, t + h) - cgf_eval(f, t - h)) / (2 * h);
}

}  // namespace

TEST_SUITE("tilt") {
  TEST_CASE("cgf examples") {
    CHECK(cgf_eval(Poisson{1.0}, 0.0) == 0.0);
    CHECK(cgf_eval(Normal{0.0, 4.0}, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(cgf_eval(Exponential{2.0}, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    const double mgf = oracle::integrate([](double x) { return std::exp(x) * 2.0 * std::exp(-2.0 * x); }, 0.0, 80.0);
    CHECK(cgf_eval(Exponential{2.0}, 1.0) == doctest::Approx(std::log(mgf)).epsilon(1e-12));
    CHECK(cgf_eval(Bernoulli{0.3}, 0.7) == doctest::Approx(std::log(0.7 + 0.3 * std::exp(0.7))).epsilon(1e-15));
    const ClaimStep cs{Exponential{1.0}, 2.0, 1.0};
    CHECK(cgf_eval(cs, 0.4) == doctest::Approx(std::log(1.0 / 0.6) + std::log(1.0 / 1.8)).epsilon(1e-14));
  }

  TEST_CASE("domains and domain errors") {
    const Interval e = cgf_domain(Exponential{2.0});
    CHECK(e.hi == 2.0);
    CHECK_FALSE(e.contains(2.0));
    const Interval c = cgf_domain(ClaimStep{Exponential{1.0}, 2.0, 1.0});
    CHECK(c.lo == doctest::Approx(-0.5));
    CHECK(c.hi == 1.0);
    CHECK_THROWS_AS(cgf_eval(Exponential{2.0}, 2.0), DomainError);
    CHECK_THROWS_AS(cgf_eval(ClaimStep{Exponential{1.0}, 2.0, 1.0}, -0.6), DomainError);
    CHECK_THROWS_AS(tilt(TiltableFamily{Exponential{3.0}}, 3.5), DomainError);
    CHECK_THROWS_AS(validate(Bernoulli{1.5}), DomainError);
    CHECK_THROWS_AS(validate(Poisson{0.0}), DomainError);
    CHECK_THROWS_AS(validate(Normal{0.0, -1.0}), DomainError);
    CHECK_THROWS_AS(validate(Exponential{-1.0}), DomainError);
  }

  TEST_CASE("tilt closed forms") {
    CHECK(std::get<Poisson>(tilt(TiltableFamily{Poisson{2.0}}, std::log(3.0))).lambda ==
          doctest::Approx(6.0).epsilon(1e-15));
    CHECK(std::get<Exponential>(tilt(TiltableFamily{Exponential{3.0}}, 1.0)).rate == 2.0);
    const double p = 0.25, t = 0.8;
    CHECK(std::get<Bernoulli>(tilt(TiltableFamily{Bernoulli{p}}, t)).p ==
          doctest::Approx(p * std::exp(t) / (1 - p + p * std::exp(t))).epsilon(1e-15));
    const Normal n = std::get<Normal>(tilt(TiltableFamily{Normal{0.0, 2.0}}, 0.5));
    CHECK(n.mean == 1.0);
    CHECK(n.variance == 2.0);
    const ClaimStep cs = std::get<ClaimStep>(tilt(TiltableFamily{ClaimStep{Exponential{1.0}, 2.0, 1.0}}, 0.3));
    CHECK(std::get<Exponential>(cs.claim).rate == doctest::Approx(0.7));
    CHECK(cs.intensity == doctest::Approx(1.6));
    for (const auto& f : catalog()) CHECK(tilt(f, 0.0) == f);
  }

  TEST_CASE("cgf invariants") {
    for (const auto& f : catalog()) {
      CAPTURE(f.index());
      CHECK(cgf_eval(f, 0.0) == doctest::Approx(0.0).epsilon(1e-15));
      CHECK(fd_derivative(f, 0.0) == doctest::Approx(family_mean(f)).epsilon(1e-8));
      for (double t : interior_grid(f)) {
        const double h = 1e-4;
        const double second = (cgf_eval(f, t + h) - 2 * cgf_eval(f, t) + cgf_eval(f, t - h)) / (h * h);
        CHECK(second >= -1e-6);
        CHECK(cgf_derivative(f, t) == doctest::Approx(fd_derivative(f, t)).epsilon(1e-7));
        CHECK(cgf_second_derivative(f, t) == doctest::Approx(second).epsilon(1e-4));
      }
    }
  }

  TEST_CASE("tilted mean equals the cgf derivative") {
    for (const auto& f : catalog()) {
      for (double t : {-0.3, 0.2, 0.4}) {
        if (!cgf_domain(f).contains(t)) continue;
        CAPTURE(f.index());
        CAPTURE(t);
        const TiltableFamily g = tilt(f, t);
        CHECK(family_mean(g) == doctest::Approx(cgf_derivative(f, t)).epsilon(1e-12));
        const auto r = run_replications([&](Rng& rng) { return sample(g, rng); }, 100000, 31);
        CHECK(std::abs(r.mean - fd_derivative(f, t)) <= 4.0 * r.std_error);
      }
    }
  }

  TEST_CASE("legendre examples") {
    CHECK(*legendre(Normal{0.0, 1.0}, 1.0).rate == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(*legendre(Bernoulli{0.3}, 0.3).rate == 0.0);
    const double poisson = *legendre(Poisson{1.0}, 2.0).rate;
    CHECK(poisson == doctest::Approx(2 * std::log(2.0) - 1).epsilon(1e-14));
    const double grid = oracle::legendre_grid([](double t) { return std::exp(t) - 1.0; }, 2.0, -5.0, 5.0);
    CHECK(poisson == doctest::Approx(grid).epsilon(1e-10));
    const double b = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
    CHECK(*legendre(Bernoulli{0.25}, 0.5).rate == doctest::Approx(b).epsilon(1e-14));
  }

  TEST_CASE("legendre boundary encoding") {
    CHECK(legendre(Bernoulli{0.3}, 1.2).infinite());
    CHECK(legendre(Bernoulli{0.3}, -0.1).infinite());
    const auto at_one = legendre(Bernoulli{0.3}, 1.0);
    REQUIRE_FALSE(at_one.infinite());
    CHECK(*at_one.rate == doctest::Approx(-std::log(0.3)));
    CHECK_FALSE(at_one.attained);
    CHECK(*legendre(Poisson{1.5}, 0.0).rate == doctest::Approx(1.5));
    CHECK(legendre(Poisson{1.5}, -0.1).infinite());
    CHECK(legendre(Exponential{1.0}, 0.0).infinite());
    CHECK(legendre(Normal{0.0, 1.0}, 3.0).attained);
  }

  TEST_CASE("legendre of the claim step agrees with a grid supremum") {
    const ClaimStep cs{Exponential{1.0}, 2.0, 1.0};
    for (double x : {-1.0, 0.0, 0.5, 2.0}) {
      const auto r = legendre(cs, x);
      REQUIRE(r.rate);
      const double grid =
          oracle::legendre_grid([&](double t) { return cgf_eval(cs, t); }, x, -0.5 + 1e-9, 1.0 - 1e-9, 200001);
      CHECK(*r.rate == doctest::Approx(grid).epsilon(1e-7));
    }
  }

  TEST_CASE("legendre invariants") {
    for (const auto& f : catalog()) {
      CAPTURE(f.index());
      const double m = family_mean(f);
      const auto at_mean = legendre(f, m);
      REQUIRE(at_mean.rate);
      CHECK(*at_mean.rate <= 1e-12);
      CHECK(*at_mean.rate >= 0.0);
      double prev = 0.0;
      const double sd = std::sqrt(family_variance(f));
      for (int i = 1; i <= 20; ++i) {
        const double x = m + 0.1 * i * sd;
        const auto r = legendre(f, x);
        if (r.infinite()) break;
        CHECK(*r.rate >= prev - 1e-12);
        prev = *r.rate;
      }
    }
  }

  TEST_CASE("legendre duality") {
    struct Case {
      TiltableFamily f;
      double xlo, xhi;
      std::vector<double> thetas;
    };
    const std::vector<Case> cases = {
        {Normal{0.0, 1.0}, -8.0, 8.0, {-1.0, -0.3, 0.5, 1.2}},
        {Bernoulli{0.3}, 0.0, 1.0, {-1.0, 0.4, 1.5}},
        {Poisson{1.0}, 0.0, 40.0, {-1.0, 0.3, 1.0}},
        {Exponential{2.0}, 1e-9, 40.0, {-1.0, 0.5, 1.0}},
    };
    for (const auto& c : cases) {
      for (double t : c.thetas) {
        CAPTURE(c.f.index());
        CAPTURE(t);
        const double bi = oracle::legendre_grid(
            [&](double x) {
              const auto r = legendre(c.f, x);
              return r.rate ? *r.rate : 1e300;
            },
            t, c.xlo, c.xhi, 40001);
        CHECK(bi == doctest::Approx(cgf_eval(c.f, t)).epsilon(1e-6));
      }
    }
  }

  TEST_CASE("saddle point") {
    CHECK(saddle_theta(Normal{0.0, 4.0}, 2.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(saddle_theta(Bernoulli{0.25}, 0.5) == doctest::Approx(std::log(3.0)).epsilon(1e-14));
    CHECK(saddle_theta(Poisson{1.0}, 2.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    CHECK(saddle_theta_numeric(Poisson{1.0}, 2.0) == doctest::Approx(std::log(2.0)).epsilon(1e-11));
    CHECK_THROWS_AS(saddle_theta(Bernoulli{0.25}, 1.0), NotAttained);
    CHECK_THROWS_AS(saddle_theta(Exponential{1.0}, 0.0), NotAttained);
    for (const auto& f : catalog()) {
      const double m = family_mean(f);
      const double sd = std::sqrt(family_variance(f));
      for (double k : {-0.5, 0.3, 1.0}) {
        const double x = m + k * sd;
        double t = 0.0;
        try {
          t = saddle_theta(f, x);
        } catch (const NotAttained&) {
          continue;
        }
        CAPTURE(f.index());
        CAPTURE(x);
        CHECK(std::abs(cgf_derivative(f, t) - x) <= 1e-10 * std::max(1.0, std::abs(x)));
        CHECK(family_mean(tilt(f, t)) == doctest::Approx(x).epsilon(1e-10));
        CHECK(saddle_theta_numeric(f, x) == doctest::Approx(t).epsilon(1e-9));
      }
    }
  }
}
