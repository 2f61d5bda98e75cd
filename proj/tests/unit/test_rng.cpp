#include <doctest.h>

#include <cmath>
#include <set>

#include "rareflow/mc.hpp"
#include "rareflow/rng.hpp"

using namespace rareflow;

TEST_SUITE("rng") {
  // Known-answer vectors published with the Random123 reference implementation.
  TEST_CASE("philox known answers") {
    CHECK(Philox4x32::encrypt({0, 0, 0, 0}, {0, 0}) ==
          Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(Philox4x32::encrypt({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(Philox4x32::encrypt({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
  }

  TEST_CASE("streams are addressable and distinct") {
    Rng a(7, 1, 2), b(7, 1, 2), c(7, 1, 3), d(7, 2, 2), e(8, 1, 2);
    for (int i = 0; i < 100; ++i) {
      const auto x = a();
      CHECK(x == b());
      (void)c();
      (void)d();
      (void)e();
    }
    Rng a2(7, 1, 2), c2(7, 1, 3), d2(7, 2, 2), e2(8, 1, 2);
    const auto x = a2.next_u64();
    CHECK(x != c2.next_u64());
    CHECK(x != d2.next_u64());
    CHECK(x != e2.next_u64());
  }

  TEST_CASE("uniform stays in the open interval") {
    Rng r(1, 0, 0);
    double lo = 1.0, hi = 0.0, sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double u = r.uniform();
      lo = std::min(lo, u);
      hi = std::max(hi, u);
      sum += u;
    }
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
    CHECK(std::abs(sum / n - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  }

  TEST_CASE("sampler moments") {
    struct Case {
      const char* name;
      double mean, var;
      std::function<double(Rng&)> draw;
    };
    const Case cases[] = {
        {"normal", 0.0, 1.0, [](Rng& r) { return r.normal(); }},
        {"exponential", 0.5, 0.25, [](Rng& r) { return r.exponential(2.0); }},
        {"poisson small", 3.5, 3.5, [](Rng& r) { return static_cast<double>(r.poisson(3.5)); }},
        {"poisson large", 2500.0, 2500.0, [](Rng& r) { return static_cast<double>(r.poisson(2500.0)); }},
        {"binomial", 3.0, 2.1, [](Rng& r) { return static_cast<double>(r.binomial(10, 0.3)); }},
        {"binomial large", 9000.0, 900.0, [](Rng& r) { return static_cast<double>(r.binomial(10000, 0.9)); }},
    };
    for (const auto& c : cases) {
      CAPTURE(c.name);
      const auto res = run_replications(c.draw, 200000, 11);
      CHECK(std::abs(res.mean - c.mean) < 4.0 * std::sqrt(c.var / 200000.0));
      CHECK(res.variance == doctest::Approx(c.var).epsilon(0.02));
    }
  }

  TEST_CASE("poisson and binomial edge cases") {
    Rng r(3, 0, 0);
    CHECK(r.poisson(0.0) == 0);
    CHECK(r.binomial(0, 0.4) == 0);
    CHECK(r.binomial(17, 0.0) == 0);
    CHECK(r.binomial(17, 1.0) == 17);
  }
}
