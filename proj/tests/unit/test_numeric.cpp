#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "rareflow/numeric.hpp"

using namespace rareflow::numeric;

TEST_SUITE("numeric") {
  TEST_CASE("normal quantile inverts the cdf in both tails") {
    for (double p : {1e-300, 1e-100, 1e-20, 1e-8, 0.01, 0.3, 0.5, 0.7, 0.99, 1 - 1e-10}) {
      CAPTURE(p);
      const double x = normal_quantile(p);
      CHECK(normal_cdf(x) == doctest::Approx(p).epsilon(1e-12));
    }
    CHECK(normal_quantile(0.01) == doctest::Approx(-2.3263478740408408).epsilon(1e-14));
    CHECK(normal_upper_quantile(1e-30) == doctest::Approx(-normal_quantile(1e-30)));
    CHECK(normal_sf(5.0) == doctest::Approx(2.8665157187919391e-07).epsilon(1e-13));
  }

  TEST_CASE("root finders") {
    auto f = [](double x) { return x * x * x - 2.0; };
    CHECK(bisect(f, 0.0, 2.0) == doctest::Approx(std::cbrt(2.0)).epsilon(1e-14));
    CHECK(newton_bisect(f, [](double x) { return 3 * x * x; }, 0.0, 2.0, 1e-14) ==
          doctest::Approx(std::cbrt(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(newton_bisect(f, [](double x) { return 3 * x * x; }, 2.0, 3.0, 1e-14), std::invalid_argument);
  }

  TEST_CASE("golden section") {
    CHECK(golden_section_max([](double x) { return -(x - 0.3) * (x - 0.3); }, -1.0, 2.0) ==
          doctest::Approx(0.3).epsilon(1e-9));
  }
}
