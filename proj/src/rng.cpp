#include "rareflow/rng.hpp"

#include <algorithm>
#include <cmath>

namespace rareflow {

double Rng::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double a = 2.0 * M_PI * uniform();
  spare_normal_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

double Rng::exponential(double rate) noexcept { return -std::log(uniform()) / rate; }

// Chop-down inversion starting at the mode and alternating outward: the support is visited in
// the order m, m+1, m-1, m+2, ... so the expected work is O(standard deviation).
std::uint64_t Rng::poisson(double mean) noexcept {
  if (mean <= 0.0) return 0;
  const double m = std::floor(mean);
  const double fm = std::exp(m * std::log(mean) - mean - std::lgamma(m + 1.0));
  double u = uniform() - fm;
  if (u <= 0.0) return static_cast<std::uint64_t>(m);
  double up = fm, down = fm;
  double k_up = m, k_down = m;
  for (;;) {
    bool moved = false;
    if (up > 0.0) {
      up *= mean / (k_up + 1.0);
      k_up += 1.0;
      u -= up;
      if (u <= 0.0) return static_cast<std::uint64_t>(k_up);
      moved = true;
    }
    if (k_down > 0.0 && down > 0.0) {
      down *= k_down / mean;
      k_down -= 1.0;
      u -= down;
      if (u <= 0.0) return static_cast<std::uint64_t>(k_down);
      moved = true;
    }
    if (!moved) return static_cast<std::uint64_t>(m);
  }
}

std::uint64_t Rng::binomial(std::uint64_t n, double p) noexcept {
  if (n == 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  const double nd = static_cast<double>(n);
  const double q = 1.0 - p;
  const double m = std::min(nd, std::floor((nd + 1.0) * p));
  const double fm = std::exp(std::lgamma(nd + 1.0) - std::lgamma(m + 1.0) - std::lgamma(nd - m + 1.0) +
                             m * std::log(p) + (nd - m) * std::log1p(-p));
  const double ratio = p / q;
  double u = uniform() - fm;
  if (u <= 0.0) return static_cast<std::uint64_t>(m);
  double up = fm, down = fm;
  double k_up = m, k_down = m;
  for (;;) {
    bool moved = false;
    if (k_up < nd && up > 0.0) {
      up *= (nd - k_up) / (k_up + 1.0) * ratio;
      k_up += 1.0;
      u -= up;
      if (u <= 0.0) return static_cast<std::uint64_t>(k_up);
      moved = true;
    }
    if (k_down > 0.0 && down > 0.0) {
      down *= k_down / (nd - k_down + 1.0) / ratio;
      k_down -= 1.0;
      u -= down;
      if (u <= 0.0) return static_cast<std::uint64_t>(k_down);
      moved = true;
    }
    // Rounding left a sliver of mass unassigned; it belongs to the mode.
    if (!moved) return static_cast<std::uint64_t>(m);
  }
}

}  // namespace rareflow
