#include "rareflow/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rareflow::oracle {

namespace {

constexpr double kPi = 3.14159265358979323846;

double phi_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double log_sum_exp(const std::vector<double>& v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

double log_binomial_pmf(std::size_t n, std::size_t k, double p) {
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  double r = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
  if (k > 0) r += kd * std::log(p);
  if (k < n) r += (nd - kd) * std::log1p(-p);
  return r;
}

double binomial_tail(std::size_t n, std::size_t k, double p) {
  if (k == 0) return 1.0;
  if (k > n) return 0.0;
  std::vector<double> terms;
  for (std::size_t j = k; j <= n; ++j) terms.push_back(log_binomial_pmf(n, j, p));
  return std::min(1.0, std::exp(log_sum_exp(terms)));
}

namespace {
double log_poisson_pmf(double mean, std::size_t j) {
  const double jd = static_cast<double>(j);
  return jd * std::log(mean) - mean - std::lgamma(jd + 1.0);
}
}  // namespace

double poisson_cdf(double mean, std::size_t k) {
  double s = 0.0;
  for (std::size_t j = 0; j <= k; ++j) s += std::exp(log_poisson_pmf(mean, j));
  return std::min(1.0, s);
}

double poisson_tail(double mean, std::size_t k) {
  if (k == 0) return 1.0;
  double s = 0.0;
  for (std::size_t j = k;; ++j) {
    const double term = std::exp(log_poisson_pmf(mean, j));
    s += term;
    if (static_cast<double>(j) > mean && term <= 1e-18 * s) break;
    if (s == 0.0 && static_cast<double>(j) > mean) break;
  }
  return std::min(1.0, s);
}

std::size_t lattice_threshold(std::size_t n, double x) {
  const double t = static_cast<double>(n) * x;
  const double r = std::round(t);
  if (std::abs(t - r) <= 1e-9 * std::max(1.0, std::abs(t))) return static_cast<std::size_t>(std::max(0.0, r));
  return static_cast<std::size_t>(std::max(0.0, std::ceil(t)));
}

TiltedMoments bernoulli_tilted_moments(double p, std::size_t n, double x, double theta) {
  const double gamma = std::log(1.0 - p + p * std::exp(theta));
  const double pt = p * std::exp(theta) / (1.0 - p + p * std::exp(theta));
  const std::size_t k0 = lattice_threshold(n, x);
  std::vector<double> first, second;
  for (std::size_t k = k0; k <= n; ++k) {
    const double lw = -theta * static_cast<double>(k) + static_cast<double>(n) * gamma;
    first.push_back(log_binomial_pmf(n, k, p));
    second.push_back(log_binomial_pmf(n, k, pt) + 2.0 * lw);
  }
  return {std::exp(log_sum_exp(first)), std::exp(log_sum_exp(second))};
}

double bernoulli_is_enumeration(double p, std::size_t n, double x, double theta) {
  if (n > 20) throw std::invalid_argument("enumeration limited to n <= 20");
  const double et = std::exp(theta);
  const double pt = p * et / (1.0 - p + p * et);
  const double gamma = std::log(1.0 - p + p * et);
  const std::size_t k0 = lattice_threshold(n, x);
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    std::size_t s = 0;
    double prob = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool one = (mask >> i) & 1u;
      s += one;
      prob *= one ? pt : 1.0 - pt;
    }
    if (s >= k0) total += prob * std::exp(-theta * static_cast<double>(s) + static_cast<double>(n) * gamma);
  }
  return total;
}

double exponential_ruin_prob(double nu, double lambda, double premium, double x) {
  return lambda / (premium * nu) * std::exp(-(nu - lambda / premium) * x);
}

double drifted_bm_max_prob(double mu, double sigma, double horizon, double level) {
  if (level <= 0.0) return 1.0;
  const double s = sigma * std::sqrt(horizon);
  return phi_cdf((mu * horizon - level) / s) +
         std::exp(2.0 * mu * level / (sigma * sigma)) * phi_cdf((-level - mu * horizon) / s);
}

double bridge_max_prob(double a, double b, double upper, double sigma, double eps) {
  if (a >= upper || b >= upper) return 1.0;
  // Extended precision: the two Gaussian exponents can be large while their difference is not.
  const long double s2 = static_cast<long double>(sigma) * sigma * eps;
  const long double reflected = 2.0L * upper - a - b;  // reflected endpoint distance
  const long double direct = static_cast<long double>(b) - a;
  return static_cast<double>(std::exp((direct * direct - reflected * reflected) / (2.0L * s2)));
}

double up_out_call(double s0, double strike, double barrier, double rate, double sigma, double maturity) {
  if (s0 >= barrier || strike >= barrier) return 0.0;
  const double nu = rate - 0.5 * sigma * sigma;
  const double b = std::log(barrier / s0);
  const double l = std::log(strike / s0);
  const double s = sigma * std::sqrt(maturity);
  // E[(S_T - K) 1{l < Y < b}] for Y ~ N(m, s^2), scaled by fac.
  auto part = [&](double m, double fac) {
    const double a1 = phi_cdf((b - m - s * s) / s) - phi_cdf((l - m - s * s) / s);
    const double a2 = phi_cdf((b - m) / s) - phi_cdf((l - m) / s);
    return fac * (s0 * std::exp(m + 0.5 * s * s) * a1 - strike * a2);
  };
  // Density of the killed log-price: direct Gaussian minus its reflection through b.
  const double direct = part(nu * maturity, 1.0);
  const double reflected = part(2.0 * b + nu * maturity, std::exp(2.0 * nu * b / (sigma * sigma)));
  return std::exp(-rate * maturity) * (direct - reflected);
}

std::pair<std::vector<double>, std::vector<double>> gauss_hermite(std::size_t n) {
  // Roots of the orthonormal Hermite polynomial h_n are bracketed by a sign scan
  // and refined by bisection; weights are 2 / h_n'(x)^2 with h_n' = sqrt(2n) h_{n-1}.
  const double pim4 = 0.7511255444649425;  // pi^{-1/4}
  const double nd = static_cast<double>(n);
  auto eval = [&](double z, double& deriv) {
    double p1 = pim4, p2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double p3 = p2;
      p2 = p1;
      const double jd = static_cast<double>(j);
      p1 = z * std::sqrt(2.0 / (jd + 1.0)) * p2 - std::sqrt(jd / (jd + 1.0)) * p3;
    }
    deriv = std::sqrt(2.0 * nd) * p2;
    return p1;
  };
  std::vector<double> roots;
  const double zmax = std::sqrt(2.0 * nd + 1.0) + 1.0;
  const double h = 0.25 / std::sqrt(2.0 * nd + 1.0) / 4.0;
  double d = 0.0;
  double prev_z = n % 2 == 1 ? h : 0.0;
  if (n % 2 == 1) roots.push_back(0.0);
  double prev_v = eval(prev_z, d);
  for (double z = prev_z + h; z <= zmax; z += h) {
    const double v = eval(z, d);
    if ((v < 0.0) != (prev_v < 0.0)) {
      double lo = prev_z, hi = z;
      const bool lo_neg = prev_v < 0.0;
      for (int i = 0; i < 200 && hi - lo > 0.0; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        ((eval(mid, d) < 0.0) == lo_neg ? lo : hi) = mid;
      }
      roots.push_back(0.5 * (lo + hi));
    }
    prev_z = z;
    prev_v = v;
  }
  std::vector<double> x, w;
  for (auto it = roots.rbegin(); it != roots.rend(); ++it) {
    if (*it == 0.0) continue;
    eval(*it, d);
    x.push_back(-*it);
    w.push_back(2.0 / (d * d));
  }
  if (n % 2 == 1) {
    eval(0.0, d);
    x.push_back(0.0);
    w.push_back(2.0 / (d * d));
  }
  for (double r : roots) {
    if (r == 0.0) continue;
    eval(r, d);
    x.push_back(r);
    w.push_back(2.0 / (d * d));
  }
  if (x.size() != n) throw std::runtime_error("gauss_hermite: root scan missed roots");
  // E[f(Z)] = pi^{-1/2} sum w_i f(sqrt(2) x_i).
  for (std::size_t i = 0; i < n; ++i) {
    x[i] *= std::sqrt(2.0);
    w[i] /= std::sqrt(kPi);
  }
  return {x, w};
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(std::size_t n) {
  std::vector<double> x(n), w(n);
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(kPi * (static_cast<double>(i) + 0.75) / (nd + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        const double jd = static_cast<double>(j);
        p1 = ((2.0 * jd + 1.0) * z * p2 - jd * p3) / (jd + 1.0);
      }
      pp = nd * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-16) break;
    }
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    w[n - 1 - i] = w[i];
  }
  return {x, w};
}

double integrate(const std::function<double(double)>& f, double a, double b, std::size_t panels) {
  static const auto rule = gauss_legendre(20);
  const double h = (b - a) / static_cast<double>(panels);
  double total = 0.0;
  for (std::size_t k = 0; k < panels; ++k) {
    const double lo = a + h * static_cast<double>(k);
    const double mid = lo + 0.5 * h;
    double s = 0.0;
    for (std::size_t i = 0; i < rule.first.size(); ++i) s += rule.second[i] * f(mid + 0.5 * h * rule.first[i]);
    total += 0.5 * h * s;
  }
  return total;
}

namespace {

double conditional_tail(double p, double rho, std::size_t n, double q, double z) {
  // Quantile of p by bisection on the CDF keeps this independent of the library's inverse.
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (phi_cdf(mid) < p ? lo : hi) = mid;
  }
  const double c = 0.5 * (lo + hi);
  const double pz = phi_cdf((rho * z + c) / std::sqrt(1.0 - rho * rho));
  const double level = static_cast<double>(n) * q;
  std::size_t k = static_cast<std::size_t>(std::ceil(level));
  if (static_cast<double>(k) < level) ++k;
  if (pz <= 0.0) return 0.0;
  if (pz >= 1.0) return 1.0;
  return binomial_tail(n, k, pz);
}

}  // namespace

double copula_loss_prob_hermite(double p, double rho, std::size_t n, double q) {
  const auto [x, w] = gauss_hermite(200);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * conditional_tail(p, rho, n, q, x[i]);
  return s;
}

double copula_loss_prob(double p, double rho, std::size_t n, double q) {
  const double norm = 1.0 / std::sqrt(2.0 * kPi);
  return integrate([&](double z) { return conditional_tail(p, rho, n, q, z) * norm * std::exp(-0.5 * z * z); },
                   -12.0, 40.0, 2000);
}

std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> start, double step, double tol, std::size_t max_iter) {
  const std::size_t d = start.size();
  std::vector<std::vector<double>> s(d + 1, start);
  for (std::size_t i = 0; i < d; ++i) s[i + 1][i] += step;
  std::vector<double> fv(d + 1);
  for (std::size_t i = 0; i <= d; ++i) fv[i] = f(s[i]);
  for (std::size_t it = 0; it < max_iter; ++it) {
    std::vector<std::size_t> idx(d + 1);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
    std::vector<std::vector<double>> s2;
    std::vector<double> f2;
    for (auto i : idx) {
      s2.push_back(s[i]);
      f2.push_back(fv[i]);
    }
    s = s2;
    fv = f2;
    if (std::abs(fv[d] - fv[0]) <= tol * (std::abs(fv[0]) + 1e-300) + 1e-300) {
      double spread = 0.0;
      for (std::size_t i = 1; i <= d; ++i)
        for (std::size_t j = 0; j < d; ++j) spread = std::max(spread, std::abs(s[i][j] - s[0][j]));
      if (spread < 1e-10) break;
    }
    std::vector<double> c(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) c[j] += s[i][j] / static_cast<double>(d);
    auto along = [&](double t) {
      std::vector<double> r(d);
      for (std::size_t j = 0; j < d; ++j) r[j] = c[j] + t * (s[d][j] - c[j]);
      return r;
    };
    const auto xr = along(-1.0);
    const double fr = f(xr);
    if (fr < fv[0]) {
      const auto xe = along(-2.0);
      const double fe = f(xe);
      if (fe < fr) {
        s[d] = xe;
        fv[d] = fe;
      } else {
        s[d] = xr;
        fv[d] = fr;
      }
    } else if (fr < fv[d - 1]) {
      s[d] = xr;
      fv[d] = fr;
    } else {
      const auto xc = fr < fv[d] ? along(-0.5) : along(0.5);
      const double fc = f(xc);
      if (fc < std::min(fr, fv[d])) {
        s[d] = xc;
        fv[d] = fc;
      } else {
        for (std::size_t i = 1; i <= d; ++i) {
          for (std::size_t j = 0; j < d; ++j) s[i][j] = s[0][j] + 0.5 * (s[i][j] - s[0][j]);
          fv[i] = f(s[i]);
        }
      }
    }
  }
  return s[static_cast<std::size_t>(std::min_element(fv.begin(), fv.end()) - fv.begin())];
}

double legendre_grid(const std::function<double(double)>& gamma, double x, double lo, double hi,
                     std::size_t points) {
  double best = -std::numeric_limits<double>::infinity();
  double best_t = lo;
  const double h = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = lo + h * static_cast<double>(i);
    const double v = t * x - gamma(t);
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  double a = std::max(lo, best_t - h), b = std::min(hi, best_t + h);
  for (int i = 0; i < 200; ++i) {
    const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
    if (m1 * x - gamma(m1) < m2 * x - gamma(m2)) {
      a = m1;
    } else {
      b = m2;
    }
  }
  const double t = 0.5 * (a + b);
  return std::max(best, t * x - gamma(t));
}

}  // namespace rareflow::oracle
