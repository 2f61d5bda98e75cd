// End-to-end acceptance checks. Each criterion prints exactly one PASS or FAIL line; the process
// exit status is nonzero when any selected criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "rareflow/bridge.hpp"
#include "rareflow/cramer.hpp"
#include "rareflow/credit.hpp"
#include "rareflow/error.hpp"
#include "rareflow/isdrift.hpp"
#include "rareflow/longterm.hpp"
#include "rareflow/mc.hpp"
#include "rareflow/oracles.hpp"
#include "rareflow/ruin.hpp"
#include "rareflow/tilt.hpp"

using namespace rareflow;

namespace {

// Collects sub-check results; the criterion passes when every sub-check does.
class Verdict {
 public:
  void check(bool ok, const std::string& what) {
    ok_ = ok_ && ok;
    if (!ok) failed_.push_back(what);
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool ok() const { return ok_; }
  std::string summary() const {
    std::string s;
    for (const auto& n : notes_) s += (s.empty() ? "" : "; ") + n;
    if (!failed_.empty()) {
      s += " | failed:";
      for (const auto& f : failed_) s += " [" + f + "]";
    }
    return s;
  }

 private:
  bool ok_ = true;
  std::vector<std::string> notes_;
  std::vector<std::string> failed_;
};

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

bool within_se(const EstimatorResult& r, double exact, double k = 4.0) {
  return std::abs(r.mean - exact) <= k * r.std_error;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::abs(b); }

// ------------------------------------------------------------------------------------------------

void tilting_catalog(Verdict& v) {
  // Closed forms of the tilted laws, equal up to rounding of the algebraically equivalent form.
  auto same = [](double a, double b) { return std::abs(a - b) <= 2e-16 * std::abs(b); };
  bool exact = true;
  for (double t : {-0.7, -0.1, 0.0, 0.3, 1.2}) {
    const double p = 0.3;
    exact &= same(std::get<Bernoulli>(tilt(TiltableFamily{Bernoulli{p}}, t)).p,
                  p * std::exp(t) / (1 - p + p * std::exp(t)));
    exact &= std::get<Poisson>(tilt(TiltableFamily{Poisson{2.0}}, t)).lambda == 2.0 * std::exp(t);
    const Normal n = std::get<Normal>(tilt(TiltableFamily{Normal{0.5, 4.0}}, t));
    exact &= n.mean == 0.5 + t * 4.0 && n.variance == 4.0;
    exact &= std::get<Exponential>(tilt(TiltableFamily{Exponential{1.5}}, t)).rate == 1.5 - t;
  }
  v.check(exact, "tilted parameters differ from the closed forms");

  const std::vector<std::pair<TiltableFamily, double>> cases = {
      {Bernoulli{0.3}, 0.5}, {Poisson{2.0}, 0.3}, {Normal{0.5, 4.0}, 0.2}, {Exponential{1.5}, 0.5}};
  const char* names[] = {"bernoulli", "poisson", "normal", "exponential"};
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& [f, t] = cases[i];
    const TiltableFamily g = tilt(f, t);
    const auto r = run_replications([&](Rng& rng) { return sample(g, rng); }, 1000000, 100 + i);
    const double target = cgf_derivative(f, t);
    v.note(std::string(names[i]) + " z=" + fmt((r.mean - target) / r.std_error, 3));
    v.check(within_se(r, target), std::string(names[i]) + " tilted sample mean");
  }
}

void cramer_rates(Verdict& v) {
  double worst = 0.0;
  for (int i = 1; i <= 100; ++i) {
    const double u = i / 101.0;
    {
      const double p = 0.3, x = u;
      const double f = x * std::log(x / p) + (1 - x) * std::log((1 - x) / (1 - p));
      worst = std::max(worst, std::abs(*legendre(Bernoulli{p}, x).rate - f));
    }
    {
      const double l = 2.0, x = 6.0 * u;
      worst = std::max(worst, std::abs(*legendre(Poisson{l}, x).rate - (x * std::log(x / l) - x + l)));
    }
    {
      const double m = 0.5, s2 = 4.0, x = -5.0 + 10.0 * u;
      worst = std::max(worst, std::abs(*legendre(Normal{m, s2}, x).rate - (x - m) * (x - m) / (2 * s2)));
    }
    {
      const double r = 1.5, x = 4.0 * u;
      worst = std::max(worst, std::abs(*legendre(Exponential{r}, x).rate - (r * x - 1 - std::log(r * x))));
    }
  }
  v.note("max legendre error " + fmt(worst, 3));
  v.check(worst <= 1e-10, "legendre vs closed forms");

  // Expectation of the library's sample value over all 2^n outcomes under the tilted law.
  double worst_bias = 0.0;
  for (std::size_t n = 1; n <= 12; ++n)
    for (double x : {0.3, 0.5, 0.75}) {
      const double p = 0.25;
      const EmpiricalMeanProblem prob{Bernoulli{p}, n, x};
      for (double theta : {0.0, 0.4, saddle_theta(Bernoulli{p}, x), 1.5}) {
        const double q = std::get<Bernoulli>(tilt(TiltableFamily{Bernoulli{p}}, theta)).p;
        double e = 0.0;
        for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
          const int k = __builtin_popcount(mask);
          const double w = std::pow(q, k) * std::pow(1 - q, static_cast<double>(n) - k);
          e += w * is_sample_value(prob, theta, k);
        }
        const double exact = oracle::binomial_tail(n, oracle::lattice_threshold(n, x), p);
        worst_bias = std::max(worst_bias, std::abs(e - exact));
      }
    }
  v.note("max enumeration bias " + fmt(worst_bias, 3));
  v.check(worst_bias <= 1e-12, "enumeration unbiasedness");
}

void is_optimality(Verdict& v) {
  const double p = 0.25, x = 0.5;
  const double rate = *legendre(Bernoulli{p}, x).rate;
  const double theta = saddle_theta(Bernoulli{p}, x);
  const std::vector<std::size_t> ladder{25, 50, 100, 200};
  std::vector<DecayPoint> first, second;
  for (std::size_t n : ladder) {
    const auto m = oracle::bernoulli_tilted_moments(p, n, x, theta);
    first.push_back({static_cast<double>(n), std::log(m.prob)});
    second.push_back({static_cast<double>(n), std::log(m.second_moment)});
  }
  const double gap = optimality_gap(fit_decay(second), fit_decay(first));
  v.note("exact gap " + fmt(gap, 4) + " (tolerance " + fmt(0.05 * rate, 3) + ")");
  v.check(std::abs(gap) <= 0.05 * rate, "exact optimality gap");

  const auto mc = run_rate_ladder(Bernoulli{p}, x, ladder, 100000, 7);
  const double mc_gap = optimality_gap(mc.second_moment_fit, mc.prob_fit);
  v.note("simulated gap " + fmt(mc_gap, 4));
  for (std::size_t i = 0; i < ladder.size(); ++i)
    v.check(within_se(mc.results[i], std::exp(first[i].log_prob)), "rung n=" + std::to_string(ladder[i]));
}

void ruin(Verdict& v) {
  const RuinModel m{2.0, 1.0, Exponential{1.0}, {}};
  const double th = adjustment_coefficient(m).value;
  v.check(std::abs(th - 0.5) <= 1e-10, "adjustment coefficient");
  for (double x : {2.0, 5.0, 10.0}) {
    const auto r = simulate_ruin_is(m, x, 100000, 200 + static_cast<std::uint64_t>(x));
    const double exact = oracle::exponential_ruin_prob(1, 1, 2, x);
    v.note("x=" + fmt(x, 3) + " rel " + fmt(rel_diff(r.mean, exact), 2));
    v.check(rel_diff(r.mean, exact) <= 0.01, "psi(" + fmt(x, 3) + ") within 1%");
  }
  std::vector<double> xs{2, 4, 8, 16};
  std::vector<EstimatorResult> rs;
  for (double x : xs) rs.push_back(simulate_ruin_is(m, x, 100000, 300 + static_cast<std::uint64_t>(x)));
  const double slope = fit_decay(xs, rs).slope;
  v.note("slope " + fmt(slope, 5));
  v.check(std::abs(slope + th) <= 0.02 * th, "decay slope within 2%");

  // Every tilted-walk sample exp(-theta S_tau) sits below exp(-theta x).
  const TiltableFamily tilted = tilt(TiltableFamily{ClaimStep{m.claims, m.premium, m.intensity}}, th);
  bool bounded = true;
  for (double x : {2.0, 5.0, 10.0}) {
    Rng g(400, static_cast<std::uint32_t>(x), 0);
    for (int i = 0; i < 100000; ++i) {
      double s = 0.0;
      while (s <= x) s += sample(tilted, g);
      bounded &= std::exp(-th * s) <= lundberg_bound(m, x);
    }
  }
  v.check(bounded, "pointwise Lundberg bound");
}

void investment(Verdict& v) {
  RuinModel m{2.0, 1.0, Exponential{1.0}, InvestParams{1.0, 1.0}};
  const double ts = invest_exponent(m).value;
  const double tl = adjustment_coefficient(RuinModel{2.0, 1.0, Exponential{1.0}, {}}).value;
  v.note("theta*=" + fmt(ts, 15));
  v.check(std::abs(ts - 0.640388203202208) <= 1e-8, "theta* value");
  v.check(ts > tl, "theta* > theta_L");
  std::vector<double> xs{1, 2, 3, 4};
  std::vector<EstimatorResult> rs;
  for (std::size_t i = 0; i < xs.size(); ++i)
    rs.push_back(simulate_wealth_ruin(m, xs[i], optimal_fraction(m), 50.0, 20000, 500 + i));
  const double slope = fit_decay(xs, rs).slope;
  v.note("wealth-ruin slope " + fmt(slope, 4) + " in [" + fmt(-1.25 * ts, 4) + ", " + fmt(-tl, 4) + "]");
  v.check(slope >= -1.25 * ts && slope <= -tl, "slope bracket");
}

void bridge(Verdict& v) {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double upper = 1.0 + u(gen);
    const double a = upper - 2.0 * u(gen), b = upper - 2.0 * u(gen);
    const double sigma = 0.1 + u(gen), eps = 0.01 + u(gen);
    worst = std::max(worst, std::abs(crossing_prob_single(a, b, upper, sigma, eps) -
                                     oracle::bridge_max_prob(a, b, upper, sigma, eps)));
  }
  v.note("bridge formula error " + fmt(worst, 3));
  v.check(worst <= 1e-14, "single-barrier formula");

  const double s0 = 100, strike = 100, upper = 130, r = 0.05, sigma = 0.3, T = 1.0;
  const double exact = oracle::up_out_call(s0, strike, upper, r, sigma, T);
  const EulerModel logm{[=](double) { return r - 0.5 * sigma * sigma; }, [=](double) { return sigma; }, T, 256,
                        std::log(s0), r};
  const Payoff log_call = [=](double x) { return std::max(std::exp(x) - strike, 0.0); };
  const auto corr =
      price_knockout(logm, log_call, BarrierSpec::constant_up(std::log(upper)), 1000000, 600, KnockoutMethod::corrected);
  v.note("n=256 z=" + fmt((corr.mean - exact) / corr.std_error, 3));
  v.check(within_se(corr, exact), "corrected price at n=256");

  // Bias order with an Euler scheme on the price itself, where the correction is only first-order.
  const char* env = std::getenv("RAREFLOW_BIAS_N");
  const std::size_t n_paths = env ? std::stoul(env) : 8000000;
  const Payoff call = [=](double s) { return std::max(s - strike, 0.0); };
  std::vector<DecayPoint> naive, corrected;
  std::string biases;
  for (std::size_t n : {8u, 16u, 32u, 64u, 128u}) {
    const EulerModel m{[=](double s) { return r * s; }, [=](double s) { return sigma * s; }, T, n, s0, r};
    const auto pr = price_knockout_paired(m, call, BarrierSpec::constant_up(upper), n_paths, 700 + n);
    naive.push_back({std::log(static_cast<double>(n)), std::log(std::abs(pr[0].mean - exact))});
    corrected.push_back({std::log(static_cast<double>(n)), std::log(std::abs(pr[1].mean - exact))});
    biases += (biases.empty() ? "" : ",") + fmt(pr[1].mean - exact, 3);
  }
  const double sn = fit_decay(naive).slope, sc = fit_decay(corrected).slope;
  v.note("bias slopes naive " + fmt(sn, 3) + " corrected " + fmt(sc, 3) + " (corrected biases " + biases + ")");
  v.check(std::abs(sn + 0.5) <= 0.2, "naive order 0.5");
  v.check(std::abs(sc + 1.0) <= 0.2, "corrected order 1.0");
}

void ghs(Verdict& v) {
  const Vec c{0.5, -0.25, 1.0};
  const auto lin = require_converged(ghs_drift(exp_linear_payoff(c), {0, 0, 0}));
  const auto zv = mu_is_estimator(exp_linear_payoff(c), lin.mu, 10000, 800);
  const double target = std::exp(0.5 * (0.25 + 0.0625 + 1.0));
  v.check(std::abs(zv.mean - target) <= 1e-12 * target && std::sqrt(zv.variance) <= 1e-12 * target,
          "zero-variance linear payoff");

  const PathPayoff asian = asian_call_payoff(50, 70, 0.3, 1.0, 4);
  const auto r = require_converged(ghs_drift(asian, Vec(4, 1.5)));
  auto neg = [&](const Vec& z) {
    const double g = asian.value(z);
    if (!(g > 0.0)) return 1e10;
    return -(std::log(g) - 0.5 * std::inner_product(z.begin(), z.end(), z.begin(), 0.0));
  };
  const double nm = -neg(oracle::nelder_mead(neg, Vec(4, 1.5), 0.3));
  v.note("objective gap " + fmt(std::abs(r.objective - nm), 3));
  v.check(std::abs(r.objective - nm) <= 1e-6, "asian drift vs Nelder-Mead");

  const auto pair = mu_is_paired(asian, r.mu, 100000, 801);
  v.note("relative errors naive " + fmt(*pair[0].relative_error, 3) + " is " + fmt(*pair[1].relative_error, 3));
  v.check(*pair[1].relative_error < *pair[0].relative_error, "IS relative error below naive");

  const Vec c2{0.5, 0.5};
  auto F = [&](const Vec& z) { return c2[0] * z[0] + c2[1] * z[1]; };
  const auto rate = scaled_second_moment_rate(F, c2, {1.0, 0.5, 0.25, 0.125}, 20000, 802);
  v.note("second-moment slope " + fmt(rate.fit.slope, 4) + " vs 0.5");
  v.check(std::abs(rate.fit.slope - 0.5) <= 0.15 * 0.5, "Varadhan limit");
}

void credit(Verdict& v) {
  const PortfolioModel m{0.1, 0.4, FixedThreshold{0.5}};
  const double exact = oracle::copula_loss_prob_hermite(0.1, 0.4, 20, 0.5);
  const auto is = two_step_is(m, 20, 100000, 900);
  v.note("n=20 z=" + fmt((is.mean - exact) / is.std_error, 3));
  v.check(within_se(is, exact), "two-step IS vs quadrature");

  const double rho = std::sqrt(0.5);
  const PortfolioModel s{0.01, rho, ThresholdSchedule{0.5, 1.0}};
  bool shape = true;
  for (std::size_t n : {100u, 1000u, 10000u}) {
    const double zn = factor_threshold(s, n);
    double prev = -INFINITY;
    for (double z = -3.0; z <= zn + 2.0; z += 0.02) {
      const double f = loss_exponent(s, n, z);
      const double h = 1e-3;
      const double d2 = (loss_exponent(s, n, z + h) - 2 * f + loss_exponent(s, n, z - h)) / (h * h);
      shape &= f <= 0.0 && f >= prev && (z < zn || f == 0.0) && d2 <= 1e-8 * std::max(1.0, std::abs(f));
      prev = f;
    }
  }
  v.check(shape, "F_n grid properties");

  const auto d = measure_loss_decay(s, {100, 1000, 10000}, 100000, 901);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto n = static_cast<std::size_t>(d.n[i]);
    v.check(within_se(d.results[i], oracle::copula_loss_prob(0.01, rho, n, s.q(n))),
            "rung n=" + std::to_string(n) + " vs quadrature");
  }
  const double target = -dependent_decay(1.0, rho);
  v.note("ln-n slope " + fmt(d.fit.slope, 4) + " vs " + fmt(target, 3));
  v.check(std::abs(d.fit.slope - target) <= 0.25 * std::abs(target), "slope within 25%");
}

void longterm(Verdict& v) {
  const auto bs = bs_outperformance(0.2, 0.0, 1.0, 0.08);
  v.check(std::abs(bs.v + 0.02) <= 1e-10 && std::abs(bs.theta_x - 0.5) <= 1e-10 && std::abs(bs.alpha_star - 0.4) <= 1e-10,
          "black-scholes triple");

  const LqModel m = LqModel::from_market({0.0, 0.0, 0.2, 0.0, 1.0}, 1.0);
  double worst = 0.0;
  for (int i = 1; i <= 9; ++i)
    worst = std::max(worst, std::abs(lq_dual(m, i / 10.0).Lambda - bs_dual_cgf(0.2, 0.0, 1.0, i / 10.0)));
  v.check(worst <= 1e-10, "LQ dual reduces to the closed form");

  LqModel g;
  g.beta0 = -0.05, g.beta2 = 0.3, g.beta3 = 0.1, g.beta4 = 0.1, g.delta0 = 0.2, g.delta1 = 1.2, g.delta2 = 0.1,
  g.k = 1.5;
  double resid = 0.0;
  for (const LqModel& mm : {m, g}) {
    const double bar = theta_bar(mm).value;
    for (double f : {0.0, 0.1, 0.3, 0.6, 0.9})
      for (double y : {-3.0, -1.0, 0.0, 0.5, 2.0}) {
        const double t = f * bar;
        const auto d = lq_dual(mm, t);
        const double dphi = d.A * y + d.B;
        const double lin = (mm.beta2 + t * mm.delta0 * mm.delta1) * y + mm.beta4 + t * mm.delta1 * mm.delta2;
        const double rhs = 0.5 * d.A - mm.k * y * dphi + 0.5 * dphi * dphi +
                           t * (mm.beta0 + t * mm.delta0 * mm.delta0 / 2) * y * y +
                           t * (mm.beta3 + t * mm.delta0 * mm.delta2) * y + t * t * mm.delta2 * mm.delta2 / 2 +
                           0.5 * t / (1 - t * mm.delta1 * mm.delta1) * lin * lin;
        resid = std::max(resid, std::abs(d.Lambda - rhs));
      }
  }
  v.note("HJB residual " + fmt(resid, 3));
  v.check(resid <= 1e-9, "HJB residual");

  // Large policy index: the nearly optimal feedback approaches the limit policy.
  const auto mc = mc_outperformance(m, OutperformancePolicy::nearly_optimal(1e6), 0.08, {25, 50, 100}, 50000, 1000);
  if (!mc.fit) {
    v.check(false, "too few nonzero rungs");
    return;
  }
  v.note("MC slope " + fmt(mc.fit->slope, 4) + " vs v(x) = -0.02");
  v.check(std::abs(mc.fit->slope + 0.02) <= 0.2 * 0.02, "slope within 20%");
}

// Runs the CLI for every subcommand twice and with two thread counts; data rows must match byte for
// byte.
void reproducibility(Verdict& v, const std::string& cli) {
  if (cli.empty()) {
    v.check(false, "path to the rareflow tool not given (--cli)");
    return;
  }
  const std::vector<std::pair<std::string, std::string>> configs = {
      {"cramer", R"({"N": 4000})"},
      {"ruin", R"({"N": 4000})"},
      {"ruin-invest", R"({"N": 1000, "horizon": 10})"},
      {"barrier", R"({"N": 4000, "ladder": [8, 16, 32]})"},
      {"fw-bond", R"({"N": 4000})"},
      {"ghs", R"({"N": 4000})"},
      {"credit", R"({"N": 4000, "ladder": [20, 40]})"},
      {"longterm", R"({"N": 1000, "ladder": [5, 10, 20]})"},
  };
  const auto dir = std::filesystem::temp_directory_path() / ("rareflow_accept_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  auto data_rows = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    std::string line, out;
    while (std::getline(in, line))
      if (line.rfind("# ", 0) != 0) out += line + "\n";
    return out;
  };
  for (const auto& [sub, body] : configs) {
    const auto cfg = dir / (sub + ".json");
    std::ofstream(cfg) << body;
    std::vector<std::string> outputs;
    for (const char* threads : {"1", "1", "3"}) {
      const auto out = dir / (sub + "_" + std::to_string(outputs.size()) + ".csv");
      const std::string cmd = "\"" + cli + "\" " + sub + " --config \"" + cfg.string() + "\" --oracle --seed 5 --threads " +
                              threads + " --out \"" + out.string() + "\"";
      const int rc = std::system(cmd.c_str());
      v.check(rc == 0, sub + " exit status");
      outputs.push_back(data_rows(out));
    }
    v.check(!outputs[0].empty() && outputs[0] == outputs[1], sub + " repeat run");
    v.check(outputs[0] == outputs[2], sub + " thread count");
  }
  std::filesystem::remove_all(dir);
  v.note("8 subcommands compared");
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<void(Verdict&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rareflow acceptance checks"};
  std::vector<int> selected;
  std::string cli;
  app.add_option("--criterion", selected, "criteria to run (default: all)")->check(CLI::Range(1, 10));
  app.add_option("--cli", cli, "path to the rareflow tool");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, "tilting catalog", 10, tilting_catalog},
      {2, "cramer rates", 30, cramer_rates},
      {3, "IS optimality", 120, is_optimality},
      {4, "ruin", 60, ruin},
      {5, "investment exponent", 300, investment},
      {6, "bridge correction", 600, bridge},
      {7, "GHS drift", 300, ghs},
      {8, "credit", 600, credit},
      {9, "long-term outperformance", 600, longterm},
      {10, "reproducibility", 120, [&](Verdict& v) { reproducibility(v, cli); }},
  };

  bool all_ok = true;
  for (const auto& c : all) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    v.check(secs < c.budget_s, "runtime budget " + fmt(c.budget_s, 4) + " s");
    std::printf("%s criterion %d (%s): %s [%.1f s]\n", v.ok() ? "PASS" : "FAIL", c.id, c.name, v.summary().c_str(),
                secs);
    std::fflush(stdout);
    all_ok = all_ok && v.ok();
  }
  return all_ok ? 0 : 1;
}
