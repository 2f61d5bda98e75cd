#include "rareflow/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "rareflow/error.hpp"

namespace rareflow {

namespace {

std::atomic<unsigned> g_threads{std::max(1u, std::thread::hardware_concurrency())};

}  // namespace

void set_thread_budget(unsigned threads) { g_threads = std::max(1u, threads); }

unsigned thread_budget() { return g_threads.load(); }

EstimatorResult EstimatorResult::from_moments(const Moments& m) {
  EstimatorResult r;
  r.n = m.n;
  r.mean = m.mean;
  r.variance = m.n > 1 ? std::max(0.0, m.m2 / static_cast<double>(m.n - 1)) : 0.0;
  r.std_error = m.n > 0 ? std::sqrt(r.variance / static_cast<double>(m.n)) : 0.0;
  r.second_moment = m.n > 0 ? m.m2 / static_cast<double>(m.n) + m.mean * m.mean : 0.0;
  if (m.mean > 0.0) {
    r.relative_error = r.std_error / m.mean;
    r.log_mean = std::log(m.mean);
  }
  return r;
}

void for_each_batch(std::size_t batches, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(thread_budget(), batches);
  if (workers <= 1) {
    for (std::size_t b = 0; b < batches; ++b) body(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t b = next.fetch_add(1);
      if (b >= batches) return;
      try {
        body(b);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = batches;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t i = 1; i < workers; ++i) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

DecayFit fit_decay(const std::vector<DecayPoint>& points) {
  if (points.size() < 3) throw InsufficientData("fit_decay: at least 3 points required");
  for (const auto& p : points) {
    if (!std::isfinite(p.scale) || !std::isfinite(p.log_prob))
      throw NonFiniteInput("fit_decay: non-finite point");
  }
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      if (points[i].scale == points[j].scale) throw InsufficientData("fit_decay: duplicate scale");

  const double k = static_cast<double>(points.size());
  double sx = 0, sy = 0;
  for (const auto& p : points) {
    sx += p.scale;
    sy += p.log_prob;
  }
  const double mx = sx / k, my = sy / k;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : points) {
    const double dx = p.scale - mx, dy = p.log_prob - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  DecayFit fit;
  fit.points = points;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return fit;
}

DecayFit fit_decay(const std::vector<double>& scales, const std::vector<EstimatorResult>& results,
                   bool use_second_moment) {
  if (scales.size() != results.size()) throw MismatchedLadders("fit_decay: scales and results differ in length");
  std::vector<DecayPoint> pts;
  std::size_t excluded = 0;
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const double v = use_second_moment ? results[i].second_moment : results[i].mean;
    if (v > 0.0) {
      pts.push_back({scales[i], std::log(v)});
    } else {
      ++excluded;
    }
  }
  DecayFit fit = fit_decay(pts);
  fit.excluded = excluded;
  return fit;
}

double optimality_gap(const DecayFit& second_moment_fit, const DecayFit& prob_fit) {
  const auto& a = second_moment_fit.points;
  const auto& b = prob_fit.points;
  bool same = a.size() == b.size();
  for (std::size_t i = 0; same && i < a.size(); ++i) same = a[i].scale == b[i].scale;
  if (!same) throw MismatchedLadders("optimality_gap: fits use different scale ladders");
  return second_moment_fit.slope - 2.0 * prob_fit.slope;
}

}  // namespace rareflow
