#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "rareflow/rng.hpp"

namespace rareflow {

/// Replications per batch. Each batch draws from its own sub-stream, so this constant is part
/// of the reproducibility contract and must not depend on the thread count.
inline constexpr std::size_t kBatchSize = 1024;

/// Worker threads used by run_replications. Defaults to the hardware concurrency.
void set_thread_budget(unsigned threads);
unsigned thread_budget();

/// Single-pass moments (Welford), mergeable with Chan's pairwise update.
struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) noexcept {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const Moments& o) noexcept {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
    const double nt = na + nb;
    const double d = o.mean - mean;
    mean += d * nb / nt;
    m2 += o.m2 + d * d * na * nb / nt;
    n += o.n;
  }
};

struct EstimatorResult {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
  std::optional<double> relative_error;  // std_error / mean, only when mean > 0
  double second_moment = 0.0;
  std::optional<double> log_mean;        // ln mean, only when mean > 0

  static EstimatorResult from_moments(const Moments& m);
};

/// Runs the batches [0, batches) on the thread budget. Each index is visited exactly once.
void for_each_batch(std::size_t batches, const std::function<void(std::size_t)>& body);

/// Average of n independent draws of sampler(Rng&). Deterministic in (sampler, n, seed, stream):
/// batch b uses Rng(seed, stream, b) and batch moments are merged in index order.
template <class Sampler>
EstimatorResult run_replications(Sampler&& sampler, std::size_t n, std::uint64_t seed,
                                 std::uint32_t stream = 0) {
  const std::size_t batches = (n + kBatchSize - 1) / kBatchSize;
  std::vector<Moments> parts(batches);
  for_each_batch(batches, [&](std::size_t b) {
    Rng rng(seed, stream, static_cast<std::uint32_t>(b));
    const std::size_t count = std::min(kBatchSize, n - b * kBatchSize);
    Moments m;
    for (std::size_t i = 0; i < count; ++i) m.add(sampler(rng));
    parts[b] = m;
  });
  Moments total;
  for (const auto& m : parts) total.merge(m);
  return EstimatorResult::from_moments(total);
}

/// Several estimators computed from the same draws (paired comparisons).
template <std::size_t K, class Sampler>
std::array<EstimatorResult, K> run_replications_multi(Sampler&& sampler, std::size_t n, std::uint64_t seed,
                                                      std::uint32_t stream = 0) {
  const std::size_t batches = (n + kBatchSize - 1) / kBatchSize;
  std::vector<std::array<Moments, K>> parts(batches);
  for_each_batch(batches, [&](std::size_t b) {
    Rng rng(seed, stream, static_cast<std::uint32_t>(b));
    const std::size_t count = std::min(kBatchSize, n - b * kBatchSize);
    std::array<Moments, K> m{};
    for (std::size_t i = 0; i < count; ++i) {
      const std::array<double, K> x = sampler(rng);
      for (std::size_t k = 0; k < K; ++k) m[k].add(x[k]);
    }
    parts[b] = m;
  });
  std::array<Moments, K> total{};
  for (const auto& m : parts)
    for (std::size_t k = 0; k < K; ++k) total[k].merge(m[k]);
  std::array<EstimatorResult, K> out;
  for (std::size_t k = 0; k < K; ++k) out[k] = EstimatorResult::from_moments(total[k]);
  return out;
}

struct DecayPoint {
  double scale;
  double log_prob;
};

struct DecayFit {
  std::vector<DecayPoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t excluded = 0;  // rungs dropped because the estimate was exactly zero
};

/// Ordinary least squares of log_prob on scale. Needs at least three distinct scales and finite
/// values throughout.
DecayFit fit_decay(const std::vector<DecayPoint>& points);

/// Fits ln(mean) (or ln(second_moment) when use_second_moment) against the scales. Rungs whose
/// estimate is exactly zero are skipped and counted in DecayFit::excluded.
DecayFit fit_decay(const std::vector<double>& scales, const std::vector<EstimatorResult>& results,
                   bool use_second_moment = false);

/// second_moment_fit.slope - 2 * prob_fit.slope. Zero for an asymptotically optimal estimator.
double optimality_gap(const DecayFit& second_moment_fit, const DecayFit& prob_fit);

}  // namespace rareflow
