#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

#include "ctp/covariance.hpp"
#include "ctp/local_tests.hpp"
#include "ctp/parallel.hpp"
#include "ctp/rng.hpp"
#include "ctp/stats.hpp"

namespace ctp {

/// Configuration for the simulated joint null of correlated z-statistics.
class ResamplingConfig {
 public:
  static constexpr std::uint64_t kDefaultReplications = 1'000'000;

  ResamplingConfig(std::uint64_t replications, std::uint64_t seed,
                   CovarianceMatrix correlation)
      : replications_(replications),
        seed_(seed),
        correlation_(std::move(correlation)) {
    if (replications_ < 1000)
      throw std::invalid_argument("ResamplingConfig: replications must be >= 1000");
  }

  std::uint64_t replications() const { return replications_; }
  std::uint64_t seed() const { return seed_; }
  const CovarianceMatrix& correlation() const { return correlation_; }

 private:
  std::uint64_t replications_;
  std::uint64_t seed_;
  CovarianceMatrix correlation_;
};

/// Monte-Carlo p-values for the Fisher combination statistic of every
/// nonempty subset, from one shared pass over the replicate stream:
/// draw Z ~ MVN(0, correlation), form two-sided p-values, accumulate each
/// subset's statistic, and count exceedances of the observed statistic.
///
/// Returns a vector indexed by subset mask (slot 0 unused, NaN) with
/// p[mask] = (#exceedances + 1) / (B + 1), so every value lies in (0, 1].
/// Exceedance uses the closed inequality C >= c.
///
/// Replicate r draws from substream (seed, r), which makes the result
/// independent of the worker count.
inline std::vector<double> simulate_composite_pvalues(
    std::span<const double> observed, const ResamplingConfig& cfg,
    unsigned workers = 1) {
  const int n = static_cast<int>(observed.size());
  if (n == 0) throw std::invalid_argument("simulate_composite_pvalues: no observed p-values");
  if (n != cfg.correlation().dim())
    throw std::invalid_argument(
        "simulate_composite_pvalues: observed length != correlation dimension");
  if (n > 24)
    throw CapacityError("simulate_composite_pvalues: more than 24 hypotheses");

  const std::size_t nmask = std::size_t{1} << n;
  std::vector<double> weight(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double p = observed[static_cast<std::size_t>(i)];
    if (!(p >= 0.0) || p > 1.0)
      throw std::invalid_argument("simulate_composite_pvalues: p-values must lie in [0,1]");
    weight[static_cast<std::size_t>(i)] = -2.0 * std::log(detail::clamp_pvalue(p));
  }

  // Observed statistic for every subset via the remove-lowest-bit recursion.
  std::vector<double> observed_stat(nmask, 0.0);
  for (std::size_t mask = 1; mask < nmask; ++mask)
    observed_stat[mask] =
        observed_stat[mask & (mask - 1)] +
        weight[static_cast<std::size_t>(std::countr_zero(mask))];

  const CholeskyFactor factor = cholesky_factor(cfg.correlation());
  const std::uint64_t reps = cfg.replications();

  std::vector<std::uint64_t> exceed(nmask, 0);
  std::mutex merge_mutex;
  detail::parallel_chunks(reps, workers, [&](std::uint64_t begin, std::uint64_t end) {
    std::vector<std::uint64_t> local(nmask, 0);
    std::vector<double> g(static_cast<std::size_t>(n));
    std::vector<double> z(static_cast<std::size_t>(n));
    std::vector<double> w(static_cast<std::size_t>(n));
    std::vector<double> stat(nmask, 0.0);
    for (std::uint64_t r = begin; r < end; ++r) {
      CounterRng rng(cfg.seed(), r);
      for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = rng.next_normal();
      factor.multiply(g, z);
      for (int i = 0; i < n; ++i)
        w[static_cast<std::size_t>(i)] =
            -2.0 * std::log(detail::clamp_pvalue(
                       two_sided_z_pvalue(z[static_cast<std::size_t>(i)])));
      for (std::size_t mask = 1; mask < nmask; ++mask) {
        stat[mask] = stat[mask & (mask - 1)] +
                     w[static_cast<std::size_t>(std::countr_zero(mask))];
        local[mask] += stat[mask] >= observed_stat[mask];
      }
    }
    const std::lock_guard<std::mutex> lock(merge_mutex);
    for (std::size_t mask = 1; mask < nmask; ++mask) exceed[mask] += local[mask];
  });

  std::vector<double> out(nmask, std::numeric_limits<double>::quiet_NaN());
  const double denom = static_cast<double>(reps) + 1.0;
  for (std::size_t mask = 1; mask < nmask; ++mask)
    out[mask] = (static_cast<double>(exceed[mask]) + 1.0) / denom;
  return out;
}

}  // namespace ctp
