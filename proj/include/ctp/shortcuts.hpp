#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "ctp/stats.hpp"

namespace ctp {

namespace detail {

// Ascending order with ties broken by original index, so results do not
// depend on input permutation beyond the values themselves.
inline std::vector<std::size_t> sort_order(std::span<const double> p) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  return order;
}

inline void check_pvalues(std::span<const double> p, const char* who) {
  if (p.empty()) throw std::invalid_argument(std::string(who) + ": empty p-value list");
  for (double v : p)
    if (!(v >= 0.0) || v > 1.0)
      throw std::invalid_argument(std::string(who) + ": p-values must lie in [0,1]");
}

}  // namespace detail

/// Elementary adjusted p-values of closed Bonferroni testing, via the O(n)
/// step-down recursion: running max of (n-i+1) * p_(i) clamped at 1.
inline std::vector<double> holm_adjust(std::span<const double> pvals) {
  detail::check_pvalues(pvals, "holm_adjust");
  const std::size_t n = pvals.size();
  const auto order = detail::sort_order(pvals);
  std::vector<double> out(n);
  double running = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    running = std::max(running, static_cast<double>(n - r) * pvals[order[r]]);
    out[order[r]] = std::min(1.0, running);
  }
  return out;
}

/// Elementary adjusted p-values of closed Simes testing in O(n^2).
/// For each subset size m only two candidate subsets can attain the max:
/// the m largest p-values, or the hypothesis joined with the m-1 largest
/// others. Equals brute-force closure over all 2^n - 1 subsets.
inline std::vector<double> hommel_adjust(std::span<const double> pvals) {
  detail::check_pvalues(pvals, "hommel_adjust");
  const std::size_t n = pvals.size();
  const auto order = detail::sort_order(pvals);
  std::vector<double> ps(n);
  for (std::size_t r = 0; r < n; ++r) ps[r] = pvals[order[r]];

  std::vector<double> adj(ps);  // size-1 subsets
  for (std::size_t m = n; m >= 2; --m) {
    // Simes p of the m largest p-values.
    double cim = 1.0;
    for (std::size_t k = 1; k <= m; ++k)
      cim = std::min(cim, static_cast<double>(m) * ps[n - m + k - 1] / static_cast<double>(k));
    for (std::size_t i = n - m; i < n; ++i) adj[i] = std::max(adj[i], cim);
    for (std::size_t i = 0; i < n - m; ++i)
      adj[i] = std::max(adj[i], std::min(static_cast<double>(m) * ps[i], cim));
  }

  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; ++r) out[order[r]] = std::min(1.0, adj[r]);
  return out;
}

/// Elementary adjusted p-values of closed Fisher testing under the
/// independence (chi-square) reference. Among size-m supersets of {i} the
/// local p is maximized by joining i with the m-1 largest other p-values,
/// so prefix sums of sorted logs reduce the search to n candidates per
/// hypothesis. Equals brute-force closure over all 2^n - 1 subsets.
inline std::vector<double> fisher_adjust_independent(std::span<const double> pvals) {
  detail::check_pvalues(pvals, "fisher_adjust_independent");
  const std::size_t n = pvals.size();

  // descending order; prefix[k] = sum of logs of the k largest p-values
  std::vector<std::size_t> desc(n);
  std::iota(desc.begin(), desc.end(), std::size_t{0});
  std::stable_sort(desc.begin(), desc.end(),
                   [&](std::size_t a, std::size_t b) { return pvals[a] > pvals[b]; });
  std::vector<double> logp(n), prefix(n + 1, 0.0);
  std::vector<std::size_t> rank(n);
  for (std::size_t r = 0; r < n; ++r) {
    rank[desc[r]] = r;
    logp[desc[r]] = std::log(detail::clamp_pvalue(pvals[desc[r]]));
    prefix[r + 1] = prefix[r] + logp[desc[r]];
  }

  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = 0.0;
    for (std::size_t m = 1; m <= n; ++m) {
      // sum of logs over {i} + the m-1 largest others
      const double others = static_cast<std::ptrdiff_t>(rank[i]) <=
                                    static_cast<std::ptrdiff_t>(m) - 2
                                ? prefix[m] - logp[i]
                                : prefix[m - 1];
      const double stat = -2.0 * (logp[i] + others);
      best = std::max(best, chi_square_sf(stat, 2 * static_cast<int>(m)));
    }
    out[i] = best;
  }
  return out;
}

}  // namespace ctp
