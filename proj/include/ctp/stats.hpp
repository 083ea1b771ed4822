#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "ctp/errors.hpp"

namespace ctp {

namespace detail {

// Smallest positive normal double; p-values are clamped to [kMinP, 1]
// before logarithms so -2*ln(p) stays finite.
inline constexpr double kMinP = std::numeric_limits<double>::min();

inline double clamp_pvalue(double p) {
  return std::min(1.0, std::max(kMinP, p));
}

// Closed form for even degrees of freedom 2k:
//   SF(x) = exp(-x/2) * sum_{j=0}^{k-1} (x/2)^j / j!
// Valid while exp(-x/2) is representable; see chi_square_sf for dispatch.
inline double chi_square_sf_even(double x, int k) {
  const double half = 0.5 * x;
  double term = std::exp(-half);
  double sum = term;
  for (int j = 1; j < k; ++j) {
    term *= half / j;
    sum += term;
  }
  return std::min(1.0, sum);
}

// Generic route through the regularized upper incomplete gamma.
inline double chi_square_sf_gamma(double x, int df) {
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

}  // namespace detail

/// z-statistic for the contrast y_i - y_j when both observations have
/// standard deviation sigma (contrast variance 2*sigma^2).
inline double pairwise_contrast_z(double y_i, double y_j, double sigma) {
  if (!(sigma > 0.0))
    throw std::invalid_argument("pairwise_contrast_z: sigma must be positive");
  return (y_i - y_j) / (sigma * std::sqrt(2.0));
}

/// Two-sided p-value 2*(1 - Phi(|z|)) of a standard normal statistic.
inline double two_sided_z_pvalue(double z) {
  if (!std::isfinite(z))
    throw std::invalid_argument("two_sided_z_pvalue: z must be finite");
  // 2*(1 - Phi(|z|)) = erfc(|z| / sqrt(2))
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

/// Survival function of the chi-square distribution with df degrees of
/// freedom. Even df uses the closed-form Poisson sum; odd df (and the
/// region where exp(-x/2) underflows) go through the incomplete gamma.
inline double chi_square_sf(double x, int df) {
  if (df < 1) throw std::invalid_argument("chi_square_sf: df must be positive");
  if (x < 0.0) throw std::invalid_argument("chi_square_sf: x must be nonnegative");
  if (x == 0.0) return 1.0;
  if (df % 2 == 0 && x < 1400.0) return detail::chi_square_sf_even(x, df / 2);
  return detail::chi_square_sf_gamma(x, df);
}

/// Two-sided equal-variance (pooled) two-sample t-test p-value.
inline double two_sample_t_pvalue(std::span<const double> group_a,
                                  std::span<const double> group_b) {
  const std::size_t na = group_a.size(), nb = group_b.size();
  if (na < 2 || nb < 2)
    throw std::invalid_argument("two_sample_t_pvalue: each group needs >= 2 observations");

  auto mean = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  auto ss = [](std::span<const double> v, double m) {
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s;
  };

  const double ma = mean(group_a), mb = mean(group_b);
  const double df = static_cast<double>(na + nb - 2);
  const double pooled = (ss(group_a, ma) + ss(group_b, mb)) / df;
  if (!(pooled > 0.0))
    throw ZeroVarianceError("two_sample_t_pvalue: zero pooled variance");

  const double t = (ma - mb) / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  if (t == 0.0) return 1.0;
  // P(|T| >= t) = I_{df/(df+t^2)}(df/2, 1/2)
  return boost::math::ibeta(0.5 * df, 0.5, df / (df + t * t));
}

/// Pooled two-sample t statistic with the degenerate-arrangement
/// convention used by the permutation kernels: zero pooled variance
/// yields 0 when the means tie and +/-infinity when they differ.
inline double two_sample_pooled_t(std::span<const double> group_a,
                                  std::span<const double> group_b) {
  const std::size_t na = group_a.size(), nb = group_b.size();
  double sa = 0.0, sb = 0.0;
  for (double x : group_a) sa += x;
  for (double x : group_b) sb += x;
  const double ma = sa / static_cast<double>(na);
  const double mb = sb / static_cast<double>(nb);
  // per-group accumulation, joined by one commutative addition: swapping
  // the groups negates the statistic exactly
  double ssa = 0.0, ssb = 0.0;
  for (double x : group_a) ssa += (x - ma) * (x - ma);
  for (double x : group_b) ssb += (x - mb) * (x - mb);
  const double pooled = (ssa + ssb) / static_cast<double>(na + nb - 2);
  const double diff = ma - mb;
  if (!(pooled > 0.0)) {
    if (diff == 0.0) return 0.0;
    return std::copysign(std::numeric_limits<double>::infinity(), diff);
  }
  return diff / std::sqrt(pooled * (1.0 / na + 1.0 / nb));
}

}  // namespace ctp
