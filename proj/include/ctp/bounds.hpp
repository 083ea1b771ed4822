#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "ctp/closure.hpp"
#include "ctp/errors.hpp"
#include "ctp/subset.hpp"

namespace ctp {

/// Confidence statement about the composition of a query subset I:
/// with probability 1-alpha, the number of true nulls in I is at most
/// tau_upper (so at least false_lower members are false). claims[k-1]
/// carries the adjusted p-value of "at least k false nulls in I".
struct ClaimLevel {
  int k;
  double p;
};

struct TauBound {
  Subset query;
  double alpha;
  int tau_upper;
  int false_lower;
  std::vector<ClaimLevel> claims;
};

namespace detail {

inline void check_bounds_query(const AdjustedResult& adjusted, Subset I) {
  adjusted.check_query(I);
  if (I.count() > 20)
    throw CapacityError("discovery bounds: query subsets wider than 20 need a shortcut-capable local test");
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("discovery bounds: alpha must lie in (0,1)");
}

}  // namespace detail

/// (1-alpha) upper confidence bound on the number of true nulls in I:
/// the largest J subset of I that closure fails to reject (rejection uses
/// adjusted p-values over the full family, so supersets extend outside I).
inline int tau_upper(const AdjustedResult& adjusted, Subset I, double alpha) {
  detail::check_bounds_query(adjusted, I);
  detail::check_alpha(alpha);
  int best = 0;
  for_each_submask(I, [&](Subset J) {
    if (adjusted.adjusted(J) > alpha) best = std::max(best, J.count());
  });
  return best;
}

inline int tau_upper(const ClosureTable& table, Subset I, double alpha) {
  return tau_upper(adjust_all(table), I, alpha);
}

/// Adjusted p-value of the claim "at least k of the members of I are
/// false": the claim holds at FWER level alpha iff the result is <= alpha.
/// Equals the worst adjusted p over subsets of I of size |I| - k + 1.
inline double claim_adjusted_p(const AdjustedResult& adjusted, Subset I, int k) {
  detail::check_bounds_query(adjusted, I);
  if (k < 1 || k > I.count())
    throw std::invalid_argument("claim_adjusted_p: k must lie in 1..|I|");
  const int want = I.count() - k + 1;
  double worst = 0.0;
  for_each_submask(I, [&](Subset J) {
    if (J.count() == want) worst = std::max(worst, adjusted.adjusted(J));
  });
  return worst;
}

inline double claim_adjusted_p(const ClosureTable& table, Subset I, int k) {
  return claim_adjusted_p(adjust_all(table), I, k);
}

/// Full report for a query subset: tau bound, false-null lower bound, and
/// the claim ladder p-values for k = 1..|I|.
inline TauBound confidence_report(const AdjustedResult& adjusted, Subset I,
                                  double alpha) {
  detail::check_bounds_query(adjusted, I);
  detail::check_alpha(alpha);

  const int size = I.count();
  TauBound bound;
  bound.query = I;
  bound.alpha = alpha;
  bound.claims.reserve(static_cast<std::size_t>(size));

  // Worst adjusted p per subset size in one scan; claim k reads size |I|-k+1.
  std::vector<double> worst_by_size(static_cast<std::size_t>(size) + 1, 0.0);
  for_each_submask(I, [&](Subset J) {
    auto& slot = worst_by_size[static_cast<std::size_t>(J.count())];
    slot = std::max(slot, adjusted.adjusted(J));
  });

  int claimed = 0;
  for (int k = 1; k <= size; ++k) {
    const double p = worst_by_size[static_cast<std::size_t>(size - k + 1)];
    bound.claims.push_back({k, p});
    if (p <= alpha) claimed = k;
  }
  bound.tau_upper = size - claimed;
  bound.false_lower = claimed;
  return bound;
}

inline TauBound confidence_report(const ClosureTable& table, Subset I,
                                  double alpha) {
  return confidence_report(adjust_all(table), I, alpha);
}

}  // namespace ctp
