#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctp/errors.hpp"
#include "ctp/rng.hpp"
#include "ctp/shortcuts.hpp"
#include "ctp/stats.hpp"

namespace ctp {

/// Two-group multivariate sample. Values are stored per group in
/// variable-major order so each variable's column is contiguous.
class TwoGroupDataset {
 public:
  TwoGroupDataset(int n_a, int n_b, int variables, std::vector<double> values_a,
                  std::vector<double> values_b,
                  std::vector<std::string> variable_labels = {})
      : n_a_(n_a), n_b_(n_b), m_(variables),
        a_(std::move(values_a)), b_(std::move(values_b)),
        labels_(std::move(variable_labels)) {
    if (n_a_ < 2 || n_b_ < 2)
      throw std::invalid_argument("TwoGroupDataset: each group needs >= 2 rows");
    if (m_ < 1) throw std::invalid_argument("TwoGroupDataset: no variables");
    if (a_.size() != static_cast<std::size_t>(n_a_) * m_ ||
        b_.size() != static_cast<std::size_t>(n_b_) * m_)
      throw std::invalid_argument("TwoGroupDataset: value count mismatch");
    if (labels_.empty())
      for (int v = 1; v <= m_; ++v) labels_.push_back("V" + std::to_string(v));
    if (static_cast<int>(labels_.size()) != m_)
      throw std::invalid_argument("TwoGroupDataset: label count mismatch");
  }

  int n_a() const { return n_a_; }
  int n_b() const { return n_b_; }
  int total() const { return n_a_ + n_b_; }
  int variables() const { return m_; }
  const std::string& variable_label(int v) const {
    return labels_.at(static_cast<std::size_t>(v));
  }
  std::span<const std::string> variable_labels() const { return labels_; }

  std::span<const double> column_a(int v) const {
    return {a_.data() + static_cast<std::size_t>(v) * n_a_, static_cast<std::size_t>(n_a_)};
  }
  std::span<const double> column_b(int v) const {
    return {b_.data() + static_cast<std::size_t>(v) * n_b_, static_cast<std::size_t>(n_b_)};
  }

  /// Pooled column (group A rows then group B rows).
  std::vector<double> pooled_column(int v) const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(total()));
    auto ca = column_a(v), cb = column_b(v);
    out.insert(out.end(), ca.begin(), ca.end());
    out.insert(out.end(), cb.begin(), cb.end());
    return out;
  }

 private:
  int n_a_, n_b_, m_;
  std::vector<double> a_, b_;
  std::vector<std::string> labels_;
};

/// How the label arrangements are generated: full enumeration of the
/// C(n_a+n_b, n_a) assignments, or uniform sampling with replacement plus
/// the identity arrangement.
struct PermutationPlan {
  enum class Mode { exhaustive, monte_carlo };

  Mode mode = Mode::exhaustive;
  std::uint64_t count = 0;  // sampled arrangements (monte-carlo only)
  std::uint64_t seed = 0;
  std::uint64_t exhaustive_threshold = 20'000;

  static PermutationPlan exhaustive(std::uint64_t threshold = 20'000) {
    PermutationPlan p;
    p.mode = Mode::exhaustive;
    p.exhaustive_threshold = threshold;
    return p;
  }

  static PermutationPlan monte_carlo(std::uint64_t count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("PermutationPlan: count must be >= 1");
    PermutationPlan p;
    p.mode = Mode::monte_carlo;
    p.count = count;
    p.seed = seed;
    return p;
  }
};

namespace detail {

inline std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t out = 1;
  for (int i = 1; i <= k; ++i)
    out = out * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
  return out;
}

/// Arrangements as sorted index lists of the rows assigned to group A.
/// The identity arrangement (rows 0..n_a-1) always comes first.
inline std::vector<std::vector<int>> enumerate_arrangements(
    const TwoGroupDataset& data, const PermutationPlan& plan) {
  const int total = data.total(), na = data.n_a();
  std::vector<std::vector<int>> out;

  if (plan.mode == PermutationPlan::Mode::exhaustive) {
    const std::uint64_t count = binomial(total, na);
    if (count > plan.exhaustive_threshold)
      throw CapacityError("permutation: " + std::to_string(count) +
                          " arrangements exceed the exhaustive threshold of " +
                          std::to_string(plan.exhaustive_threshold) +
                          "; use a monte-carlo plan");
    out.reserve(count);
    std::vector<int> pick(static_cast<std::size_t>(na));
    std::iota(pick.begin(), pick.end(), 0);  // identity first
    while (true) {
      out.push_back(pick);
      // next combination in lexicographic order
      int i = na - 1;
      while (i >= 0 && pick[static_cast<std::size_t>(i)] == total - na + i) --i;
      if (i < 0) break;
      ++pick[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < na; ++j)
        pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
  }

  out.reserve(plan.count + 1);
  std::vector<int> identity(static_cast<std::size_t>(na));
  std::iota(identity.begin(), identity.end(), 0);
  out.push_back(std::move(identity));
  std::vector<int> idx(static_cast<std::size_t>(total));
  for (std::uint64_t r = 0; r < plan.count; ++r) {
    CounterRng rng(plan.seed, r);
    std::iota(idx.begin(), idx.end(), 0);
    // partial Fisher-Yates: the first na slots become group A
    for (int i = 0; i < na; ++i) {
      const int j = i + static_cast<int>(rng.next_u64() %
                                         static_cast<std::uint64_t>(total - i));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    std::vector<int> pick(idx.begin(), idx.begin() + na);
    std::sort(pick.begin(), pick.end());
    out.push_back(std::move(pick));
  }
  return out;
}

/// |pooled t| of one variable under one arrangement, with the degenerate
/// convention from two_sample_pooled_t. Group buffers are sorted before
/// accumulation so the statistic depends only on the two value multisets,
/// never on row order; this keeps exact tie counts stable under relabeling.
inline double arrangement_abs_t(std::span<const double> pooled,
                                std::span<const int> group_a_rows,
                                std::vector<double>& buf_a,
                                std::vector<double>& buf_b) {
  const int total = static_cast<int>(pooled.size());
  buf_a.clear();
  buf_b.clear();
  std::size_t next = 0;
  for (int row = 0; row < total; ++row) {
    if (next < group_a_rows.size() && group_a_rows[next] == row) {
      buf_a.push_back(pooled[static_cast<std::size_t>(row)]);
      ++next;
    } else {
      buf_b.push_back(pooled[static_cast<std::size_t>(row)]);
    }
  }
  std::sort(buf_a.begin(), buf_a.end());
  std::sort(buf_b.begin(), buf_b.end());
  return std::abs(two_sample_pooled_t(buf_a, buf_b));
}

/// Exceedance counts: for every arrangement, how many arrangements have
/// |t| at least as large. counts[0] belongs to the identity arrangement,
/// so counts[0]/P is the marginal permutation p-value.
inline std::vector<std::uint64_t> exceedance_counts(std::span<const double> abs_t) {
  std::vector<double> sorted(abs_t.begin(), abs_t.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::uint64_t> counts(abs_t.size());
  for (std::size_t i = 0; i < abs_t.size(); ++i) {
    // #{sigma : |t_sigma| >= |t_i|}
    const auto lower = std::lower_bound(sorted.begin(), sorted.end(), abs_t[i]);
    counts[i] = static_cast<std::uint64_t>(sorted.end() - lower);
  }
  return counts;
}

struct PermutationCounts {
  std::uint64_t arrangements = 0;
  // per variable, per arrangement: exceedance counts
  std::vector<std::vector<std::uint64_t>> counts;
};

inline PermutationCounts permutation_counts(const TwoGroupDataset& data,
                                            const PermutationPlan& plan) {
  const auto arrangements = enumerate_arrangements(data, plan);
  PermutationCounts out;
  out.arrangements = arrangements.size();
  out.counts.resize(static_cast<std::size_t>(data.variables()));
  std::vector<double> abs_t(arrangements.size());
  std::vector<double> buf_a, buf_b;
  for (int v = 0; v < data.variables(); ++v) {
    const auto pooled = data.pooled_column(v);
    for (std::size_t a = 0; a < arrangements.size(); ++a)
      abs_t[a] = arrangement_abs_t(pooled, arrangements[a], buf_a, buf_b);
    out.counts[static_cast<std::size_t>(v)] = exceedance_counts(abs_t);
  }
  return out;
}

}  // namespace detail

/// Per-variable permutation p-values: the proportion of label arrangements
/// (identity included) whose |pooled t| is at least the observed one.
inline std::vector<double> permutation_marginal_pvalues(
    const TwoGroupDataset& data, const PermutationPlan& plan) {
  const auto counted = detail::permutation_counts(data, plan);
  std::vector<double> out(static_cast<std::size_t>(data.variables()));
  for (int v = 0; v < data.variables(); ++v)
    out[static_cast<std::size_t>(v)] =
        static_cast<double>(counted.counts[static_cast<std::size_t>(v)][0]) /
        static_cast<double>(counted.arrangements);
  return out;
}

/// Westfall-Young step-down minP adjusted p-values. Assumes subset
/// pivotality, which licenses the single shared permutation distribution;
/// marginal exchangeability per variable does not imply the joint
/// exchangeability this needs (see closed_bonferroni_permutation for the
/// assumption-free alternative).
inline std::vector<double> westfall_young_minp(const TwoGroupDataset& data,
                                               const PermutationPlan& plan) {
  const auto counted = detail::permutation_counts(data, plan);
  const int m = data.variables();
  const std::uint64_t narr = counted.arrangements;

  // marginal exceedance counts of the observed arrangement, sorted ascending
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return counted.counts[static_cast<std::size_t>(a)][0] <
           counted.counts[static_cast<std::size_t>(b)][0];
  });

  // successive minima over the remaining variables, one step at a time
  std::vector<std::uint64_t> min_counts(narr,
                                        std::numeric_limits<std::uint64_t>::max());
  std::vector<double> raw(static_cast<std::size_t>(m));
  for (int j = m - 1; j >= 0; --j) {
    const auto& cj = counted.counts[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
    for (std::uint64_t a = 0; a < narr; ++a)
      min_counts[a] = std::min(min_counts[a], cj[a]);
    std::uint64_t hits = 0;
    for (std::uint64_t a = 0; a < narr; ++a) hits += min_counts[a] <= cj[0];
    raw[static_cast<std::size_t>(j)] =
        static_cast<double>(hits) / static_cast<double>(narr);
  }

  std::vector<double> out(static_cast<std::size_t>(m));
  double running = 0.0;
  for (int j = 0; j < m; ++j) {
    running = std::max(running, raw[static_cast<std::size_t>(j)]);
    out[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] = running;
  }
  return out;
}

/// Holm step-down over the marginal permutation p-values: a consonant
/// closed Bonferroni procedure that needs no joint-exchangeability
/// assumption and stays valid for any group covariance structures.
inline std::vector<double> closed_bonferroni_permutation(
    const TwoGroupDataset& data, const PermutationPlan& plan) {
  return holm_adjust(permutation_marginal_pvalues(data, plan));
}

}  // namespace ctp
