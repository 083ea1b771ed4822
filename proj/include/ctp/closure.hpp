#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ctp/errors.hpp"
#include "ctp/family.hpp"
#include "ctp/local_tests.hpp"
#include "ctp/monte_carlo.hpp"
#include "ctp/parallel.hpp"
#include "ctp/subset.hpp"

namespace ctp {

/// The intersection test applied to each subset before closure.
class LocalTest {
 public:
  enum class Kind { bonferroni, simes, fisher_chisq, fisher_montecarlo, external };

  static LocalTest bonferroni() { return LocalTest(Kind::bonferroni); }
  static LocalTest simes() { return LocalTest(Kind::simes); }
  static LocalTest fisher_chisq() { return LocalTest(Kind::fisher_chisq); }

  /// Fisher statistic referred to the simulated joint null of correlated
  /// z-statistics (one shared replicate stream for all subsets).
  static LocalTest fisher_montecarlo(ResamplingConfig cfg) {
    LocalTest t(Kind::fisher_montecarlo);
    t.resampling_.emplace(std::move(cfg));
    return t;
  }

  /// Caller-supplied subset -> p-value source (permutation p-values, a
  /// precomputed table, ...).
  static LocalTest external(std::function<double(Subset)> source) {
    if (!source) throw std::invalid_argument("LocalTest::external: null source");
    LocalTest t(Kind::external);
    t.external_ = std::move(source);
    return t;
  }

  Kind kind() const { return kind_; }

  const ResamplingConfig& resampling() const {
    if (!resampling_)
      throw std::logic_error("LocalTest: no resampling configuration");
    return *resampling_;
  }

  double external_p(Subset s) const {
    if (!external_) throw std::logic_error("LocalTest: no external source");
    return external_(s);
  }

 private:
  explicit LocalTest(Kind kind) : kind_(kind) {}

  Kind kind_;
  std::optional<ResamplingConfig> resampling_;
  std::function<double(Subset)> external_;
};

inline const char* to_string(LocalTest::Kind kind) {
  switch (kind) {
    case LocalTest::Kind::bonferroni: return "bonferroni";
    case LocalTest::Kind::simes: return "simes";
    case LocalTest::Kind::fisher_chisq: return "fisher";
    case LocalTest::Kind::fisher_montecarlo: return "fisher-mc";
    case LocalTest::Kind::external: return "external";
  }
  return "?";
}

/// Local p-value for every nonempty subset of {0..n-1}. Immutable once
/// built; safe to share across threads.
class ClosureTable {
 public:
  static constexpr int kDefaultMaxWidth = 24;

  ClosureTable(int n, std::vector<double> local_p_by_mask)
      : n_(n), local_p_(std::move(local_p_by_mask)) {
    if (n_ < 1 || n_ > 63)
      throw std::invalid_argument("ClosureTable: n out of range");
    if (local_p_.size() != (std::size_t{1} << n_))
      throw std::invalid_argument("ClosureTable: table size != 2^n");
    for (std::size_t m = 1; m < local_p_.size(); ++m)
      if (!(local_p_[m] >= 0.0) || local_p_[m] > 1.0)
        throw std::invalid_argument("ClosureTable: local p outside [0,1]");
    local_p_[0] = std::numeric_limits<double>::quiet_NaN();
  }

  int n() const { return n_; }

  double local_p(Subset I) const {
    check_query(I);
    return local_p_[I.bits()];
  }

  /// Mask-indexed storage; slot 0 is NaN.
  std::span<const double> values() const { return local_p_; }

  void check_query(Subset I) const {
    if (I.empty()) throw std::out_of_range("ClosureTable: empty subset");
    if (I.bits() >= (std::uint64_t{1} << n_))
      throw std::out_of_range("ClosureTable: subset outside the family");
  }

 private:
  int n_;
  std::vector<double> local_p_;
};

namespace detail {

template <class Fn>
std::vector<double> build_table(int n, unsigned workers, Fn&& local_of_mask) {
  const std::size_t nmask = std::size_t{1} << n;
  std::vector<double> table(nmask, std::numeric_limits<double>::quiet_NaN());
  parallel_chunks(nmask - 1, workers, [&](std::uint64_t begin, std::uint64_t end) {
    std::vector<double> buf;
    buf.reserve(static_cast<std::size_t>(n));
    for (std::uint64_t off = begin; off < end; ++off) {
      const std::size_t mask = static_cast<std::size_t>(off) + 1;
      table[mask] = local_of_mask(mask, buf);
    }
  });
  return table;
}

}  // namespace detail

/// Apply `test` to every nonempty subset of the family. `elementary_p`
/// supplies the per-hypothesis p-values (ignored for external tests).
/// Throws CapacityError when the family is wider than `max_width`;
/// shortcut routines (holm/hommel/fisher) cover the wide case.
inline ClosureTable build_closure(const HypothesisFamily& family,
                                  std::span<const double> elementary_p,
                                  const LocalTest& test,
                                  int max_width = ClosureTable::kDefaultMaxWidth,
                                  unsigned workers = 1) {
  const int n = family.size();
  if (n > max_width)
    throw CapacityError("build_closure: family of " + std::to_string(n) +
                        " hypotheses exceeds the enumeration cap of " +
                        std::to_string(max_width) +
                        "; use a shortcut (holm/hommel/fisher) instead");

  if (test.kind() != LocalTest::Kind::external) {
    if (static_cast<int>(elementary_p.size()) != n)
      throw std::invalid_argument("build_closure: p-value count != family size");
    for (double p : elementary_p)
      if (!(p >= 0.0) || p > 1.0)
        throw std::invalid_argument("build_closure: p-values must lie in [0,1]");
  }

  const std::size_t nmask = std::size_t{1} << n;
  switch (test.kind()) {
    case LocalTest::Kind::bonferroni: {
      auto table = detail::build_table(n, workers, [&](std::size_t mask, std::vector<double>& buf) {
        buf.clear();
        for (std::uint64_t b = mask; b; b &= b - 1)
          buf.push_back(elementary_p[static_cast<std::size_t>(std::countr_zero(b))]);
        return bonferroni_local_p(buf);
      });
      return ClosureTable(n, std::move(table));
    }
    case LocalTest::Kind::simes: {
      auto table = detail::build_table(n, workers, [&](std::size_t mask, std::vector<double>& buf) {
        buf.clear();
        for (std::uint64_t b = mask; b; b &= b - 1)
          buf.push_back(elementary_p[static_cast<std::size_t>(std::countr_zero(b))]);
        return simes_local_p(buf);
      });
      return ClosureTable(n, std::move(table));
    }
    case LocalTest::Kind::fisher_chisq: {
      // One remove-lowest-bit pass for the statistics, then the chi-square
      // reference with 2|I| degrees of freedom.
      std::vector<double> weight(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i)
        weight[static_cast<std::size_t>(i)] =
            -2.0 * std::log(detail::clamp_pvalue(elementary_p[static_cast<std::size_t>(i)]));
      std::vector<double> stat(nmask, 0.0);
      for (std::size_t mask = 1; mask < nmask; ++mask)
        stat[mask] = stat[mask & (mask - 1)] +
                     weight[static_cast<std::size_t>(std::countr_zero(mask))];
      auto table = detail::build_table(n, workers, [&](std::size_t mask, std::vector<double>&) {
        return chi_square_sf(stat[mask], 2 * std::popcount(mask));
      });
      return ClosureTable(n, std::move(table));
    }
    case LocalTest::Kind::fisher_montecarlo: {
      auto table = simulate_composite_pvalues(elementary_p, test.resampling(), workers);
      return ClosureTable(n, std::move(table));
    }
    case LocalTest::Kind::external: {
      auto table = detail::build_table(n, workers, [&](std::size_t mask, std::vector<double>&) {
        const double p = test.external_p(Subset(mask));
        if (!(p >= 0.0) || p > 1.0)
          throw std::invalid_argument("build_closure: external p outside [0,1]");
        return p;
      });
      return ClosureTable(n, std::move(table));
    }
  }
  throw std::logic_error("build_closure: unknown test kind");
}

/// Closure-adjusted p-value of H_I: max of the local p over all supersets
/// J of I. Antitone in set inclusion.
inline double adjusted_p(const ClosureTable& table, Subset I) {
  table.check_query(I);
  double worst = 0.0;
  for_each_supermask(I, table.n(), [&](Subset J) {
    worst = std::max(worst, table.local_p(J));
  });
  return worst;
}

/// Adjusted p-values for every subset at once, with optional rejection
/// indicators at a fixed level.
class AdjustedResult {
 public:
  AdjustedResult(int n, std::vector<double> adjusted_by_mask,
                 std::optional<double> alpha)
      : n_(n), adjusted_(std::move(adjusted_by_mask)), alpha_(alpha) {
    if (alpha_ && !(*alpha_ > 0.0 && *alpha_ < 1.0))
      throw std::invalid_argument("AdjustedResult: alpha must lie in (0,1)");
  }

  int n() const { return n_; }
  std::optional<double> alpha() const { return alpha_; }

  double adjusted(Subset I) const {
    check_query(I);
    return adjusted_[I.bits()];
  }

  bool rejected(Subset I) const {
    if (!alpha_) throw std::logic_error("AdjustedResult: no alpha configured");
    return adjusted(I) <= *alpha_;
  }

  std::span<const double> values() const { return adjusted_; }

  void check_query(Subset I) const {
    if (I.empty()) throw std::out_of_range("AdjustedResult: empty subset");
    if (I.bits() >= (std::uint64_t{1} << n_))
      throw std::out_of_range("AdjustedResult: subset outside the family");
  }

 private:
  int n_;
  std::vector<double> adjusted_;
  std::optional<double> alpha_;
};

/// Max-over-supersets transform of the whole table in O(n * 2^n).
inline AdjustedResult adjust_all(const ClosureTable& table,
                                 std::optional<double> alpha = std::nullopt) {
  const int n = table.n();
  const std::size_t nmask = std::size_t{1} << n;
  std::vector<double> adj(table.values().begin(), table.values().end());
  for (int b = 0; b < n; ++b) {
    const std::size_t bit = std::size_t{1} << b;
    for (std::size_t mask = 1; mask < nmask; ++mask)
      if (!(mask & bit)) adj[mask] = std::max(adj[mask], adj[mask | bit]);
  }
  adj[0] = std::numeric_limits<double>::quiet_NaN();
  return AdjustedResult(n, std::move(adj), alpha);
}

}  // namespace ctp
