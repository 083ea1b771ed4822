#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctp/closure.hpp"
#include "ctp/errors.hpp"
#include "ctp/family.hpp"
#include "ctp/subset.hpp"

namespace ctp {

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int x) {
    while (parent_[static_cast<std::size_t>(x)] != x) {
      parent_[static_cast<std::size_t>(x)] =
          parent_[static_cast<std::size_t>(parent_[static_cast<std::size_t>(x)])];
      x = parent_[static_cast<std::size_t>(x)];
    }
    return x;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

inline void require_equalities(const HypothesisFamily& family) {
  if (!family.has_equalities())
    throw UnsupportedError("constraints: family carries no equality structure");
}

}  // namespace detail

/// Canonical partition of the parameter indices induced by a set of
/// equality hypotheses (connected components, labeled by first occurrence).
/// Two hypothesis subsets are logically equivalent iff their keys match.
struct PartitionKey {
  std::vector<int> component;  // component label per parameter

  bool operator==(const PartitionKey&) const = default;
  auto operator<=>(const PartitionKey&) const = default;

  /// Blocks of size >= 2 rendered as {1,2}{3,4} over 1-based parameters.
  std::string to_string() const {
    std::string out;
    const int ncomp = component.empty()
                          ? 0
                          : *std::max_element(component.begin(), component.end()) + 1;
    for (int c = 0; c < ncomp; ++c) {
      std::vector<int> block;
      for (std::size_t i = 0; i < component.size(); ++i)
        if (component[i] == c) block.push_back(static_cast<int>(i) + 1);
      if (block.size() < 2) continue;
      out += '{';
      for (std::size_t j = 0; j < block.size(); ++j) {
        if (j) out += ',';
        out += std::to_string(block[j]);
      }
      out += '}';
    }
    return out.empty() ? "{}" : out;
  }
};

inline PartitionKey partition_key(Subset hyps, const HypothesisFamily& family) {
  detail::require_equalities(family);
  const int np = family.param_count();
  detail::UnionFind uf(np);
  hyps.for_each([&](int h) {
    const auto& e = family.equalities()[static_cast<std::size_t>(h)];
    uf.unite(e.left, e.right);
  });
  PartitionKey key;
  key.component.assign(static_cast<std::size_t>(np), -1);
  int next = 0;
  for (int i = 0; i < np; ++i) {
    const int root = uf.find(i);
    if (key.component[static_cast<std::size_t>(root)] < 0)
      key.component[static_cast<std::size_t>(root)] = next++;
    key.component[static_cast<std::size_t>(i)] =
        key.component[static_cast<std::size_t>(root)];
  }
  return key;
}

/// All hypotheses implied by the transitive closure of the input equality
/// edges: H_j joins the closure iff both its parameters fall in one
/// connected component. Extensive, monotone, idempotent.
inline Subset implication_closure(Subset hyps, const HypothesisFamily& family) {
  detail::require_equalities(family);
  detail::UnionFind uf(family.param_count());
  hyps.for_each([&](int h) {
    const auto& e = family.equalities()[static_cast<std::size_t>(h)];
    uf.unite(e.left, e.right);
  });
  std::uint64_t bits = 0;
  for (int h = 0; h < family.size(); ++h) {
    const auto& e = family.equalities()[static_cast<std::size_t>(h)];
    if (uf.find(e.left) == uf.find(e.right)) bits |= std::uint64_t{1} << h;
  }
  return Subset(bits);
}

/// One logically distinct hypothesis of the deduplicated closure: the
/// canonical representative (a closed subset) plus every subset of the
/// free-combinations lattice that collapses onto it.
struct DistinctHypothesis {
  PartitionKey key;
  Subset representative;
  std::vector<Subset> members;
};

/// Group all 2^n - 1 nonempty subsets by logical equivalence. Under
/// restricted combinations this is much smaller than the free lattice
/// (Bell(m) - 1 for the complete pairwise family over m parameters).
inline std::vector<DistinctHypothesis> distinct_closure(const HypothesisFamily& family) {
  detail::require_equalities(family);
  const int n = family.size();
  if (n > ClosureTable::kDefaultMaxWidth)
    throw CapacityError("distinct_closure: family exceeds the enumeration cap");
  const std::size_t nmask = std::size_t{1} << n;

  std::vector<std::uint64_t> closure_of(nmask, 0);
  for (std::size_t mask = 1; mask < nmask; ++mask)
    closure_of[mask] = implication_closure(Subset(mask), family).bits();

  std::vector<DistinctHypothesis> out;
  std::vector<int> slot_of(nmask, -1);
  for (std::size_t mask = 1; mask < nmask; ++mask) {
    const std::uint64_t rep = closure_of[mask];
    int slot = slot_of[static_cast<std::size_t>(rep)];
    if (slot < 0) {
      slot = static_cast<int>(out.size());
      slot_of[static_cast<std::size_t>(rep)] = slot;
      out.push_back({partition_key(Subset(rep), family), Subset(rep), {}});
    }
    out[static_cast<std::size_t>(slot)].members.push_back(Subset(mask));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.representative.count() != b.representative.count()
               ? a.representative.count() < b.representative.count()
               : a.representative < b.representative;
  });
  return out;
}

/// Closed testing over the deduplicated lattice. Each distinct hypothesis
/// is tested on its full implied constraint set (the representative), and
/// rejection requires every distinct hypothesis whose constraint set
/// contains it to have local p <= alpha.
class ConstrainedClosure {
 public:
  ConstrainedClosure(const HypothesisFamily& family,
                     std::vector<DistinctHypothesis> distinct,
                     std::vector<double> local_p)
      : n_(family.size()),
        distinct_(std::move(distinct)),
        local_p_(std::move(local_p)) {
    if (distinct_.size() != local_p_.size())
      throw std::invalid_argument("ConstrainedClosure: size mismatch");
    adjusted_.resize(local_p_.size());
    for (std::size_t d = 0; d < distinct_.size(); ++d) {
      double worst = 0.0;
      for (std::size_t e = 0; e < distinct_.size(); ++e)
        if (distinct_[e].representative.contains_all(distinct_[d].representative))
          worst = std::max(worst, local_p_[e]);
      adjusted_[d] = worst;
    }
  }

  int n() const { return n_; }
  std::span<const DistinctHypothesis> distinct() const { return distinct_; }
  double local_p(std::size_t slot) const { return local_p_.at(slot); }
  double adjusted_p(std::size_t slot) const { return adjusted_.at(slot); }

  /// Slot of the distinct hypothesis a (possibly non-closed) subset
  /// collapses onto.
  std::size_t slot_of(Subset hyps, const HypothesisFamily& family) const {
    const Subset rep = implication_closure(hyps, family);
    for (std::size_t d = 0; d < distinct_.size(); ++d)
      if (distinct_[d].representative == rep) return d;
    throw std::out_of_range("ConstrainedClosure: subset outside the family");
  }

 private:
  int n_;
  std::vector<DistinctHypothesis> distinct_;
  std::vector<double> local_p_;
  std::vector<double> adjusted_;
};

/// Local p-values for every distinct hypothesis, computed on the merged
/// hypothesis (all implied elementary p-values enter the statistic).
inline ConstrainedClosure build_constrained_closure(
    const HypothesisFamily& family, std::span<const double> elementary_p,
    const LocalTest& test, unsigned workers = 1) {
  detail::require_equalities(family);
  const int n = family.size();
  if (static_cast<int>(elementary_p.size()) != n &&
      test.kind() != LocalTest::Kind::external)
    throw std::invalid_argument("build_constrained_closure: p-value count != family size");

  auto distinct = distinct_closure(family);
  std::vector<double> local(distinct.size());

  switch (test.kind()) {
    case LocalTest::Kind::fisher_montecarlo: {
      // One shared simulation serves every node, as in the free lattice.
      const auto table =
          simulate_composite_pvalues(elementary_p, test.resampling(), workers);
      for (std::size_t d = 0; d < distinct.size(); ++d)
        local[d] = table[distinct[d].representative.bits()];
      break;
    }
    case LocalTest::Kind::external: {
      for (std::size_t d = 0; d < distinct.size(); ++d)
        local[d] = test.external_p(distinct[d].representative);
      break;
    }
    default: {
      std::vector<double> buf;
      for (std::size_t d = 0; d < distinct.size(); ++d) {
        buf.clear();
        distinct[d].representative.for_each([&](int h) {
          buf.push_back(elementary_p[static_cast<std::size_t>(h)]);
        });
        switch (test.kind()) {
          case LocalTest::Kind::bonferroni: local[d] = bonferroni_local_p(buf); break;
          case LocalTest::Kind::simes: local[d] = simes_local_p(buf); break;
          case LocalTest::Kind::fisher_chisq:
            local[d] = chi_square_sf(fisher_statistic(buf),
                                     2 * static_cast<int>(buf.size()));
            break;
          default: throw std::logic_error("build_constrained_closure: unreachable");
        }
      }
      break;
    }
  }
  return ConstrainedClosure(family, std::move(distinct), std::move(local));
}

/// (1-alpha) upper confidence bound on the true nulls in I under logical
/// constraints: the best |M intersect I| over logically closed
/// configurations M (fixed points of the implication closure, including
/// the empty one) whose hypothesis is not rejected. Never exceeds the
/// unconstrained bound.
inline int tau_upper_constrained(const ConstrainedClosure& closure, Subset I,
                                 double alpha, const HypothesisFamily& family) {
  detail::require_equalities(family);
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("tau_upper_constrained: alpha must lie in (0,1)");
  const int n = family.size();
  if (I.empty() || I.bits() >= (std::uint64_t{1} << n))
    throw std::out_of_range("tau_upper_constrained: subset outside the family");

  int best = 0;  // M = empty set is always admissible
  const auto distinct = closure.distinct();
  for (std::size_t d = 0; d < distinct.size(); ++d) {
    if (closure.adjusted_p(d) <= alpha) continue;  // configuration excluded
    best = std::max(best, (distinct[d].representative & I).count());
  }
  return best;
}

}  // namespace ctp
