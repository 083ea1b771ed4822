#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

namespace ctp {

/// Index set over hypothesis positions 0..n-1, stored as a 64-bit mask.
/// Bit i set means hypothesis i belongs to the subset.
class Subset {
 public:
  constexpr Subset() = default;
  constexpr explicit Subset(std::uint64_t bits) : bits_(bits) {}

  static constexpr Subset single(int i) { return Subset(std::uint64_t{1} << i); }

  static constexpr Subset full(int n) {
    return n >= 64 ? Subset(~std::uint64_t{0})
                   : Subset((std::uint64_t{1} << n) - 1);
  }

  static Subset from_indices(std::span<const int> zero_based) {
    std::uint64_t bits = 0;
    for (int i : zero_based) {
      if (i < 0 || i >= 64) throw std::out_of_range("subset index out of range");
      bits |= std::uint64_t{1} << i;
    }
    return Subset(bits);
  }

  static Subset from_indices(std::initializer_list<int> zero_based) {
    return from_indices(std::span<const int>(zero_based.begin(), zero_based.size()));
  }

  constexpr std::uint64_t bits() const { return bits_; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr int count() const { return std::popcount(bits_); }
  constexpr bool contains(int i) const { return (bits_ >> i) & 1; }
  constexpr bool contains_all(Subset other) const {
    return (bits_ & other.bits_) == other.bits_;
  }
  constexpr bool is_subset_of(Subset other) const {
    return other.contains_all(*this);
  }

  constexpr Subset operator|(Subset o) const { return Subset(bits_ | o.bits_); }
  constexpr Subset operator&(Subset o) const { return Subset(bits_ & o.bits_); }
  constexpr Subset operator^(Subset o) const { return Subset(bits_ ^ o.bits_); }
  constexpr bool operator==(const Subset&) const = default;
  constexpr auto operator<=>(const Subset&) const = default;

  /// Member indices in ascending order (0-based).
  std::vector<int> indices() const {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(count()));
    for (std::uint64_t b = bits_; b != 0; b &= b - 1)
      out.push_back(std::countr_zero(b));
    return out;
  }

  template <class F>
  void for_each(F&& fn) const {
    for (std::uint64_t b = bits_; b != 0; b &= b - 1)
      fn(std::countr_zero(b));
  }

 private:
  std::uint64_t bits_ = 0;
};

/// Visit every nonempty submask of `s` (in decreasing mask order).
template <class F>
void for_each_submask(Subset s, F&& fn) {
  const std::uint64_t m = s.bits();
  for (std::uint64_t sub = m; sub != 0; sub = (sub - 1) & m) fn(Subset(sub));
}

/// Visit every superset of `s` inside {0..n-1} (including `s` itself).
template <class F>
void for_each_supermask(Subset s, int n, F&& fn) {
  const std::uint64_t comp = Subset::full(n).bits() & ~s.bits();
  for (std::uint64_t add = comp;; add = (add - 1) & comp) {
    fn(Subset(s.bits() | add));
    if (add == 0) break;
  }
}

}  // namespace ctp

template <>
struct std::hash<ctp::Subset> {
  std::size_t operator()(const ctp::Subset& s) const noexcept {
    return std::hash<std::uint64_t>{}(s.bits());
  }
};
