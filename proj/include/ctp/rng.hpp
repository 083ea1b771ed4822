#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ctp {

/// Counter-based splittable generator: stream (seed, counter) is derived by
/// strong 64-bit mixing, so replicate r can be simulated independently of
/// every other replicate. This is what makes results independent of how
/// replicates are partitioned across workers.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t counter)
      : state_(mix(seed + 0x9E3779B97F4A7C15ULL * (counter + 1)) ^
               mix(counter + 0xD1B54A32D192ED03ULL)) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform draw in (0, 1].
  double next_unit() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ctp
