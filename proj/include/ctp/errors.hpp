#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ctp {

// Full-lattice operation would exceed the configured width cap.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Matrix factorization failed (input not positive semi-definite).
struct DecompositionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Two-sample test with zero pooled variance.
struct ZeroVarianceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation requires constraint structure the family does not carry.
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& msg)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + msg),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace ctp
