#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctp {

/// The n elementary hypotheses of a testing problem: labels plus an
/// optional pairwise-equality structure (hypothesis i asserts equality of
/// two parameters), which enables restricted-combination deduplication.
class HypothesisFamily {
 public:
  struct Equality {
    int left;   // parameter index, 0-based
    int right;  // parameter index, 0-based
  };

  explicit HypothesisFamily(int n) {
    if (n < 1) throw std::invalid_argument("HypothesisFamily: n must be >= 1");
    labels_.reserve(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) labels_.push_back("H" + std::to_string(i));
  }

  explicit HypothesisFamily(std::vector<std::string> labels)
      : labels_(std::move(labels)) {
    if (labels_.empty())
      throw std::invalid_argument("HypothesisFamily: no hypotheses");
  }

  HypothesisFamily(std::vector<std::string> labels,
                   std::vector<Equality> equalities, int param_count)
      : labels_(std::move(labels)),
        equalities_(std::move(equalities)),
        param_count_(param_count) {
    if (labels_.empty())
      throw std::invalid_argument("HypothesisFamily: no hypotheses");
    if (equalities_->size() != labels_.size())
      throw std::invalid_argument(
          "HypothesisFamily: one equality per hypothesis required");
    for (const Equality& e : *equalities_) {
      if (e.left == e.right)
        throw std::invalid_argument("HypothesisFamily: equality of a parameter with itself");
      if (e.left < 0 || e.right < 0 || e.left >= param_count_ || e.right >= param_count_)
        throw std::invalid_argument("HypothesisFamily: parameter index out of range");
    }
  }

  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& label(int i) const { return labels_.at(static_cast<std::size_t>(i)); }
  std::span<const std::string> labels() const { return labels_; }

  bool has_equalities() const { return equalities_.has_value(); }
  std::span<const Equality> equalities() const {
    if (!equalities_) throw std::logic_error("HypothesisFamily: no equality structure");
    return *equalities_;
  }
  int param_count() const { return param_count_; }

 private:
  std::vector<std::string> labels_;
  std::optional<std::vector<Equality>> equalities_;
  int param_count_ = 0;
};

}  // namespace ctp
