#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctp/errors.hpp"

namespace ctp {

/// Correlation matrix of a z-statistic vector: symmetric, unit diagonal.
/// Positive semi-definiteness is enforced at factorization time.
class CovarianceMatrix {
 public:
  CovarianceMatrix(int dim, std::vector<double> entries)
      : dim_(dim), entries_(std::move(entries)) {
    if (dim_ < 1) throw std::invalid_argument("CovarianceMatrix: dim must be >= 1");
    if (entries_.size() != static_cast<std::size_t>(dim_) * dim_)
      throw std::invalid_argument("CovarianceMatrix: entry count != dim*dim");
    constexpr double tol = 1e-12;
    for (int i = 0; i < dim_; ++i) {
      for (int j = 0; j < dim_; ++j) {
        const double v = (*this)(i, j);
        if (!std::isfinite(v))
          throw std::invalid_argument("CovarianceMatrix: non-finite entry");
        if (std::abs(v - (*this)(j, i)) > tol)
          throw std::invalid_argument("CovarianceMatrix: not symmetric");
      }
      if (std::abs((*this)(i, i) - 1.0) > tol)
        throw std::invalid_argument("CovarianceMatrix: diagonal entries must equal 1");
    }
  }

  static CovarianceMatrix identity(int dim) {
    std::vector<double> e(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int i = 0; i < dim; ++i) e[static_cast<std::size_t>(i) * dim + i] = 1.0;
    return CovarianceMatrix(dim, std::move(e));
  }

  int dim() const { return dim_; }
  double operator()(int i, int j) const {
    return entries_[static_cast<std::size_t>(i) * dim_ + j];
  }
  std::span<const double> data() const { return entries_; }

 private:
  int dim_;
  std::vector<double> entries_;
};

/// Factor G with G * G^T equal to the input. For positive definite inputs
/// this is the lower-triangular Cholesky factor; rank-deficient inputs are
/// handled by diagonal pivoting, which yields a row-permuted triangle with
/// zero columns for the null space. The product always reproduces the
/// input (elementwise 1e-10 on well-scaled correlation matrices).
class CholeskyFactor {
 public:
  CholeskyFactor(int dim, std::vector<double> entries)
      : dim_(dim), entries_(std::move(entries)) {}

  int dim() const { return dim_; }
  double operator()(int i, int j) const {
    return entries_[static_cast<std::size_t>(i) * dim_ + j];
  }

  /// out = G * g
  void multiply(std::span<const double> g, std::span<double> out) const {
    for (int i = 0; i < dim_; ++i) {
      double s = 0.0;
      const double* row = entries_.data() + static_cast<std::size_t>(i) * dim_;
      for (int j = 0; j < dim_; ++j) s += row[j] * g[j];
      out[i] = s;
    }
  }

 private:
  int dim_;
  std::vector<double> entries_;
};

/// Cholesky factorization with diagonal pivoting so that exactly singular
/// correlation matrices (common for contrast statistics) factor cleanly.
/// Throws DecompositionError naming the offending pivot when the input is
/// indefinite.
inline CholeskyFactor cholesky_factor(const CovarianceMatrix& cov) {
  const int n = cov.dim();
  std::vector<double> a(cov.data().begin(), cov.data().end());
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  // Triangle built in pivoted row order; the permutation is undone at the end.
  std::vector<double> l(static_cast<std::size_t>(n) * n, 0.0);
  auto A = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
  auto L = [&](int i, int j) -> double& { return l[static_cast<std::size_t>(i) * n + j]; };

  constexpr double tol = 1e-9;
  int rank = n;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (A(perm[i], perm[i]) > A(perm[piv], perm[piv])) piv = i;
    if (piv != k) {
      std::swap(perm[k], perm[piv]);
      for (int j = 0; j < k; ++j) std::swap(L(k, j), L(piv, j));
    }

    const double d = A(perm[k], perm[k]);
    if (d < -tol)
      throw DecompositionError(
          "cholesky_factor: not positive semi-definite (pivoted leading minor of order " +
          std::to_string(k + 1) + " has diagonal " + std::to_string(d) + ")");
    if (d <= tol) {
      // All remaining diagonals are <= d by the pivot choice. A PSD residual
      // with (near-)zero diagonal must be (near-)zero everywhere.
      for (int i = k; i < n; ++i) {
        if (A(perm[i], perm[i]) < -tol)
          throw DecompositionError(
              "cholesky_factor: not positive semi-definite (negative residual diagonal)");
        for (int j = k; j < i; ++j)
          if (std::abs(A(perm[i], perm[j])) > 1e-7)
            throw DecompositionError(
                "cholesky_factor: not positive semi-definite (residual off-diagonal " +
                std::to_string(A(perm[i], perm[j])) + " with zero diagonal)");
      }
      rank = k;
      break;
    }
    const double root = std::sqrt(d);
    L(k, k) = root;
    for (int i = k + 1; i < n; ++i) L(i, k) = A(perm[i], perm[k]) / root;
    for (int i = k + 1; i < n; ++i) {
      for (int j = k + 1; j <= i; ++j) {
        const double delta = L(i, k) * L(j, k);
        A(perm[i], perm[j]) -= delta;
        if (i != j) A(perm[j], perm[i]) -= delta;
      }
    }
  }
  (void)rank;

  // Undo the row permutation: factor row perm[i] is pivoted row i.
  std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<std::size_t>(perm[i]) * n + j] = l[static_cast<std::size_t>(i) * n + j];
  return CholeskyFactor(n, std::move(out));
}

}  // namespace ctp
