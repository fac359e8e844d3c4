#pragma once

// Dense lower-triangular Cholesky and triangular solves for the small
// symmetric systems the GP needs (n = number of observations, so tiny).
// Matrices are row-major std::vector<double> of size n*n.

#include <cmath>
#include <cstddef>
#include <vector>

namespace ckmerge {

// In-place Cholesky A = L Lᵀ of a symmetric positive-definite matrix.
// Returns false if a non-positive pivot is hit; `a` then holds garbage.
// On success the lower triangle of `a` is L and the strict upper triangle
// is zeroed.
inline bool cholesky_factor(std::vector<double>& a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    const double ljj = std::sqrt(d);
    a[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / ljj;
    }
    for (std::size_t k = j + 1; k < n; ++k) a[j * n + k] = 0.0;
  }
  return true;
}

// Solve L y = b with L lower triangular.
inline std::vector<double> forward_solve(const std::vector<double>& l, std::size_t n,
                                         const std::vector<double>& b) {
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * y[k];
    y[i] = s / l[i * n + i];
  }
  return y;
}

// Solve Lᵀ x = y with L lower triangular.
inline std::vector<double> backward_solve(const std::vector<double>& l, std::size_t n,
                                          const std::vector<double>& y) {
  std::vector<double> x(n);
  for (std::size_t ii = 0; ii < n; ++ii) {
    const std::size_t i = n - 1 - ii;
    double s = y[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l[k * n + i] * x[k];
    x[i] = s / l[i * n + i];
  }
  return x;
}

// Solve (L Lᵀ) x = b.
inline std::vector<double> cholesky_solve(const std::vector<double>& l, std::size_t n,
                                          const std::vector<double>& b) {
  return backward_solve(l, n, forward_solve(l, n, b));
}

}  // namespace ckmerge
