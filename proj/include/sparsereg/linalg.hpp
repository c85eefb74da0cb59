#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace sparsereg {
namespace detail {

// Cyclic Jacobi eigendecomposition for small symmetric matrices (n <= 16).
// A is row-major n*n and is destroyed; eigenvalues land in eig, eigenvectors
// in the columns of V.
inline void jacobi_eigen(std::vector<double>& A, int n, std::vector<double>& V,
                         std::vector<double>& eig) {
  V.assign(size_t(n) * n, 0.0);
  for (int i = 0; i < n; ++i) V[size_t(i) * n + i] = 1.0;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += A[size_t(i) * n + j] * A[size_t(i) * n + j];
    if (off < 1e-28) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = A[size_t(p) * n + q];
        if (std::abs(apq) < 1e-300) continue;
        const double app = A[size_t(p) * n + p], aqq = A[size_t(q) * n + q];
        const double tau = (aqq - app) / (2 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1 + tau * tau));
        const double c = 1.0 / std::sqrt(1 + t * t), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = A[size_t(k) * n + p], akq = A[size_t(k) * n + q];
          A[size_t(k) * n + p] = c * akp - s * akq;
          A[size_t(k) * n + q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = A[size_t(p) * n + k], aqk = A[size_t(q) * n + k];
          A[size_t(p) * n + k] = c * apk - s * aqk;
          A[size_t(q) * n + k] = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = V[size_t(k) * n + p], vkq = V[size_t(k) * n + q];
          V[size_t(k) * n + p] = c * vkp - s * vkq;
          V[size_t(k) * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  eig.resize(n);
  for (int i = 0; i < n; ++i) eig[i] = A[size_t(i) * n + i];
}

// Minimum-norm solve of A x = b for small symmetric positive-semidefinite A
// via the eigendecomposition; eigenvalues below rel_tol * lambda_max count as
// zero. Returns true when the system was rank-deficient.
inline bool solve_spd_min_norm(std::vector<double> A, int n,
                               const std::vector<double>& b,
                               std::vector<double>& x,
                               double rel_tol = 1e-12) {
  std::vector<double> V, eig;
  jacobi_eigen(A, n, V, eig);
  double lmax = 0.0;
  for (double e : eig) lmax = std::max(lmax, e);
  const double cut = std::max(lmax * rel_tol, 1e-300);
  bool deficient = false;
  x.assign(n, 0.0);
  for (int k = 0; k < n; ++k) {
    if (eig[k] <= cut) {
      deficient = true;
      continue;
    }
    double vb = 0.0;
    for (int i = 0; i < n; ++i) vb += V[size_t(i) * n + k] * b[i];
    const double c = vb / eig[k];
    for (int i = 0; i < n; ++i) x[i] += c * V[size_t(i) * n + k];
  }
  return deficient;
}

}  // namespace detail
}  // namespace sparsereg
