#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>

namespace yamabe {

inline constexpr int kMaxDim = 8;

/// Small dense n x n matrices stored row-major in spans; n <= kMaxDim.
namespace linalg {

using Scratch = std::array<double, kMaxDim * kMaxDim>;

/// Cholesky factor L (lower, row-major) of a symmetric matrix.
/// Returns the index k of the first non-positive leading principal minor, or -1 on success.
/// The k-th leading minor equals prod_{i<=k} L_ii^2, so success is exactly Sylvester's criterion.
inline int cholesky(std::span<const double> a, int n, std::span<double> l) {
  for (int i = 0; i < n * n; ++i) l[i] = 0.0;
  for (int j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (int k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
    if (!(d > 0.0)) return j;
    const double ljj = std::sqrt(d);
    l[j * n + j] = ljj;
    for (int i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (int k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      l[i * n + j] = s / ljj;
    }
  }
  return -1;
}

/// Determinant of an SPD matrix from its Cholesky factor.
inline double det_from_cholesky(std::span<const double> l, int n) {
  double d = 1.0;
  for (int i = 0; i < n; ++i) d *= l[i * n + i];
  return d * d;
}

/// Inverse of an SPD matrix given its Cholesky factor; writes the full symmetric inverse.
inline void inverse_from_cholesky(std::span<const double> l, int n, std::span<double> inv) {
  Scratch linv{};
  for (int i = 0; i < n; ++i) {
    linv[i * n + i] = 1.0 / l[i * n + i];
    for (int j = 0; j < i; ++j) {
      double s = 0.0;
      for (int k = j; k < i; ++k) s -= l[i * n + k] * linv[k * n + j];
      linv[i * n + j] = s / l[i * n + i];
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int k = i; k < n; ++k) s += linv[k * n + i] * linv[k * n + j];
      inv[i * n + j] = s;
      inv[j * n + i] = s;
    }
  }
}

/// General determinant by partial-pivot LU (used where the matrix may be indefinite).
inline double det_general(std::span<const double> a, int n) {
  Scratch m{};
  for (int i = 0; i < n * n; ++i) m[i] = a[i];
  double det = 1.0;
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(m[r * n + c]) > std::abs(m[p * n + c])) p = r;
    if (m[p * n + c] == 0.0) return 0.0;
    if (p != c) {
      for (int k = 0; k < n; ++k) std::swap(m[c * n + k], m[p * n + k]);
      det = -det;
    }
    det *= m[c * n + c];
    for (int r = c + 1; r < n; ++r) {
      const double f = m[r * n + c] / m[c * n + c];
      for (int k = c; k < n; ++k) m[r * n + k] -= f * m[c * n + k];
    }
  }
  return det;
}

/// tr(A^{-1} B) for symmetric A^{-1} given explicitly.
inline double trace_with(std::span<const double> ainv, std::span<const double> b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s += ainv[i * n + j] * b[j * n + i];
  return s;
}

/// Full contraction A^{ia} A^{jb} X_ij Y_ab with symmetric A^{-1} given explicitly.
inline double contract(std::span<const double> ainv, std::span<const double> x, std::span<const double> y, int n) {
  Scratch t{};
  // t = A^{-1} X A^{-1}
  Scratch u{};
  for (int i = 0; i < n; ++i)
    for (int b = 0; b < n; ++b) {
      double s = 0.0;
      for (int j = 0; j < n; ++j) s += x[i * n + j] * ainv[j * n + b];
      u[i * n + b] = s;
    }
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += ainv[a * n + i] * u[i * n + b];
      t[a * n + b] = s;
    }
  double s = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) s += t[a * n + b] * y[a * n + b];
  return s;
}

} // namespace linalg
} // namespace yamabe
