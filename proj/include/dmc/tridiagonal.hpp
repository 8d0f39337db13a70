#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "dmc/errors.hpp"

namespace dmc {

/// Row-wise tridiagonal matrix: row i is lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1].
/// lower[0] and upper[n-1] are ignored.
struct Tridiagonal {
  std::vector<double> lower, diag, upper;

  Tridiagonal() = default;
  explicit Tridiagonal(std::size_t n) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}

  std::size_t size() const { return diag.size(); }

  void multiply(std::span<const double> x, std::span<double> y) const {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
      double acc = diag[i] * x[i];
      if (i > 0) acc += lower[i] * x[i - 1];
      if (i + 1 < n) acc += upper[i] * x[i + 1];
      y[i] = acc;
    }
  }

  double max_abs() const {
    double m = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
      m = std::max({m, std::abs(lower[i]), std::abs(diag[i]), std::abs(upper[i])});
    }
    return m;
  }
};

/// Thomas-algorithm factorization, reusable across right-hand sides. Meant
/// for the diagonally dominant M-matrices of the implicit steps; a vanishing
/// pivot is reported as a NumericalError.
class ThomasFactorization {
 public:
  explicit ThomasFactorization(const Tridiagonal& m) : lower_(m.lower) {
    const std::size_t n = m.size();
    c_.assign(n, 0.0);
    inv_pivot_.assign(n, 0.0);
    double pivot = m.diag[0];
    for (std::size_t i = 0; i < n; ++i) {
      if (i > 0) pivot = m.diag[i] - m.lower[i] * c_[i - 1];
      if (!(std::abs(pivot) > 1e-300) || !std::isfinite(pivot)) {
        throw NumericalError("tridiagonal solve: zero pivot at row " + std::to_string(i));
      }
      inv_pivot_[i] = 1.0 / pivot;
      c_[i] = (i + 1 < n) ? m.upper[i] * inv_pivot_[i] : 0.0;
    }
  }

  void solve_in_place(std::span<double> d) const {
    const std::size_t n = c_.size();
    d[0] *= inv_pivot_[0];
    for (std::size_t i = 1; i < n; ++i) d[i] = (d[i] - lower_[i] * d[i - 1]) * inv_pivot_[i];
    for (std::size_t i = n - 1; i-- > 0;) d[i] -= c_[i] * d[i + 1];
  }

 private:
  std::vector<double> lower_;
  std::vector<double> c_;
  std::vector<double> inv_pivot_;
};

inline std::vector<double> solve_tridiagonal(const Tridiagonal& m, std::vector<double> rhs) {
  ThomasFactorization(m).solve_in_place(rhs);
  return rhs;
}

/// Gaussian elimination with partial pivoting for a general tridiagonal
/// system (one extra fill-in diagonal). Used by inverse iteration, where the
/// shifted matrix is indefinite and nearly singular.
inline std::vector<double> solve_tridiagonal_pivoted(const Tridiagonal& m, std::vector<double> b) {
  const std::size_t n = m.size();
  std::vector<double> dl(m.lower), d(m.diag), du(m.upper), du2(n, 0.0);
  // Row i after elimination: d[i] x_i + du[i] x_{i+1} + du2[i] x_{i+2}.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double sub = dl[i + 1];
    if (std::abs(d[i]) >= std::abs(sub)) {
      const double piv = d[i] == 0.0 ? 1e-300 : d[i];
      const double f = sub / piv;
      d[i + 1] -= f * du[i];
      b[i + 1] -= f * b[i];
      dl[i + 1] = 0.0;
    } else {
      const double f = d[i] / sub;
      // swap rows i and i+1
      const double di1 = d[i + 1], dui1 = (i + 2 < n) ? du[i + 1] : 0.0;
      d[i] = sub;
      const double old_du = du[i];
      du[i] = di1;
      du2[i] = dui1;
      d[i + 1] = old_du - f * di1;
      if (i + 2 < n) du[i + 1] = -f * dui1;
      std::swap(b[i], b[i + 1]);
      b[i + 1] -= f * b[i];
      dl[i + 1] = 0.0;
    }
  }
  if (d[n - 1] == 0.0) d[n - 1] = 1e-300;
  b[n - 1] /= d[n - 1];
  if (n >= 2) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / (d[n - 2] == 0.0 ? 1e-300 : d[n - 2]);
  for (std::size_t i = n - 2; i-- > 0;) {
    const double piv = d[i] == 0.0 ? 1e-300 : d[i];
    b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / piv;
  }
  return b;
}

/// All eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (e[i] couples i and i+1), ascending. Implicit-shift QL
/// without eigenvectors; the total iteration count is capped at 50 n.
inline std::vector<double> symmetric_tridiagonal_eigenvalues(std::vector<double> d,
                                                             std::vector<double> e) {
  const std::size_t n = d.size();
  if (n == 0) return d;
  e.resize(n, 0.0);
  e[n - 1] = 0.0;
  // NR convention: e[i] couples i and i+1 after shifting, e[n-1] = 0.
  const std::size_t cap = 50 * n;
  std::size_t total = 0;
  for (std::size_t l = 0; l < n; ++l) {
    for (;;) {
      std::size_t m = l;
      for (; m + 1 < n; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m == l) break;
      if (++total > cap) throw NumericalError("tridiagonal QL: iteration cap exceeded");
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool underflow = false;
      for (std::size_t i = m; i-- > l;) {
        double f = s * e[i];
        const double b = c * e[i];
        r = std::hypot(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[m] = 0.0;
          underflow = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
      }
      if (underflow) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    }
  }
  std::sort(d.begin(), d.end());
  return d;
}

}  // namespace dmc
