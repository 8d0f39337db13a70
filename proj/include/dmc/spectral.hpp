#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dmc/errors.hpp"
#include "dmc/grid.hpp"
#include "dmc/norms.hpp"
#include "dmc/operator.hpp"
#include "dmc/tridiagonal.hpp"

namespace dmc {

/// Eigenpairs A w_p = -lambda_p w_p, lambda ascending, w_p orthonormal in
/// the trapezoid inner product.
struct SpectralBasis {
  std::vector<double> eigenvalues;
  std::vector<StateVector> vectors;

  std::size_t count() const { return eigenvalues.size(); }
};

namespace detail {

// Flip so that the last entry above a small threshold is positive.
inline void fix_sign(std::vector<double>& v) {
  double scale = 0.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  for (std::size_t i = v.size(); i-- > 0;) {
    if (std::abs(v[i]) > 1e-8 * scale) {
      if (v[i] < 0.0) {
        for (double& x : v) x = -x;
      }
      return;
    }
  }
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline void normalize(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("inverse iteration produced a null vector");
  for (double& x : v) x /= n;
}

}  // namespace detail

/// Lowest n_modes eigenpairs of -A. Works on the symmetrized matrix
/// W^(1/2) A W^(-1/2) restricted to unpinned nodes: eigenvalues by
/// implicit QL, eigenvectors by inverse iteration with a Rayleigh-quotient
/// update, then mapped back and normalized in the trapezoid product.
inline SpectralBasis eigendecompose(const DiscreteOperator& op, std::size_t n_modes) {
  const auto& g = op.grid();
  detail::require(n_modes >= 1, "eigendecompose needs at least one mode");
  detail::require(n_modes <= static_cast<std::size_t>(g.n_cells()) / 2,
                  "eigendecompose: n_modes must not exceed n_cells/2");
  const auto& m = op.matrix();
  const auto& w = op.symmetrizer();

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < op.size(); ++i) {
    if (!op.pinned(i)) active.push_back(i);
  }
  const std::size_t n = active.size();
  // B = -S, symmetric tridiagonal, positive semidefinite.
  std::vector<double> d(n), e(n > 0 ? n - 1 : 0);
  for (std::size_t k = 0; k < n; ++k) d[k] = -m.diag[active[k]];
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const std::size_t i = active[k];
    const double prod = m.upper[i] * m.lower[i + 1];
    e[k] = -std::copysign(std::sqrt(std::abs(prod)), m.upper[i]);
  }
  const auto all = symmetric_tridiagonal_eigenvalues(d, e);

  Tridiagonal b(n);
  for (std::size_t k = 0; k < n; ++k) {
    b.diag[k] = d[k];
    if (k + 1 < n) {
      b.upper[k] = e[k];
      b.lower[k + 1] = e[k];
    }
  }
  const double norm_b = std::max(b.max_abs(), 1e-300);

  SpectralBasis basis;
  std::vector<std::vector<double>> ys;
  std::vector<double> bx(n);
  for (std::size_t p = 0; p < n_modes; ++p) {
    double lambda = all[p];
    // Small offset so the shifted matrix is not exactly singular.
    const double shift = lambda - 1e-12 * norm_b;
    Tridiagonal shifted = b;
    for (double& x : shifted.diag) x -= shift;
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = 1.0 + 0.01 * std::sin(0.7 * (k + 1) * (p + 1));
    detail::normalize(y);
    for (int it = 0; it < 4; ++it) {
      y = solve_tridiagonal_pivoted(shifted, std::move(y));
      for (std::size_t q = 0; q < ys.size(); ++q) {
        if (std::abs(all[q] - lambda) < 1e-6 * norm_b) {
          const double c = detail::dot(ys[q], y);
          for (std::size_t k = 0; k < n; ++k) y[k] -= c * ys[q][k];
        }
      }
      detail::normalize(y);
    }
    b.multiply(y, bx);
    lambda = detail::dot(y, bx);
    double resid = 0.0;
    for (std::size_t k = 0; k < n; ++k) resid = std::max(resid, std::abs(bx[k] - lambda * y[k]));
    if (!(resid <= 1e-9 * norm_b)) {
      throw NumericalError("eigendecompose: inverse iteration did not converge for mode " +
                           std::to_string(p));
    }
    ys.push_back(y);

    std::vector<double> full(op.size(), 0.0);
    for (std::size_t k = 0; k < n; ++k) full[active[k]] = y[k] / std::sqrt(w[active[k]] * g.spacing());
    detail::fix_sign(full);
    basis.eigenvalues.push_back(lambda);
    basis.vectors.emplace_back(op.grid_ptr(), std::move(full));
  }
  return basis;
}

/// omega_p = sqrt((2p+1)/2) P_p sampled on the grid, lambda_p = p(p+1).
inline SpectralBasis legendre_basis(const GridPtr& grid, std::size_t n_modes) {
  detail::require(n_modes >= 1, "legendre_basis needs at least one mode");
  SpectralBasis basis;
  const std::size_t n = grid->size();
  std::vector<std::vector<double>> p(n_modes, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double x = grid->node(i);
    double prev = 1.0, cur = x;
    p[0][i] = 1.0;
    if (n_modes > 1) p[1][i] = x;
    for (std::size_t k = 1; k + 1 < n_modes; ++k) {
      const double next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
      prev = cur;
      cur = next;
      p[k + 1][i] = next;
    }
  }
  for (std::size_t k = 0; k < n_modes; ++k) {
    const double c = std::sqrt((2.0 * k + 1.0) / 2.0);
    for (double& v : p[k]) v *= c;
    basis.eigenvalues.push_back(static_cast<double>(k * (k + 1)));
    basis.vectors.emplace_back(grid, std::move(p[k]));
  }
  return basis;
}

inline std::vector<double> project(const StateVector& u, const SpectralBasis& basis) {
  std::vector<double> c(basis.count());
  for (std::size_t p = 0; p < c.size(); ++p) {
    detail::require(same_grid(u, basis.vectors[p]), "project: state and basis grids differ");
    c[p] = inner(u, basis.vectors[p]);
  }
  return c;
}

inline StateVector reconstruct(const std::vector<double>& coeffs, const SpectralBasis& basis) {
  detail::require(coeffs.size() <= basis.count(), "reconstruct: more coefficients than modes");
  StateVector out(basis.vectors.front().grid_ptr());
  for (std::size_t p = 0; p < coeffs.size(); ++p) {
    const auto& w = basis.vectors[p];
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += coeffs[p] * w[i];
  }
  return out;
}

/// L2 norm of the part of u the basis does not capture.
inline double projection_residual(const StateVector& u, const SpectralBasis& basis) {
  return l2_distance(u, reconstruct(project(u, basis), basis));
}

/// e^(alpha1 T1) sum_p e^(-lambda_p T1) <u0, w_p> w_p.
inline StateVector duhamel_linear_evolve(const StateVector& u0, const SpectralBasis& basis,
                                         double alpha1, double t1) {
  detail::require(t1 > 0.0, "duhamel_linear_evolve needs T1 > 0");
  auto c = project(u0, basis);
  for (std::size_t p = 0; p < c.size(); ++p) {
    c[p] *= std::exp(alpha1 * t1 - basis.eigenvalues[p] * t1);
  }
  return reconstruct(c, basis);
}

/// |a u_x| on the first and last cell faces; tends to zero under refinement
/// when the flux trace vanishes.
inline std::pair<double, double> flux_trace_check(const StateVector& u, const DiffusionProfile& a) {
  const auto& g = u.grid();
  const double h = g.spacing();
  const std::size_t n = u.size();
  const double left = a(g.midpoint(0)) * (u[1] - u[0]) / h;
  const double right = a(g.midpoint(n - 2)) * (u[n - 1] - u[n - 2]) / h;
  return {std::abs(left), std::abs(right)};
}

}  // namespace dmc
