#pragma once

#include <cmath>
#include <utility>

#include "dmc/grid.hpp"
#include "dmc/profile.hpp"

namespace dmc {

/// Trapezoid inner product on [-1, 1]. The discrete operator is self-adjoint
/// with respect to exactly this product.
inline double inner(const StateVector& u, const StateVector& v) {
  const auto& g = u.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += g.weight(i) * u[i] * v[i];
  return acc * g.spacing();
}

inline double l2_norm(const StateVector& u) { return std::sqrt(inner(u, u)); }

inline double l2_distance(const StateVector& u, const StateVector& v) {
  const auto& g = u.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double d = u[i] - v[i];
    acc += g.weight(i) * d * d;
  }
  return std::sqrt(acc * g.spacing());
}

/// Integral of u over [-1, 1] (trapezoid).
inline double integral(const StateVector& u) {
  const auto& g = u.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += g.weight(i) * u[i];
  return acc * g.spacing();
}

/// |u|_{1,a} = || sqrt(a) u_x ||: first differences on each cell, a at the
/// cell midpoint.
inline double h1a_seminorm(const StateVector& u, const DiffusionProfile& a) {
  const auto& g = u.grid();
  const double h = g.spacing();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < u.size(); ++i) {
    const double ux = (u[i + 1] - u[i]) / h;
    acc += a(g.midpoint(i)) * ux * ux;
  }
  return std::sqrt(acc * h);
}

/// ||u||_{1,a}^2 = ||u||^2 + |u|_{1,a}^2.
inline double h1a_norm(const StateVector& u, const DiffusionProfile& a) {
  const double l2 = l2_norm(u);
  const double semi = h1a_seminorm(u, a);
  return std::sqrt(l2 * l2 + semi * semi);
}

/// Pointwise positive and negative parts: u = plus - minus, plus * minus = 0.
inline std::pair<StateVector, StateVector> pos_neg_parts(const StateVector& u) {
  StateVector plus(u.grid_ptr()), minus(u.grid_ptr());
  for (std::size_t i = 0; i < u.size(); ++i) {
    plus[i] = u[i] > 0.0 ? u[i] : 0.0;
    minus[i] = u[i] < 0.0 ? -u[i] : 0.0;
  }
  return {std::move(plus), std::move(minus)};
}

}  // namespace dmc
