#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "dmc/errors.hpp"
#include "dmc/grid.hpp"
#include "dmc/profile.hpp"
#include "dmc/tridiagonal.hpp"

namespace dmc {

/// Node-centred finite-volume discretization of u -> (a u_x)_x.
///
/// Interior rows use the conservative stencil with a sampled at cell
/// midpoints. Boundary rows live on half cells of width h/2 and take their
/// outer flux from the boundary condition:
///   weighted Neumann:  (a u_x)(+-1) = 0;
///   Robin, beta1 != 0: (a u_x)(-1) = -(beta0/beta1) u(-1), likewise on the right;
///   Robin, beta1 == 0: u(-1) = 0, the node is pinned and eliminated.
///
/// Multiplying by the trapezoid weights W = diag(1/2, 1, ..., 1, 1/2) gives a
/// symmetric matrix, so the operator is self-adjoint in the trapezoid inner
/// product. A pinned node keeps a diagonal-only row (a penalty of the size of
/// its neighbour's diagonal) so the matrix stays nonsingular and symmetric.
class DiscreteOperator {
 public:
  DiscreteOperator(GridPtr grid, DiffusionProfile a, BoundaryCondition bc)
      : grid_(std::move(grid)), a_(std::move(a)), bc_(std::move(bc)) {
    check_compatible(a_, bc_);
    assemble();
  }

  const GridPtr& grid_ptr() const { return grid_; }
  const SpatialGrid& grid() const { return *grid_; }
  const DiffusionProfile& profile() const { return a_; }
  const BoundaryCondition& boundary() const { return bc_; }
  const Tridiagonal& matrix() const { return m_; }
  std::size_t size() const { return m_.size(); }

  /// Diagonal of W (the trapezoid weights).
  const std::vector<double>& symmetrizer() const { return w_; }

  bool pinned(std::size_t i) const { return pinned_[i]; }
  bool has_pinned() const { return pinned_.front() || pinned_.back(); }

  /// A u in flux form, so constants are mapped to exactly zero wherever the
  /// boundary rows carry no extra diagonal term.
  StateVector apply(const StateVector& u) const {
    detail::require(u.size() == size(), "operator and state sizes differ");
    StateVector out(u.grid_ptr());
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
      double acc = boundary_diag_[i] * u[i];
      if (i > 0) acc += m_.lower[i] * (u[i - 1] - u[i]);
      if (i + 1 < n) acc += m_.upper[i] * (u[i + 1] - u[i]);
      out[i] = acc;
    }
    return out;
  }

  /// Zero the pinned (Dirichlet) entries of u in place.
  void enforce_pins(StateVector& u) const {
    if (pinned_.front()) u[0] = 0.0;
    if (pinned_.back()) u[u.size() - 1] = 0.0;
  }

 private:
  void assemble() {
    const auto& g = *grid_;
    const std::size_t n = g.size();
    const double h = g.spacing();
    const double h2 = h * h;
    m_ = Tridiagonal(n);
    w_.resize(n);
    pinned_.assign(n, false);
    std::vector<double> face(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) face[i] = a_(g.midpoint(i)) / h2;

    for (std::size_t i = 1; i + 1 < n; ++i) {
      m_.lower[i] = face[i - 1];
      m_.upper[i] = face[i];
      m_.diag[i] = -(face[i - 1] + face[i]);
    }
    // Half-cell rows: divide the flux balance by h/2 instead of h.
    m_.upper[0] = 2.0 * face[0];
    m_.diag[0] = -2.0 * face[0];
    m_.lower[n - 1] = 2.0 * face[n - 2];
    m_.diag[n - 1] = -2.0 * face[n - 2];

    if (bc_.is_robin()) {
      const auto& r = bc_.robin();
      if (r.beta1 != 0.0) {
        m_.diag[0] += 2.0 * (r.beta0 / r.beta1) / h;
      } else {
        pin(0, 1);
      }
      if (r.gamma1 != 0.0) {
        m_.diag[n - 1] -= 2.0 * (r.gamma0 / r.gamma1) / h;
      } else {
        pin(n - 1, n - 2);
      }
    }
    for (std::size_t i = 0; i < n; ++i) w_[i] = g.weight(i);
    boundary_diag_.assign(n, 0.0);
    std::vector<std::size_t> rows{0, n - 1};
    if (pinned_[0]) rows.push_back(1);
    if (pinned_[n - 1]) rows.push_back(n - 2);
    for (std::size_t i : rows) boundary_diag_[i] = m_.diag[i] + m_.lower[i] + m_.upper[i];
  }

  void pin(std::size_t node, std::size_t neighbour) {
    pinned_[node] = true;
    m_.diag[node] = m_.diag[neighbour] == 0.0 ? -1.0 : m_.diag[neighbour];
    m_.lower[node] = 0.0;
    m_.upper[node] = 0.0;
    if (neighbour > node) {
      m_.lower[neighbour] = 0.0;
    } else {
      m_.upper[neighbour] = 0.0;
    }
  }

  GridPtr grid_;
  DiffusionProfile a_;
  BoundaryCondition bc_;
  Tridiagonal m_;
  std::vector<double> w_;
  std::vector<double> boundary_diag_;  // diagonal part not balanced by the off-diagonals
  std::vector<bool> pinned_;
};

inline DiscreteOperator assemble_operator(GridPtr grid, const DiffusionProfile& a,
                                          const BoundaryCondition& bc) {
  return DiscreteOperator(std::move(grid), a, bc);
}

}  // namespace dmc
