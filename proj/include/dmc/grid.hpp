#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dmc/errors.hpp"

namespace dmc {

/// Uniform node-centred grid on [-1, 1]. Node 0 sits on -1 and node
/// n_cells on +1, both exactly.
class SpatialGrid {
 public:
  static constexpr int kMinCells = 8;

  explicit SpatialGrid(int n_cells) : n_cells_(n_cells) {
    detail::require(n_cells >= kMinCells,
                    "grid needs at least 8 cells, got " + std::to_string(n_cells));
    spacing_ = 2.0 / n_cells;
    nodes_.resize(static_cast<std::size_t>(n_cells) + 1);
    for (int i = 0; i <= n_cells; ++i) nodes_[i] = -1.0 + i * spacing_;
    nodes_.front() = -1.0;
    nodes_.back() = 1.0;
  }

  int n_cells() const { return n_cells_; }
  std::size_t size() const { return nodes_.size(); }
  double spacing() const { return spacing_; }
  std::span<const double> nodes() const { return nodes_; }
  double node(std::size_t i) const { return nodes_[i]; }
  double midpoint(std::size_t i) const { return 0.5 * (nodes_[i] + nodes_[i + 1]); }

  /// Trapezoid weight of node i (without the factor h).
  double weight(std::size_t i) const {
    return (i == 0 || i + 1 == nodes_.size()) ? 0.5 : 1.0;
  }

 private:
  int n_cells_;
  double spacing_;
  std::vector<double> nodes_;
};

using GridPtr = std::shared_ptr<const SpatialGrid>;

inline GridPtr build_grid(int n_cells) { return std::make_shared<const SpatialGrid>(n_cells); }

/// Nodal values of a function on a grid.
class StateVector {
 public:
  StateVector() = default;

  explicit StateVector(GridPtr grid, double fill = 0.0)
      : grid_(std::move(grid)), values_(grid_->size(), fill) {}

  StateVector(GridPtr grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    detail::require(values_.size() == grid_->size(),
                    "state has " + std::to_string(values_.size()) + " values, grid has " +
                        std::to_string(grid_->size()) + " nodes");
    for (double v : values_) {
      detail::require(std::isfinite(v), "state contains a non-finite value");
    }
  }

  static StateVector sample(GridPtr grid, const std::function<double(double)>& fn) {
    std::vector<double> values(grid->size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = fn(grid->node(i));
    return StateVector(std::move(grid), std::move(values));
  }

  const GridPtr& grid_ptr() const { return grid_; }
  const SpatialGrid& grid() const { return *grid_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  bool all_finite() const {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  double min() const {
    double m = values_.front();
    for (double v : values_) m = std::min(m, v);
    return m;
  }
  double max() const {
    double m = values_.front();
    for (double v : values_) m = std::max(m, v);
    return m;
  }
  double sup_norm() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  StateVector& operator+=(const StateVector& o) {
    for (std::size_t i = 0; i < size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  StateVector& operator-=(const StateVector& o) {
    for (std::size_t i = 0; i < size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  StateVector& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }
  friend StateVector operator+(StateVector a, const StateVector& b) { return a += b; }
  friend StateVector operator-(StateVector a, const StateVector& b) { return a -= b; }
  friend StateVector operator*(double s, StateVector a) { return a *= s; }

 private:
  GridPtr grid_;
  std::vector<double> values_;
};

inline bool same_grid(const StateVector& a, const StateVector& b) {
  return a.grid_ptr() == b.grid_ptr() || a.grid().n_cells() == b.grid().n_cells();
}

/// Piecewise-linear interpolation of nodal values onto another grid.
inline StateVector interpolate(const StateVector& u, const GridPtr& target) {
  const auto& src = u.grid();
  std::vector<double> out(target->size());
  const double h = src.spacing();
  const std::size_t last = src.size() - 1;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = target->node(i);
    double s = (x + 1.0) / h;
    auto k = static_cast<std::size_t>(std::floor(s));
    if (k >= last) k = last - 1;
    const double t = std::clamp(s - static_cast<double>(k), 0.0, 1.0);
    out[i] = (1.0 - t) * u[k] + t * u[k + 1];
  }
  return StateVector(target, std::move(out));
}

}  // namespace dmc
