#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dmc/errors.hpp"
#include "dmc/grid.hpp"

namespace dmc {

/// alpha(x, t) = alpha_1(x) on [t_0, t_1] and alpha_k(x) on (t_{k-1}, t_k], k >= 2.
class PiecewiseStaticControl {
 public:
  PiecewiseStaticControl(std::vector<double> breakpoints, std::vector<StateVector> profiles)
      : breakpoints_(std::move(breakpoints)), profiles_(std::move(profiles)) {
    detail::require(profiles_.size() >= 1, "control needs at least one slab");
    detail::require(breakpoints_.size() == profiles_.size() + 1,
                    "control needs one more breakpoint than profiles");
    detail::require(breakpoints_.front() == 0.0, "control breakpoints must start at t = 0");
    for (std::size_t k = 1; k < breakpoints_.size(); ++k) {
      detail::require(breakpoints_[k] > breakpoints_[k - 1],
                      "control breakpoints must be strictly increasing");
    }
    for (const auto& p : profiles_) {
      detail::require(p.all_finite(), "control profile has non-finite entries");
      detail::require(same_grid(p, profiles_.front()), "control profiles live on different grids");
    }
  }

  /// A single static profile on [0, horizon].
  static PiecewiseStaticControl constant(const StateVector& profile, double horizon) {
    return PiecewiseStaticControl({0.0, horizon}, {profile});
  }

  static PiecewiseStaticControl uniform(const GridPtr& grid, double value, double horizon) {
    return constant(StateVector(grid, value), horizon);
  }

  std::size_t slabs() const { return profiles_.size(); }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<StateVector>& profiles() const { return profiles_; }
  const StateVector& profile(std::size_t k) const { return profiles_[k]; }
  double horizon() const { return breakpoints_.back(); }
  const GridPtr& grid_ptr() const { return profiles_.front().grid_ptr(); }

  /// Slab index active at time t (closed on the left for the first slab).
  std::size_t slab_at(double t) const {
    for (std::size_t k = 1; k + 1 < breakpoints_.size(); ++k) {
      if (t <= breakpoints_[k]) return k - 1;
    }
    return profiles_.size() - 1;
  }

  /// ||alpha^+||_inf over all slabs.
  double positive_sup() const {
    double m = 0.0;
    for (const auto& p : profiles_) m = std::max(m, p.max());
    return m;
  }

  double sup_norm() const {
    double m = 0.0;
    for (const auto& p : profiles_) m = std::max(m, p.sup_norm());
    return m;
  }

  bool nonpositive() const { return positive_sup() <= 0.0; }

  /// This control followed by `tail`, whose time origin is moved to the end
  /// of this one.
  PiecewiseStaticControl appended(const PiecewiseStaticControl& tail) const {
    auto bps = breakpoints_;
    auto profs = profiles_;
    const double offset = horizon();
    for (std::size_t k = 1; k < tail.breakpoints_.size(); ++k) bps.push_back(offset + tail.breakpoints_[k]);
    for (const auto& p : tail.profiles_) profs.push_back(p);
    return PiecewiseStaticControl(std::move(bps), std::move(profs));
  }

  /// Profiles resampled onto another grid by linear interpolation.
  PiecewiseStaticControl resampled(const GridPtr& grid) const {
    std::vector<StateVector> profs;
    profs.reserve(profiles_.size());
    for (const auto& p : profiles_) profs.push_back(interpolate(p, grid));
    return PiecewiseStaticControl(breakpoints_, std::move(profs));
  }

 private:
  std::vector<double> breakpoints_;
  std::vector<StateVector> profiles_;
};

}  // namespace dmc
