#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "dmc/control.hpp"
#include "dmc/errors.hpp"
#include "dmc/grid.hpp"
#include "dmc/nonlinearity.hpp"
#include "dmc/norms.hpp"
#include "dmc/operator.hpp"
#include "dmc/solver.hpp"

namespace dmc {

/// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int m) {
  detail::require(m >= 1, "gauss_legendre needs m >= 1");
  std::vector<double> x(m), w(m);
  const double pi = std::acos(-1.0);
  for (int i = 0; i < m; ++i) {
    double z = std::cos(pi * (i + 0.75) / (m + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 1; k < m; ++k) {
        const double p2 = ((2.0 * k + 1.0) * z * p1 - k * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
      }
      if (m == 1) p0 = 1.0;
      dp = m * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {std::move(x), std::move(w)};
}

/// Exact solution of u_t = ((1 - x^2) u_x)_x with zero flux at +-1, via the
/// Legendre series of u0 (coefficients by Gauss quadrature).
class LegendreHeatOracle {
 public:
  LegendreHeatOracle(const std::function<double(double)>& u0, int modes = 60) : coeffs_(modes) {
    const auto [x, w] = gauss_legendre(2 * modes + 20);
    for (std::size_t q = 0; q < x.size(); ++q) {
      const double fx = u0(x[q]);
      double prev = 0.0, pk = 1.0;
      for (int k = 0; k < modes; ++k) {
        coeffs_[k] += w[q] * fx * pk * (2.0 * k + 1.0) / 2.0;
        const double next = ((2.0 * k + 1.0) * x[q] * pk - k * prev) / (k + 1.0);
        prev = pk;
        pk = next;
      }
    }
  }

  double operator()(double x, double t) const {
    double prev = 0.0, pk = 1.0, sum = 0.0;
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      sum += coeffs_[k] * std::exp(-static_cast<double>(k * (k + 1)) * t) * pk;
      const double next = ((2.0 * k + 1.0) * x * pk - k * prev) / (k + 1.0);
      prev = pk;
      pk = next;
    }
    return sum;
  }

  const std::vector<double>& coefficients() const { return coeffs_; }

 private:
  std::vector<double> coeffs_;  // u0 = sum c_k P_k
};

struct ConvergenceReport {
  std::string variable;        // "h" or "dt"
  std::vector<double> steps;   // h or dt per level
  std::vector<double> errors;  // L2 error per level
  std::vector<double> orders;  // between consecutive levels
  double order = std::numeric_limits<double>::quiet_NaN();  // least-squares slope
  bool degenerate = false;     // all errors zero, no order defined
};

/// Free decay u_t = ((1 - x^2) u_x)_x, zero flux, used by both studies.
struct DecayProblem {
  std::function<double(double)> u0;
  double horizon = 0.5;
  Scheme scheme = Scheme::ImplicitEulerIMEX;
  int n_cells = 200;   // temporal study
  double dt = 2.5e-4;  // spatial study
};

namespace detail {

inline ConvergenceReport finish_report(ConvergenceReport r) {
  bool all_zero = true;
  for (double e : r.errors) all_zero = all_zero && e == 0.0;
  if (all_zero) {
    r.degenerate = true;
    return r;
  }
  for (std::size_t k = 0; k + 1 < r.errors.size(); ++k) {
    r.orders.push_back(std::log(r.errors[k] / r.errors[k + 1]) / std::log(r.steps[k] / r.steps[k + 1]));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(r.errors.size());
  for (std::size_t k = 0; k < r.errors.size(); ++k) {
    const double lx = std::log(r.steps[k]), ly = std::log(r.errors[k]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  r.order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return r;
}

inline StateVector run_decay(const GridPtr& grid, const std::function<double(double)>& u0,
                             double horizon, double dt, Scheme scheme) {
  const auto op = assemble_operator(grid, DiffusionProfile::legendre(), WeightedNeumann{});
  const auto control = PiecewiseStaticControl::uniform(grid, 0.0, horizon);
  SolverConfig cfg;
  cfg.scheme = scheme;
  cfg.store_stride = 1 << 30;
  return solve(StateVector::sample(grid, u0), control, Nonlinearity::zero(), op,
               TimeGrid(0.0, horizon, dt), cfg)
      .final_state();
}

}  // namespace detail

/// Errors in dt at fixed grid against a Crank-Nicolson reference run with a
/// step 64 times smaller than the finest level (same grid, so only the time
/// error is measured).
inline ConvergenceReport temporal_convergence_study(const DecayProblem& p, std::vector<double> dts) {
  detail::require(dts.size() >= 3, "convergence study needs at least 3 levels");
  const auto grid = build_grid(p.n_cells);
  double finest = dts.front();
  for (double d : dts) finest = std::min(finest, d);
  const auto ref = detail::run_decay(grid, p.u0, p.horizon, finest / 64.0, Scheme::CrankNicolsonIMEX);
  ConvergenceReport r;
  r.variable = "dt";
  for (double dt : dts) {
    r.steps.push_back(dt);
    r.errors.push_back(l2_distance(detail::run_decay(grid, p.u0, p.horizon, dt, p.scheme), ref));
  }
  return detail::finish_report(std::move(r));
}

/// Errors in h against the Legendre-series solution at the grid nodes.
inline ConvergenceReport spatial_convergence_study(const DecayProblem& p, std::vector<int> n_cells) {
  detail::require(n_cells.size() >= 3, "convergence study needs at least 3 levels");
  const LegendreHeatOracle oracle(p.u0);
  ConvergenceReport r;
  r.variable = "h";
  for (int n : n_cells) {
    const auto grid = build_grid(n);
    const auto u = detail::run_decay(grid, p.u0, p.horizon, p.dt, p.scheme);
    const auto exact = StateVector::sample(grid, [&](double x) { return oracle(x, p.horizon); });
    r.steps.push_back(grid->spacing());
    r.errors.push_back(l2_distance(u, exact));
  }
  return detail::finish_report(std::move(r));
}

}  // namespace dmc
