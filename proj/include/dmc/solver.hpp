#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dmc/control.hpp"
#include "dmc/errors.hpp"
#include "dmc/grid.hpp"
#include "dmc/nonlinearity.hpp"
#include "dmc/norms.hpp"
#include "dmc/operator.hpp"
#include "dmc/tridiagonal.hpp"

namespace dmc {

enum class Scheme { ImplicitEulerIMEX, CrankNicolsonIMEX };

inline const char* to_string(Scheme s) {
  return s == Scheme::ImplicitEulerIMEX ? "implicit_euler" : "crank_nicolson";
}

struct SolverConfig {
  Scheme scheme = Scheme::ImplicitEulerIMEX;
  double newton_tol = 1e-10;
  int newton_max_iters = 25;
  bool clip_negative = false;
  int store_stride = 1;  // keep every k-th step; the final state is always kept

  void validate() const {
    detail::require(newton_tol > 0.0, "newton_tol must be positive");
    detail::require(newton_max_iters > 0, "newton_max_iters must be positive");
    detail::require(store_stride >= 1, "store_stride must be >= 1");
  }
};

/// Time stepping on [t_start, t_end] with steps no longer than dt. Every
/// control breakpoint strictly inside the interval is a step boundary, and
/// each slab piece gets at least min_steps_per_slab equal steps.
struct TimeGrid {
  double t_start = 0.0;
  double t_end = 1.0;
  double dt = 1e-3;
  int min_steps_per_slab = 1;

  TimeGrid() = default;
  TimeGrid(double start, double end, double step, int min_steps = 1)
      : t_start(start), t_end(end), dt(step), min_steps_per_slab(min_steps) {
    validate();
  }

  void validate() const {
    detail::require(std::isfinite(t_start) && std::isfinite(t_end) && t_end > t_start,
                    "time grid needs t_end > t_start");
    detail::require(dt > 0.0 && std::isfinite(dt), "time step must be positive");
    detail::require(min_steps_per_slab >= 1, "min_steps_per_slab must be >= 1");
  }

  /// Step boundaries including both ends.
  std::vector<double> nodes(const std::vector<double>& breakpoints = {}) const {
    validate();
    std::vector<double> marks{t_start};
    for (double b : breakpoints) {
      if (b > t_start && b < t_end) marks.push_back(b);
    }
    marks.push_back(t_end);
    std::vector<double> out{t_start};
    for (std::size_t k = 1; k < marks.size(); ++k) {
      const double len = marks[k] - marks[k - 1];
      const auto steps = std::max<long long>(min_steps_per_slab,
                                             static_cast<long long>(std::ceil(len / dt - 1e-9)));
      for (long long s = 1; s < steps; ++s) out.push_back(marks[k - 1] + len * s / steps);
      out.push_back(marks[k]);
    }
    return out;
  }
};

struct StepDiagnostics {
  double t;
  double l2;
  double seminorm;
  double min;
  double f_norm;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<StateVector> states;
  std::vector<StepDiagnostics> diagnostics;
  double global_min = std::numeric_limits<double>::infinity();  // over every step, stored or not
  double max_f_norm = 0.0;
  std::size_t steps = 0;
  std::size_t newton_steps = 0;

  const StateVector& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
};

namespace detail {

inline double f_l2_norm(const Nonlinearity& f, const StateVector& u, double t) {
  if (f.is_zero()) return 0.0;
  const auto& g = u.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double v = f(g.node(i), t, u[i]);
    acc += g.weight(i) * v * v;
  }
  return std::sqrt(acc * g.spacing());
}

// ||A u + f(u)||, the forcing seen by a state that is held in place.
inline double f_l2_norm_combined(const StateVector& au, const Nonlinearity& f, const StateVector& u, double t) {
  const auto& g = u.grid();
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double v = au[i] + (f.is_zero() ? 0.0 : f(g.node(i), t, u[i]));
    acc += g.weight(i) * v * v;
  }
  return std::sqrt(acc * g.spacing());
}

inline StepDiagnostics diagnose(const StateVector& u, double t, const DiscreteOperator& op,
                                const Nonlinearity& f) {
  return {t, l2_norm(u), h1a_seminorm(u, op.profile()), u.min(), f_l2_norm(f, u, t)};
}

// M = I - c (A + diag(alpha)) for c = theta * dt.
inline Tridiagonal implicit_matrix(const DiscreteOperator& op, const StateVector& alpha, double c) {
  Tridiagonal m = op.matrix();
  for (std::size_t i = 0; i < m.size(); ++i) {
    m.lower[i] *= -c;
    m.upper[i] *= -c;
    m.diag[i] = 1.0 - c * (m.diag[i] + alpha[i]);
  }
  return m;
}

// One step with the linear part factored once per (slab, dt).
class Stepper {
 public:
  Stepper(const DiscreteOperator& op, const StateVector& alpha, const Nonlinearity& f, double dt,
          const SolverConfig& cfg)
      : op_(op), alpha_(alpha), f_(f), dt_(dt), cfg_(cfg),
        theta_(cfg.scheme == Scheme::ImplicitEulerIMEX ? 1.0 : 0.5),
        uniform_(alpha.size() > 0 && alpha.min() == alpha.max()),
        growth_(uniform_ ? std::exp(alpha[0] * dt) : 1.0),
        matrix_(implicit_matrix(op, uniform_ ? StateVector(alpha.grid_ptr(), 0.0) : alpha, theta_ * dt)),
        factor_(matrix_) {
    require(dt > 0.0, "step needs dt > 0");
    require(alpha.size() == op.size(), "control profile and operator sizes differ");
  }

  bool newton_needed(const StateVector& u) const {
    if (f_.is_zero()) return false;
    const double m = u.sup_norm();
    return f_.delta_star() * dt_ * std::pow(m, f_.theta() - 1.0) > 0.5;
  }

  StateVector step(const StateVector& u, double t, bool* used_newton = nullptr) const {
    const auto& g = u.grid();
    const std::size_t n = u.size();
    const bool newton = newton_needed(u);
    if (used_newton) *used_newton = newton;

    // Explicit part: u + (1 - theta) dt L u, L = A + diag(alpha).
    std::vector<double> rhs(u.values().begin(), u.values().end());
    if (theta_ < 1.0) {
      std::vector<double> lu(n);
      op_.matrix().multiply(u.values(), lu);
      const double ac = uniform_ ? 0.0 : 1.0;
      for (std::size_t i = 0; i < n; ++i) rhs[i] += (1.0 - theta_) * dt_ * (lu[i] + ac * alpha_[i] * u[i]);
    }
    StateVector next(u.grid_ptr());
    if (!newton) {
      if (!f_.is_zero()) {
        for (std::size_t i = 0; i < n; ++i) rhs[i] += dt_ * f_(g.node(i), t, u[i]);
      }
      factor_.solve_in_place(rhs);
      std::copy(rhs.begin(), rhs.end(), next.values().begin());
    } else {
      if (theta_ < 1.0) {
        for (std::size_t i = 0; i < n; ++i) rhs[i] += (1.0 - theta_) * dt_ * f_(g.node(i), t, u[i]);
      }
      next = newton_solve(u, rhs, t + dt_);
    }
    if (uniform_) next = growth_ * next;
    op_.enforce_pins(next);
    if (!next.all_finite()) {
      throw NumericalError("time step at t = " + std::to_string(t) + " produced a non-finite state");
    }
    if (cfg_.clip_negative) {
      for (double& v : next.values()) v = std::max(v, 0.0);
    }
    return next;
  }

 private:
  // Solve v - theta dt (L v + f(t1, v)) = rhs by damped Newton.
  StateVector newton_solve(const StateVector& guess, const std::vector<double>& rhs, double t1) const {
    const auto& g = guess.grid();
    const std::size_t n = guess.size();
    const double c = theta_ * dt_;
    std::vector<double> v(guess.values().begin(), guess.values().end());
    std::vector<double> mv(n), res(n);

    auto residual = [&](const std::vector<double>& x, std::vector<double>& r) {
      matrix_.multiply(x, mv);
      double norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        r[i] = mv[i] - c * f_(g.node(i), t1, x[i]) - rhs[i];
        norm = std::max(norm, std::abs(r[i]));
      }
      return norm;
    };

    double scale = 1.0;
    for (double x : rhs) scale = std::max(scale, std::abs(x));
    double rn = residual(v, res);
    for (int it = 0; it < cfg_.newton_max_iters; ++it) {
      if (rn <= cfg_.newton_tol * scale) return StateVector(guess.grid_ptr(), v);
      Tridiagonal jac = matrix_;
      for (std::size_t i = 0; i < n; ++i) jac.diag[i] -= c * f_.derivative(g.node(i), t1, v[i]);
      std::vector<double> delta = solve_tridiagonal_pivoted(jac, res);
      double lambda = 1.0;
      std::vector<double> trial(n), tres(n);
      for (int ls = 0; ls < 30; ++ls) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = v[i] - lambda * delta[i];
        const double tn = residual(trial, tres);
        if (std::isfinite(tn) && tn < (1.0 - 1e-4 * lambda) * rn) {
          v.swap(trial);
          res.swap(tres);
          rn = tn;
          break;
        }
        lambda *= 0.5;
        if (ls == 29) throw NumericalError("Newton line search failed");
      }
    }
    if (rn <= cfg_.newton_tol * scale) return StateVector(guess.grid_ptr(), v);
    throw NumericalError("Newton iteration did not converge (residual " + std::to_string(rn) + ")");
  }

  const DiscreteOperator& op_;
  const StateVector& alpha_;
  const Nonlinearity& f_;
  double dt_;
  const SolverConfig& cfg_;
  double theta_;
  bool uniform_;   // spatially uniform alpha commutes with A: integrated exactly
  double growth_;  // exp(alpha dt) when uniform
  Tridiagonal matrix_;
  ThomasFactorization factor_;
};

}  // namespace detail

/// One IMEX step of u_t = A u + alpha u + f(x, t, u): diffusion and alpha u
/// implicit; f explicit at t, or a damped Newton solve of the implicit
/// reaction when delta_star * dt * max|u|^(theta-1) > 0.5. A spatially
/// uniform alpha is applied as the exact factor exp(alpha dt).
inline StateVector step_imex(const StateVector& u, double t, double dt, const DiscreteOperator& op,
                             const StateVector& alpha, const Nonlinearity& f,
                             const SolverConfig& cfg = {}) {
  detail::require(u.size() == op.size(), "state and operator sizes differ");
  cfg.validate();
  return detail::Stepper(op, alpha, f, dt, cfg).step(u, t);
}

/// Integrates from tg.t_start to tg.t_end under a piecewise-static control
/// whose time axis coincides with the problem's.
inline Trajectory solve(const StateVector& u0, const PiecewiseStaticControl& control,
                        const Nonlinearity& f, const DiscreteOperator& op, const TimeGrid& tg,
                        const SolverConfig& cfg = {},
                        const std::function<void(double, const StateVector&)>& observer = {}) {
  cfg.validate();
  tg.validate();
  detail::require(u0.size() == op.size(), "initial state and operator sizes differ");
  detail::require(control.profile(0).size() == op.size(), "control and operator grids differ");
  detail::require(tg.t_start >= 0.0 && tg.t_end <= control.horizon() * (1.0 + 1e-12),
                  "control does not cover the requested time interval");

  const auto nodes = tg.nodes(control.breakpoints());
  Trajectory traj;
  StateVector u = u0;
  op.enforce_pins(u);
  traj.times.push_back(nodes.front());
  traj.states.push_back(u);
  traj.diagnostics.push_back(detail::diagnose(u, nodes.front(), op, f));
  traj.global_min = u.min();
  traj.max_f_norm = traj.diagnostics.back().f_norm;
  if (observer) observer(nodes.front(), u);

  std::optional<detail::Stepper> stepper;
  std::size_t slab = std::numeric_limits<std::size_t>::max();
  double last_dt = -1.0;
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    const double t = nodes[k - 1];
    const double dt = nodes[k] - t;
    const std::size_t s = control.slab_at(0.5 * (t + nodes[k]));
    if (s != slab || std::abs(dt - last_dt) > 1e-12 * dt) {
      stepper.emplace(op, control.profile(s), f, dt, cfg);
      slab = s;
      last_dt = dt;
    }
    bool newton = false;
    u = stepper->step(u, t, &newton);
    if (newton) ++traj.newton_steps;
    ++traj.steps;
    traj.global_min = std::min(traj.global_min, u.min());
    if (observer) observer(nodes[k], u);
    const bool last = k + 1 == nodes.size();
    if (last || k % static_cast<std::size_t>(cfg.store_stride) == 0) {
      traj.times.push_back(nodes[k]);
      traj.states.push_back(u);
      traj.diagnostics.push_back(detail::diagnose(u, nodes[k], op, f));
      traj.max_f_norm = std::max(traj.max_f_norm, traj.diagnostics.back().f_norm);
    }
  }
  return traj;
}

}  // namespace dmc
