#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dmc/control.hpp"
#include "dmc/nonlinearity.hpp"
#include "dmc/norms.hpp"
#include "dmc/operator.hpp"
#include "dmc/solver.hpp"

namespace dmc {

struct Witness {
  double t = 0.0;
  double x = 0.0;
  double value = 0.0;
};

/// Outcome of one property check. pass <=> applicable && worst_margin >= -tolerance.
struct PropertyReport {
  std::string property;
  bool applicable = true;
  bool pass = false;
  double worst_margin = 0.0;
  double tolerance = 0.0;
  double measured = 0.0;
  double bound = 0.0;
  std::vector<Witness> witnesses;
  std::string note;
};

namespace detail {

inline PropertyReport not_applicable(std::string property, std::string why) {
  PropertyReport r;
  r.property = std::move(property);
  r.applicable = false;
  r.pass = false;
  r.note = std::move(why);
  return r;
}

inline void finish(PropertyReport& r) { r.pass = r.applicable && r.worst_margin >= -r.tolerance; }

}  // namespace detail

/// min over the trajectory >= -tol max(1, ||u0||_inf). Refused when u0 has
/// a negative node.
inline PropertyReport check_nonnegativity(const Trajectory& traj, double tol) {
  detail::require(!traj.states.empty(), "empty trajectory");
  const auto& u0 = traj.states.front();
  if (u0.min() < 0.0) {
    return detail::not_applicable("nonnegativity", "precondition u0 >= 0 violated (min " + std::to_string(u0.min()) + ")");
  }
  PropertyReport r;
  r.property = "nonnegativity";
  r.tolerance = tol;
  const double scale = std::max(1.0, u0.sup_norm());
  r.measured = traj.global_min;
  r.bound = -tol * scale;
  r.worst_margin = traj.global_min / scale;
  const auto& g = u0.grid();
  for (std::size_t k = 0; k < traj.states.size() && r.witnesses.size() < 8; ++k) {
    const auto& s = traj.states[k];
    for (std::size_t i = 0; i < s.size() && r.witnesses.size() < 8; ++i) {
      if (s[i] < r.bound) r.witnesses.push_back({traj.times[k], g.node(i), s[i]});
    }
  }
  detail::finish(r);
  return r;
}

/// Paired runs from u0 and v0 under the same control:
///   max_t ||u - v||                       <= 1.05 C_T ||u0 - v0||,
///   (max_t ||u - v||^2 + 2 int |u - v|_{1,a}^2)^(1/2) <= 1.05 sqrt(2) C_T ||u0 - v0||,
/// with C_T = exp((nu + ||alpha^+||_inf) T). The second bound takes the sup
/// and the dissipation term separately, each under C_T^2 ||u0 - v0||^2.
inline PropertyReport continuous_dependence(const StateVector& u0, const StateVector& v0,
                                            const PiecewiseStaticControl& control, const Nonlinearity& f,
                                            const DiscreteOperator& op, const TimeGrid& tg,
                                            const SolverConfig& cfg = {}) {
  PropertyReport r;
  r.property = "continuous_dependence";
  const double T = tg.t_end - tg.t_start;
  const double ct = std::exp((f.nu() + control.positive_sup()) * T);
  const double d0 = l2_distance(u0, v0);
  r.bound = ct * d0;

  SolverConfig sc = cfg;
  sc.store_stride = 1;
  const auto tu = solve(u0, control, f, op, tg, sc);
  const auto tv = solve(v0, control, f, op, tg, sc);
  double max_d = 0.0, energy = 0.0, prev_e = 0.0;
  for (std::size_t k = 0; k < tu.states.size(); ++k) {
    const auto w = tu.states[k] - tv.states[k];
    const double d = l2_norm(w);
    if (d > max_d) {
      max_d = d;
      r.witnesses.assign(1, {tu.times[k], 0.0, d});
    }
    const double s = h1a_seminorm(w, op.profile());
    const double e = s * s;
    if (k > 0) energy += 0.5 * (prev_e + e) * (tu.times[k] - tu.times[k - 1]);
    prev_e = e;
  }
  const double b_norm = std::sqrt(max_d * max_d + 2.0 * energy);
  r.measured = max_d;
  if (d0 == 0.0) {
    r.worst_margin = max_d == 0.0 ? 0.0 : -1.0;
  } else {
    const double m1 = (1.05 * ct * d0 - max_d) / (ct * d0);
    const double m2 = (1.05 * std::sqrt(2.0) * ct * d0 - b_norm) / (ct * d0);
    r.worst_margin = std::min(m1, m2);
  }
  r.note = "max ratio " + std::to_string(d0 > 0 ? max_d / d0 : 0.0) + ", B-norm ratio " +
           std::to_string(d0 > 0 ? b_norm / d0 : 0.0) + ", C_T " + std::to_string(ct);
  detail::finish(r);
  return r;
}

/// With alpha <= 0 and T < 1/(4 nu): max_t ||u|| <= 1.05 sqrt(2) ||u0||.
inline PropertyReport negative_control_bound(const StateVector& u0, const PiecewiseStaticControl& control,
                                             const Nonlinearity& f, const DiscreteOperator& op, const TimeGrid& tg,
                                             const SolverConfig& cfg = {}) {
  const std::string name = "negative_control_bound";
  if (control.positive_sup() > 0.0) return detail::not_applicable(name, "control has a positive node");
  const double T = tg.t_end - tg.t_start;
  if (f.nu() > 0.0 && !(T < 1.0 / (4.0 * f.nu()))) {
    return detail::not_applicable(name, "T >= 1/(4 nu)");
  }
  PropertyReport r;
  r.property = name;
  SolverConfig sc = cfg;
  sc.store_stride = std::numeric_limits<int>::max();
  double max_n = 0.0;
  double t_at = tg.t_start;
  solve(u0, control, f, op, tg, sc, [&](double t, const StateVector& u) {
    const double n = l2_norm(u);
    if (n > max_n) {
      max_n = n;
      t_at = t;
    }
  });
  const double n0 = l2_norm(u0);
  r.measured = max_n;
  r.bound = std::sqrt(2.0) * n0;
  r.witnesses.push_back({t_at, 0.0, max_n});
  r.worst_margin = n0 > 0.0 ? (1.05 * r.bound - max_n) / r.bound : (max_n == 0.0 ? 0.0 : -1.0);
  detail::finish(r);
  return r;
}

struct EnergySeries {
  std::vector<double> times;
  std::vector<double> values;  // ||(a u_x)_x + f(., t, u)||
  double sup = 0.0;
};

/// Series over the stored states of a trajectory (sampling follows its
/// store_stride).
inline EnergySeries step3_energy_monitor(const Trajectory& traj, const DiscreteOperator& op, const Nonlinearity& f) {
  EnergySeries s;
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    const auto& u = traj.states[k];
    const double v = detail::f_l2_norm_combined(op.apply(u), f, u, traj.times[k]);
    s.times.push_back(traj.times[k]);
    s.values.push_back(v);
    s.sup = std::max(s.sup, v);
  }
  return s;
}

}  // namespace dmc
