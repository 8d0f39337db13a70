#pragma once

#include <algorithm>
#include <cmath>
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
#include "dmc/solver.hpp"
#include "dmc/spectral.hpp"

namespace dmc {

struct SmoothingConfig {
  double mollifier_width = 0.02;
  double positivity_floor = 1e-3;
  int cutoff_order = 8;  // j of the boundary window

  void validate() const {
    detail::require(mollifier_width > 0.0 && mollifier_width < 0.5, "mollifier_width must be in (0, 0.5)");
    detail::require(positivity_floor > 0.0, "positivity_floor must be positive");
    detail::require(cutoff_order >= 1, "cutoff_order must be positive");
  }
};

struct SmoothApprox {
  StateVector value;
  double error = 0.0;  // L2 distance to the input
  double width = 0.0;  // mollifier width actually used
  double floor = 0.0;  // positivity floor actually used
};

namespace detail {

// Normalized triweight average over |x_k - x_i| < width; the kernel is cut
// at the interval ends and renormalized, so constants are reproduced.
inline StateVector mollify(const StateVector& v, double width) {
  const auto& g = v.grid();
  const double h = g.spacing();
  const auto reach = static_cast<std::ptrdiff_t>(std::floor(width / h));
  if (reach < 1) return v;
  const auto n = static_cast<std::ptrdiff_t>(v.size());
  StateVector out(v.grid_ptr());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double num = 0.0, den = 0.0;
    for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(0, i - reach); k <= std::min(n - 1, i + reach); ++k) {
      const double r = (k - i) * h / width;
      const double q = 1.0 - r * r;
      if (q <= 0.0) continue;
      const double wk = q * q * q;
      num += wk * v[k];
      den += wk;
    }
    out[i] = num / den;
  }
  return out;
}

// C^1 blend onto [floor, inf): identity above 2 floor, quadratic below.
inline double floor_blend(double y, double floor) {
  if (y >= 2.0 * floor) return y;
  const double p = std::max(y, 0.0);
  return floor + p * p / (4.0 * floor);
}

inline void require_nonnegative(const StateVector& v, const std::string& what) {
  const double scale = std::max(v.sup_norm(), 1e-300);
  require(v.min() >= -1e-9 * scale, what + " has a genuinely negative region (min " + std::to_string(v.min()) + ")");
}

}  // namespace detail

/// Strictly positive mollified approximation of a nonnegative state. Floor
/// and width are halved (up to 8 times) until the L2 distance to v is
/// within the budget.
inline SmoothApprox positive_smooth_approx(const StateVector& v, double budget, const SmoothingConfig& cfg = {}) {
  cfg.validate();
  detail::require(budget > 0.0, "smoothing budget must be positive");
  detail::require_nonnegative(v, "state to smooth");
  double width = cfg.mollifier_width, floor = cfg.positivity_floor;
  for (int attempt = 0; attempt <= 8; ++attempt) {
    auto m = detail::mollify(v, width);
    for (auto& y : m.values()) y = detail::floor_blend(y, floor);
    const double err = l2_distance(m, v);
    if (err < budget) return {std::move(m), err, width, floor};
    width *= 0.5;
    floor *= 0.5;
  }
  throw NumericalError("positive_smooth_approx: budget " + std::to_string(budget) +
                       " unreachable after 8 halvings of floor and width");
}

/// S = max(ustar_eps / u0_eps) + 1.
inline double compute_scale(const StateVector& u0_eps, const StateVector& ustar_eps, double margin = 1.0) {
  detail::require(u0_eps.min() > 0.0 && ustar_eps.min() > 0.0, "compute_scale needs strictly positive inputs");
  detail::require(margin > 0.0, "scale margin must be positive");
  double m = 0.0;
  for (std::size_t i = 0; i < u0_eps.size(); ++i) m = std::max(m, ustar_eps[i] / u0_eps[i]);
  return m + margin;
}

/// log(ustar_eps / (S u0_eps)) inside, 0 at the two end nodes.
inline StateVector step2_profile(const StateVector& u0_eps, const StateVector& ustar_eps, double s) {
  detail::require(u0_eps.min() > 0.0 && ustar_eps.min() > 0.0, "step2_profile needs strictly positive inputs");
  StateVector out(u0_eps.grid_ptr());
  const std::size_t n = out.size();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double ratio = ustar_eps[i] / (s * u0_eps[i]);
    detail::require(ratio <= 1.0 + 1e-12, "step2_profile: ratio exceeds 1 at node " + std::to_string(i));
    out[i] = std::log(std::min(ratio, 1.0));
  }
  return out;
}

/// Boundary window: 1 on [-1 + 2/j, 1 - 2/j], 0 at +-1, a quintic smoothstep
/// composed `order` times in between.
inline double boundary_window(double x, int j, int order) {
  const double d = 1.0 - std::abs(x);
  double t = std::clamp(d * j / 2.0, 0.0, 1.0);
  for (int k = 0; k < order; ++k) t = std::clamp(t * t * t * (10.0 + t * (-15.0 + 6.0 * t)), 0.0, 1.0);
  return t;
}

struct SmoothedProfile {
  StateVector alpha;
  int j = 0;
  int flattening_order = 1;
};

namespace detail {

// |alpha'/a| and |alpha' a'| on the five nodes next to each end must not
// grow toward the end (or be negligible).
inline bool boundary_limits_ok(const StateVector& alpha, const DiffusionProfile& a) {
  const auto& g = alpha.grid();
  const double h = g.spacing();
  const std::size_t n = alpha.size();
  if (n < 13) return false;
  const double scale = std::max(alpha.sup_norm(), 1e-300);
  for (int side : {0, 1}) {
    std::vector<double> r, q;
    for (std::size_t k = 1; k <= 5; ++k) {
      const std::size_t i = side == 0 ? k : n - 1 - k;
      const double da = (alpha[i + 1] - alpha[i - 1]) / (2.0 * h);
      r.push_back(std::abs(da) / a(g.node(i)));
      q.push_back(std::abs(da * a.derivative(g.node(i))));
    }
    for (const auto* seq : {&r, &q}) {
      for (std::size_t k = 0; k + 1 < seq->size(); ++k) {
        const double lo = (*seq)[k], hi = (*seq)[k + 1];
        if (lo <= 1e-12 * scale) continue;
        if (!(lo <= hi * (1.0 + 1e-9))) return false;
      }
    }
  }
  return true;
}

}  // namespace detail

/// alpha_eps mollified at width 1/j (end values replaced by their
/// neighbours first) times the boundary window. The flattening order grows
/// until the sampled boundary limits behave.
inline SmoothedProfile smooth_profile(const StateVector& alpha_eps, const DiffusionProfile& a, int j,
                                      int max_order = 4) {
  detail::require(j >= 1, "smooth_profile needs j >= 1");
  const std::size_t n = alpha_eps.size();
  detail::require(alpha_eps.max() <= 1e-12, "smooth_profile needs alpha_eps <= 0");
  detail::require(alpha_eps[0] == 0.0 && alpha_eps[n - 1] == 0.0, "smooth_profile needs alpha_eps(+-1) = 0");
  auto ext = alpha_eps;
  ext[0] = ext[1];
  ext[n - 1] = ext[n - 2];
  const auto moll = detail::mollify(ext, 1.0 / j);
  const auto& g = alpha_eps.grid();
  for (int order = 1; order <= max_order; ++order) {
    StateVector out(alpha_eps.grid_ptr());
    for (std::size_t i = 0; i < n; ++i) out[i] = std::min(0.0, moll[i] * boundary_window(g.node(i), j, order));
    out[0] = 0.0;
    out[n - 1] = 0.0;
    if (detail::boundary_limits_ok(out, a)) return {std::move(out), j, order};
  }
  throw NumericalError("smooth_profile: boundary limits of the smoothed control fail at flattening order " +
                       std::to_string(max_order));
}

/// Pieces of the controlled problem: operator (profile and boundary
/// condition included) and reaction term.
struct ControlProblem {
  DiscreteOperator op;
  Nonlinearity f;
};

struct SynthesisConfig {
  SmoothingConfig smoothing;
  std::vector<int> j_schedule{8, 16, 32, 64};
  double dt_max = 1e-3;
  int min_steps_per_slab = 100;
  int max_halvings = 20;
  int max_segment_doublings = 4;
  double segment_scale_margin = 0.25;
  std::size_t spectral_modes = 64;
  SolverConfig solver;

  TimeGrid time_grid(double t0, double t1) const { return TimeGrid(t0, t1, dt_max, min_steps_per_slab); }
};

/// One two-step steering action (Step 1 scale-up, Step 2 shaping).
struct StageRecord {
  double t_start = 0.0;
  double t1 = 0.0;
  double alpha1 = 0.0;
  double s_eps = 0.0;
  double eta_star = 0.0;
  double ratio_cap = 0.0;  // K with ustar_eps <= K u0_eps
  double u0_smoothing_error = 0.0;
  double u0_budget = 0.0;
  double ustar_error = 0.0;
  double r_term = 0.0;
  double remainder = 0.0;
  double sigma0_norm = 0.0;
  double a2_error = 0.0;
  bool a2_met = false;
  int j = 0;
  int flattening_order = 0;
  double step2_length = 0.0;
  double terminal_error = 0.0;
};

struct ControlPlan {
  double epsilon = 0.0;
  double horizon = 0.0;
  double t1 = 0.0;
  double alpha1 = 0.0;
  double s_eps = 0.0;
  double sigma0_norm = 0.0;
  double t_star = 0.0;
  int j = 0;
  int segments = 1;  // two-step actions; > 1 when the long-horizon extension is used
  std::optional<StateVector> u0, ustar, u0_eps, ustar_eps, alpha_eps, alpha_epsj;
  std::optional<PiecewiseStaticControl> control;
  std::vector<StageRecord> stages;
  double synthesized_error = 0.0;  // terminal error measured while synthesizing
};

namespace detail {

// Simulate one static slab [t0, t0 + len] from u.
inline StateVector run_slab(const StateVector& u, double t0, double len, const StateVector& profile,
                            const ControlProblem& prob, const SynthesisConfig& cfg, double dt_scale = 1.0) {
  const auto zero = StateVector(profile.grid_ptr(), 0.0);
  const auto control = t0 > 0.0 ? PiecewiseStaticControl({0.0, t0, t0 + len}, {zero, profile})
                                : PiecewiseStaticControl::constant(profile, len);
  SolverConfig sc = cfg.solver;
  sc.store_stride = std::numeric_limits<int>::max();
  TimeGrid tg(t0, t0 + len, cfg.dt_max * dt_scale, static_cast<int>(cfg.min_steps_per_slab / dt_scale));
  return solve(u, control, prob.f, prob.op, tg, sc).final_state();
}

struct TargetApprox {
  StateVector value;
  double cap;
  double error;
};

// ustar_eps = min(smoothed ustar, K u0_eps) with the smallest K in
// {1, 2, 4, ...} keeping ||ustar_eps - ustar|| below the budget.
inline TargetApprox capped_target(const StateVector& ustar_smooth, const StateVector& ustar,
                                  const StateVector& u0_eps, double budget) {
  for (double k = 1.0; k <= 1e12; k *= 2.0) {
    StateVector t = ustar_smooth;
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::min(t[i], k * u0_eps[i]);
    const double err = l2_distance(t, ustar);
    if (err < budget) return {std::move(t), k, err};
  }
  const double err = l2_distance(ustar_smooth, ustar);
  if (err < budget) return {ustar_smooth, std::numeric_limits<double>::infinity(), err};
  throw NumericalError("target approximation budget eps/4 unreachable");
}

struct StageOutcome {
  StageRecord rec;
  StateVector u0_eps, ustar_eps, alpha_eps, alpha_epsj;
  StateVector end_state;
  std::vector<double> breakpoints;  // absolute, 3 entries
  std::vector<StateVector> profiles;
};

// Two-step action starting at t_start from u_from. With fixed_length the
// whole action has that length; otherwise the Step-2 slab starts at
// horizon - T1 and is halved until the terminal error is below eps.
inline StageOutcome two_step(const StateVector& u_from, const StateVector& ustar, double eps, double t_start,
                             double horizon, bool fixed_length, const ControlProblem& prob,
                             const SynthesisConfig& cfg, const SpectralBasis& basis, double margin = 1.0) {
  const double nu = prob.f.nu();
  StageOutcome out{StageRecord{}, u_from, u_from, u_from, u_from, u_from, {}, {}};
  auto& rec = out.rec;
  rec.t_start = t_start;

  // Approximants: the target first, then u0 in two passes so its budget uses
  // the final scale.
  const auto ustar_s = positive_smooth_approx(ustar, eps / 8.0, cfg.smoothing);
  auto u0e = positive_smooth_approx(u_from, std::sqrt(2.0) * eps / 36.0, cfg.smoothing);
  auto target = capped_target(ustar_s.value, ustar, u0e.value, eps / 4.0);
  double s = compute_scale(u0e.value, target.value, margin);
  for (int pass = 0; pass < 4; ++pass) {
    const double budget = std::sqrt(2.0) * eps / (36.0 * s * std::exp(nu));
    if (u0e.error < budget) {
      rec.u0_budget = budget;
      break;
    }
    u0e = positive_smooth_approx(u_from, budget, cfg.smoothing);
    target = capped_target(ustar_s.value, ustar, u0e.value, eps / 4.0);
    s = compute_scale(u0e.value, target.value, margin);
    rec.u0_budget = budget;
    if (pass == 3 && !(u0e.error < std::sqrt(2.0) * eps / (36.0 * s * std::exp(nu)))) {
      throw NumericalError("u0 smoothing budget sqrt(2) eps/(36 S e^nu) unreachable");
    }
  }
  rec.s_eps = s;
  rec.u0_smoothing_error = u0e.error;
  rec.ustar_error = target.error;
  rec.ratio_cap = target.cap;
  double eta = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ustar.size(); ++i) eta = std::min(eta, target.value[i] / (s * u0e.value[i]));
  rec.eta_star = eta;
  const auto& U0 = u0e.value;
  const auto& Us = target.value;
  const auto grid = U0.grid_ptr();

  // Step 1.
  const auto coeffs = project(U0, basis);
  const double tail = l2_distance(U0, reconstruct(coeffs, basis));
  double t1 = std::min(horizon / 4.0, 0.1);
  bool step1_ok = false;
  StateVector u_t1 = u_from;
  for (int halving = 0; halving <= cfg.max_halvings && !step1_ok; ++halving, t1 *= 0.5) {
    const double alpha1 = std::log(s) / t1;
    double spec = 0.0;
    for (std::size_t p = 0; p < coeffs.size(); ++p) {
      const double d = (1.0 - std::exp(-basis.eigenvalues[p] * t1)) * coeffs[p];
      spec += d * d;
    }
    double r_term = s * (std::sqrt(spec) + tail);
    if (!(r_term < eps / 8.0)) {
      const ControlProblem heat{prob.op, Nonlinearity::zero()};
      r_term = s * l2_distance(run_slab(U0, t_start, t1, StateVector(grid, 0.0), heat, cfg), U0);
    }
    rec.r_term = r_term;
    if (!(r_term < eps / 8.0)) continue;
    const StateVector a1(grid, alpha1);
    for (double dt_scale : {1.0, 0.25}) {
      double remainder = 0.0;
      if (!prob.f.is_zero()) {
        const ControlProblem linear{prob.op, Nonlinearity::zero()};
        const auto nonlin = run_slab(U0, t_start, t1, a1, prob, cfg, dt_scale);
        const auto lin = run_slab(U0, t_start, t1, a1, linear, cfg, dt_scale);
        remainder = l2_distance(nonlin, lin);
      }
      u_t1 = run_slab(u_from, t_start, t1, a1, prob, cfg, dt_scale);
      const double sigma0 = l2_distance(u_t1, s * U0);
      rec.remainder = remainder;
      rec.sigma0_norm = sigma0;
      if (remainder < std::sqrt(2.0) * eps / 36.0 && sigma0 < std::sqrt(2.0) * eps / 12.0) {
        step1_ok = true;
        rec.t1 = t1;
        rec.alpha1 = alpha1;
        break;
      }
    }
    if (step1_ok) break;
  }
  if (!step1_ok) {
    throw NumericalError("Step-1 budgets (R < eps/8, remainder < sqrt(2) eps/36, sigma0 < sqrt(2) eps/12) "
                         "unreachable after " + std::to_string(cfg.max_halvings) + " halvings of T1");
  }

  // Step 2 profile and j.
  const auto alpha_eps = step2_profile(U0, Us, s);
  const int n_cells = grid->n_cells();
  std::vector<int> js = cfg.j_schedule;
  // The five sampled nodes must sit inside the rising part of the window,
  // which needs a window of at least 16 cells.
  const int j_max = n_cells / 8;
  for (int jn = js.back() * 2; jn <= j_max; jn *= 2) js.push_back(jn);
  std::optional<SmoothedProfile> best;
  double best_err = std::numeric_limits<double>::infinity();
  for (int j : js) {
    if (j > j_max && j != js.front()) break;
    std::optional<SmoothedProfile> trial;
    try {
      trial = smooth_profile(alpha_eps, prob.op.profile(), j);
    } catch (const NumericalError&) {
      continue;
    }
    auto& sp = *trial;
    StateVector shaped(grid);
    for (std::size_t i = 0; i < shaped.size(); ++i) shaped[i] = std::exp(sp.alpha[i]) * s * U0[i];
    const double err = l2_distance(shaped, Us);
    if (err < best_err) {
      best_err = err;
      best = std::move(sp);
    }
    if (err < eps / 12.0) break;
  }
  if (!best) throw NumericalError("no window order j admits a smoothed Step-2 control on this grid");
  rec.a2_error = best_err;
  rec.a2_met = best_err < eps / 12.0;
  rec.j = best->j;
  rec.flattening_order = best->flattening_order;

  // Step 2 slab.
  const double t2_start = t_start + t1;
  double len = horizon - t1;
  bool step2_ok = false;
  StateVector u_end = u_t1;
  for (int halving = 0; halving <= (fixed_length ? 0 : cfg.max_halvings); ++halving, len *= 0.5) {
    const StateVector a2 = (1.0 / len) * best->alpha;
    u_end = run_slab(u_t1, t2_start, len, a2, prob, cfg);
    rec.terminal_error = l2_distance(u_end, ustar);
    rec.step2_length = len;
    if (rec.terminal_error < eps) {
      step2_ok = true;
      break;
    }
  }
  if (!step2_ok && !fixed_length) {
    throw NumericalError("Step-2 slab: terminal error " + std::to_string(rec.terminal_error) +
                         " >= eps after " + std::to_string(cfg.max_halvings) + " halvings");
  }

  out.u0_eps = U0;
  out.ustar_eps = Us;
  out.alpha_eps = alpha_eps;
  out.alpha_epsj = best->alpha;
  out.end_state = u_end;
  out.breakpoints = {t_start, t2_start, t2_start + rec.step2_length};
  out.profiles = {StateVector(grid, rec.alpha1), (1.0 / rec.step2_length) * best->alpha};
  return out;
}

}  // namespace detail

/// Two-step piecewise-static control steering u0 toward ustar within eps at
/// time T, with the n-segment extension when the verified short horizon T*
/// is below T.
inline ControlPlan synthesize(const StateVector& u0, const StateVector& ustar, double eps, double horizon,
                              const ControlProblem& prob, const SynthesisConfig& cfg = {}) {
  detail::require(eps > 0.0 && std::isfinite(eps), "epsilon must be positive");
  detail::require(horizon > 0.0 && std::isfinite(horizon), "horizon T must be positive");
  detail::require(u0.size() == prob.op.size() && ustar.size() == prob.op.size(), "states and operator grids differ");
  const double u0_scale = std::max(u0.sup_norm(), 1e-300);
  detail::require(u0.min() >= -1e-12 * u0_scale, "u0 must be nonnegative");
  detail::require(u0.sup_norm() > 0.0, "u0 must not vanish identically");
  const double us_scale = std::max(ustar.sup_norm(), 1e-300);
  detail::require(ustar.min() >= -1e-12 * us_scale,
                  "target has a negative node: nonnegative initial states cannot be steered to sign-changing "
                  "targets (solutions stay nonnegative)");
  detail::require(ustar.sup_norm() > 0.0, "target identically zero is not supported (Step-2 ratio degenerates)");
  detail::require(prob.f.theta() < prob.op.profile().theta_sup(),
                  "nonlinearity growth exponent theta = " + std::to_string(prob.f.theta()) +
                      " must be below " + std::to_string(prob.op.profile().theta_sup()) + " for this profile");

  const std::size_t modes = std::min<std::size_t>(cfg.spectral_modes, prob.op.grid().n_cells() / 2);
  const auto basis = eigendecompose(prob.op, modes);

  auto first = detail::two_step(u0, ustar, eps, 0.0, horizon, false, prob, cfg, basis);
  ControlPlan plan;
  plan.epsilon = eps;
  plan.horizon = horizon;
  plan.t1 = first.rec.t1;
  plan.alpha1 = first.rec.alpha1;
  plan.s_eps = first.rec.s_eps;
  plan.sigma0_norm = first.rec.sigma0_norm;
  plan.j = first.rec.j;
  plan.t_star = first.rec.t1 + first.rec.step2_length;
  plan.u0 = u0;
  plan.ustar = ustar;
  plan.u0_eps = first.u0_eps;
  plan.ustar_eps = first.ustar_eps;
  plan.alpha_eps = first.alpha_eps;
  plan.alpha_epsj = first.alpha_epsj;
  plan.stages.push_back(first.rec);

  std::vector<double> bps{0.0, first.breakpoints[1], first.breakpoints[2]};
  std::vector<StateVector> profs = first.profiles;
  plan.synthesized_error = first.rec.terminal_error;

  const double remaining = horizon - plan.t_star;
  if (remaining > 1e-12 * horizon) {
    auto n = static_cast<long long>(std::ceil(remaining / plan.t_star - 1e-9));
    bool done = false;
    for (int attempt = 0; attempt <= cfg.max_segment_doublings && !done; ++attempt, n *= 2) {
      const double seg = remaining / static_cast<double>(n);
      std::vector<double> b2 = bps;
      std::vector<StateVector> p2 = profs;
      std::vector<StageRecord> recs;
      StateVector v = first.end_state;
      bool ok = true;
      for (long long k = 0; k < n; ++k) {
        const double t0 = plan.t_star + seg * static_cast<double>(k);
        auto st = detail::two_step(v, ustar, eps, t0, seg, true, prob, cfg, basis, cfg.segment_scale_margin);
        if (!(st.rec.terminal_error < eps)) {
          ok = false;
          break;
        }
        b2.push_back(st.breakpoints[1]);
        b2.push_back(k + 1 == n ? horizon : st.breakpoints[2]);
        p2.insert(p2.end(), st.profiles.begin(), st.profiles.end());
        recs.push_back(st.rec);
        v = st.end_state;
      }
      if (!ok) continue;
      bps = std::move(b2);
      profs = std::move(p2);
      plan.stages.insert(plan.stages.end(), recs.begin(), recs.end());
      plan.segments = static_cast<int>(1 + n);
      plan.synthesized_error = plan.stages.back().terminal_error;
      done = true;
    }
    if (!done) {
      throw NumericalError("long-horizon stabilization failed after " +
                           std::to_string(cfg.max_segment_doublings) + " doublings of n");
    }
  } else {
    bps.back() = horizon;
  }
  plan.control = PiecewiseStaticControl(std::move(bps), std::move(profs));
  return plan;
}

struct VerificationReport {
  double terminal_error = 0.0;
  double epsilon = 0.0;
  double min_value = 0.0;
  bool pass = false;
  std::vector<double> slab_monitor;  // ||(a u_x)_x + f||_{L2(slab)} per slab
  std::vector<double> trace_times;   // L2 norm trace, subsampled
  std::vector<double> trace_l2;
  std::size_t steps = 0;
};

/// Runs the control from u0 over [0, tg.t_end] and measures the terminal
/// error against ustar, the trajectory minimum and the per-slab monitor.
inline VerificationReport verify(const PiecewiseStaticControl& control, const StateVector& u0,
                                 const StateVector& ustar, double eps, const ControlProblem& prob,
                                 const TimeGrid& tg, const SolverConfig& solver = {}) {
  detail::require(tg.t_end > tg.t_start, "verification needs a positive duration");
  VerificationReport rep;
  rep.epsilon = eps;
  const std::size_t slabs = control.slabs();
  std::vector<double> acc(slabs, 0.0);
  const auto nodes = tg.nodes(control.breakpoints());
  const std::size_t stride = std::max<std::size_t>(1, nodes.size() / 2000);
  double prev_t = tg.t_start, prev_m = -1.0;
  std::size_t count = 0;
  auto observer = [&](double t, const StateVector& u) {
    const auto au = prob.op.apply(u);
    const double m = detail::f_l2_norm_combined(au, prob.f, u, t);
    if (prev_m >= 0.0) {
      const std::size_t s = control.slab_at(0.5 * (prev_t + t));
      acc[s] += 0.5 * (prev_m * prev_m + m * m) * (t - prev_t);
    }
    prev_t = t;
    prev_m = m;
    if (count % stride == 0) {
      rep.trace_times.push_back(t);
      rep.trace_l2.push_back(l2_norm(u));
    }
    ++count;
  };
  SolverConfig sc = solver;
  sc.store_stride = std::numeric_limits<int>::max();
  const auto traj = solve(u0, control, prob.f, prob.op, tg, sc, observer);
  rep.terminal_error = l2_distance(traj.final_state(), ustar);
  rep.min_value = traj.global_min;
  rep.steps = traj.steps;
  for (double a : acc) rep.slab_monitor.push_back(std::sqrt(a));
  rep.pass = rep.terminal_error < eps;
  return rep;
}

inline VerificationReport verify(const ControlPlan& plan, const ControlProblem& prob, const TimeGrid& tg,
                                 const SolverConfig& solver = {}) {
  return verify(*plan.control, *plan.u0, *plan.ustar, plan.epsilon, prob, tg, solver);
}

}  // namespace dmc
