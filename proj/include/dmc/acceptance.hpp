#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dmc/analysis.hpp"
#include "dmc/climate.hpp"
#include "dmc/convergence.hpp"
#include "dmc/io.hpp"
#include "dmc/spectral.hpp"
#include "dmc/synthesis.hpp"

namespace dmc::acceptance {

struct Options {
  std::uint64_t seed = 20260601;
  int threads = 1;
};

struct Result {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

inline std::string line(const Result& r) {
  std::ostringstream s;
  s << (r.pass ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << ": " << r.detail << " ("
    << io::shortest(std::round(r.seconds * 100.0) / 100.0) << " s)";
  return s.str();
}

namespace detail {

using Clock = std::chrono::steady_clock;

inline double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline Result start(int id, std::string name) {
  Result r;
  r.id = id;
  r.name = std::move(name);
  return r;
}

inline std::string num(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

inline StateVector final_state(const StateVector& u0, const PiecewiseStaticControl& c, const Nonlinearity& f,
                               const DiscreteOperator& op, const TimeGrid& tg) {
  SolverConfig cfg;
  cfg.store_stride = std::numeric_limits<int>::max();
  return solve(u0, c, f, op, tg, cfg).final_state();
}

inline Result spectrum(const Options&) {
  Result r = start(1, "Legendre spectrum, n = 4000, p <= 10");
  const auto t0 = Clock::now();
  const auto g = build_grid(4000);
  const auto basis = eigendecompose(assemble_operator(g, DiffusionProfile::legendre(), WeightedNeumann{}), 11);
  double worst = 0.0;
  for (std::size_t p = 1; p <= 10; ++p) {
    worst = std::max(worst, std::abs(basis.eigenvalues[p] / (p * (p + 1.0)) - 1.0));
  }
  const double l0 = std::abs(basis.eigenvalues[0]);
  r.seconds = since(t0);
  r.pass = worst <= 1e-3 && l0 <= 1e-8 && r.seconds < 10.0;
  r.detail = "max |lambda_p/(p(p+1)) - 1| = " + num(worst) + " (<= 1e-3), |lambda_0| = " + num(l0) + " (<= 1e-8)";
  return r;
}

inline Result eigen_decay(const Options&) {
  Result r = start(2, "eigenmode decay, n = 2000, dt = 1e-4, T = 0.5");
  const auto t0 = Clock::now();
  const auto g = build_grid(2000);
  const auto op = assemble_operator(g, DiffusionProfile::legendre(), WeightedNeumann{});
  const auto modes = legendre_basis(g, 4);
  const auto zero = PiecewiseStaticControl::uniform(g, 0.0, 0.5);
  double worst = 0.0, slowest = 0.0;
  for (std::size_t p = 0; p <= 3; ++p) {
    const auto tp = Clock::now();
    const auto& w = modes.vectors[p];
    const auto u = final_state(w, zero, Nonlinearity::zero(), op, TimeGrid(0.0, 0.5, 1e-4));
    worst = std::max(worst, l2_distance(u, std::exp(-(p * (p + 1.0)) * 0.5) * w));
    slowest = std::max(slowest, since(tp));
  }
  r.seconds = since(t0);
  r.pass = worst <= 1e-3 && slowest < 30.0;
  r.detail = "max ||u(T) - exp(-p(p+1)T) w_p|| = " + num(worst) + " (<= 1e-3), slowest case " + num(slowest) + " s";
  return r;
}

// Random nonnegative state: offset plus raised cosines, or a compact bump.
inline StateVector random_nonnegative(const GridPtr& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  if (U(rng) < 0.3) {
    const double c = -0.6 + 1.2 * U(rng), w = 0.2 + 0.5 * U(rng), a = 0.5 + 2.5 * U(rng);
    return StateVector::sample(g, [=](double x) {
      const double s = 1.0 - ((x - c) / w) * ((x - c) / w);
      return s > 0.0 ? a * s * s : 0.0;
    });
  }
  const double c0 = 0.5 * U(rng);
  double amp[3], ph[3];
  for (int k = 0; k < 3; ++k) {
    amp[k] = U(rng);
    ph[k] = 2.0 * M_PI * U(rng);
  }
  return StateVector::sample(g, [=](double x) {
    double v = c0;
    for (int k = 0; k < 3; ++k) v += amp[k] * (1.0 + std::cos((k + 1) * M_PI * x + ph[k]));
    return v;
  });
}

// Random smooth profile with ||alpha||_inf = bound.
inline StateVector random_profile(const GridPtr& g, std::mt19937_64& rng, double bound) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double b[4], ps[4];
  for (int k = 0; k < 4; ++k) {
    b[k] = U(rng);
    ps[k] = M_PI * U(rng);
  }
  auto v = StateVector::sample(g, [=](double x) {
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += b[k] * std::cos(k * M_PI * x / 2.0 + ps[k]);
    return s;
  });
  const double m = v.sup_norm();
  if (m > 0.0) v *= bound / m;
  return v;
}

inline DiscreteOperator operator_for(int k, const GridPtr& g) {
  switch (k % 3) {
    case 0:
      return assemble_operator(g, DiffusionProfile::legendre(), WeightedNeumann{});
    case 1:
      return assemble_operator(g, DiffusionProfile::sqrt_profile(), Robin{1, -1, 1, 1});
    default:
      return assemble_operator(g, DiffusionProfile::power(1.5), WeightedNeumann{});
  }
}

inline Result nonnegativity(const Options& o) {
  Result r = start(3, "nonnegativity, 50 seeded cases");
  const auto t0 = Clock::now();
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto g = build_grid(400);
  const Nonlinearity fs[3] = {Nonlinearity::zero(), Nonlinearity::absorption(1.0, 3.0),
                              Nonlinearity::sellers_ramp(1.0, 0.3, 0.7, 1.0, 0.5)};
  const double T = 0.5;
  int failures = 0;
  double worst = std::numeric_limits<double>::infinity();
  std::string first_failure;
  for (int c = 0; c < 50; ++c) {
    const auto op = operator_for(static_cast<int>(U(rng) * 3.0), g);
    const auto u0 = random_nonnegative(g, rng);
    const double split = T * (0.2 + 0.6 * U(rng));
    const PiecewiseStaticControl control({0.0, split, T}, {random_profile(g, rng, 2.0 * U(rng)),
                                                           random_profile(g, rng, 2.0 * U(rng))});
    const auto& f = fs[c % 3];
    SolverConfig cfg;
    cfg.store_stride = 50;
    const auto traj = solve(u0, control, f, op, TimeGrid(0.0, T, 1e-3), cfg);
    const double scale = u0.sup_norm();
    const double margin = traj.global_min / scale;
    worst = std::min(worst, margin);
    const auto rep = check_nonnegativity(traj, 1e-7);
    if (!(traj.global_min >= -1e-7 * scale) || !rep.pass) {
      if (failures++ == 0) first_failure = "case " + std::to_string(c) + " min " + num(traj.global_min);
    }
  }
  r.seconds = since(t0);
  r.pass = failures == 0 && r.seconds < 300.0;
  r.detail = std::to_string(50 - failures) + "/50 with min >= -1e-7 ||u0||_inf, worst min/||u0||_inf = " + num(worst) +
             (failures ? ", first failure " + first_failure : "");
  return r;
}

inline Result dependence(const Options& o) {
  Result r = start(4, "continuous dependence, 20 pairs + negative-control bound");
  const auto t0 = Clock::now();
  std::mt19937_64 rng(o.seed + 1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto g = build_grid(200);
  const auto cubic = Nonlinearity::cubic_on_range(0.1, 2.0, 10.0);
  int pair_ok = 0;
  double worst_ratio = 0.0;
  for (int c = 0; c < 20; ++c) {
    const auto op = operator_for(c, g);
    const auto u0 = random_nonnegative(g, rng);
    const auto v0 = random_nonnegative(g, rng);
    const double T = 0.2 + 0.3 * U(rng);
    const PiecewiseStaticControl control({0.0, 0.5 * T, T}, {random_profile(g, rng, 2.0 * U(rng)),
                                                            random_profile(g, rng, 2.0 * U(rng))});
    const auto& f = c % 2 ? cubic : Nonlinearity::zero();
    const auto rep = continuous_dependence(u0, v0, control, f, op, TimeGrid(0.0, T, 1e-3));
    if (rep.pass) ++pair_ok;
    if (rep.bound > 0.0) worst_ratio = std::max(worst_ratio, rep.measured / rep.bound);
  }
  int neg_ok = 0, neg_total = 0;
  double worst_neg = 0.0;
  for (int c = 0; c < 6; ++c) {
    const auto op = operator_for(c, g);
    const auto u0 = random_nonnegative(g, rng);
    auto a = random_profile(g, rng, 2.0);
    for (auto& v : a.values()) v = -std::abs(v);
    const bool with_f = c % 2 == 1;
    const double T = with_f ? 0.9 / (4.0 * cubic.nu()) : 0.5;
    const auto rep = negative_control_bound(u0, PiecewiseStaticControl::constant(a, T),
                                            with_f ? cubic : Nonlinearity::zero(), op, TimeGrid(0.0, T, 1e-3));
    ++neg_total;
    if (rep.pass) ++neg_ok;
    if (rep.bound > 0.0) worst_neg = std::max(worst_neg, rep.measured / rep.bound);
  }
  r.seconds = since(t0);
  r.pass = pair_ok == 20 && neg_ok == neg_total;
  r.detail = std::to_string(pair_ok) + "/20 pairs, worst max||u-v|| / (C_T ||u0-v0||) = " + num(worst_ratio) +
             " (<= 1.05); " + std::to_string(neg_ok) + "/" + std::to_string(neg_total) +
             " negative-control cases, worst max||u|| / (sqrt2 ||u0||) = " + num(worst_neg) + " (<= 1.05)";
  return r;
}

struct SteeringCase {
  std::string label;
  ControlProblem problem;
};

inline std::vector<SteeringCase> steering_cases(const GridPtr& g) {
  return {{"a = 1-x^2, f = -0.1 u^3",
           {assemble_operator(g, DiffusionProfile::legendre(), WeightedNeumann{}),
            Nonlinearity::cubic_on_range(0.1, 2.0, 10.0)}},
          {"a = sqrt(1-x^2), Robin(1,-1,1,1), f = 0",
           {assemble_operator(g, DiffusionProfile::sqrt_profile(), Robin{1, -1, 1, 1}), Nonlinearity::zero()}}};
}

inline Result steering(int id, const std::string& name, const std::vector<double>& horizons, double time_cap) {
  Result r = start(id, name);
  const auto t0 = Clock::now();
  const auto g = build_grid(1000);
  const auto u0 = StateVector::sample(g, [](double x) { return 1.0 + std::cos(M_PI * x); });
  const auto us = StateVector::sample(g, [](double x) { return 2.0 * std::exp(-4.0 * x * x); });
  const double eps = 0.05 * l2_norm(us);
  bool all = true;
  std::string parts;
  for (const auto& c : steering_cases(g)) {
    for (double T : horizons) {
      const auto tc = Clock::now();
      std::string part;
      try {
        const auto plan = synthesize(u0, us, eps, T, c.problem);
        const auto rep = verify(plan, c.problem, TimeGrid(0.0, T, 1e-3, 100));
        const double secs = since(tc);
        const bool ok = rep.terminal_error < eps && secs < time_cap;
        all = all && ok;
        part = c.label + ", T = " + io::shortest(T) + ": error " + num(rep.terminal_error) + " < " + num(eps) +
               (ok ? "" : " FAILED") + ", " + std::to_string(plan.segments) + " segment(s), " + num(secs) + " s";
      } catch (const std::exception& e) {
        all = false;
        part = c.label + ", T = " + io::shortest(T) + ": " + e.what();
      }
      parts += (parts.empty() ? "" : "; ") + part;
    }
  }
  r.seconds = since(t0);
  r.pass = all;
  r.detail = parts;
  return r;
}

inline Result controllability(const Options&) {
  return steering(5, "steering 1+cos(pi x) -> 2 exp(-4x^2), n = 1000", {0.2, 1.0}, 120.0);
}

inline Result long_horizon(const Options&) {
  return steering(6, "long-horizon steering, T = 5", {5.0}, 1e9);
}

inline Result step2_exactness(const Options&) {
  Result r = start(7, "Step-2 profile exactness on the scalar oracle");
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t checked = 0;
  for (int n : {400, 1000}) {
    const auto g = build_grid(n);
    const auto u0 = StateVector::sample(g, [](double x) { return 1.0 + std::cos(M_PI * x); });
    const auto us = StateVector::sample(g, [](double x) { return 2.0 * std::exp(-4.0 * x * x); });
    const double eps = 0.05 * l2_norm(us);
    const auto u0e = positive_smooth_approx(u0, std::sqrt(2.0) * eps / 36.0).value;
    const auto use = positive_smooth_approx(us, eps / 8.0).value;
    const double s = compute_scale(u0e, use);
    const auto alpha = step2_profile(u0e, use, s);
    for (std::size_t i = 1; i + 1 < g->size(); ++i) {
      const double lhs = std::exp(alpha[i]) * s * u0e[i];
      worst = std::max(worst, std::abs(lhs - use[i]) / std::max(1.0, std::abs(use[i])));
      ++checked;
    }
  }
  r.seconds = since(t0);
  r.pass = worst <= 1e-12;
  r.detail = "max |exp(alpha) S u0_eps - ustar_eps| = " + num(worst) + " over " + std::to_string(checked) +
             " interior nodes (<= 1e-12)";
  return r;
}

inline Result conservation(const Options&) {
  Result r = start(8, "mass conservation, weighted Neumann, T = 1");
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (const auto& a : {DiffusionProfile::legendre(), DiffusionProfile::power(1.5)}) {
    for (auto scheme : {Scheme::ImplicitEulerIMEX, Scheme::CrankNicolsonIMEX}) {
      const auto g = build_grid(400);
      const auto op = assemble_operator(g, a, WeightedNeumann{});
      const auto u0 = StateVector::sample(g, [](double x) { return 1.0 + std::cos(M_PI * x) + 0.3 * x; });
      SolverConfig cfg;
      cfg.scheme = scheme;
      cfg.store_stride = std::numeric_limits<int>::max();
      const auto u = solve(u0, PiecewiseStaticControl::uniform(g, 0.0, 1.0), Nonlinearity::zero(), op,
                           TimeGrid(0.0, 1.0, 1e-3), cfg)
                         .final_state();
      worst = std::max(worst, std::abs(integral(u) - integral(u0)) / std::abs(integral(u0)));
    }
  }
  r.seconds = since(t0);
  r.pass = worst <= 1e-8;
  r.detail = "max relative mass drift " + num(worst) + " (<= 1e-8)";
  return r;
}

inline Result climate_sanity(const Options&) {
  Result r = start(9, "climate sanity");
  const auto t0 = Clock::now();
  climate::Scenario sc;
  const auto run = climate::run_scenario(sc);
  const bool in_range = run.report.min_temperature >= 150.0 && run.report.max_temperature <= 350.0;
  double worst = 0.0, spread = 0.0;
  for (auto mapping : {climate::Mapping::Conformant, climate::Mapping::Literal}) {
    climate::Scenario u;
    u.mapping = mapping;
    u.insolation.S = [](double, double) { return 1.0; };
    u.n_cells = 64;
    u.u0 = [](double) { return 250.0; };
    const auto ur = climate::run_scenario(u);
    const auto& uf = ur.trajectory.final_state();
    spread = std::max(spread, uf.max() - uf.min());
    // The scalar version of the same time stepping.
    const double q = u.insolation.Q;
    const double kref = u.coalbedo(u.u_ref) / u.u_ref;
    const bool literal = mapping == climate::Mapping::Literal;
    const double a = literal ? 0.0 : q * kref;
    double v = 250.0;
    const auto steps = static_cast<int>(std::lround(u.horizon / u.dt));
    for (int k = 0; k < steps; ++k) {
      const double f = q * (u.coalbedo(v) - (literal ? 0.0 : kref * v)) - u.emission(v);
      v = std::exp(a * u.dt) * (v + u.dt * f);
    }
    for (std::size_t i = 0; i < uf.size(); ++i) worst = std::max(worst, std::abs(uf[i] - v));
  }
  r.seconds = since(t0);
  r.pass = in_range && worst <= 1e-6 && spread <= 1e-6;
  r.detail = "default run in [" + num(run.report.min_temperature) + ", " + num(run.report.max_temperature) +
             "] K (within [150, 350]); uniform runs: spread " + num(spread) + ", max gap to scalar oracle " +
             num(worst) + " (<= 1e-6)";
  return r;
}

inline Result convergence_orders(const Options&) {
  Result r = start(10, "convergence orders on the smooth decay problem");
  const auto t0 = Clock::now();
  DecayProblem sp;
  sp.u0 = [](double x) { return std::exp(x) + 0.5 * std::cos(2.0 * x); };
  sp.horizon = 0.1;
  sp.scheme = Scheme::CrankNicolsonIMEX;
  sp.dt = 2.5e-4;
  const auto spatial = spatial_convergence_study(sp, {250, 500, 1000});
  DecayProblem tp;
  tp.u0 = [](double x) { return std::exp(x) + 0.5 * std::cos(2.0 * x); };
  tp.horizon = 0.5;
  tp.n_cells = 200;
  const auto temporal = temporal_convergence_study(tp, {0.02, 0.01, 0.005, 0.0025});
  r.seconds = since(t0);
  r.pass = spatial.order >= 1.8 && spatial.order <= 2.2 && temporal.order >= 0.7 && temporal.order <= 1.3;
  r.detail = "spatial order " + num(spatial.order) + " (in [1.8, 2.2]), implicit Euler temporal order " +
             num(temporal.order) + " (in [0.7, 1.3])";
  return r;
}

}  // namespace detail

using Check = std::function<Result(const Options&)>;

inline std::vector<Check> checks() {
  return {detail::spectrum,       detail::eigen_decay,     detail::nonnegativity, detail::dependence,
          detail::controllability, detail::long_horizon,   detail::step2_exactness, detail::conservation,
          detail::climate_sanity, detail::convergence_orders};
}

/// Runs every criterion on up to o.threads workers. on_result is called in
/// criterion order, each as soon as it and all earlier ones are done.
inline std::vector<Result> run(const Options& o, const std::function<void(const Result&)>& on_result = {}) {
  const auto all = checks();
  std::vector<Result> results(all.size());
  std::vector<bool> done(all.size(), false);
  std::size_t reported = 0;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < all.size(); k = next++) {
      Result res;
      const auto t0 = detail::Clock::now();
      try {
        res = all[k](o);
      } catch (const std::exception& e) {
        res.id = static_cast<int>(k + 1);
        res.name = "criterion " + std::to_string(k + 1);
        res.pass = false;
        res.detail = std::string("exception: ") + e.what();
        res.seconds = detail::since(t0);
      }
      std::lock_guard<std::mutex> lock(mu);
      results[k] = std::move(res);
      done[k] = true;
      while (reported < all.size() && done[reported]) {
        if (on_result) on_result(results[reported]);
        ++reported;
      }
    }
  };
  const int n = std::clamp(o.threads, 1, static_cast<int>(all.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return results;
}

}  // namespace dmc::acceptance
