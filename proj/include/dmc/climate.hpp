#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dmc/control.hpp"
#include "dmc/errors.hpp"
#include "dmc/grid.hpp"
#include "dmc/nonlinearity.hpp"
#include "dmc/norms.hpp"
#include "dmc/operator.hpp"
#include "dmc/solver.hpp"

namespace dmc::climate {

enum class CoalbedoKind { SellersRamp, BudykoStep, BudykoRegularized };

/// beta(u) in [a_i, a_f], nondecreasing in the temperature u (Kelvin).
/// width is the ramp half-width eta (SellersRamp) or the tanh width
/// (BudykoRegularized); BudykoStep ignores it.
struct CoalbedoModel {
  CoalbedoKind kind = CoalbedoKind::BudykoRegularized;
  double a_i = 0.38;
  double a_f = 0.70;
  double u_s = 263.15;
  double width = 2.0;

  void validate() const {
    detail::require(0.0 < a_i && a_i < a_f && a_f < 1.0, "coalbedo needs 0 < a_i < a_f < 1");
    detail::require(kind == CoalbedoKind::BudykoStep || width > 0.0, "coalbedo width must be positive");
  }

  double operator()(double u) const {
    switch (kind) {
      case CoalbedoKind::SellersRamp:
        if (u <= u_s - width) return a_i;
        if (u >= u_s + width) return a_f;
        return a_i + (a_f - a_i) * (u - (u_s - width)) / (2.0 * width);
      case CoalbedoKind::BudykoStep:
        if (u < u_s) return a_i;
        if (u > u_s) return a_f;
        return 0.5 * (a_i + a_f);
      case CoalbedoKind::BudykoRegularized:
        return a_i + 0.5 * (a_f - a_i) * (1.0 + std::tanh((u - u_s) / width));
    }
    return a_i;
  }

  double derivative(double u) const {
    switch (kind) {
      case CoalbedoKind::SellersRamp:
        return (u > u_s - width && u < u_s + width) ? (a_f - a_i) / (2.0 * width) : 0.0;
      case CoalbedoKind::BudykoStep:
        return 0.0;
      case CoalbedoKind::BudykoRegularized: {
        const double c = std::cosh((u - u_s) / width);
        return 0.5 * (a_f - a_i) / (width * c * c);
      }
    }
    return 0.0;
  }
};

enum class EmissionKind { BudykoLinear, SellersStefanBoltzmann };

/// Emitted flux R_e(u): A + B u, or sigma (1 - m tanh(19 u^6 / 1e6)) u^4.
struct EmissionModel {
  EmissionKind kind = EmissionKind::BudykoLinear;
  double A = -338.3;
  double B = 2.0;
  double sigma = 5.6704e-8;
  double m = 0.5;

  double emissivity(double u) const { return sigma * (1.0 - m * std::tanh(19.0 * std::pow(u, 6) / 1e6)); }

  void validate(double lo = 150.0, double hi = 350.0) const {
    if (kind == EmissionKind::BudykoLinear) {
      detail::require(B > 0.0, "Budyko emission needs B > 0");
      return;
    }
    detail::require(sigma > 0.0 && m > 0.0, "Sellers emission needs sigma > 0 and m > 0");
    for (int k = 0; k <= 200; ++k) {
      const double u = lo + (hi - lo) * k / 200.0;
      detail::require(emissivity(u) > 0.0, "Sellers emissivity is nonpositive at u = " + std::to_string(u) + " K");
    }
  }

  double operator()(double u) const { return kind == EmissionKind::BudykoLinear ? A + B * u : emissivity(u) * u * u * u * u; }

  double derivative(double u) const {
    if (kind == EmissionKind::BudykoLinear) return B;
    const double z = 19.0 * std::pow(u, 6) / 1e6;
    const double sech2 = 1.0 / (std::cosh(z) * std::cosh(z));
    const double de = -sigma * m * sech2 * 19.0 * 6.0 * std::pow(u, 5) / 1e6;
    return de * std::pow(u, 4) + emissivity(u) * 4.0 * u * u * u;
  }
};

/// Q S(x, t); period 0 means annually averaged (S independent of t). The
/// heat capacity is 1.
struct InsolationProfile {
  double Q = 340.0;
  std::function<double(double, double)> S = [](double x, double) { return 1.0 - 0.482 * 0.5 * (3.0 * x * x - 1.0); };
  double period = 0.0;

  void validate(const SpatialGrid& g) const {
    detail::require(Q >= 0.0, "solar constant Q must be nonnegative");
    detail::require(period >= 0.0, "insolation period must be nonnegative");
    const double tmax = period > 0.0 ? period : 1.0;
    for (std::size_t i = 0; i < g.size(); i += std::max<std::size_t>(1, g.size() / 64)) {
      for (int k = 0; k <= 8; ++k) {
        const double t = tmax * k / 8.0;
        detail::require(S(g.node(i), t) > 0.0, "insolation S must be positive");
        if (period > 0.0) {
          detail::require(std::abs(S(g.node(i), t + period) - S(g.node(i), t)) <= 1e-9 * std::max(1.0, std::abs(S(g.node(i), t))),
                          "seasonal insolation is not periodic over its declared period");
        }
      }
    }
  }
};

/// How Q S beta(u) - R_e(u) is split between the control slot and f.
///   Literal:     control slot 0, f = q beta(u) - R_e(u);
///   Conformant:  control slot q beta(u_ref)/u_ref (multiplies u),
///                f = q (beta(u) - beta(u_ref) u/u_ref) - R_e(u).
/// q is Q S sampled piecewise-static. Both give the same right-hand side.
enum class Mapping { Literal, Conformant };

inline const char* to_string(Mapping m) { return m == Mapping::Literal ? "literal" : "conformant"; }

struct ForcingModel {
  PiecewiseStaticControl alpha;  // control-slot profiles
  Nonlinearity f;
  PiecewiseStaticControl forcing;  // q = Q S per slab
  FittedConstants fitted;
};

/// Builds the control-slot adapter and reaction term. SL constants are
/// fitted with theta = 1 on [fit_lo, fit_hi] (the physical range), since the
/// emission offset A makes f(0) != 0 outside it.
inline ForcingModel budyko_sellers_rhs(const CoalbedoModel& beta, const EmissionModel& emission,
                                       const InsolationProfile& ins, const GridPtr& grid, double horizon,
                                       Mapping mapping = Mapping::Conformant, bool acknowledge_step = false,
                                       int slabs_per_period = 24, double u_ref = 288.15, double fit_lo = 150.0,
                                       double fit_hi = 350.0) {
  beta.validate();
  emission.validate(fit_lo, fit_hi);
  ins.validate(*grid);
  detail::require(horizon > 0.0, "climate horizon must be positive");
  detail::require(u_ref > 0.0, "reference temperature must be positive");
  detail::require(beta.kind != CoalbedoKind::BudykoStep || acknowledge_step,
                  "Budyko step coalbedo violates the Lipschitz condition; set acknowledge_step to use it");
  detail::require(slabs_per_period >= 1, "slabs_per_period must be positive");

  // Piecewise-static sampling of Q S at slab midpoints.
  std::vector<double> bps{0.0};
  std::vector<StateVector> q;
  auto sample = [&](double t) {
    return StateVector::sample(grid, [&](double x) { return ins.Q * ins.S(x, t); });
  };
  if (ins.period > 0.0) {
    const double len = ins.period / slabs_per_period;
    const auto count = static_cast<long long>(std::ceil(horizon / len - 1e-9));
    for (long long k = 0; k < count; ++k) {
      const double t0 = len * static_cast<double>(k);
      bps.push_back(std::min(horizon, t0 + len));
      q.push_back(sample(t0 + 0.5 * len));
    }
    bps.back() = horizon;
  } else {
    bps.push_back(horizon);
    q.push_back(sample(0.0));
  }
  PiecewiseStaticControl forcing(bps, q);

  std::vector<StateVector> slot;
  const double kref = beta(u_ref) / u_ref;
  for (const auto& p : q) slot.push_back(mapping == Mapping::Literal ? StateVector(grid, 0.0) : kref * p);
  PiecewiseStaticControl alpha(bps, slot);

  const double h = grid->spacing();
  const std::size_t n = grid->size();
  auto qv = std::make_shared<PiecewiseStaticControl>(forcing);
  auto q_at = [qv, h, n](double x, double t) {
    const auto i = static_cast<std::size_t>(std::clamp(std::lround((x + 1.0) / h), 0L, static_cast<long>(n - 1)));
    return qv->profile(qv->slab_at(std::min(t, qv->horizon())))[i];
  };
  const bool literal = mapping == Mapping::Literal;
  Nonlinearity::Fn fn = [=](double x, double t, double u) {
    const double qq = q_at(x, t);
    return qq * (beta(u) - (literal ? 0.0 : kref * u)) - emission(u);
  };
  Nonlinearity::Fn dfn = [=](double x, double t, double u) {
    const double qq = q_at(x, t);
    return qq * (beta.derivative(u) - (literal ? 0.0 : kref)) - emission.derivative(u);
  };
  const auto fitted = fit_sl_constants(fn, 1.0, fit_lo, fit_hi, horizon);
  Nonlinearity f(fn, 1.0, fitted.delta_star, fitted.nu,
                 std::string("budyko_sellers(") + to_string(mapping) + ")", dfn, StateRange{fit_lo, fit_hi});
  return {std::move(alpha), std::move(f), std::move(forcing), fitted};
}

struct Scenario {
  CoalbedoModel coalbedo;
  EmissionModel emission;
  InsolationProfile insolation;
  Mapping mapping = Mapping::Conformant;
  bool acknowledge_step = false;
  int n_cells = 200;
  double dt = 1e-2;
  double horizon = 10.0;
  int slabs_per_period = 24;
  double u_ref = 288.15;
  std::function<double(double)> u0 = [](double) { return 288.15; };
  int store_stride = 10;
};

struct Report {
  double min_temperature = 0.0;
  double max_temperature = 0.0;
  double final_mean = 0.0;
  double pole_equator_gap = 0.0;  // u(x ~ 0) - mean of u(+-1) at the final time
  bool out_of_range = false;      // left [100, 400] K at some step
  double fitted_delta_star = 0.0;
  double fitted_nu = 0.0;
  std::vector<double> mean_times;  // global mean (1/2) int u, at every step
  std::vector<double> means;
};

struct Run {
  Trajectory trajectory;
  Report report;
};

inline Run run_scenario(const Scenario& sc) {
  const auto grid = build_grid(sc.n_cells);
  const auto op = assemble_operator(grid, DiffusionProfile::legendre(), WeightedNeumann{});
  const auto model = budyko_sellers_rhs(sc.coalbedo, sc.emission, sc.insolation, grid, sc.horizon, sc.mapping,
                                        sc.acknowledge_step, sc.slabs_per_period, sc.u_ref);
  const auto u0 = StateVector::sample(grid, sc.u0);
  SolverConfig cfg;
  cfg.store_stride = sc.store_stride;
  Run run;
  auto& rep = run.report;
  rep.min_temperature = u0.min();
  rep.max_temperature = u0.max();
  run.trajectory = solve(u0, model.alpha, model.f, op, TimeGrid(0.0, sc.horizon, sc.dt), cfg,
                         [&](double t, const StateVector& u) {
                           rep.min_temperature = std::min(rep.min_temperature, u.min());
                           rep.max_temperature = std::max(rep.max_temperature, u.max());
                           rep.mean_times.push_back(t);
                           rep.means.push_back(0.5 * integral(u));
                         });
  const auto& uf = run.trajectory.final_state();
  rep.final_mean = 0.5 * integral(uf);
  rep.pole_equator_gap = uf[uf.size() / 2] - 0.5 * (uf[0] + uf[uf.size() - 1]);
  rep.out_of_range = rep.min_temperature < 100.0 || rep.max_temperature > 400.0;
  rep.fitted_delta_star = model.fitted.delta_star;
  rep.fitted_nu = model.fitted.nu;
  return run;
}

}  // namespace dmc::climate
