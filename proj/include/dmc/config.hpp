#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dmc/climate.hpp"
#include "dmc/control.hpp"
#include "dmc/grid.hpp"
#include "dmc/io.hpp"
#include "dmc/nonlinearity.hpp"
#include "dmc/operator.hpp"
#include "dmc/profile.hpp"
#include "dmc/solver.hpp"

namespace dmc::config {

/// Call re-rendered with shortest numbers, used to compare problem
/// descriptions between a plan and a config.
inline std::string canonical_call(const io::Call& c) {
  std::string s = c.name;
  if (c.args.empty()) return s;
  s += "(";
  for (std::size_t i = 0; i < c.args.size(); ++i) {
    if (i) s += ", ";
    double v = 0.0;
    s += io::parse_double(c.args[i], v) ? io::shortest(v) : c.args[i];
  }
  return s + ")";
}

struct Problem {
  DiffusionProfile profile = DiffusionProfile::legendre();
  BoundaryCondition bc = WeightedNeumann{};
  Nonlinearity f = Nonlinearity::zero();
  std::string profile_text = "legendre";
  std::string bc_text = "weighted_neumann";
  std::string f_text = "zero";

  DiscreteOperator build(const GridPtr& grid) const { return assemble_operator(grid, profile, bc); }
};

/// [problem]
///   profile = legendre | sqrt | power(eta)
///   bc      = weighted_neumann | robin(beta0, beta1, gamma0, gamma1)
///   f       = zero | absorption(delta, theta) | cubic(c, theta, bound)
///           | sellers_ramp(kappa, a_i, a_f, u_s, eta)
inline Problem read_problem(io::Reader& r) {
  Problem p;
  const auto pc = r.call("problem", "profile", "legendre");
  const auto wp = r.where("problem", "profile");
  if (pc.name == "legendre") {
    pc.arity(0, 0, wp);
    p.profile = DiffusionProfile::legendre();
  } else if (pc.name == "sqrt") {
    pc.arity(0, 0, wp);
    p.profile = DiffusionProfile::sqrt_profile();
  } else if (pc.name == "power") {
    pc.arity(1, 1, wp);
    p.profile = DiffusionProfile::power(pc.number(0, wp));
  } else {
    throw ValidationError(wp + ": unknown profile '" + pc.name + "' (legendre, sqrt, power)");
  }
  p.profile_text = canonical_call(pc);

  const auto bc = r.call("problem", "bc", "weighted_neumann");
  const auto wb = r.where("problem", "bc");
  if (bc.name == "weighted_neumann") {
    bc.arity(0, 0, wb);
    p.bc = WeightedNeumann{};
  } else if (bc.name == "robin") {
    bc.arity(4, 4, wb);
    try {
      p.bc = Robin{bc.number(0, wb), bc.number(1, wb), bc.number(2, wb), bc.number(3, wb)};
    } catch (const ValidationError& e) {
      throw ValidationError(wb + ": " + e.what());
    }
  } else {
    throw ValidationError(wb + ": unknown boundary condition '" + bc.name + "' (weighted_neumann, robin)");
  }
  p.bc_text = canonical_call(bc);

  const auto fc = r.call("problem", "f", "zero");
  const auto wf = r.where("problem", "f");
  try {
    if (fc.name == "zero") {
      fc.arity(0, 0, wf);
      p.f = Nonlinearity::zero();
    } else if (fc.name == "absorption") {
      fc.arity(2, 2, wf);
      p.f = Nonlinearity::absorption(fc.number(0, wf), fc.number(1, wf));
    } else if (fc.name == "cubic") {
      fc.arity(3, 3, wf);
      p.f = Nonlinearity::cubic_on_range(fc.number(0, wf), fc.number(1, wf), fc.number(2, wf));
    } else if (fc.name == "sellers_ramp") {
      fc.arity(5, 5, wf);
      p.f = Nonlinearity::sellers_ramp(fc.number(0, wf), fc.number(1, wf), fc.number(2, wf), fc.number(3, wf),
                                       fc.number(4, wf));
    } else {
      throw ValidationError(wf + ": unknown nonlinearity '" + fc.name +
                            "' (zero, absorption, cubic, sellers_ramp)");
    }
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    if (msg.rfind(r.document().source, 0) == 0) throw;
    throw ValidationError(wf + ": " + msg);
  }
  p.f_text = canonical_call(fc);
  return p;
}

struct GridSpec {
  int n_cells = 200;
  double dt = 1e-3;
  double horizon = 1.0;
  int min_steps_per_slab = 1;
  SolverConfig solver;

  TimeGrid time_grid() const { return TimeGrid(0.0, horizon, dt, min_steps_per_slab); }
};

/// [grid] n_cells, dt, T, min_steps_per_slab,
///        scheme = implicit_euler | crank_nicolson, newton_tol, newton_max_iters
inline GridSpec read_grid(io::Reader& r) {
  GridSpec g;
  const long long n = r.integer("grid", "n_cells", g.n_cells);
  if (n < SpatialGrid::kMinCells || n > 10'000'000) {
    throw ValidationError(r.where("grid", "n_cells") + " must be in [" + std::to_string(SpatialGrid::kMinCells) +
                          ", 1e7]");
  }
  g.n_cells = static_cast<int>(n);
  g.dt = r.number("grid", "dt", g.dt);
  if (!(g.dt > 0.0)) throw ValidationError(r.where("grid", "dt") + " must be positive");
  g.horizon = r.number("grid", "T", g.horizon);
  if (!(g.horizon > 0.0)) throw ValidationError(r.where("grid", "T") + " must be positive");
  const long long ms = r.integer("grid", "min_steps_per_slab", 1);
  if (ms < 1 || ms > 1'000'000) throw ValidationError(r.where("grid", "min_steps_per_slab") + " must be in [1, 1e6]");
  g.min_steps_per_slab = static_cast<int>(ms);
  const std::string scheme = r.text("grid", "scheme", "implicit_euler");
  if (scheme == "implicit_euler") {
    g.solver.scheme = Scheme::ImplicitEulerIMEX;
  } else if (scheme == "crank_nicolson") {
    g.solver.scheme = Scheme::CrankNicolsonIMEX;
  } else {
    throw ValidationError(r.where("grid", "scheme") + ": unknown scheme '" + scheme +
                          "' (implicit_euler, crank_nicolson)");
  }
  g.solver.newton_tol = r.number("grid", "newton_tol", g.solver.newton_tol);
  g.solver.newton_max_iters = static_cast<int>(r.integer("grid", "newton_max_iters", g.solver.newton_max_iters));
  try {
    g.solver.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(r.document().source + ": [grid] " + e.what());
  }
  return g;
}

namespace detail {

// (x, u) samples from a CSV with a header row, x ascending.
inline std::function<double(double)> csv_state(const std::string& path, const std::string& where) {
  const std::string text = io::read_file(path);
  std::vector<double> xs, us;
  std::size_t pos = 0;
  int line = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string s = io::trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line;
    if (line == 1 || s.empty()) continue;
    std::vector<double> v;
    if (!io::parse_doubles(s, v) || v.size() != 2) {
      throw ValidationError(where + ": " + path + ":" + std::to_string(line) + ": expected 'x,u'");
    }
    if (!xs.empty() && v[0] <= xs.back()) {
      throw ValidationError(where + ": " + path + ":" + std::to_string(line) + ": x must increase");
    }
    xs.push_back(v[0]);
    us.push_back(v[1]);
  }
  if (xs.size() < 2 || xs.front() > -1.0 || xs.back() < 1.0) {
    throw ValidationError(where + ": " + path + " must cover [-1, 1] with at least two rows");
  }
  return [xs, us](double x) {
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) return us.front();
    if (it == xs.end()) return us.back();
    const auto k = static_cast<std::size_t>(it - xs.begin());
    const double t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    return (1.0 - t) * us[k - 1] + t * us[k];
  };
}

}  // namespace detail

/// Named state families:
///   constant(c)
///   raised_cosine(offset = 1, amplitude = 1, frequency = 1)   offset + amplitude cos(frequency pi x)
///   gaussian(amplitude, rate, center = 0)                     amplitude exp(-rate (x - center)^2)
///   legendre(p)                                                sqrt(p + 1/2) P_p(x)
///   polynomial(c0, c1, ...)                                    sum c_k x^k
///   csv(path)                                                  linear interpolation of (x, u) rows
inline std::function<double(double)> state_function(const io::Call& c, const std::string& where) {
  if (c.name == "constant") {
    c.arity(1, 1, where);
    const double v = c.number(0, where);
    return [v](double) { return v; };
  }
  if (c.name == "raised_cosine") {
    c.arity(0, 3, where);
    const double off = c.number_or(0, 1.0, where), amp = c.number_or(1, 1.0, where),
                 k = c.number_or(2, 1.0, where);
    return [=](double x) { return off + amp * std::cos(k * M_PI * x); };
  }
  if (c.name == "gaussian") {
    c.arity(2, 3, where);
    const double amp = c.number(0, where), rate = c.number(1, where), x0 = c.number_or(2, 0.0, where);
    if (rate < 0.0) throw ValidationError(where + ": gaussian rate must be nonnegative");
    return [=](double x) { return amp * std::exp(-rate * (x - x0) * (x - x0)); };
  }
  if (c.name == "legendre") {
    c.arity(1, 1, where);
    long long p = 0;
    if (!io::parse_long(c.args[0], p) || p < 0 || p > 200) {
      throw ValidationError(where + ": legendre degree must be an integer in [0, 200]");
    }
    const auto deg = static_cast<unsigned>(p);
    const double norm = std::sqrt(deg + 0.5);
    return [deg, norm](double x) {
      double prev = 1.0, cur = x;
      if (deg == 0) return norm;
      for (unsigned k = 1; k < deg; ++k) {
        const double next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
      }
      return norm * cur;
    };
  }
  if (c.name == "polynomial") {
    c.arity(1, 64, where);
    std::vector<double> coef;
    for (std::size_t i = 0; i < c.args.size(); ++i) coef.push_back(c.number(i, where));
    return [coef](double x) {
      double acc = 0.0;
      for (auto it = coef.rbegin(); it != coef.rend(); ++it) acc = acc * x + *it;
      return acc;
    };
  }
  if (c.name == "csv") {
    c.arity(1, 1, where);
    return detail::csv_state(c.args[0], where);
  }
  throw ValidationError(where + ": unknown state family '" + c.name +
                        "' (constant, raised_cosine, gaussian, legendre, polynomial, csv)");
}

inline StateVector read_state(io::Reader& r, const std::string& section, const std::string& key,
                              const GridPtr& grid) {
  const auto w = r.where(section, key);
  if (!r.has(section, key)) throw ValidationError(r.document().source + ": missing required key '" + section + "." + key + "'");
  const auto fn = state_function(r.call(section, key, ""), w);
  auto v = StateVector::sample(grid, fn);
  if (!v.all_finite()) throw ValidationError(w + ": state has non-finite values");
  return v;
}

/// [control] breakpoints = 0 t1 ... T and slab_0, slab_1, ... as state
/// families; without the section alpha = 0 on [0, T].
inline PiecewiseStaticControl read_control(io::Reader& r, const GridPtr& grid, double horizon) {
  if (!r.has_section("control")) return PiecewiseStaticControl::uniform(grid, 0.0, horizon);
  const auto bps = r.numbers("control", "breakpoints");
  const auto w = r.where("control", "breakpoints");
  if (bps.size() < 2) throw ValidationError(w + " needs at least two entries");
  if (std::abs(bps.back() - horizon) > 1e-12 * horizon) {
    throw ValidationError(w + " must end at T = " + io::shortest(horizon));
  }
  std::vector<StateVector> profiles;
  for (std::size_t k = 0; k + 1 < bps.size(); ++k) {
    const std::string key = "slab_" + std::to_string(k);
    profiles.push_back(read_state(r, "control", key, grid));
  }
  try {
    return PiecewiseStaticControl(bps, std::move(profiles));
  } catch (const ValidationError& e) {
    throw ValidationError(w + ": " + e.what());
  }
}

struct OutputSpec {
  std::string dir = "out";
  int stride = 1;
};

/// [output] dir, stride
inline OutputSpec read_output(io::Reader& r) {
  OutputSpec o;
  o.dir = r.text("output", "dir", o.dir);
  const long long s = r.integer("output", "stride", 1);
  if (s < 1) throw ValidationError(r.where("output", "stride") + " must be >= 1");
  o.stride = static_cast<int>(s);
  return o;
}

/// [climate]
///   coalbedo  = budyko_regularized(a_i, a_f, u_s, width) | sellers_ramp(a_i, a_f, u_s, eta)
///             | budyko_step(a_i, a_f, u_s)
///   emission  = budyko_linear(A, B) | sellers(sigma, m)
///   insolation = annual(Q, s2) | seasonal(Q, s2, amplitude, period)
///                S = 1 - s2 P2(x) [+ amplitude x sin(2 pi t / period)]
///   mapping = conformant | literal, acknowledge_step, slabs_per_period, u_ref,
///   u0 (state family), n_cells, dt, T, field_stride
inline climate::Scenario read_climate(io::Reader& r) {
  using namespace climate;
  Scenario sc;
  const auto cb = r.call("climate", "coalbedo", "budyko_regularized");
  const auto wc = r.where("climate", "coalbedo");
  if (cb.name == "budyko_regularized" || cb.name == "sellers_ramp") {
    cb.arity(0, 4, wc);
    sc.coalbedo.kind = cb.name == "sellers_ramp" ? CoalbedoKind::SellersRamp : CoalbedoKind::BudykoRegularized;
  } else if (cb.name == "budyko_step") {
    cb.arity(0, 3, wc);
    sc.coalbedo.kind = CoalbedoKind::BudykoStep;
  } else {
    throw ValidationError(wc + ": unknown coalbedo '" + cb.name + "' (budyko_regularized, sellers_ramp, budyko_step)");
  }
  sc.coalbedo.a_i = cb.number_or(0, sc.coalbedo.a_i, wc);
  sc.coalbedo.a_f = cb.number_or(1, sc.coalbedo.a_f, wc);
  sc.coalbedo.u_s = cb.number_or(2, sc.coalbedo.u_s, wc);
  sc.coalbedo.width = cb.number_or(3, sc.coalbedo.width, wc);

  const auto em = r.call("climate", "emission", "budyko_linear");
  const auto we = r.where("climate", "emission");
  if (em.name == "budyko_linear") {
    em.arity(0, 2, we);
    sc.emission.kind = EmissionKind::BudykoLinear;
    sc.emission.A = em.number_or(0, sc.emission.A, we);
    sc.emission.B = em.number_or(1, sc.emission.B, we);
  } else if (em.name == "sellers") {
    em.arity(0, 2, we);
    sc.emission.kind = EmissionKind::SellersStefanBoltzmann;
    sc.emission.sigma = em.number_or(0, sc.emission.sigma, we);
    sc.emission.m = em.number_or(1, sc.emission.m, we);
  } else {
    throw ValidationError(we + ": unknown emission '" + em.name + "' (budyko_linear, sellers)");
  }

  const auto in = r.call("climate", "insolation", "annual");
  const auto wi = r.where("climate", "insolation");
  if (in.name == "annual") {
    in.arity(0, 2, wi);
    sc.insolation.Q = in.number_or(0, 340.0, wi);
    const double s2 = in.number_or(1, 0.482, wi);
    sc.insolation.S = [s2](double x, double) { return 1.0 - s2 * 0.5 * (3.0 * x * x - 1.0); };
    sc.insolation.period = 0.0;
  } else if (in.name == "seasonal") {
    in.arity(4, 4, wi);
    sc.insolation.Q = in.number(0, wi);
    const double s2 = in.number(1, wi), amp = in.number(2, wi), per = in.number(3, wi);
    if (!(per > 0.0)) throw ValidationError(wi + ": seasonal period must be positive");
    sc.insolation.S = [s2, amp, per](double x, double t) {
      return 1.0 - s2 * 0.5 * (3.0 * x * x - 1.0) + amp * x * std::sin(2.0 * M_PI * t / per);
    };
    sc.insolation.period = per;
  } else {
    throw ValidationError(wi + ": unknown insolation '" + in.name + "' (annual, seasonal)");
  }

  const std::string mapping = r.text("climate", "mapping", "conformant");
  if (mapping == "conformant") {
    sc.mapping = Mapping::Conformant;
  } else if (mapping == "literal") {
    sc.mapping = Mapping::Literal;
  } else {
    throw ValidationError(r.where("climate", "mapping") + ": unknown mapping '" + mapping + "' (conformant, literal)");
  }
  sc.acknowledge_step = r.boolean("climate", "acknowledge_step", false);
  sc.slabs_per_period = static_cast<int>(r.integer("climate", "slabs_per_period", sc.slabs_per_period));
  sc.u_ref = r.number("climate", "u_ref", sc.u_ref);
  const long long n = r.integer("climate", "n_cells", sc.n_cells);
  if (n < SpatialGrid::kMinCells || n > 10'000'000) {
    throw ValidationError(r.where("climate", "n_cells") + " must be in [" + std::to_string(SpatialGrid::kMinCells) + ", 1e7]");
  }
  sc.n_cells = static_cast<int>(n);
  sc.dt = r.number("climate", "dt", sc.dt);
  if (!(sc.dt > 0.0)) throw ValidationError(r.where("climate", "dt") + " must be positive");
  sc.horizon = r.number("climate", "T", sc.horizon);
  if (!(sc.horizon > 0.0)) throw ValidationError(r.where("climate", "T") + " must be positive");
  const long long st = r.integer("climate", "field_stride", sc.store_stride);
  if (st < 1) throw ValidationError(r.where("climate", "field_stride") + " must be >= 1");
  sc.store_stride = static_cast<int>(st);
  if (r.has("climate", "u0")) sc.u0 = state_function(r.call("climate", "u0", ""), r.where("climate", "u0"));
  return sc;
}

}  // namespace dmc::config
