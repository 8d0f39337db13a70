#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "dmc/acceptance.hpp"
#include "dmc/analysis.hpp"
#include "dmc/climate.hpp"
#include "dmc/config.hpp"
#include "dmc/io.hpp"
#include "dmc/plan.hpp"
#include "dmc/spectral.hpp"
#include "dmc/synthesis.hpp"

namespace dmc::cli {

enum ExitCode : int { kSuccess = 0, kValidation = 2, kNumerical = 3, kVerificationFailed = 4 };

struct Globals {
  std::string config;
  std::string out;  // overrides [output] dir when set
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string plan;  // verify: overrides [verify] plan when set
};

namespace detail {

inline std::string file(const config::OutputSpec& out, const std::string& name) {
  return (std::filesystem::path(out.dir) / name).string();
}

inline io::Document load_config(const Globals& g) {
  if (g.config.empty()) throw ValidationError("--config is required for this subcommand");
  return io::load_document(g.config);
}

inline config::OutputSpec output_spec(io::Reader& r, const Globals& g) {
  auto o = config::read_output(r);
  if (!g.out.empty()) o.dir = g.out;
  return o;
}

inline void write_doc(const std::string& path, const io::Document& d) { io::write_atomic(path, io::serialize(d)); }

inline std::string pass_line(double error, double eps) {
  return "terminal_error < " + io::shortest(eps) + ": " + (error < eps ? "PASS" : "FAIL");
}

}  // namespace detail

/// [problem] + [grid] n_cells + [spectrum] modes. Writes eigenvalues.csv
/// (p, lambda, and analytic p(p+1) with relative error when a = 1 - x^2 under
/// the weighted Neumann condition) and eigenvectors.csv (x, w_0, ...).
inline int cmd_spectrum(const Globals& g, std::ostream& log) {
  const auto doc = detail::load_config(g);
  io::Reader r(doc);
  r.reject_unknown_sections({"problem", "grid", "spectrum", "output"});
  const auto prob = config::read_problem(r);
  const auto grid = config::read_grid(r);
  const long long modes = r.integer("spectrum", "modes", 10);
  if (modes < 1 || modes > grid.n_cells + 1) {
    throw ValidationError(r.where("spectrum", "modes") + " must be in [1, n_cells + 1]");
  }
  const auto out = detail::output_spec(r, g);
  r.reject_unknown({"problem", "grid", "spectrum", "output"});

  const auto gp = build_grid(grid.n_cells);
  const auto basis = eigendecompose(prob.build(gp), static_cast<std::size_t>(modes));
  const bool analytic = prob.profile.is_legendre() && prob.bc.is_weighted_neumann();
  io::CsvWriter ev(analytic ? std::vector<std::string>{"p", "lambda", "analytic", "rel_error"}
                            : std::vector<std::string>{"p", "lambda"});
  double worst = 0.0;
  for (std::size_t p = 0; p < basis.count(); ++p) {
    const double lam = basis.eigenvalues[p];
    if (analytic) {
      const double exact = p * (p + 1.0);
      // Relative error; absolute for p = 0 where the exact value is 0.
      const double err = p == 0 ? std::abs(lam) : std::abs(lam / exact - 1.0);
      if (p > 0) worst = std::max(worst, err);
      ev.row({static_cast<double>(p), lam, exact, err});
    } else {
      ev.row({static_cast<double>(p), lam});
    }
  }
  std::vector<std::string> header{"x"};
  for (std::size_t p = 0; p < basis.count(); ++p) header.push_back("w_" + std::to_string(p));
  io::CsvWriter vec(header);
  for (std::size_t i = 0; i < gp->size(); ++i) {
    std::vector<double> row{gp->node(i)};
    for (const auto& w : basis.vectors) row.push_back(w[i]);
    vec.row(row);
  }
  ev.write(detail::file(out, "eigenvalues.csv"));
  vec.write(detail::file(out, "eigenvectors.csv"));
  log << "spectrum: " << basis.count() << " eigenpairs on " << grid.n_cells << " cells";
  if (analytic) log << ", max relative error vs p(p+1) for p >= 1: " << io::shortest(worst);
  log << "\nwrote " << out.dir << "/eigenvalues.csv, " << out.dir << "/eigenvectors.csv\n";
  return kSuccess;
}

/// [problem] [grid] [state] u0 [control] [output]. Writes trajectory.csv,
/// diagnostics.csv and summary.txt.
inline int cmd_simulate(const Globals& g, std::ostream& log) {
  const auto doc = detail::load_config(g);
  io::Reader r(doc);
  const std::set<std::string> sections{"problem", "grid", "state", "control", "output"};
  r.reject_unknown_sections(sections);
  const auto prob = config::read_problem(r);
  auto grid = config::read_grid(r);
  const auto gp = build_grid(grid.n_cells);
  const auto u0 = config::read_state(r, "state", "u0", gp);
  const auto control = config::read_control(r, gp, grid.horizon);
  const auto out = detail::output_spec(r, g);
  r.reject_unknown(sections);

  grid.solver.store_stride = out.stride;
  const auto op = prob.build(gp);
  Trajectory traj;
  try {
    traj = solve(u0, control, prob.f, op, grid.time_grid(), grid.solver);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("simulate (") + prob.profile_text + ", " + prob.bc_text + ", f = " + prob.f_text +
                         ", dt = " + io::shortest(grid.dt) + "): " + e.what());
  }

  std::vector<std::string> header{"t"};
  for (std::size_t i = 0; i < gp->size(); ++i) header.push_back("u_" + std::to_string(i));
  io::CsvWriter tr(header);
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    std::vector<double> row{traj.times[k]};
    for (double v : traj.states[k].values()) row.push_back(v);
    tr.row(row);
  }
  io::CsvWriter dg({"t", "l2", "seminorm", "min", "f_norm"});
  for (const auto& d : traj.diagnostics) dg.row({d.t, d.l2, d.seminorm, d.min, d.f_norm});
  tr.write(detail::file(out, "trajectory.csv"));
  dg.write(detail::file(out, "diagnostics.csv"));

  io::Document s;
  s.set("summary", "profile", prob.profile_text);
  s.set("summary", "bc", prob.bc_text);
  s.set("summary", "f", prob.f_text);
  s.set("summary", "scheme", to_string(grid.solver.scheme));
  s.set("summary", "n_cells", std::to_string(grid.n_cells));
  s.set("summary", "horizon", io::shortest(grid.horizon));
  s.set("summary", "steps", std::to_string(traj.steps));
  s.set("summary", "newton_steps", std::to_string(traj.newton_steps));
  s.set("summary", "global_min", io::shortest(traj.global_min));
  s.set("summary", "initial_l2", io::shortest(l2_norm(u0)));
  s.set("summary", "final_l2", io::shortest(l2_norm(traj.final_state())));
  s.set("summary", "initial_mass", io::shortest(integral(u0)));
  s.set("summary", "final_mass", io::shortest(integral(traj.final_state())));
  s.set("summary", "max_f_norm", io::shortest(traj.max_f_norm));
  s.set("summary", "stored_states", std::to_string(traj.states.size()));
  detail::write_doc(detail::file(out, "summary.txt"), s);
  log << "simulate: " << traj.steps << " steps to T = " << io::shortest(grid.horizon) << ", final L2 norm "
      << io::shortest(l2_norm(traj.final_state())) << ", global min " << io::shortest(traj.global_min) << "\nwrote "
      << out.dir << "/trajectory.csv, diagnostics.csv, summary.txt\n";
  return kSuccess;
}

/// [problem] [grid] n_cells, T [state] u0, ustar
/// [synthesize] epsilon | epsilon_relative, dt_max, min_steps_per_slab.
/// Writes plan.txt, report.txt and stages.csv; exit 4 when the verified
/// terminal error misses epsilon.
inline int cmd_synthesize(const Globals& g, std::ostream& log) {
  const auto doc = detail::load_config(g);
  io::Reader r(doc);
  const std::set<std::string> sections{"problem", "grid", "state", "synthesize", "output"};
  r.reject_unknown_sections(sections);
  const auto prob = config::read_problem(r);
  const auto grid = config::read_grid(r);
  const auto gp = build_grid(grid.n_cells);
  const auto u0 = config::read_state(r, "state", "u0", gp);
  const auto us = config::read_state(r, "state", "ustar", gp);
  const bool abs_eps = r.has("synthesize", "epsilon");
  const bool rel_eps = r.has("synthesize", "epsilon_relative");
  if (abs_eps == rel_eps) {
    throw ValidationError(g.config + ": set exactly one of 'synthesize.epsilon' or 'synthesize.epsilon_relative'");
  }
  const double eps = abs_eps ? r.required_number("synthesize", "epsilon")
                             : r.required_number("synthesize", "epsilon_relative") * l2_norm(us);
  const std::string eps_key = abs_eps ? "epsilon" : "epsilon_relative";
  if (!(eps > 0.0)) throw ValidationError(r.where("synthesize", eps_key) + " must give epsilon > 0");
  SynthesisConfig sc;
  sc.solver = grid.solver;
  sc.dt_max = r.number("synthesize", "dt_max", sc.dt_max);
  if (!(sc.dt_max > 0.0)) throw ValidationError(r.where("synthesize", "dt_max") + " must be positive");
  const long long ms = r.integer("synthesize", "min_steps_per_slab", sc.min_steps_per_slab);
  if (ms < 1 || ms > 1'000'000) throw ValidationError(r.where("synthesize", "min_steps_per_slab") + " must be in [1, 1e6]");
  sc.min_steps_per_slab = static_cast<int>(ms);
  const auto out = detail::output_spec(r, g);
  r.reject_unknown(sections);

  const ControlProblem cp{prob.build(gp), prob.f};
  const auto t0 = std::chrono::steady_clock::now();
  const auto plan = synthesize(u0, us, eps, grid.horizon, cp, sc);
  const auto rep = verify(plan, cp, sc.time_grid(0.0, grid.horizon), grid.solver);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const auto stored = plan::from_synthesis(plan, prob);
  io::write_atomic(detail::file(out, "plan.txt"), plan::serialize(stored));

  io::Document d;
  d.set("report", "epsilon", io::shortest(eps));
  d.set("report", "terminal_error", io::shortest(rep.terminal_error));
  d.set("report", "synthesized_error", io::shortest(plan.synthesized_error));
  d.set("report", "s_eps", io::shortest(plan.s_eps));
  d.set("report", "t1", io::shortest(plan.t1));
  d.set("report", "alpha1", io::shortest(plan.alpha1));
  d.set("report", "j", std::to_string(plan.j));
  d.set("report", "segments", std::to_string(plan.segments));
  d.set("report", "slabs", std::to_string(plan.control->slabs()));
  d.set("report", "sigma0_norm", io::shortest(plan.sigma0_norm));
  d.set("report", "t_star", io::shortest(plan.t_star));
  d.set("report", "horizon", io::shortest(plan.horizon));
  d.set("report", "n_cells", std::to_string(grid.n_cells));
  d.set("report", "min_value", io::shortest(rep.min_value));
  d.set("report", "seconds", io::shortest(secs));
  d.set("report", "status", detail::pass_line(rep.terminal_error, eps));
  detail::write_doc(detail::file(out, "report.txt"), d);

  io::CsvWriter st({"stage", "t_start", "t1", "alpha1", "s_eps", "ratio_cap", "u0_smoothing_error", "u0_budget",
                    "ustar_error", "r_term", "remainder", "sigma0_norm", "a2_error", "a2_met", "j", "flattening_order",
                    "step2_length", "terminal_error"});
  for (std::size_t k = 0; k < plan.stages.size(); ++k) {
    const auto& s = plan.stages[k];
    st.row({static_cast<double>(k), s.t_start, s.t1, s.alpha1, s.s_eps, s.ratio_cap, s.u0_smoothing_error,
            s.u0_budget, s.ustar_error, s.r_term, s.remainder, s.sigma0_norm, s.a2_error, s.a2_met ? 1.0 : 0.0,
            static_cast<double>(s.j), static_cast<double>(s.flattening_order), s.step2_length, s.terminal_error});
  }
  st.write(detail::file(out, "stages.csv"));

  log << "synthesize: S_eps = " << io::shortest(plan.s_eps) << ", T1 = " << io::shortest(plan.t1)
      << ", j = " << plan.j << ", segments = " << plan.segments << "\n"
      << detail::pass_line(rep.terminal_error, eps) << " (terminal_error = " << io::shortest(rep.terminal_error)
      << ")\nwrote " << out.dir << "/plan.txt, report.txt, stages.csv\n";
  return rep.terminal_error < eps ? kSuccess : kVerificationFailed;
}

/// [problem] [grid] n_cells, T [state] u0, ustar
/// [verify] plan, resample, dt, min_steps_per_slab. Re-runs a stored plan,
/// resampled onto the config grid when resample = true.
inline int cmd_verify(const Globals& g, std::ostream& log) {
  const auto doc = detail::load_config(g);
  io::Reader r(doc);
  const std::set<std::string> sections{"problem", "grid", "state", "verify", "synthesize", "output"};
  r.reject_unknown_sections(sections);
  const auto prob = config::read_problem(r);
  const auto grid = config::read_grid(r);
  const auto gp = build_grid(grid.n_cells);
  const auto u0 = config::read_state(r, "state", "u0", gp);
  const auto us = config::read_state(r, "state", "ustar", gp);
  const auto* cfg_plan = r.raw("verify", "plan");
  if (g.plan.empty() && !cfg_plan) throw ValidationError(g.config + ": missing required key 'verify.plan' (or --plan)");
  const std::string plan_path = g.plan.empty() ? *cfg_plan : g.plan;
  const bool resample = r.boolean("verify", "resample", false);
  const double dt = r.number("verify", "dt", 1e-3);
  if (!(dt > 0.0)) throw ValidationError(r.where("verify", "dt") + " must be positive");
  const long long ms = r.integer("verify", "min_steps_per_slab", 100);
  if (ms < 1 || ms > 1'000'000) throw ValidationError(r.where("verify", "min_steps_per_slab") + " must be in [1, 1e6]");
  const auto out = detail::output_spec(r, g);
  // [synthesize] may be shared with the synthesize config; it is not used here.
  r.reject_unknown({"problem", "grid", "state", "verify", "output"});

  const auto stored = plan::load(plan_path);
  plan::check_compatible(stored, prob, grid.horizon, grid.n_cells, resample);
  const auto control = plan::control_on(stored, gp);
  const ControlProblem cp{prob.build(gp), prob.f};
  const auto rep = verify(control, u0, us, stored.epsilon, cp,
                          TimeGrid(0.0, grid.horizon, dt, static_cast<int>(ms)), grid.solver);
  const double rel = stored.synthesized_error > 0.0
                         ? std::abs(rep.terminal_error - stored.synthesized_error) / stored.synthesized_error
                         : 0.0;
  io::Document d;
  d.set("verify", "plan", plan_path);
  d.set("verify", "plan_n_cells", std::to_string(stored.n_cells));
  d.set("verify", "n_cells", std::to_string(grid.n_cells));
  d.set("verify", "resampled", stored.n_cells != grid.n_cells ? "true" : "false");
  d.set("verify", "epsilon", io::shortest(stored.epsilon));
  d.set("verify", "terminal_error", io::shortest(rep.terminal_error));
  d.set("verify", "plan_error", io::shortest(stored.synthesized_error));
  d.set("verify", "relative_difference", io::shortest(rel));
  d.set("verify", "min_value", io::shortest(rep.min_value));
  d.set("verify", "status", detail::pass_line(rep.terminal_error, stored.epsilon));
  detail::write_doc(detail::file(out, "verify_report.txt"), d);
  log << "verify: plan from n = " << stored.n_cells << " run at n = " << grid.n_cells << ", terminal_error "
      << io::shortest(rep.terminal_error) << " (plan recorded " << io::shortest(stored.synthesized_error)
      << ", relative difference " << io::shortest(rel) << ")\n"
      << detail::pass_line(rep.terminal_error, stored.epsilon) << "\nwrote " << out.dir << "/verify_report.txt\n";
  return rep.terminal_error < stored.epsilon ? kSuccess : kVerificationFailed;
}

/// [climate] [output]. Writes climate_report.txt, climate_means.csv (t, mean)
/// and climate_field.csv (x, t, u) in long format.
inline int cmd_climate(const Globals& g, std::ostream& log) {
  const auto doc = detail::load_config(g);
  io::Reader r(doc);
  r.reject_unknown_sections({"climate", "output"});
  const auto sc = config::read_climate(r);
  const auto out = detail::output_spec(r, g);
  r.reject_unknown({"climate", "output"});

  const auto run = climate::run_scenario(sc);
  const auto& rep = run.report;
  io::CsvWriter means({"t", "mean"});
  for (std::size_t k = 0; k < rep.means.size(); ++k) means.row({rep.mean_times[k], rep.means[k]});
  io::CsvWriter field({"x", "t", "u"});
  const auto& states = run.trajectory.states;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const auto& gr = states[k].grid();
    for (std::size_t i = 0; i < gr.size(); ++i) field.row({gr.node(i), run.trajectory.times[k], states[k][i]});
  }
  means.write(detail::file(out, "climate_means.csv"));
  field.write(detail::file(out, "climate_field.csv"));
  io::Document d;
  d.set("climate", "mapping", climate::to_string(sc.mapping));
  d.set("climate", "n_cells", std::to_string(sc.n_cells));
  d.set("climate", "horizon", io::shortest(sc.horizon));
  d.set("climate", "dt", io::shortest(sc.dt));
  d.set("climate", "min_temperature", io::shortest(rep.min_temperature));
  d.set("climate", "max_temperature", io::shortest(rep.max_temperature));
  d.set("climate", "final_mean", io::shortest(rep.final_mean));
  d.set("climate", "pole_equator_gap", io::shortest(rep.pole_equator_gap));
  d.set("climate", "out_of_range", rep.out_of_range ? "true" : "false");
  d.set("climate", "fitted_delta_star", io::shortest(rep.fitted_delta_star));
  d.set("climate", "fitted_nu", io::shortest(rep.fitted_nu));
  detail::write_doc(detail::file(out, "climate_report.txt"), d);
  log << "climate: T in [" << io::shortest(rep.min_temperature) << ", " << io::shortest(rep.max_temperature)
      << "] K, final mean " << io::shortest(rep.final_mean) << " K" << (rep.out_of_range ? " (left [100, 400] K)" : "")
      << "\nwrote " << out.dir << "/climate_report.txt, climate_means.csv, climate_field.csv\n";
  return kSuccess;
}

/// Runs the acceptance criteria; exit 4 if any fails.
inline int cmd_selftest(const Globals& g, std::ostream& log) {
  acceptance::Options o;
  if (g.seed) o.seed = *g.seed;
  o.threads = g.threads;
  int failed = 0;
  acceptance::run(o, [&](const acceptance::Result& res) {
    log << acceptance::line(res) << "\n" << std::flush;
    if (!res.pass) ++failed;
  });
  log << (10 - failed) << "/10 criteria passed\n";
  return failed == 0 ? kSuccess : kVerificationFailed;
}

/// Maps library errors to exit codes: validation 2, numerical 3.
template <class Fn>
int guarded(Fn&& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kValidation;
  }
}

}  // namespace dmc::cli
