#pragma once

#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "dmc/config.hpp"
#include "dmc/control.hpp"
#include "dmc/io.hpp"
#include "dmc/synthesis.hpp"

namespace dmc::plan {

inline constexpr const char* kFormat = "dmc-plan-1";
inline constexpr const char* kTerminator = "# end of plan\n";

/// What a plan file holds: the problem it was made for, the scalar summary,
/// and the control node by node.
struct StoredPlan {
  std::string profile, bc, f;
  int n_cells = 0;
  double epsilon = 0.0;
  double horizon = 0.0;
  double t1 = 0.0;
  double alpha1 = 0.0;
  double s_eps = 0.0;
  double sigma0_norm = 0.0;
  double t_star = 0.0;
  double synthesized_error = 0.0;
  int j = 0;
  int segments = 1;
  std::vector<double> breakpoints;
  std::vector<std::vector<double>> profiles;

  PiecewiseStaticControl control(const GridPtr& grid) const {
    detail::require(grid->n_cells() == n_cells, "plan grid differs from the requested grid");
    std::vector<StateVector> p;
    for (const auto& v : profiles) p.emplace_back(grid, v);
    return PiecewiseStaticControl(breakpoints, std::move(p));
  }
};

inline StoredPlan from_synthesis(const ControlPlan& cp, const config::Problem& prob) {
  detail::require(cp.control.has_value(), "plan has no control");
  StoredPlan s;
  s.profile = prob.profile_text;
  s.bc = prob.bc_text;
  s.f = prob.f_text;
  s.n_cells = cp.control->grid_ptr()->n_cells();
  s.epsilon = cp.epsilon;
  s.horizon = cp.horizon;
  s.t1 = cp.t1;
  s.alpha1 = cp.alpha1;
  s.s_eps = cp.s_eps;
  s.sigma0_norm = cp.sigma0_norm;
  s.t_star = cp.t_star;
  s.synthesized_error = cp.synthesized_error;
  s.j = cp.j;
  s.segments = cp.segments;
  s.breakpoints = cp.control->breakpoints();
  for (const auto& p : cp.control->profiles()) s.profiles.emplace_back(p.values().begin(), p.values().end());
  return s;
}

inline std::string slab_section(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "slab.%06zu", k);
  return buf;
}

/// Canonical text: sorted sections and keys, 17 significant digits, spatially
/// uniform slabs as "uniform = v", and a terminator line.
inline std::string serialize(const StoredPlan& s) {
  io::Document d;
  d.set("plan", "format", kFormat);
  d.set("plan", "n_cells", std::to_string(s.n_cells));
  d.set("plan", "epsilon", io::canonical(s.epsilon));
  d.set("plan", "horizon", io::canonical(s.horizon));
  d.set("plan", "t1", io::canonical(s.t1));
  d.set("plan", "alpha1", io::canonical(s.alpha1));
  d.set("plan", "s_eps", io::canonical(s.s_eps));
  d.set("plan", "sigma0_norm", io::canonical(s.sigma0_norm));
  d.set("plan", "t_star", io::canonical(s.t_star));
  d.set("plan", "synthesized_error", io::canonical(s.synthesized_error));
  d.set("plan", "j", std::to_string(s.j));
  d.set("plan", "segments", std::to_string(s.segments));
  d.set("plan", "slabs", std::to_string(s.profiles.size()));
  d.set("problem", "profile", s.profile);
  d.set("problem", "bc", s.bc);
  d.set("problem", "f", s.f);
  d.set("control", "breakpoints", io::join_canonical(s.breakpoints));
  for (std::size_t k = 0; k < s.profiles.size(); ++k) {
    const auto& v = s.profiles[k];
    bool uniform = true;
    for (double x : v) uniform = uniform && x == v.front();
    if (uniform) {
      d.set(slab_section(k), "uniform", io::canonical(v.front()));
    } else {
      d.set(slab_section(k), "values", io::join_canonical(v));
    }
  }
  return io::serialize(d) + kTerminator;
}

/// Strict parse; truncation, unknown keys and count mismatches are errors.
inline StoredPlan parse(const std::string& text, const std::string& source = "<plan>") {
  const std::string term = kTerminator;
  if (text.size() < term.size() || text.compare(text.size() - term.size(), term.size(), term) != 0) {
    throw ValidationError(source + ": plan file is truncated (missing the '# end of plan' line)");
  }
  const auto doc = io::parse_document(text, source);
  io::Reader r(doc);
  auto fail = [&](const std::string& s, const std::string& k, const std::string& why) {
    throw ValidationError(r.where(s, k) + ": " + why);
  };
  StoredPlan s;
  if (r.required_text("plan", "format") != kFormat) fail("plan", "format", "unsupported plan format");
  auto count = [&](const std::string& k, long long lo) {
    const long long v = r.integer("plan", k, -1);
    if (!r.has("plan", k)) throw ValidationError(source + ": missing required key 'plan." + k + "'");
    if (v < lo || v > 100'000'000) fail("plan", k, "out of range");
    return v;
  };
  s.n_cells = static_cast<int>(count("n_cells", SpatialGrid::kMinCells));
  s.j = static_cast<int>(count("j", 0));
  s.segments = static_cast<int>(count("segments", 1));
  const auto slabs = static_cast<std::size_t>(count("slabs", 1));
  s.epsilon = r.required_number("plan", "epsilon");
  s.horizon = r.required_number("plan", "horizon");
  s.t1 = r.required_number("plan", "t1");
  s.alpha1 = r.required_number("plan", "alpha1");
  s.s_eps = r.required_number("plan", "s_eps");
  s.sigma0_norm = r.required_number("plan", "sigma0_norm");
  s.t_star = r.required_number("plan", "t_star");
  s.synthesized_error = r.required_number("plan", "synthesized_error");
  s.profile = r.required_text("problem", "profile");
  s.bc = r.required_text("problem", "bc");
  s.f = r.required_text("problem", "f");
  s.breakpoints = r.numbers("control", "breakpoints");
  if (s.breakpoints.size() != slabs + 1) fail("control", "breakpoints", "needs plan.slabs + 1 entries");
  if (s.breakpoints.back() != s.horizon) fail("control", "breakpoints", "must end at plan.horizon");
  const auto nodes = static_cast<std::size_t>(s.n_cells) + 1;
  std::set<std::string> known{"plan", "problem", "control"};
  for (std::size_t k = 0; k < slabs; ++k) {
    const auto sec = slab_section(k);
    known.insert(sec);
    if (!r.has_section(sec)) throw ValidationError(source + ": missing section [" + sec + "]");
    if (r.has(sec, "uniform") == r.has(sec, "values")) {
      throw ValidationError(source + ": section [" + sec + "] needs exactly one of 'uniform' or 'values'");
    }
    if (r.has(sec, "uniform")) {
      s.profiles.emplace_back(nodes, r.required_number(sec, "uniform"));
    } else {
      auto v = r.numbers(sec, "values");
      if (v.size() != nodes) fail(sec, "values", "has " + std::to_string(v.size()) + " entries, expected " + std::to_string(nodes));
      s.profiles.push_back(std::move(v));
    }
  }
  r.reject_unknown_sections(known);
  r.reject_unknown(known);
  // Validates ordering and finiteness.
  s.control(build_grid(s.n_cells));
  return s;
}

inline StoredPlan load(const std::string& path) { return parse(io::read_file(path), path); }

/// Checks a stored plan against the problem and horizon of a config. With
/// resample = false the grid must match too.
inline void check_compatible(const StoredPlan& s, const config::Problem& p, double horizon, int n_cells,
                             bool resample) {
  auto mismatch = [](const std::string& what, const std::string& plan, const std::string& cfg) {
    throw ValidationError("plan/problem mismatch in " + what + ": plan has " + plan + ", config has " + cfg);
  };
  if (s.profile != p.profile_text) mismatch("profile", s.profile, p.profile_text);
  if (s.bc != p.bc_text) mismatch("bc", s.bc, p.bc_text);
  if (s.f != p.f_text) mismatch("f", s.f, p.f_text);
  if (std::abs(s.horizon - horizon) > 1e-12 * std::max(1.0, horizon)) {
    mismatch("horizon", io::shortest(s.horizon), io::shortest(horizon));
  }
  if (!resample && s.n_cells != n_cells) {
    mismatch("grid", "n_cells = " + std::to_string(s.n_cells),
             "n_cells = " + std::to_string(n_cells) + " (set verify.resample = true for a cross-resolution check)");
  }
}

/// The plan's control on the target grid, resampled when the resolutions differ.
inline PiecewiseStaticControl control_on(const StoredPlan& s, const GridPtr& grid) {
  const auto own = s.control(build_grid(s.n_cells));
  return s.n_cells == grid->n_cells() ? s.control(grid) : own.resampled(grid);
}

}  // namespace dmc::plan
