#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "dmc/errors.hpp"

namespace dmc {

/// Interval of states on which a nonlinearity's bounds are declared.
struct StateRange {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool contains(double u) const { return u >= lo && u <= hi; }
};

/// Reaction term f(x, t, u) with its growth/sign constants: |f| <= delta_star |u|^theta
/// and the one-sided bounds
///   -nu (1 + |u|^(theta-1) + |v|^(theta-1)) (u-v)^2 <= (f(u)-f(v))(u-v) <= nu (u-v)^2.
///
/// The bounds may be declared over a restricted state range (used by the
/// climate presets, whose constants are fitted on physical temperatures);
/// f(x, t, 0) = 0 is enforced whenever 0 lies inside that range.
class Nonlinearity {
 public:
  using Fn = std::function<double(double, double, double)>;

  using Range = StateRange;

  Nonlinearity(Fn f, double theta, double delta_star, double nu, std::string label,
               Fn df_du = nullptr, Range range = Range())
      : f_(std::move(f)), df_du_(std::move(df_du)), theta_(theta), delta_star_(delta_star),
        nu_(nu), label_(std::move(label)), range_(range) {
    detail::require(theta >= 1.0, "nonlinearity exponent theta must be >= 1");
    detail::require(delta_star >= 0.0, "delta_star must be nonnegative");
    detail::require(nu >= 0.0, "nu must be nonnegative");
    detail::require(range.lo < range.hi, "nonlinearity range is empty");
    if (range_.contains(0.0)) {
      for (double x : {-1.0, -0.5, 0.0, 0.3, 1.0}) {
        for (double t : {0.0, 0.5, 1.0, 10.0}) {
          detail::require(f_(x, t, 0.0) == 0.0,
                          "nonlinearity '" + label_ + "' must satisfy f(x, t, 0) = 0");
        }
      }
    }
  }

  static Nonlinearity zero() {
    return Nonlinearity([](double, double, double) { return 0.0; }, 1.0, 0.0, 0.0, "zero",
                        [](double, double, double) { return 0.0; });
  }

  /// f(u) = -delta u |u|^(theta-1), an absorption term. The secant slope of
  /// u|u|^(theta-1) is at most theta/2 (|u|^(theta-1) + |v|^(theta-1)) when
  /// theta >= 2 and at most theta max(|u|,|v|)^(theta-1) otherwise.
  static Nonlinearity absorption(double delta, double theta) {
    detail::require(delta >= 0.0, "absorption coefficient must be nonnegative");
    Fn f = [delta, theta](double, double, double u) {
      return -delta * u * std::pow(std::abs(u), theta - 1.0);
    };
    Fn df = [delta, theta](double, double, double u) {
      return -delta * theta * std::pow(std::abs(u), theta - 1.0);
    };
    const double nu = delta * (theta >= 2.0 ? 0.5 * theta : theta);
    return Nonlinearity(std::move(f), theta, delta, nu,
                        "absorption(" + std::to_string(delta) + "," + std::to_string(theta) + ")",
                        std::move(df));
  }

  /// -c u^3 restricted to |u| <= bound and declared with exponent theta < 3;
  /// delta_star = c bound^(3-theta) and nu from the cubic's one-sided bound
  /// on that range.
  static Nonlinearity cubic_on_range(double c, double theta, double bound) {
    detail::require(c >= 0.0 && bound > 0.0, "cubic_on_range needs c >= 0 and bound > 0");
    detail::require(theta >= 1.0 && theta <= 3.0, "cubic_on_range needs theta in [1, 3]");
    Fn f = [c](double, double, double u) { return -c * u * u * u; };
    Fn df = [c](double, double, double u) { return -3.0 * c * u * u; };
    const double delta_star = c * std::pow(bound, 3.0 - theta);
    // (u^2 + uv + v^2) <= nu/c (1 + |u|^(theta-1) + |v|^(theta-1)) on |u|,|v| <= bound;
    // the worst case is u = v = bound.
    const double nu = c * 3.0 * bound * bound / (1.0 + 2.0 * std::pow(bound, theta - 1.0));
    return Nonlinearity(std::move(f), theta, delta_star, nu,
                        "cubic(" + std::to_string(c) + ")", std::move(df), Range{-bound, bound});
  }

  /// Coalbedo-weighted growth kappa * beta(u) * u with a Sellers ramp
  /// beta(u) = a_i below u_s - eta, a_f above u_s + eta, linear in between.
  static Nonlinearity sellers_ramp(double kappa, double a_i, double a_f, double u_s, double eta) {
    detail::require(kappa >= 0.0 && 0.0 < a_i && a_i < a_f && a_f < 1.0 && eta > 0.0,
                    "sellers_ramp parameters out of range");
    auto beta = [=](double u) {
      if (u <= u_s - eta) return a_i;
      if (u >= u_s + eta) return a_f;
      return a_i + (a_f - a_i) * (u - (u_s - eta)) / (2.0 * eta);
    };
    auto dbeta = [=](double u) {
      return (u > u_s - eta && u < u_s + eta) ? (a_f - a_i) / (2.0 * eta) : 0.0;
    };
    Fn f = [kappa, beta](double, double, double u) { return kappa * beta(u) * u; };
    Fn df = [kappa, beta, dbeta](double, double, double u) {
      return kappa * (beta(u) + dbeta(u) * u);
    };
    const double ramp = (a_f - a_i) / (2.0 * eta);
    const double nu = kappa * std::max(a_f + ramp * std::max(0.0, u_s + eta),
                                       ramp * std::max(0.0, eta - u_s) - a_i);
    return Nonlinearity(std::move(f), 1.0, kappa * a_f, nu, "sellers_ramp", std::move(df));
  }

  double operator()(double x, double t, double u) const { return f_(x, t, u); }

  double derivative(double x, double t, double u) const {
    if (df_du_) return df_du_(x, t, u);
    const double h = 1e-7 * std::max(1.0, std::abs(u));
    return (f_(x, t, u + h) - f_(x, t, u - h)) / (2.0 * h);
  }

  bool is_zero() const { return label_ == "zero"; }
  double theta() const { return theta_; }
  double delta_star() const { return delta_star_; }
  double nu() const { return nu_; }
  const std::string& label() const { return label_; }
  const Range& range() const { return range_; }
  const Fn& function() const { return f_; }

 private:
  Fn f_;
  Fn df_du_;
  double theta_;
  double delta_star_;
  double nu_;
  std::string label_;
  Range range_;
};

struct SlCheckReport {
  double growth_margin = std::numeric_limits<double>::infinity();
  double upper_sign_margin = std::numeric_limits<double>::infinity();
  double lower_sign_margin = std::numeric_limits<double>::infinity();
  std::size_t samples = 0;
  bool pass = true;
  std::string worst;  // which bound had the smallest margin
};

/// Samples (x, t, u, v) on a lattice plus seeded random draws and reports the
/// worst relative margin of each growth/sign bound. Violations are content,
/// not errors.
inline SlCheckReport check_sl_assumptions(const Nonlinearity& f, int samples,
                                          double u_bound = 10.0, double t_max = 1.0,
                                          unsigned seed = 12345) {
  detail::require(samples >= 100, "check_sl_assumptions needs at least 100 samples");
  const double lo = std::max(f.range().lo, -u_bound);
  const double hi = std::min(f.range().hi, u_bound);
  SlCheckReport rep;
  const double theta = f.theta();
  const double ds = f.delta_star();
  const double nu = f.nu();

  auto visit = [&](double x, double t, double u, double v) {
    ++rep.samples;
    const double fu = f(x, t, u);
    const double fv = f(x, t, v);
    const double bound = ds * std::pow(std::abs(u), theta);
    const double g = (bound - std::abs(fu)) / std::max(1.0, bound);
    const double du = u - v;
    const double prod = (fu - fv) * du;
    const double up = nu * du * du;
    const double low = -nu * (1.0 + std::pow(std::abs(u), theta - 1.0) +
                              std::pow(std::abs(v), theta - 1.0)) * du * du;
    const double scale = std::max({1.0, std::abs(prod), std::abs(up), std::abs(low)});
    rep.growth_margin = std::min(rep.growth_margin, g);
    rep.upper_sign_margin = std::min(rep.upper_sign_margin, (up - prod) / scale);
    rep.lower_sign_margin = std::min(rep.lower_sign_margin, (prod - low) / scale);
  };

  // Lattice part: roughly a quarter of the budget.
  const int per_axis = std::max(2, static_cast<int>(std::cbrt(samples / 4.0)));
  for (int i = 0; i < per_axis; ++i) {
    const double x = -1.0 + 2.0 * i / (per_axis - 1);
    for (int j = 0; j < per_axis; ++j) {
      const double u = lo + (hi - lo) * j / (per_axis - 1);
      for (int k = 0; k < per_axis; ++k) {
        const double v = lo + (hi - lo) * k / (per_axis - 1);
        visit(x, t_max * k / (per_axis - 1), u, v);
      }
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(-1.0, 1.0), ut(0.0, t_max), uu(lo, hi);
  while (rep.samples < static_cast<std::size_t>(samples)) {
    const double u = uu(rng);
    // Half of the random pairs are close together to probe local slopes.
    const double v = (rep.samples % 2 == 0) ? uu(rng)
                                            : std::clamp(u + 1e-3 * (uu(rng) - 0.5 * (lo + hi)), lo, hi);
    visit(ux(rng), ut(rng), u, v);
  }

  constexpr double kTol = -1e-9;
  rep.pass = rep.growth_margin >= kTol && rep.upper_sign_margin >= kTol &&
             rep.lower_sign_margin >= kTol;
  const double worst = std::min({rep.growth_margin, rep.upper_sign_margin, rep.lower_sign_margin});
  rep.worst = worst == rep.growth_margin       ? "growth"
              : worst == rep.upper_sign_margin ? "upper_sign"
                                               : "lower_sign";
  return rep;
}

/// Smallest delta_star and nu (with 1% headroom) making f satisfy the bounds
/// for a given theta on [lo, hi], estimated on a dense sample.
struct FittedConstants {
  double delta_star;
  double nu;
};

inline FittedConstants fit_sl_constants(const Nonlinearity::Fn& f, double theta, double lo,
                                        double hi, double t_max = 1.0, int samples = 200) {
  double ds = 0.0, nu = 0.0;
  for (int ix = 0; ix <= 8; ++ix) {
    const double x = -1.0 + ix / 4.0;
    for (int it = 0; it <= 4; ++it) {
      const double t = t_max * it / 4.0;
      for (int i = 0; i <= samples; ++i) {
        const double u = lo + (hi - lo) * i / samples;
        const double fu = f(x, t, u);
        if (u != 0.0) ds = std::max(ds, std::abs(fu) / std::pow(std::abs(u), theta));
        if (i > 0) {
          const double v = lo + (hi - lo) * (i - 1) / samples;
          const double du = u - v;
          const double slope = (fu - f(x, t, v)) / du;
          nu = std::max(nu, slope);
          const double env = 1.0 + std::pow(std::abs(u), theta - 1.0) + std::pow(std::abs(v), theta - 1.0);
          nu = std::max(nu, -slope / env);
        }
      }
    }
  }
  return {1.01 * ds, 1.01 * nu};
}

}  // namespace dmc
