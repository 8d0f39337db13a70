#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dmc/errors.hpp"

namespace dmc {

enum class Degeneracy { WDeg, SDeg };
enum class DegeneracyClass { WDeg, SDeg, Indeterminate };

inline const char* to_string(Degeneracy d) { return d == Degeneracy::WDeg ? "WDeg" : "SDeg"; }
inline const char* to_string(DegeneracyClass d) {
  switch (d) {
    case DegeneracyClass::WDeg: return "WDeg";
    case DegeneracyClass::SDeg: return "SDeg";
    default: return "Indeterminate";
  }
}

/// Degenerate diffusion coefficient a(x) on [-1, 1] with a(+-1) = 0 and
/// a > 0 inside. The degeneracy class fixes the growth cap of the
/// nonlinearity: 4 for weak degeneracy, 3 for strong.
class DiffusionProfile {
 public:
  using Fn = std::function<double(double)>;

  DiffusionProfile(Fn a, Fn a_prime, Degeneracy degeneracy, std::string label = "custom")
      : a_(std::move(a)), a_prime_(std::move(a_prime)), degeneracy_(degeneracy),
        label_(std::move(label)) {
    detail::require(std::abs(a_(-1.0)) <= 1e-12 && std::abs(a_(1.0)) <= 1e-12,
                    "diffusion profile must vanish at x = -1 and x = 1");
    constexpr int kSamples = 1000;
    for (int i = 1; i < kSamples; ++i) {
      const double x = -1.0 + 2.0 * i / kSamples;
      detail::require(a_(x) > 0.0, "diffusion profile must be positive in (-1, 1)");
    }
  }

  /// a(x) = (1 - x^2)^eta; eta < 1 is weakly degenerate.
  static DiffusionProfile power(double eta) {
    detail::require(eta > 0.0, "power profile exponent must be positive");
    Fn a = [eta](double x) {
      const double s = 1.0 - x * x;
      return s <= 0.0 ? 0.0 : std::pow(s, eta);
    };
    Fn ap = [eta](double x) {
      const double s = 1.0 - x * x;
      if (s <= 0.0) return eta < 1.0 ? -std::copysign(HUGE_VAL, x) : (eta == 1.0 ? -2.0 * x : 0.0);
      return -2.0 * eta * x * std::pow(s, eta - 1.0);
    };
    DiffusionProfile p(std::move(a), std::move(ap), eta < 1.0 ? Degeneracy::WDeg : Degeneracy::SDeg,
                       "power(" + std::to_string(eta) + ")");
    p.exponent_ = eta;
    return p;
  }

  /// The Budyko-Sellers coefficient a(x) = 1 - x^2.
  static DiffusionProfile legendre() {
    auto p = power(1.0);
    p.label_ = "legendre";
    return p;
  }

  /// a(x) = sqrt(1 - x^2).
  static DiffusionProfile sqrt_profile() {
    auto p = power(0.5);
    p.label_ = "sqrt";
    return p;
  }

  double operator()(double x) const { return a_(x); }
  double derivative(double x) const { return a_prime_(x); }
  const Fn& function() const { return a_; }
  Degeneracy degeneracy() const { return degeneracy_; }
  int theta_sup() const { return degeneracy_ == Degeneracy::WDeg ? 4 : 3; }
  const std::string& label() const { return label_; }

  /// Exponent eta when the profile is (1 - x^2)^eta.
  std::optional<double> exponent() const { return exponent_; }
  bool is_legendre() const { return exponent_ && *exponent_ == 1.0; }

 private:
  Fn a_;
  Fn a_prime_;
  Degeneracy degeneracy_;
  std::string label_;
  std::optional<double> exponent_;
};

struct Robin {
  double beta0 = 1.0;
  double beta1 = 0.0;
  double gamma0 = 1.0;
  double gamma1 = 0.0;
};

struct WeightedNeumann {};

/// Robin conditions beta0 u(-1) + beta1 (a u_x)(-1) = 0 and
/// gamma0 u(1) + gamma1 (a u_x)(1) = 0, or the weighted Neumann condition
/// (a u_x)(+-1) = 0.
class BoundaryCondition {
 public:
  BoundaryCondition(WeightedNeumann wn) : kind_(wn) {}  // NOLINT
  BoundaryCondition(Robin r) : kind_(r) {                // NOLINT
    detail::require(r.beta0 * r.beta0 + r.beta1 * r.beta1 > 0.0,
                    "Robin condition needs beta0^2 + beta1^2 > 0");
    detail::require(r.gamma0 * r.gamma0 + r.gamma1 * r.gamma1 > 0.0,
                    "Robin condition needs gamma0^2 + gamma1^2 > 0");
    detail::require(r.beta0 * r.beta1 <= 0.0, "Robin sign condition beta0*beta1 <= 0 violated");
    detail::require(r.gamma0 * r.gamma1 >= 0.0, "Robin sign condition gamma0*gamma1 >= 0 violated");
  }

  bool is_robin() const { return std::holds_alternative<Robin>(kind_); }
  bool is_weighted_neumann() const { return !is_robin(); }
  const Robin& robin() const { return std::get<Robin>(kind_); }

  std::string describe() const {
    if (!is_robin()) return "weighted_neumann";
    const auto& r = robin();
    return "robin(" + std::to_string(r.beta0) + "," + std::to_string(r.beta1) + "," +
           std::to_string(r.gamma0) + "," + std::to_string(r.gamma1) + ")";
  }

 private:
  std::variant<WeightedNeumann, Robin> kind_;
};

inline void check_compatible(const DiffusionProfile& a, const BoundaryCondition& bc) {
  if (bc.is_robin()) {
    detail::require(a.degeneracy() == Degeneracy::WDeg,
                    "Robin conditions are only admissible for weakly degenerate profiles");
  } else {
    detail::require(a.degeneracy() == Degeneracy::SDeg,
                    "weighted Neumann conditions are only used for strongly degenerate profiles");
  }
}

namespace detail {

// Integrals of g over [-1 + delta_k, 1 - delta_k] for delta_k = 10^-k,
// k = 0..decades, using x = +-(1 - e^s) and composite Simpson in s.
// g receives (x, d) with d = 1 - |x| so callers can avoid cancellation.
inline std::vector<double> decade_integrals(const std::function<double(double, double)>& g,
                                            int decades, int panels_per_decade = 400) {
  std::vector<double> out(decades + 1, 0.0);
  const double ds = std::log(10.0) / panels_per_decade;
  double acc = 0.0;
  for (int k = 1; k <= decades; ++k) {
    double piece = 0.0;
    for (int side : {-1, 1}) {
      const double s_hi = -(k - 1) * std::log(10.0);
      for (int p = 0; p < panels_per_decade; p += 2) {
        double local = 0.0;
        for (int q = 0; q <= 2; ++q) {
          const double s = s_hi - (p + q) * ds;
          const double d = std::exp(s);
          const double x = side * (1.0 - d);
          const double w = (q == 1) ? 4.0 : 1.0;
          local += w * g(x, d) * d;
        }
        piece += local * ds / 3.0;
      }
    }
    acc += piece;
    out[k] = acc;
  }
  return out;
}

enum class Convergence { Converged, Divergent, Unclear };

// Successive decade integrals: converged when the last refinement changes the
// value by < 1% or the increments shrink geometrically; divergent when the
// increments stop shrinking.
inline Convergence assess(const std::vector<double>& seq) {
  const std::size_t n = seq.size();
  const double d_last = std::abs(seq[n - 1] - seq[n - 2]);
  const double d_prev = std::abs(seq[n - 2] - seq[n - 3]);
  const double d_prev2 = std::abs(seq[n - 3] - seq[n - 4]);
  const double value = std::abs(seq[n - 1]);
  if (!std::isfinite(value)) return Convergence::Divergent;
  if (d_last < 0.01 * value) return Convergence::Converged;
  const double r1 = d_last / std::max(d_prev, 1e-300);
  const double r2 = d_prev / std::max(d_prev2, 1e-300);
  if (r1 <= 0.95 && r2 <= 0.95) return Convergence::Converged;
  if (r1 >= 0.99 && r2 >= 0.99) return Convergence::Divergent;
  return Convergence::Unclear;
}

}  // namespace detail

/// Numerical integrability test for 1/a near the endpoints, plus the
/// xi_a in L^q check on the strongly degenerate branch with
/// q = max{(1+theta)/(3-theta), 2 theta - 1}.
inline DegeneracyClass classify_degeneracy(const std::function<double(double)>& a, double theta) {
  detail::require(std::abs(a(-1.0)) <= 1e-12 && std::abs(a(1.0)) <= 1e-12,
                  "classify_degeneracy: a must vanish at x = +-1");
  for (int i = 1; i < 2000; ++i) {
    const double x = -1.0 + 2.0 * i / 2000;
    detail::require(a(x) >= 0.0, "classify_degeneracy: a is negative at a sample");
    detail::require(a(x) > 0.0, "classify_degeneracy: a must be positive in (-1, 1)");
  }
  constexpr int kDecades = 12;
  auto inv_a = [&a](double x, double) { return 1.0 / a(x); };
  const auto integrals = detail::decade_integrals(inv_a, kDecades);
  const auto verdict = detail::assess(integrals);
  if (verdict == detail::Convergence::Converged) return DegeneracyClass::WDeg;
  if (verdict == detail::Convergence::Unclear) return DegeneracyClass::Indeterminate;

  if (theta >= 3.0) return DegeneracyClass::Indeterminate;
  const double q = std::max((1.0 + theta) / (3.0 - theta), 2.0 * theta - 1.0);

  // xi_a(x) = int_0^x ds / a(s), tabulated on the same logarithmic grid.
  constexpr int kPanels = 400;
  const double ds = std::log(10.0) / kPanels;
  const int total = kDecades * kPanels;
  std::vector<double> xi_pos(total + 1), xi_neg(total + 1);
  // index m <-> s = -m ds, d = e^s, x = +-(1 - d); m = 0 is x = 0.
  for (int side : {-1, 1}) {
    auto& xi = side > 0 ? xi_pos : xi_neg;
    xi[0] = 0.0;
    for (int m = 1; m <= total; ++m) {
      const double s0 = -(m - 1) * ds, s1 = -m * ds, sm = 0.5 * (s0 + s1);
      auto integrand = [&](double s) {
        const double d = std::exp(s);
        return d / a(side * (1.0 - d));
      };
      xi[m] = xi[m - 1] + side * ds / 6.0 * (integrand(s0) + 4.0 * integrand(sm) + integrand(s1));
    }
  }
  std::vector<double> lq(kDecades + 1, 0.0);
  double acc = 0.0;
  for (int k = 1; k <= kDecades; ++k) {
    for (int side : {-1, 1}) {
      const auto& xi = side > 0 ? xi_pos : xi_neg;
      for (int m = (k - 1) * kPanels; m < k * kPanels; m += 2) {
        auto term = [&](int idx) { return std::pow(std::abs(xi[idx]), q) * std::exp(-idx * ds); };
        acc += ds / 3.0 * (term(m) + 4.0 * term(m + 1) + term(m + 2));
      }
    }
    lq[k] = acc;
  }
  return detail::assess(lq) == detail::Convergence::Converged ? DegeneracyClass::SDeg
                                                              : DegeneracyClass::Indeterminate;
}

}  // namespace dmc
