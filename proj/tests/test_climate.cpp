#include <gtest/gtest.h>

#include <cmath>

#include "dmc/climate.hpp"

using namespace dmc;
using namespace dmc::climate;

TEST(Coalbedo, SellersRampSaturatesAndMidpoint) {
  CoalbedoModel b{CoalbedoKind::SellersRamp, 0.4, 0.7, 263.15, 5.0};
  EXPECT_EQ(b(200.0), 0.4);
  EXPECT_EQ(b(300.0), 0.7);
  EXPECT_NEAR(b(263.15), 0.55, 1e-15);
  EXPECT_NEAR(b.derivative(263.15), 0.3 / 10.0, 1e-15);
}

TEST(Coalbedo, MonotoneAndBounded) {
  for (auto kind : {CoalbedoKind::SellersRamp, CoalbedoKind::BudykoStep, CoalbedoKind::BudykoRegularized}) {
    CoalbedoModel b{kind, 0.38, 0.7, 263.15, 3.0};
    double prev = 0.0;
    for (double u = 150.0; u <= 350.0; u += 0.25) {
      const double v = b(u);
      EXPECT_GE(v, 0.38);
      EXPECT_LE(v, 0.7);
      EXPECT_GE(v, prev);
      prev = v;
    }
  }
  EXPECT_THROW((CoalbedoModel{CoalbedoKind::SellersRamp, 0.7, 0.4, 263.15, 1.0}.validate()), ValidationError);
}

TEST(Emission, ValidationAndDerivative) {
  EmissionModel e;
  e.kind = EmissionKind::SellersStefanBoltzmann;
  e.m = 0.5;
  EXPECT_NO_THROW(e.validate());
  const double u = 280.0, h = 1e-4;
  EXPECT_NEAR(e.derivative(u), (e(u + h) - e(u - h)) / (2 * h), 1e-6 * std::abs(e.derivative(u)));
  e.m = 1.5;
  EXPECT_THROW(e.validate(), ValidationError);
  EmissionModel lin;
  lin.B = 0.0;
  EXPECT_THROW(lin.validate(), ValidationError);
}

TEST(Rhs, StepCoalbedoNeedsAcknowledge) {
  const auto g = build_grid(50);
  CoalbedoModel step{CoalbedoKind::BudykoStep, 0.38, 0.7, 263.15, 0.0};
  EXPECT_THROW(budyko_sellers_rhs(step, {}, {}, g, 1.0), ValidationError);
  EXPECT_NO_THROW(budyko_sellers_rhs(step, {}, {}, g, 1.0, Mapping::Conformant, true));
}

TEST(Rhs, MappingsAgreeOnTheRightHandSide) {
  const auto g = build_grid(40);
  const CoalbedoModel b;
  const EmissionModel e;
  InsolationProfile ins;
  ins.period = 1.0;
  ins.S = [](double x, double t) { return 1.0 + 0.3 * x * std::sin(2 * M_PI * t); };
  const auto lit = budyko_sellers_rhs(b, e, ins, g, 2.0, Mapping::Literal);
  const auto con = budyko_sellers_rhs(b, e, ins, g, 2.0, Mapping::Conformant);
  EXPECT_EQ(lit.alpha.sup_norm(), 0.0);
  EXPECT_GT(con.alpha.sup_norm(), 0.0);
  for (double t : {0.01, 0.37, 1.5}) {
    const auto& al = lit.alpha.profile(lit.alpha.slab_at(t));
    const auto& ac = con.alpha.profile(con.alpha.slab_at(t));
    const auto& q = lit.forcing.profile(lit.forcing.slab_at(t));
    for (std::size_t i = 0; i < g->size(); i += 5) {
      const double x = g->node(i);
      for (double u : {200.0, 263.15, 300.0}) {
        const double expect = q[i] * b(u) - e(u);
        EXPECT_NEAR(al[i] * u + lit.f(x, t, u), expect, 1e-9 * std::abs(expect) + 1e-9);
        EXPECT_NEAR(ac[i] * u + con.f(x, t, u), expect, 1e-9 * std::abs(expect) + 1e-9);
      }
    }
  }
  EXPECT_EQ(lit.alpha.slabs(), 48u);
}

TEST(Rhs, FittedConstantsHoldOnPhysicalRange) {
  const auto g = build_grid(40);
  const auto m = budyko_sellers_rhs({}, {}, {}, g, 1.0);
  EXPECT_EQ(m.f.range().lo, 150.0);
  EXPECT_TRUE(check_sl_assumptions(m.f, 3000, 1e9).pass);
}

TEST(Scenario, PureRelaxationTowardCoalbedoLevel) {
  // A = 0, B = 1, beta = a_f on the whole path, Q S = 1: u' = a_f - u.
  Scenario sc;
  sc.coalbedo = {CoalbedoKind::SellersRamp, 0.38, 0.7, 0.3, 0.2};
  sc.emission.A = 0.0;
  sc.emission.B = 1.0;
  sc.insolation.Q = 1.0;
  sc.insolation.S = [](double, double) { return 1.0; };
  sc.horizon = 12.0;
  sc.n_cells = 40;
  sc.u0 = [](double) { return 300.0; };
  const auto run = run_scenario(sc);
  const double expect = 0.7 + (300.0 - 0.7) * std::exp(-12.0);
  EXPECT_NEAR(run.report.final_mean, expect, 0.05 * (300.0 - 0.7) * std::exp(-12.0) + 1e-3);
  EXPECT_TRUE(run.report.out_of_range);
}

TEST(Scenario, DefaultStaysInPhysicalRange) {
  Scenario sc;
  const auto run = run_scenario(sc);
  EXPECT_GE(run.report.min_temperature, 150.0);
  EXPECT_LE(run.report.max_temperature, 350.0);
  EXPECT_FALSE(run.report.out_of_range);
  EXPECT_GT(run.report.pole_equator_gap, 0.0);
  EXPECT_DOUBLE_EQ(run.trajectory.final_time(), 10.0);
}

TEST(Scenario, ZeroInsolationDecaysMonotonicallyToEquilibrium) {
  Scenario sc;
  sc.insolation.Q = 0.0;
  sc.horizon = 5.0;
  sc.n_cells = 50;
  const auto run = run_scenario(sc);
  const double eq = -sc.emission.A / sc.emission.B;
  const auto& m = run.report.means;
  for (std::size_t k = 1; k < m.size(); ++k) {
    EXPECT_LE(m[k], m[k - 1] + 1e-12);
    EXPECT_GE(m[k], eq - 1e-9);
  }
  EXPECT_NEAR(m.back(), eq + (288.15 - eq) * std::exp(-sc.emission.B * 5.0), 0.05 * (288.15 - eq) * std::exp(-10.0) + 0.01);
}

TEST(Scenario, UniformStatesFollowScalarOde) {
  // x-independent forcing and data: A u = 0, so each step reduces to the
  // scalar recursion u <- exp(alpha dt) (u + dt f(u)) (conformant) or
  // u <- u + dt f(u) (literal).
  for (auto mapping : {Mapping::Conformant, Mapping::Literal}) {
    Scenario sc;
    sc.mapping = mapping;
    sc.insolation.S = [](double, double) { return 1.0; };
    sc.n_cells = 64;
    sc.horizon = 10.0;
    sc.u0 = [](double) { return 250.0; };
    const auto run = run_scenario(sc);
    const auto& uf = run.trajectory.final_state();
    EXPECT_LE(uf.max() - uf.min(), 1e-6);

    const double q = sc.insolation.Q;
    const double kref = sc.coalbedo(sc.u_ref) / sc.u_ref;
    const double a = mapping == Mapping::Literal ? 0.0 : q * kref;
    double u = 250.0;
    const auto steps = static_cast<int>(std::lround(sc.horizon / sc.dt));
    for (int k = 0; k < steps; ++k) {
      const double f = q * (sc.coalbedo(u) - (mapping == Mapping::Literal ? 0.0 : kref * u)) - sc.emission(u);
      u = std::exp(a * sc.dt) * (u + sc.dt * f);
    }
    for (std::size_t i = 0; i < uf.size(); ++i) EXPECT_NEAR(uf[i], u, 1e-6);

    // Against the continuous ODE (RK4, fine steps) the gap is O(dt).
    double v = 250.0;
    const int fine = 100000;
    const double hh = sc.horizon / fine;
    auto rhs = [&](double w) { return q * sc.coalbedo(w) - sc.emission(w); };
    for (int k = 0; k < fine; ++k) {
      const double k1 = rhs(v), k2 = rhs(v + 0.5 * hh * k1), k3 = rhs(v + 0.5 * hh * k2), k4 = rhs(v + hh * k3);
      v += hh / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    EXPECT_NEAR(uf[0], v, 0.5);
  }
}

TEST(Scenario, SeasonalMeanBecomesPeriodic) {
  Scenario sc;
  sc.insolation.period = 1.0;
  sc.insolation.S = [](double x, double t) {
    return 1.0 - 0.482 * 0.5 * (3 * x * x - 1) + 0.3 * x * std::sin(2 * M_PI * t);
  };
  sc.horizon = 8.0;
  sc.n_cells = 80;
  const auto run = run_scenario(sc);
  const auto& m = run.report.means;
  const auto per = static_cast<std::size_t>(std::lround(1.0 / sc.dt));
  ASSERT_GT(m.size(), 2 * per);
  const std::size_t last = m.size() - 1;
  for (std::size_t k = last - per; k <= last; ++k) {
    EXPECT_NEAR(m[k], m[k - per], 0.01 * std::abs(m[k]));
  }
}

TEST(Scenario, TemperaturesStayPositiveFromPhysicalStarts) {
  for (double u0 : {200.0, 260.0, 320.0}) {
    Scenario sc;
    sc.n_cells = 50;
    sc.horizon = 3.0;
    sc.u0 = [u0](double x) { return u0 + 10 * x * x; };
    const auto run = run_scenario(sc);
    EXPECT_GT(run.report.min_temperature, 0.0);
  }
}
