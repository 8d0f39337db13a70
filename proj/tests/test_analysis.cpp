#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dmc/analysis.hpp"
#include "dmc/spectral.hpp"
#include "dmc/synthesis.hpp"

using namespace dmc;

namespace {

const DiffusionProfile kLegendre = DiffusionProfile::legendre();

StateVector raised_cosine(const GridPtr& g) {
  return StateVector::sample(g, [](double x) { return 1 + std::cos(M_PI * x); });
}

}  // namespace

TEST(Nonnegativity, HeatDecayPasses) {
  const auto g = build_grid(400);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  const auto traj = solve(raised_cosine(g), PiecewiseStaticControl::uniform(g, 0.0, 0.5), Nonlinearity::zero(), op,
                          TimeGrid(0.0, 0.5, 1e-3));
  const auto r = check_nonnegativity(traj, 1e-8);
  EXPECT_TRUE(r.applicable);
  EXPECT_TRUE(r.pass);
  EXPECT_TRUE(r.witnesses.empty());
}

TEST(Nonnegativity, SignChangingStartIsNotApplicable) {
  const auto g = build_grid(200);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  const auto w1 = legendre_basis(g, 2).vectors[1];
  const auto traj = solve(w1, PiecewiseStaticControl::uniform(g, 0.0, 0.1), Nonlinearity::zero(), op,
                          TimeGrid(0.0, 0.1, 1e-2));
  const auto r = check_nonnegativity(traj, 1e-8);
  EXPECT_FALSE(r.applicable);
  EXPECT_FALSE(r.pass);
}

TEST(Nonnegativity, ZeroStateExactlyZero) {
  const auto g = build_grid(100);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  const auto traj = solve(StateVector(g, 0.0), PiecewiseStaticControl::uniform(g, 1.0, 0.2),
                          Nonlinearity::absorption(1.0, 2.0), op, TimeGrid(0.0, 0.2, 1e-2));
  const auto r = check_nonnegativity(traj, 1e-8);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.measured, 0.0);
}

TEST(Nonnegativity, ReportsWitnessesForNegativeStates) {
  const auto g = build_grid(50);
  Trajectory t;
  t.times = {0.0, 1.0};
  t.states = {StateVector(g, 1.0), StateVector(g, 1.0)};
  t.states[1][7] = -0.5;
  t.global_min = -0.5;
  const auto r = check_nonnegativity(t, 1e-8);
  EXPECT_FALSE(r.pass);
  ASSERT_EQ(r.witnesses.size(), 1u);
  EXPECT_EQ(r.witnesses[0].t, 1.0);
  EXPECT_EQ(r.witnesses[0].x, g->node(7));
}

TEST(ContinuousDependence, IdenticalStartsGiveZero) {
  const auto g = build_grid(100);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  const auto u0 = raised_cosine(g);
  const auto r = continuous_dependence(u0, u0, PiecewiseStaticControl::uniform(g, 0.5, 0.2),
                                       Nonlinearity::zero(), op, TimeGrid(0.0, 0.2, 1e-2));
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.measured, 0.0);
}

TEST(ContinuousDependence, HeatFlowContracts) {
  const auto g = build_grid(200);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  const auto u0 = raised_cosine(g);
  const auto v0 = StateVector::sample(g, [](double x) { return 1 + 0.5 * x * x; });
  const auto r = continuous_dependence(u0, v0, PiecewiseStaticControl::uniform(g, 0.0, 0.5), Nonlinearity::zero(),
                                       op, TimeGrid(0.0, 0.5, 1e-3));
  EXPECT_TRUE(r.pass) << r.note;
  EXPECT_LE(r.measured, l2_distance(u0, v0) * (1 + 1e-12));
}

TEST(ContinuousDependence, CubicWithGrowthControl) {
  const auto g = build_grid(200);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  const auto f = Nonlinearity::cubic_on_range(0.1, 2.0, 10.0);
  const auto u0 = raised_cosine(g);
  const auto v0 = StateVector::sample(g, [](double x) { return 1.2 + std::sin(x); });
  const double T = 0.3;
  const auto r = continuous_dependence(u0, v0, PiecewiseStaticControl::uniform(g, 2.0, T), f, op,
                                       TimeGrid(0.0, T, 1e-3));
  EXPECT_TRUE(r.pass) << r.note;
  EXPECT_LE(r.measured, 1.05 * std::exp((f.nu() + 2.0) * T) * l2_distance(u0, v0));
}

TEST(ContinuousDependenceProperties, SeededPairs) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto g = build_grid(200);
  for (int trial = 0; trial < 10; ++trial) {
    const auto op = trial % 2 ? assemble_operator(g, kLegendre, WeightedNeumann{})
                              : assemble_operator(g, DiffusionProfile::sqrt_profile(), Robin{1, -1, 1, 1});
    const double c1 = 3 * U(rng), c2 = 3 * U(rng), s1 = 2 * U(rng), s2 = 2 * U(rng);
    const auto u0 = StateVector::sample(g, [&](double x) { return s1 * (1 + std::sin(c1 * x)); });
    const auto v0 = StateVector::sample(g, [&](double x) { return s2 * (1 + std::cos(c2 * x)); });
    const auto a1 = StateVector::sample(g, [&](double x) { return 2 * std::sin(c2 * x); });
    const auto a2 = StateVector::sample(g, [&](double x) { return -2 * std::cos(c1 * x); });
    const PiecewiseStaticControl control({0.0, 0.2, 0.4}, {a1, a2});
    const auto f = trial % 3 == 0 ? Nonlinearity::zero() : Nonlinearity::cubic_on_range(0.1, 2.0, 10.0);
    const auto r = continuous_dependence(u0, v0, control, f, op, TimeGrid(0.0, 0.4, 1e-3));
    EXPECT_TRUE(r.pass) << "trial " << trial << ": " << r.note;
  }
}

TEST(NegativeControlBound, DecayIsBounded) {
  const auto g = build_grid(200);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  const auto u0 = raised_cosine(g);
  const auto r = negative_control_bound(u0, PiecewiseStaticControl::uniform(g, -1.0, 0.5), Nonlinearity::zero(),
                                        op, TimeGrid(0.0, 0.5, 1e-3));
  EXPECT_TRUE(r.pass);
  EXPECT_DOUBLE_EQ(r.measured, l2_norm(u0));
  EXPECT_EQ(r.witnesses.at(0).t, 0.0);
}

TEST(NegativeControlBound, PositiveNodeOrLongHorizonNotApplicable) {
  const auto g = build_grid(100);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  auto a = StateVector(g, -1.0);
  a[50] = 0.1;
  const auto r = negative_control_bound(StateVector(g, 1.0), PiecewiseStaticControl::constant(a, 0.5),
                                        Nonlinearity::zero(), op, TimeGrid(0.0, 0.5, 1e-2));
  EXPECT_FALSE(r.applicable);
  const auto f = Nonlinearity::cubic_on_range(1.0, 2.0, 10.0);
  const double T = 1.0 / (4.0 * f.nu());
  const auto r2 = negative_control_bound(StateVector(g, 1.0), PiecewiseStaticControl::uniform(g, -1.0, T), f, op,
                                         TimeGrid(0.0, T, T / 10));
  EXPECT_FALSE(r2.applicable);
}

TEST(NegativeControlBound, SynthesizedStepTwoControl) {
  const auto g = build_grid(400);
  const ControlProblem p{assemble_operator(g, kLegendre, WeightedNeumann{}), Nonlinearity::cubic_on_range(0.1, 2.0, 10.0)};
  const auto u0 = raised_cosine(g);
  const auto us = StateVector::sample(g, [](double x) { return 2 * std::exp(-4 * x * x); });
  const auto plan = synthesize(u0, us, 0.05 * l2_norm(us), 0.01, p);
  const auto& c = *plan.control;
  const double len = c.breakpoints()[2] - c.breakpoints()[1];
  const auto step2 = PiecewiseStaticControl::constant(c.profile(1), len);
  const auto r = negative_control_bound(u0, step2, p.f, p.op, TimeGrid(0.0, len, 1e-3, 100));
  EXPECT_TRUE(r.applicable) << r.note;
  EXPECT_TRUE(r.pass);
}

TEST(Step3Monitor, ConstantStateIsZero) {
  const auto g = build_grid(100);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  const auto traj = solve(StateVector(g, 2.0), PiecewiseStaticControl::uniform(g, 0.0, 0.1), Nonlinearity::zero(), op,
                          TimeGrid(0.0, 0.1, 1e-2));
  const auto s = step3_energy_monitor(traj, op, Nonlinearity::zero());
  EXPECT_EQ(s.values.size(), traj.states.size());
  EXPECT_EQ(s.values.front(), 0.0);
  // Later states carry the linear solves' rounding.
  EXPECT_LT(s.sup, 1e-9);
  Trajectory exact;
  exact.times = {0.0, 0.5};
  exact.states = {StateVector(g, 2.0), StateVector(g, 2.0)};
  EXPECT_EQ(step3_energy_monitor(exact, op, Nonlinearity::zero()).sup, 0.0);
}

TEST(Step3Monitor, EigenmodeDecay) {
  // ||A w2|| = lambda_2 ||w2|| = 6 for the normalized degree-2 mode.
  const auto g = build_grid(1000);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  const auto w2 = legendre_basis(g, 3).vectors[2];
  SolverConfig cfg;
  cfg.store_stride = 50;
  const auto traj = solve(w2, PiecewiseStaticControl::uniform(g, 0.0, 0.3), Nonlinearity::zero(), op,
                          TimeGrid(0.0, 0.3, 1e-4), cfg);
  const auto s = step3_energy_monitor(traj, op, Nonlinearity::zero());
  for (std::size_t k = 0; k < s.values.size(); ++k) {
    const double expect = 6.0 * std::exp(-6.0 * s.times[k]);
    EXPECT_NEAR(s.values[k] / expect, 1.0, 0.05) << "t=" << s.times[k];
  }
}

TEST(Step3Monitor, StableUnderRefinementOnConstantSteering) {
  const auto g = build_grid(1000);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  // Step-2 phase of the constant example: from 4 toward 3 with log(3/4) w_16.
  const auto alpha = StateVector::sample(g, [](double x) { return std::log(0.75) * boundary_window(x, 16, 1); });
  const auto control = PiecewiseStaticControl::constant((1.0 / 0.5) * alpha, 0.5);
  double sups[2];
  int idx = 0;
  for (double dt : {2e-3, 1e-3}) {
    SolverConfig cfg;
    const auto traj = solve(StateVector(g, 4.0), control, Nonlinearity::zero(), op, TimeGrid(0.0, 0.5, dt), cfg);
    sups[idx++] = step3_energy_monitor(traj, op, Nonlinearity::zero()).sup;
  }
  EXPECT_TRUE(std::isfinite(sups[0]));
  EXPECT_LT(std::abs(sups[0] - sups[1]) / sups[1], 0.1) << sups[0] << " " << sups[1];
}
