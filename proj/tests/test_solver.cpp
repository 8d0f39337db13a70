#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dmc/convergence.hpp"
#include "dmc/solver.hpp"
#include "dmc/spectral.hpp"

using namespace dmc;

namespace {

const DiffusionProfile kLegendre = DiffusionProfile::legendre();

}  // namespace

TEST(TimeGrid, LandsOnBreakpoints) {
  TimeGrid tg(0.0, 1.0, 0.3);
  const auto nodes = tg.nodes({0.0, 0.45, 1.0});
  EXPECT_EQ(nodes.front(), 0.0);
  EXPECT_EQ(nodes.back(), 1.0);
  EXPECT_NE(std::find(nodes.begin(), nodes.end(), 0.45), nodes.end());
  for (std::size_t k = 1; k < nodes.size(); ++k) {
    EXPECT_GT(nodes[k], nodes[k - 1]);
    EXPECT_LE(nodes[k] - nodes[k - 1], 0.3 + 1e-15);
  }
  EXPECT_THROW(TimeGrid(1.0, 1.0, 0.1), ValidationError);
  EXPECT_THROW(TimeGrid(0.0, 1.0, 0.0), ValidationError);
}

TEST(StepImex, EigenmodeDecayFactor) {
  const auto g = build_grid(400);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  const auto basis = eigendecompose(op, 3);
  const auto& u = basis.vectors[1];
  const double dt = 1e-3;
  const auto next = step_imex(u, 0.0, dt, op, StateVector(g, 0.0), Nonlinearity::zero());
  // Discrete eigenvalue: exactly 1/(1 + lambda_h dt); against lambda = 2 the
  // spatial error of lambda_h enters at O(h^2).
  const auto expect = (1.0 / (1.0 + basis.eigenvalues[1] * dt)) * u;
  EXPECT_LE(l2_distance(next, expect) / l2_norm(expect), 1e-12);
  const auto analytic = (1.0 / (1.0 + 2.0 * dt)) * u;
  EXPECT_LE(l2_distance(next, analytic) / l2_norm(analytic), 1e-5);
}

TEST(StepImex, ConstantModeUnderConstantShift) {
  const auto g = build_grid(64);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  const double c = 1.7, dt = 0.01;
  const auto next = step_imex(StateVector(g, 1.0), 0.0, dt, op, StateVector(g, c), Nonlinearity::zero());
  for (std::size_t i = 0; i < g->size(); ++i) EXPECT_NEAR(next[i], std::exp(c * dt), 1e-13);
}

TEST(StepImex, ZeroIsFixedPoint) {
  const auto g = build_grid(64);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  for (const auto& f : {Nonlinearity::absorption(1.0, 2.0), Nonlinearity::cubic_on_range(0.1, 2.0, 10.0),
                        Nonlinearity::sellers_ramp(1.0, 0.3, 0.6, 0.5, 0.1)}) {
    const auto next = step_imex(StateVector(g, 0.0), 0.0, 0.1, op, StateVector(g, 0.5), f);
    EXPECT_EQ(next.sup_norm(), 0.0);
  }
}

TEST(StepImex, NonUniformShiftIsImplicit) {
  const auto g = build_grid(64);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  const double dt = 0.01;
  const auto alpha = StateVector::sample(g, [](double x) { return x; });
  const auto next = step_imex(StateVector(g, 1.0), 0.0, dt, op, alpha, Nonlinearity::zero());
  // (I - dt (A + diag x)) v = 1, checked through the residual.
  const auto av = op.apply(next);
  for (std::size_t i = 0; i < g->size(); ++i) {
    EXPECT_NEAR(next[i] - dt * (av[i] + alpha[i] * next[i]), 1.0, 1e-12);
  }
}

TEST(StepImex, NewtonBranchSolvesImplicitReaction) {
  // Spatially uniform: v = e^(c dt) w with w + dt d w^2 = u, in closed form.
  const auto g = build_grid(32);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  const double d = 4.0, c = 0.5, dt = 0.2, u0 = 3.0;
  const auto f = Nonlinearity::absorption(d, 2.0);
  const auto next = step_imex(StateVector(g, u0), 0.0, dt, op, StateVector(g, c), f);
  const double A = dt * d;
  const double v = std::exp(c * dt) * (-1 + std::sqrt(1 + 4 * A * u0)) / (2 * A);
  for (std::size_t i = 0; i < g->size(); ++i) EXPECT_NEAR(next[i], v, 1e-10);
}

TEST(Solve, EigenDecayOracle) {
  const auto g = build_grid(2000);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  const auto leg = legendre_basis(g, 4);
  const auto control = PiecewiseStaticControl::uniform(g, 0.0, 0.5);
  SolverConfig cfg;
  cfg.store_stride = 1000;
  for (std::size_t p = 0; p <= 3; ++p) {
    const auto traj = solve(leg.vectors[p], control, Nonlinearity::zero(), op, TimeGrid(0.0, 0.5, 1e-4), cfg);
    const auto expect = std::exp(-static_cast<double>(p * (p + 1)) * 0.5) * leg.vectors[p];
    EXPECT_LE(l2_distance(traj.final_state(), expect), 1e-3) << "p=" << p;
    EXPECT_DOUBLE_EQ(traj.final_time(), 0.5);
  }
}

TEST(Solve, ConstantControlTriplesConstant) {
  const auto g = build_grid(200);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  const double t1 = 0.1;
  const auto control = PiecewiseStaticControl::uniform(g, std::log(3.0) / t1, t1);
  for (auto scheme : {Scheme::ImplicitEulerIMEX, Scheme::CrankNicolsonIMEX}) {
    SolverConfig cfg;
    cfg.scheme = scheme;
    const auto traj =
        solve(StateVector(g, 1.0), control, Nonlinearity::zero(), op, TimeGrid(0.0, t1, 1e-4), cfg);
    for (std::size_t i = 0; i < g->size(); i += 20) EXPECT_NEAR(traj.final_state()[i], 3.0, 1e-6);
  }
}

TEST(Solve, StrideKeepsFinalState) {
  const auto g = build_grid(32);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  SolverConfig cfg;
  cfg.store_stride = 7;
  const auto traj = solve(StateVector(g, 1.0), PiecewiseStaticControl::uniform(g, 0.0, 1.0),
                          Nonlinearity::zero(), op, TimeGrid(0.0, 1.0, 0.05), cfg);
  EXPECT_EQ(traj.steps, 20u);
  EXPECT_EQ(traj.times.size(), 4u);  // 0, 7, 14, 20
  EXPECT_DOUBLE_EQ(traj.times.back(), 1.0);
  EXPECT_EQ(traj.states.size(), traj.diagnostics.size());
}

TEST(Solve, RejectsUncoveredInterval) {
  const auto g = build_grid(32);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  EXPECT_THROW(solve(StateVector(g, 1.0), PiecewiseStaticControl::uniform(g, 0.0, 0.5), Nonlinearity::zero(),
                     op, TimeGrid(0.0, 1.0, 0.1)),
               ValidationError);
}

TEST(SolveProperties, NonnegativityRandomSellersAndAbsorption) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = build_grid(128);
    const auto op = trial % 2 ? assemble_operator(g, kLegendre, WeightedNeumann{})
                              : assemble_operator(g, DiffusionProfile::sqrt_profile(), Robin{1, -1, 1, 1});
    const double c1 = 4 * U(rng), c2 = 4 * U(rng);
    StateVector u0 = StateVector::sample(g, [&](double x) { return std::max(0.0, std::sin(3 * x + c1) * c2); });
    StateVector a1 = StateVector::sample(g, [&](double x) { return 2 * std::cos(c1 * x); });
    StateVector a2 = StateVector::sample(g, [&](double x) { return -2 * std::sin(c2 * x); });
    const PiecewiseStaticControl control({0.0, 0.3, 0.6}, {a1, a2});
    const auto f = trial % 3 == 0 ? Nonlinearity::sellers_ramp(1.0, 0.3, 0.7, 1.0, 0.2)
                                  : Nonlinearity::cubic_on_range(1.0, 2.0, 10.0);
    const auto traj = solve(u0, control, f, op, TimeGrid(0.0, 0.6, 1e-3));
    EXPECT_GE(traj.global_min, -1e-8 * u0.sup_norm()) << "trial " << trial;
  }
}

TEST(SolveProperties, MassConservation) {
  const auto g = build_grid(500);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  const auto u0 = StateVector::sample(g, [](double x) { return 1 + std::cos(M_PI * x) + 0.3 * x; });
  const auto traj = solve(u0, PiecewiseStaticControl::uniform(g, 0.0, 1.0), Nonlinearity::zero(), op,
                          TimeGrid(0.0, 1.0, 1e-3));
  EXPECT_LE(std::abs(integral(traj.final_state()) - integral(u0)) / std::abs(integral(u0)), 1e-8);
}

TEST(SolveProperties, ForcingNormTraceBounded) {
  const auto g = build_grid(200);
  const auto op = assemble_operator(g, kLegendre, WeightedNeumann{});
  const auto f = Nonlinearity::cubic_on_range(0.1, 2.0, 10.0);
  const auto u0 = StateVector::sample(g, [](double x) { return 1 + std::cos(M_PI * x); });
  const auto traj = solve(u0, PiecewiseStaticControl::uniform(g, 0.5, 1.0), f, op, TimeGrid(0.0, 1.0, 1e-3));
  double umax = 0.0;
  for (const auto& s : traj.states) umax = std::max(umax, l2_norm(s));
  EXPECT_TRUE(std::isfinite(traj.max_f_norm));
  EXPECT_LT(traj.max_f_norm, 10 * f.delta_star() * std::pow(umax, f.theta()) * std::sqrt(2.0));
}

TEST(Convergence, TemporalImplicitEulerAndCrankNicolson) {
  const auto g = build_grid(200);
  const auto leg = legendre_basis(g, 2);
  DecayProblem p;
  p.u0 = [](double x) { return std::sqrt(1.5) * x; };
  p.horizon = 0.5;
  p.n_cells = 200;
  const auto ie = temporal_convergence_study(p, {0.02, 0.01, 0.005, 0.0025});
  EXPECT_NEAR(ie.order, 1.0, 0.3);
  p.scheme = Scheme::CrankNicolsonIMEX;
  const auto cn = temporal_convergence_study(p, {0.02, 0.01, 0.005, 0.0025});
  EXPECT_NEAR(cn.order, 2.0, 0.3);
}

TEST(Convergence, SpatialOrderTwo) {
  DecayProblem p;
  p.u0 = [](double x) { return std::exp(x) + 0.5 * std::cos(2 * x); };
  p.horizon = 0.1;
  p.scheme = Scheme::CrankNicolsonIMEX;
  p.dt = 2.5e-4;
  const auto r = spatial_convergence_study(p, {250, 500, 1000});
  EXPECT_NEAR(r.order, 2.0, 0.2) << r.errors[0] << " " << r.errors[1] << " " << r.errors[2];
}

TEST(Convergence, ZeroDataIsDegenerate) {
  DecayProblem p;
  p.u0 = [](double) { return 0.0; };
  p.n_cells = 32;
  const auto r = temporal_convergence_study(p, {0.1, 0.05, 0.025});
  EXPECT_TRUE(r.degenerate);
  for (double e : r.errors) EXPECT_EQ(e, 0.0);
}
