#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "dmc/convergence.hpp"
#include "dmc/operator.hpp"
#include "dmc/spectral.hpp"
#include "dmc/tridiagonal.hpp"

using namespace dmc;

namespace {

// Dense cyclic Jacobi eigenvalue oracle for small symmetric matrices.
std::vector<double> jacobi_eigenvalues(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

// Symmetrized -A on unpinned nodes, built densely from the operator rows.
std::vector<std::vector<double>> dense_symmetrized(const DiscreteOperator& op) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < op.size(); ++i)
    if (!op.pinned(i)) idx.push_back(i);
  const auto& m = op.matrix();
  const auto& w = op.symmetrizer();
  std::vector<std::vector<double>> d(idx.size(), std::vector<double>(idx.size(), 0.0));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    for (std::size_t c = 0; c < idx.size(); ++c) {
      const std::size_t i = idx[r], j = idx[c];
      double aij = 0.0;
      if (i == j) aij = m.diag[i];
      else if (j == i + 1) aij = m.upper[i];
      else if (i == j + 1) aij = m.lower[i];
      d[r][c] = -std::sqrt(w[i]) * aij / std::sqrt(w[j]);
    }
  }
  return d;
}

StateVector random_state(const GridPtr& g, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  StateVector u(g);
  for (auto& v : u.values()) v = nd(rng);
  return u;
}

}  // namespace

TEST(Tridiagonal, ThomasSolvesDominantSystem) {
  Tridiagonal m(6);
  for (std::size_t i = 0; i < 6; ++i) {
    m.diag[i] = 4.0 + i;
    if (i > 0) m.lower[i] = -1.0 - 0.1 * i;
    if (i + 1 < 6) m.upper[i] = -0.5;
  }
  std::vector<double> x{1, -2, 3, 0.5, -1, 2}, b(6);
  m.multiply(x, b);
  const auto y = solve_tridiagonal(m, b);
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(y[i], x[i], 1e-13);
}

TEST(Tridiagonal, PivotedSolvesIndefiniteSystem) {
  // Zero diagonal forces row swaps at every elimination step.
  for (std::size_t n : {2u, 3u, 7u, 12u}) {
    Tridiagonal m(n);
    for (std::size_t i = 0; i < n; ++i) {
      m.diag[i] = (i % 3 == 0) ? 0.0 : 0.3 * i - 1.0;
      if (i > 0) m.lower[i] = 2.0 + 0.5 * i;
      if (i + 1 < n) m.upper[i] = -1.5 + 0.2 * i;
    }
    std::vector<double> x(n), b(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(1.3 * i + 0.4);
    m.multiply(x, b);
    const auto y = solve_tridiagonal_pivoted(m, b);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y[i], x[i], 1e-9) << "n=" << n << " i=" << i;  // cond ~ 6e5 at n = 12
  }
}

TEST(Tridiagonal, ThomasReportsZeroPivot) {
  Tridiagonal m(3);
  m.diag = {0.0, 1.0, 1.0};
  EXPECT_THROW(ThomasFactorization{m}, NumericalError);
}

TEST(Tridiagonal, QlMatchesJacobi) {
  const std::size_t n = 40;
  std::vector<double> d(n), e(n - 1);
  std::vector<std::vector<double>> dense(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = std::cos(0.37 * i) * 3.0;
    dense[i][i] = d[i];
    if (i + 1 < n) {
      e[i] = 1.0 + std::sin(1.1 * i);
      dense[i][i + 1] = dense[i + 1][i] = e[i];
    }
  }
  const auto ql = symmetric_tridiagonal_eigenvalues(d, e);
  const auto jac = jacobi_eigenvalues(dense);
  for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(ql[i], jac[i], 1e-11);
}

TEST(Operator, ConstantsInKernelWeightedNeumann) {
  const auto g = build_grid(200);
  const auto op = assemble_operator(g, DiffusionProfile::legendre(), WeightedNeumann{});
  const auto r = op.apply(StateVector(g, 1.0));
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_EQ(r[i], 0.0);
  const auto& m = op.matrix();
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double rs = m.lower[i] + m.diag[i] + m.upper[i];
    EXPECT_LE(std::abs(rs), 1e-10 * m.max_abs());
  }
}

TEST(Operator, LinearFunctionGivesMinusTwoX) {
  for (int n : {100, 200, 400}) {
    const auto g = build_grid(n);
    const auto op = assemble_operator(g, DiffusionProfile::legendre(), WeightedNeumann{});
    const auto r = op.apply(StateVector::sample(g, [](double x) { return x; }));
    double err = 0.0;
    for (std::size_t i = 1; i + 1 < r.size(); ++i) err = std::max(err, std::abs(r[i] + 2 * g->node(i)));
    EXPECT_LE(err, 1e-9);  // exact for a quadratic a
    EXPECT_NEAR(r[0], 2.0, g->spacing());
  }
}

TEST(Operator, DirichletRobinPinsEndpoints) {
  const auto g = build_grid(64);
  const auto op = assemble_operator(g, DiffusionProfile::sqrt_profile(), Robin{1, 0, 1, 0});
  EXPECT_TRUE(op.pinned(0));
  EXPECT_TRUE(op.pinned(g->size() - 1));
  const auto r = op.apply(StateVector(g, 1.0));
  EXPECT_NE(r[0], 0.0);
  EXPECT_NE(r[g->size() - 1], 0.0);
  EXPECT_EQ(op.matrix().lower[1], 0.0);
  EXPECT_EQ(op.matrix().upper[g->size() - 2], 0.0);
}

TEST(Operator, RejectsIncompatibleBoundary) {
  EXPECT_THROW(assemble_operator(build_grid(16), DiffusionProfile::legendre(), Robin{1, -1, 1, 1}),
               ValidationError);
}

TEST(OperatorProperties, SelfAdjointAndDissipative) {
  std::mt19937_64 rng(11);
  const auto g = build_grid(300);
  std::vector<DiscreteOperator> ops{
      assemble_operator(g, DiffusionProfile::legendre(), WeightedNeumann{}),
      assemble_operator(g, DiffusionProfile::power(1.5), WeightedNeumann{}),
      assemble_operator(g, DiffusionProfile::sqrt_profile(), Robin{1, -1, 1, 1}),
      assemble_operator(g, DiffusionProfile::sqrt_profile(), Robin{0, 1, 2, 0.5}),
      assemble_operator(g, DiffusionProfile::power(0.3), Robin{1, 0, 1, 0}),
  };
  for (const auto& op : ops) {
    const auto& m = op.matrix();
    const auto& w = op.symmetrizer();
    for (std::size_t i = 0; i + 1 < m.size(); ++i) {
      EXPECT_NEAR(w[i] * m.upper[i], w[i + 1] * m.lower[i + 1], 1e-12 * m.max_abs());
    }
    for (int k = 0; k < 20; ++k) {
      const auto u = random_state(g, rng), v = random_state(g, rng);
      const double scale = l2_norm(u) * l2_norm(v) * m.max_abs();
      EXPECT_NEAR(inner(op.apply(u), v), inner(u, op.apply(v)), 1e-13 * scale);
      EXPECT_LE(inner(op.apply(u), u), 1e-10);
    }
  }
}

TEST(Spectrum, LegendreEigenvaluesAtN4000) {
  const auto g = build_grid(4000);
  const auto op = assemble_operator(g, DiffusionProfile::legendre(), WeightedNeumann{});
  const auto t0 = std::chrono::steady_clock::now();
  const auto basis = eigendecompose(op, 11);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 10.0);
  EXPECT_LE(std::abs(basis.eigenvalues[0]), 1e-8);
  for (std::size_t p = 1; p <= 10; ++p) {
    EXPECT_LE(std::abs(basis.eigenvalues[p] / (p * (p + 1.0)) - 1.0), 1e-3) << "p=" << p;
  }
  for (std::size_t i = 0; i < g->size(); i += 97) EXPECT_NEAR(basis.vectors[0][i], 1 / std::sqrt(2.0), 1e-6);

  const auto leg = legendre_basis(g, 11);
  for (std::size_t p = 0; p <= 10; ++p) {
    EXPECT_LE(l2_distance(basis.vectors[p], leg.vectors[p]), 1e-3) << "p=" << p;
    const auto r = op.apply(basis.vectors[p]) + basis.eigenvalues[p] * basis.vectors[p];
    EXPECT_LE(l2_norm(r), 1e-6 * std::max(basis.eigenvalues[p], 1.0)) << "p=" << p;
  }
  for (std::size_t p = 0; p <= 10; ++p)
    for (std::size_t q = 0; q <= 10; ++q)
      EXPECT_NEAR(inner(basis.vectors[p], basis.vectors[q]), p == q ? 1.0 : 0.0, 1e-8);
}

TEST(Spectrum, ConstantModeForAnyWeightedNeumannProfile) {
  const auto g = build_grid(400);
  const auto op = assemble_operator(g, DiffusionProfile::power(2.0), WeightedNeumann{});
  const auto basis = eigendecompose(op, 5);
  EXPECT_LE(std::abs(basis.eigenvalues[0]), 1e-8);
  for (std::size_t i = 0; i < g->size(); ++i) EXPECT_NEAR(basis.vectors[0][i], 1 / std::sqrt(2.0), 1e-6);
  for (std::size_t p = 1; p < 5; ++p) EXPECT_GT(basis.eigenvalues[p], basis.eigenvalues[p - 1]);
}

TEST(Spectrum, DirichletSqrtProfileAgreesWithDenseOracle) {
  const auto g = build_grid(200);
  const auto op = assemble_operator(g, DiffusionProfile::sqrt_profile(), Robin{1, 0, 1, 0});
  const auto basis = eigendecompose(op, 100);
  const auto dense = jacobi_eigenvalues(dense_symmetrized(op));
  for (std::size_t p = 0; p < 100; ++p) {
    EXPECT_GT(basis.eigenvalues[p], 0.0);
    EXPECT_NEAR(basis.eigenvalues[p], dense[p], 1e-8 * std::max(1.0, dense[p]));
  }
  for (std::size_t p = 0; p < 20; ++p) {
    EXPECT_EQ(basis.vectors[p][0], 0.0);
    const auto r = op.apply(basis.vectors[p]) + basis.eigenvalues[p] * basis.vectors[p];
    EXPECT_LE(l2_norm(r), 1e-6 * basis.eigenvalues[p]);
  }
}

TEST(Spectrum, RobinProfileAgreesWithDenseOracle) {
  const auto g = build_grid(120);
  const auto op = assemble_operator(g, DiffusionProfile::sqrt_profile(), Robin{1, -1, 1, 1});
  const auto basis = eigendecompose(op, 60);
  const auto dense = jacobi_eigenvalues(dense_symmetrized(op));
  for (std::size_t p = 0; p < 60; ++p) EXPECT_NEAR(basis.eigenvalues[p], dense[p], 1e-8 * std::max(1.0, dense[p]));
  EXPECT_GT(basis.eigenvalues[0], 0.0);
}

TEST(Spectrum, RejectsTooManyModes) {
  const auto g = build_grid(16);
  const auto op = assemble_operator(g, DiffusionProfile::legendre(), WeightedNeumann{});
  EXPECT_THROW(eigendecompose(op, 9), ValidationError);
}

TEST(LegendreBasis, FirstModes) {
  const auto g = build_grid(50);
  const auto b = legendre_basis(g, 3);
  EXPECT_EQ(b.eigenvalues[0], 0.0);
  EXPECT_EQ(b.eigenvalues[1], 2.0);
  EXPECT_EQ(b.eigenvalues[2], 6.0);
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double x = g->node(i);
    EXPECT_NEAR(b.vectors[0][i], 1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(b.vectors[1][i], std::sqrt(1.5) * x, 1e-15);
    EXPECT_NEAR(b.vectors[2][i], std::sqrt(2.5) * (3 * x * x - 1) / 2, 1e-14);
  }
}

TEST(Projection, OrthonormalityAndConstants) {
  const auto g = build_grid(2000);
  const auto b = legendre_basis(g, 8);
  const auto c = project(b.vectors[3], b);
  // Sampled Legendre polynomials are orthonormal only up to the O(h^2) trapezoid error.
  for (std::size_t p = 0; p < c.size(); ++p) EXPECT_NEAR(c[p], p == 3 ? 1.0 : 0.0, 1e-4);
  // Exact orthonormality holds for the discrete eigenvectors.
  const auto op = assemble_operator(g, DiffusionProfile::legendre(), WeightedNeumann{});
  const auto eb = eigendecompose(op, 8);
  const auto ce = project(eb.vectors[3], eb);
  for (std::size_t p = 0; p < ce.size(); ++p) EXPECT_NEAR(ce[p], p == 3 ? 1.0 : 0.0, 1e-8);
  const auto c1 = project(StateVector(g, 1.0), eb);
  EXPECT_NEAR(c1[0], std::sqrt(2.0), 1e-10);
  for (std::size_t p = 1; p < c1.size(); ++p) EXPECT_NEAR(c1[p], 0.0, 1e-8);
}

TEST(Projection, AbsoluteValueReconstruction) {
  const auto g = build_grid(4000);
  const auto b = legendre_basis(g, 64);
  const auto u = StateVector::sample(g, [](double x) { return std::abs(x); });
  // Independent partial-sum error: ||u||^2 - sum c_p^2 with exact Gauss
  // quadrature coefficients on each half of [-1, 1].
  const auto [gx, gw] = gauss_legendre(200);
  double sum_c2 = 0.0;
  for (int p = 0; p < 64; ++p) {
    double c = 0.0;
    for (int half : {-1, 1}) {
      for (std::size_t q = 0; q < gx.size(); ++q) {
        const double x = half * 0.5 * (gx[q] + 1.0);
        double prev = 0.0, pk = 1.0;
        for (int k = 0; k < p; ++k) {
          const double next = ((2.0 * k + 1.0) * x * pk - k * prev) / (k + 1.0);
          prev = pk;
          pk = next;
        }
        c += 0.5 * gw[q] * std::abs(x) * std::sqrt((2.0 * p + 1.0) / 2.0) * pk;
      }
    }
    sum_c2 += c * c;
  }
  const double oracle = std::sqrt(std::max(0.0, 2.0 / 3.0 - sum_c2));
  EXPECT_LT(oracle, 0.01);
  const double measured = projection_residual(u, b);
  EXPECT_LT(measured, 0.01);
  EXPECT_NEAR(measured, oracle, 2e-3);
}

TEST(Duhamel, Examples) {
  const auto g = build_grid(400);
  const auto b = legendre_basis(g, 4);
  const auto r1 = duhamel_linear_evolve(b.vectors[1], b, 0.0, 0.5);
  EXPECT_LE(l2_distance(r1, std::exp(-1.0) * b.vectors[1]), 1e-4);
  const auto r0 = duhamel_linear_evolve(b.vectors[0], b, 3.0, 0.2);
  EXPECT_LE(l2_distance(r0, std::exp(0.6) * b.vectors[0]), 1e-4);
  const auto op = assemble_operator(g, DiffusionProfile::legendre(), WeightedNeumann{});
  const auto eb = eigendecompose(op, 4);
  const auto r3 = duhamel_linear_evolve(StateVector(g, 1.0), eb, std::log(3.0) / 0.1, 0.1);
  for (std::size_t i = 0; i < g->size(); ++i) EXPECT_NEAR(r3[i], 3.0, 1e-9);
  EXPECT_THROW(duhamel_linear_evolve(StateVector(g, 1.0), eb, 1.0, 0.0), ValidationError);
}

TEST(FluxTrace, ConstantsAndLegendreDecay) {
  const auto a = DiffusionProfile::legendre();
  const auto [l0, r0] = flux_trace_check(StateVector(build_grid(64), 4.0), a);
  EXPECT_EQ(l0, 0.0);
  EXPECT_EQ(r0, 0.0);
  std::vector<double> flux;
  for (int n : {100, 200, 400, 800}) {
    const auto g = build_grid(n);
    const auto b = legendre_basis(g, 3);
    const auto [l, r] = flux_trace_check(b.vectors[2], a);
    flux.push_back(std::max(l, r));
  }
  for (std::size_t k = 0; k + 1 < flux.size(); ++k) EXPECT_GE(std::log2(flux[k] / flux[k + 1]), 0.95);
}

TEST(FluxTrace, SteepRampShrinksWithRefinement) {
  const auto a = DiffusionProfile::legendre();
  auto ramp = [](double x) { return std::atanh(std::clamp(0.999 * x, -0.999, 0.999)); };
  const auto [l1, r1] = flux_trace_check(StateVector::sample(build_grid(100), ramp), a);
  const auto [l2, r2] = flux_trace_check(StateVector::sample(build_grid(1000), ramp), a);
  EXPECT_LT(l2, l1);
  EXPECT_LT(r2, r1);
}
