#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <degcount/edgeworth.hpp>
#include <degcount/maxent.hpp>

#include "test_util.hpp"

using namespace degcount;
using degcount::testing::random_degrees;

namespace {

double row_sum(const MaxEntSolution& sol, int j) {
  double s = 0.0;
  for (int k = 0; k < sol.size(); ++k)
    if (k != j) s += sol.zeta(j, k);
  return s;
}

// Near-regular sequence with degrees in [lo, hi] and even sum.

}  // namespace

TEST(MaxEnt, RegularNineFour) {
  const auto sol = solve_maxent(DegreeSequence(std::vector<int>(9, 4)));
  for (double l : sol.lambda) EXPECT_NEAR(l, 0.0, 1e-14);
  EXPECT_EQ(sol.iterations, 0);
  EXPECT_NEAR(sol.zeta_min, 0.5, 1e-14);
  EXPECT_NEAR(sol.zeta_max, 0.5, 1e-14);
  EXPECT_NEAR(sol.entropy, 36.0 * std::numbers::ln2, 1e-12);
  EXPECT_DOUBLE_EQ(tameness_observed(sol), 0.5);
}

TEST(MaxEnt, BoundaryDiverges) {
  try {
    (void)solve_maxent(DegreeSequence({1, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DivergedToBoundary);
  }
  // K4 plus a pendant-free boundary case: degree n-1 forces entries to 1
  EXPECT_THROW(solve_maxent(DegreeSequence({4, 2, 2, 2, 2})), Error);
  // perfect matchings on 4 vertices still have the interior point zeta = 1/3
  const auto matching = solve_maxent(DegreeSequence({1, 1, 1, 1}));
  EXPECT_NEAR(matching.zeta_min, 1.0 / 3.0, 1e-12);
}

TEST(MaxEnt, InfeasibleRejected) {
  try {
    (void)solve_maxent(DegreeSequence({3, 3, 1, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Infeasible);
  }
}

TEST(MaxEnt, IrregularConstraints) {
  const DegreeSequence d({3, 2, 2, 2, 1});
  const auto sol = solve_maxent(d);
  EXPECT_LE(sol.residual_inf, 1e-10);
  for (int j = 0; j < 5; ++j) EXPECT_NEAR(row_sum(sol, j), d[j], 1e-10);
  const double delta = tameness_observed(sol);
  EXPECT_GT(delta, 0.0);
  EXPECT_LE(delta, 0.5);
  EXPECT_GT(sol.zeta_min, 0.0);
  EXPECT_LT(sol.zeta_max, 1.0);
}

TEST(MaxEnt, InteriorWithoutStrictInequalities) {
  // strict Erdos-Gallai fails, yet constant zeta = d/(n-1) is interior
  const auto sol = solve_maxent(DegreeSequence({2, 2, 2, 2}));
  EXPECT_NEAR(sol.zeta_min, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(sol.zeta_max, 2.0 / 3.0, 1e-12);
}

TEST(MaxEnt, DualityGapAndConstraints) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 10 + static_cast<int>(rng() % 60);
    const DegreeSequence d(random_degrees(rng, n, n / 4, 3 * n / 4));
    const auto sol = solve_maxent(d);
    EXPECT_LE(sol.residual_inf, sol.tol);
    EXPECT_LE(std::abs(sol.dual_value - sol.entropy), 10.0 * sol.tol * n);
    EXPECT_NEAR(graph_dual_objective(d, sol.lambda), sol.dual_value, 1e-9 * std::abs(sol.dual_value));
    for (int j = 0; j < n; ++j) EXPECT_NEAR(row_sum(sol, j), d[j], sol.residual_inf * (1 + 1e-6) + 1e-12);
  }
}

TEST(MaxEnt, HessianIsQ) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 12 + trial * 7;
    const DegreeSequence d(random_degrees(rng, n, n / 3, 2 * n / 3));
    const auto sol = solve_maxent(d);
    const auto model = build_gaussian(sol, d);
    const Eigen::MatrixXd h = dual_hessian(sol.lambda);
    EXPECT_LE((h - model.Q).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MaxEnt, RegularCaseExact) {
  for (int n = 5; n <= 30; ++n)
    for (int deg = 2; deg <= n - 3; ++deg) {
      if ((n * deg) % 2) continue;
      const auto sol = solve_maxent(DegreeSequence(std::vector<int>(static_cast<std::size_t>(n), deg)));
      const double z = static_cast<double>(deg) / (n - 1);
      EXPECT_NEAR(sol.zeta_min, z, sol.tol);
      EXPECT_NEAR(sol.zeta_max, z, sol.tol);
      EXPECT_NEAR(tameness_observed(sol), std::min(z, 1.0 - z), sol.tol);
    }
}

TEST(MaxEnt, PermutationEquivariance) {
  std::mt19937_64 rng(77);
  const std::vector<int> base = {7, 6, 5, 5, 4, 4, 4, 3, 3, 3, 2, 2};
  const auto sol = solve_maxent(DegreeSequence(base));
  std::vector<int> perm(base.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> permuted(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) permuted[i] = base[static_cast<std::size_t>(perm[i])];
  const auto psol = solve_maxent(DegreeSequence(permuted));
  for (std::size_t i = 0; i < base.size(); ++i)
    EXPECT_NEAR(psol.lambda[i], sol.lambda[static_cast<std::size_t>(perm[i])], 1e-8);
  // larger degree, smaller potential
  for (std::size_t i = 0; i + 1 < base.size(); ++i)
    if (base[i] > base[i + 1]) {
      EXPECT_LT(sol.lambda[i], sol.lambda[i + 1]);
    }
}

TEST(MaxEnt, ToleranceDefaults) {
  EXPECT_DOUBLE_EQ(default_tolerance(0), 1e-10);
  EXPECT_DOUBLE_EQ(default_tolerance(7), 7e-10);
  const auto sol = solve_maxent(DegreeSequence({3, 2, 2, 2, 1}), {1e-6, 100});
  EXPECT_DOUBLE_EQ(sol.tol, 1e-6);
  EXPECT_LE(sol.residual_inf, 1e-6);
}

TEST(MaxEnt, IterationLimit) {
  try {
    (void)solve_maxent(DegreeSequence({6, 5, 4, 4, 3, 2, 2, 1, 1}), {1e-12, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MaxIterExceeded);
  }
}

TEST(MaxEntBipartite, Symmetric) {
  const auto sol = solve_maxent_bipartite(BipartiteMargins({2, 2, 2, 2}, {2, 2, 2, 2}));
  EXPECT_NEAR(sol.zeta_min, 0.5, 1e-12);
  EXPECT_NEAR(sol.zeta_max, 0.5, 1e-12);
  EXPECT_NEAR(sol.entropy, 16.0 * std::numbers::ln2, 1e-10);
  const auto small = solve_maxent_bipartite(BipartiteMargins({1, 1}, {1, 1}));
  EXPECT_NEAR(small.entropy, 4.0 * std::numbers::ln2, 1e-10);
}

TEST(MaxEntBipartite, ConstraintsAndGauge) {
  const BipartiteMargins mg({3, 2, 1}, {2, 2, 1, 1});
  const auto sol = solve_maxent_bipartite(mg);
  for (int j = 0; j < 3; ++j) {
    double s = 0.0;
    for (int k = 0; k < 4; ++k) s += sol.zeta(j, k);
    EXPECT_NEAR(s, mg.rows()[static_cast<std::size_t>(j)], 1e-10);
  }
  for (int k = 0; k < 4; ++k) {
    double s = 0.0;
    for (int j = 0; j < 3; ++j) s += sol.zeta(j, k);
    EXPECT_NEAR(s, mg.cols()[static_cast<std::size_t>(k)], 1e-10);
  }
  const double sr = std::accumulate(sol.lambda_rows.begin(), sol.lambda_rows.end(), 0.0);
  const double sc = std::accumulate(sol.lambda_cols.begin(), sol.lambda_cols.end(), 0.0);
  EXPECT_NEAR(sr, sc, 1e-10);
  EXPECT_LE(std::abs(sol.dual_value - sol.entropy), 10.0 * sol.tol * 7);
}

TEST(MaxEntBipartite, Errors) {
  try {
    (void)solve_maxent_bipartite(BipartiteMargins({3, 3}, {1, 1, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Infeasible);
  }
  // a row sum equal to the column count forces a full row
  try {
    (void)solve_maxent_bipartite(BipartiteMargins({3, 2, 1}, {2, 2, 2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DivergedToBoundary);
  }
  try {
    (void)solve_maxent_bipartite(BipartiteMargins({2, 1}, {2, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DivergedToBoundary);
  }
}

TEST(MaxEntBipartite, Transposition) {
  const BipartiteMargins mg({3, 2, 2, 1}, {2, 2, 2, 1, 1});
  const auto a = solve_maxent_bipartite(mg);
  const auto b = solve_maxent_bipartite(mg.transposed());
  EXPECT_NEAR(a.entropy, b.entropy, 1e-10);
  for (int j = 0; j < 4; ++j)
    for (int k = 0; k < 5; ++k) EXPECT_NEAR(a.zeta(j, k), b.zeta(k, j), 1e-10);
}

TEST(Tameness, Certificate) {
  const auto reg = tameness_sufficient(DegreeSequence(std::vector<int>(9, 4)));
  EXPECT_NEAR(reg.alpha, 0.5, 1e-8);
  EXPECT_NEAR(reg.beta, 0.5, 1e-8);
  EXPECT_NEAR(reg.n0, 3.0, 1e-6);
  EXPECT_NEAR(reg.delta, std::pow(0.25, 6) / (1 + std::pow(0.25, 6)), 1e-9);
  EXPECT_TRUE(reg.applies);
  const auto sol = solve_maxent(DegreeSequence(std::vector<int>(9, 4)));
  EXPECT_LE(reg.delta, sol.zeta_min);

  // degrees spread over (0.25, 0.74) of n - 1 with n large
  std::vector<int> spread;
  for (int i = 0; i < 1000; ++i) spread.push_back(300 + (i * 37) % 430);
  if (std::accumulate(spread.begin(), spread.end(), 0) % 2) spread[0] += 1;
  EXPECT_TRUE(tameness_sufficient(DegreeSequence(spread)).applies);

  // alpha = 1/4, beta = 3/4 lies exactly on beta = 2 sqrt(alpha) - alpha
  std::vector<int> edge_case(9, 4);
  edge_case[0] = 2;
  edge_case[1] = 6;
  const auto boundary = tameness_sufficient(DegreeSequence(edge_case));
  EXPECT_FALSE(boundary.applies);
  EXPECT_TRUE(std::isinf(boundary.n0));
}

TEST(Tameness, CertificateIsSound) {
  std::mt19937_64 rng(99);
  int applied = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 20 + static_cast<int>(rng() % 100);
    const DegreeSequence d(random_degrees(rng, n, (2 * n) / 5, (3 * n) / 5));
    const auto cert = tameness_sufficient(d);
    if (!cert.applies) continue;
    ++applied;
    EXPECT_GE(tameness_observed(solve_maxent(d)), cert.delta);
  }
  EXPECT_GT(applied, 0);
}
