#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include <degcount/bipartite.hpp>
#include <degcount/edgeworth.hpp>
#include <degcount/oracle.hpp>
#include <degcount/random.hpp>

using namespace degcount;

namespace {

// Counts edge subsets of K_n realizing d by brute force over all 2^(n(n-1)/2) subsets.
std::uint64_t brute_force_graphs(const std::vector<int>& d) {
  const int n = static_cast<int>(d.size());
  const auto pairs = all_pairs(n);
  std::uint64_t count = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << pairs.size()); ++mask) {
    std::vector<int> deg(static_cast<std::size_t>(n), 0);
    for (std::size_t e = 0; e < pairs.size(); ++e)
      if (mask >> e & 1) {
        ++deg[static_cast<std::size_t>(pairs[e].j)];
        ++deg[static_cast<std::size_t>(pairs[e].k)];
      }
    count += deg == d;
  }
  return count;
}

std::uint64_t brute_force_matrices(const std::vector<int>& r, const std::vector<int>& c) {
  const int m = static_cast<int>(r.size()), n = static_cast<int>(c.size());
  std::uint64_t count = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << (m * n)); ++mask) {
    std::vector<int> rs(static_cast<std::size_t>(m), 0), cs(static_cast<std::size_t>(n), 0);
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < n; ++k)
        if (mask >> (j * n + k) & 1) {
          ++rs[static_cast<std::size_t>(j)];
          ++cs[static_cast<std::size_t>(k)];
        }
    count += rs == r && cs == c;
  }
  return count;
}

}  // namespace

TEST(Philox, KnownAnswers) {
  const auto zero = Philox4x32(0)({0, 0, 0, 0});
  EXPECT_EQ(zero, (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  const auto ones = Philox4x32(~std::uint64_t{0})({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu});
  EXPECT_EQ(ones, (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, StreamsAreReproducibleAndDistinct) {
  PhiloxStream a(3, 10), b(3, 10), c(3, 11);
  const auto x = a.uniform_pair();
  EXPECT_EQ(x, b.uniform_pair());
  EXPECT_NE(x, c.uniform_pair());
  EXPECT_GT(x.first, 0.0);
  EXPECT_LT(x.first, 1.0);
}

TEST(ExactGraphs, SmallExamples) {
  EXPECT_EQ(exact_count_graphs(DegreeSequence({3, 3, 3, 3})).value, 1);
  EXPECT_EQ(exact_count_graphs(DegreeSequence({1, 1, 1, 1})).value, 3);
  EXPECT_EQ(exact_count_graphs(DegreeSequence({2, 2, 2, 2, 2})).value, 12);
  EXPECT_EQ(exact_count_graphs(DegreeSequence({3, 1, 1})).value, 0);
  EXPECT_EQ(exact_count_graphs(DegreeSequence({2, 2, 2, 2})).value, 3);
  // labeled 3-regular graphs on 6 vertices
  EXPECT_EQ(exact_count_graphs(DegreeSequence(std::vector<int>(6, 3))).value, 70);
  // labeled 2-regular graphs on 7 vertices
  EXPECT_EQ(exact_count_graphs(DegreeSequence(std::vector<int>(7, 2))).value, 465);
}

TEST(ExactGraphs, AgreesWithBruteForce) {
  const std::vector<std::vector<int>> cases = {
      {2, 2, 2, 2, 2}, {3, 2, 2, 2, 1}, {4, 2, 2, 1, 1}, {3, 3, 2, 1, 1}, {2, 2, 1, 1, 1, 1}, {3, 3, 3, 3, 2, 2},
      {4, 4, 3, 3, 2, 2}, {5, 1, 1, 1, 1, 1}, {2, 2, 2, 2, 1, 1}};
  for (const auto& v : cases) {
    EXPECT_EQ(exact_count_graphs(DegreeSequence(v)).value, brute_force_graphs(v));
    EXPECT_EQ(exact_count_graphs(DegreeSequence(v), false).value, brute_force_graphs(v));
  }
}

TEST(ExactGraphs, EnumerationMatchesCount) {
  for (const auto& v : std::vector<std::vector<int>>{{2, 2, 2, 2, 2}, {3, 3, 2, 2, 2, 2}, {4, 3, 3, 2, 2, 2}}) {
    const DegreeSequence d(v);
    std::set<std::vector<Edge>, bool (*)(const std::vector<Edge>&, const std::vector<Edge>&)> seen(
        [](const std::vector<Edge>& a, const std::vector<Edge>& b) {
          return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [](Edge x, Edge y) {
            return x.j != y.j ? x.j < y.j : x.k < y.k;
          });
        });
    const auto visited = enumerate_graphs(d, true, [&](const std::vector<Edge>& g) { seen.insert(g); });
    EXPECT_EQ(visited, seen.size());
    EXPECT_EQ(BigInt(visited), exact_count_graphs(d).value);
    EXPECT_EQ(enumerate_graphs(d, false, [](const std::vector<Edge>&) {}), visited);
  }
}

TEST(ExactGraphs, TooLarge) {
  EXPECT_THROW(exact_count_graphs(DegreeSequence(std::vector<int>(kMaxExactGraphVertices + 1, 2))), Error);
}

TEST(ExactBipartite, Examples) {
  EXPECT_EQ(exact_count_bipartite(BipartiteMargins({2, 2, 2, 2}, {2, 2, 2, 2})).value, 90);
  EXPECT_EQ(exact_count_bipartite(BipartiteMargins({1, 1, 1}, {1, 1, 1})).value, 6);
  EXPECT_EQ(exact_count_bipartite(BipartiteMargins({3, 3}, {1, 1, 1})).value, 0);
  EXPECT_EQ(exact_count_bipartite(BipartiteMargins({2, 2, 2, 2}, {2, 2, 2, 2})).value,
            brute_force_matrices({2, 2, 2, 2}, {2, 2, 2, 2}));
  for (const auto& [r, c] : std::vector<std::pair<std::vector<int>, std::vector<int>>>{
           {{2, 1, 1}, {1, 2, 1}}, {{3, 2, 1}, {2, 2, 1, 1}}, {{1, 2, 3, 1}, {3, 2, 2}}, {{3, 3, 1}, {3, 3, 1}}}) {
    EXPECT_EQ(exact_count_bipartite(BipartiteMargins(r, c)).value, brute_force_matrices(r, c));
    EXPECT_EQ(exact_count_bipartite(BipartiteMargins(r, c)).value,
              exact_count_bipartite(BipartiteMargins(r, c).transposed()).value);
  }
}

TEST(Fourier, AgreesWithExactCount) {
  for (const auto& v : std::vector<std::vector<int>>{{2, 2, 2, 2, 2}, {3, 2, 2, 2, 1}, {2, 2, 2, 2, 2, 2}, {3, 3, 2, 2, 1, 1}}) {
    const DegreeSequence d(v);
    const auto exact = exact_count_graphs(d).value;
    EXPECT_EQ(fourier_count_graphs(d, solve_maxent(d)).value, exact);
    EXPECT_EQ(fourier_count_graphs(d).value, exact);
    EXPECT_EQ(fourier_count_graphs(d, solve_maxent(d), 3).value, exact);
  }
}

TEST(Fourier, BoundarySequences) {
  EXPECT_EQ(fourier_count_graphs(DegreeSequence({3, 3, 3, 3})).value, 1);
  EXPECT_EQ(fourier_count_graphs(DegreeSequence({1, 1, 1, 1})).value, 3);
  EXPECT_EQ(fourier_count_graphs(DegreeSequence({1, 1})).value, 1);
}

TEST(Fourier, TooLarge) {
  EXPECT_THROW(fourier_count_graphs(DegreeSequence(std::vector<int>(kMaxFourierVertices + 1, 2))), Error);
}

TEST(MonteCarlo, MatchesWickMoments) {
  const DegreeSequence d({3, 2, 2, 2, 1});
  const auto sol = solve_maxent(d);
  const auto model = build_gaussian(sol, d);
  const auto mc = mc_moments(model, sol, 200'000, 17);
  EXPECT_NEAR(mc.mu_hat, compute_mu(model, sol), 4 * mc.se_mu);
  EXPECT_NEAR(mc.nu_hat, compute_nu(model, sol), 4 * mc.se_nu);
}

TEST(MonteCarlo, StandardErrorScaling) {
  const DegreeSequence d({3, 2, 2, 2, 1});
  const auto sol = solve_maxent(d);
  const auto model = build_gaussian(sol, d);
  const auto small = mc_moments(model, sol, 20'000, 3);
  const auto large = mc_moments(model, sol, 320'000, 3);
  EXPECT_NEAR(small.se_nu / large.se_nu, 4.0, 0.6);
  EXPECT_NEAR(small.se_mu / large.se_mu, 4.0, 1.5);
}

TEST(MonteCarlo, DeterministicAcrossThreads) {
  const DegreeSequence d({3, 3, 2, 2, 2, 2});
  const auto sol = solve_maxent(d);
  const auto model = build_gaussian(sol, d);
  const auto a = mc_moments(model, sol, 50'000, 9, 1);
  const auto b = mc_moments(model, sol, 50'000, 9, 4);
  EXPECT_EQ(a.mu_hat, b.mu_hat);
  EXPECT_EQ(a.nu_hat, b.nu_hat);
}

TEST(MonteCarlo, RejectsTinySampleSizes) {
  const DegreeSequence d({2, 2, 2, 2, 2});
  const auto sol = solve_maxent(d);
  EXPECT_THROW(mc_moments(build_gaussian(sol, d), sol, 100, 1), Error);
}

TEST(MonteCarlo, Bipartite) {
  const BipartiteMargins mg({2, 2, 2, 1}, {2, 1, 2, 2});
  const auto sol = solve_maxent_bipartite(mg);
  const auto model = build_bipartite_gaussian(sol);
  const auto mc = mc_moments(model, sol, 200'000, 5);
  EXPECT_NEAR(mc.mu_hat, compute_mu(model, sol), 4 * mc.se_mu);
  EXPECT_NEAR(mc.nu_hat, compute_nu(model, sol), 4 * mc.se_nu);
}

TEST(ExactBipartite, FullMatrix) {
  EXPECT_EQ(exact_count_bipartite(BipartiteMargins({2, 2}, {2, 2})).value, 1);
}

TEST(Fourier, TwoOracles) {
  const DegreeSequence d({2, 2, 1, 1});
  EXPECT_EQ(fourier_count_graphs(d).value, exact_count_graphs(d).value);
  EXPECT_EQ(exact_count_graphs(d).value, 2);
}

TEST(MonteCarlo, HalfProbabilitiesGiveZeroMu) {
  const DegreeSequence d(std::vector<int>(9, 4));
  const auto sol = solve_maxent(d);
  const auto mc = mc_moments(build_gaussian(sol, d), sol, 20'000, 1);
  EXPECT_EQ(mc.mu_hat, 0.0);
  EXPECT_NEAR(mc.nu_hat, -0.5625, 4 * mc.se_nu);
}

TEST(ExactGraphs, PruningIsSound) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 6);
    std::vector<int> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = 1 + static_cast<int>(rng() % static_cast<unsigned>(n - 1));
    const DegreeSequence d(v);
    EXPECT_EQ(exact_count_graphs(d, true).value, exact_count_graphs(d, false).value);
    if (n <= 7) {
      EXPECT_EQ(enumerate_graphs(d, true, [](const std::vector<Edge>&) {}),
                enumerate_graphs(d, false, [](const std::vector<Edge>&) {}));
    }
  }
}
