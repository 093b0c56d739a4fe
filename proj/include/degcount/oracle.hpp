#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bipartite.hpp"
#include "degrees.hpp"
#include "edgeworth.hpp"
#include "error.hpp"
#include "maxent.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace degcount {

using BigInt = boost::multiprecision::cpp_int;

enum class CountMethod { backtrack, dp, fourier };

inline const char* to_string(CountMethod m) {
  switch (m) {
    case CountMethod::backtrack: return "backtrack";
    case CountMethod::dp: return "dp";
    case CountMethod::fourier: return "fourier";
  }
  return "unknown";
}

struct ExactCount {
  BigInt value;
  CountMethod method = CountMethod::backtrack;
};

inline constexpr int kMaxExactGraphVertices = 14;
inline constexpr int kMaxExactCells = 64;
inline constexpr std::size_t kMaxDpStates = 10'000'000;
inline constexpr int kMaxFourierVertices = 6;

namespace detail {

inline std::uint64_t binomial(int n, int k) {
  static const auto table = [] {
    std::array<std::array<std::uint64_t, 65>, 65> t{};
    for (int i = 0; i <= 64; ++i) {
      t[static_cast<std::size_t>(i)][0] = 1;
      for (int j = 1; j <= i; ++j)
        t[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
            t[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] +
            (j < i ? t[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)] : 0);
    }
    return t;
  }();
  if (k < 0 || k > n || n > 64) return 0;
  return table[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
}

/// Multiset of residual degrees stored as counts per value; index 0 unused.
using ClassCounts = std::vector<int>;

inline std::string state_key(const ClassCounts& c) { return std::string(c.begin(), c.end()); }

/// Visits every way of picking `need` partners out of the degree classes in
/// `avail` (k_v from class v, sum k_v = need). `fn(picks, ways)` receives the
/// number of labeled subsets realising that composition.
inline void for_each_composition(const ClassCounts& avail, int need,
                                 const std::function<void(const ClassCounts&, std::uint64_t)>& fn) {
  const int top = static_cast<int>(avail.size()) - 1;
  ClassCounts picks(avail.size(), 0);
  std::function<void(int, int, std::uint64_t)> rec = [&](int v, int left, std::uint64_t ways) {
    if (left == 0) {
      fn(picks, ways);
      return;
    }
    if (v < 1) return;
    int capacity = 0;
    for (int u = v; u >= 1; --u) capacity += avail[static_cast<std::size_t>(u)];
    if (capacity < left) return;
    const int hi = std::min(left, avail[static_cast<std::size_t>(v)]);
    for (int k = hi; k >= 0; --k) {
      picks[static_cast<std::size_t>(v)] = k;
      rec(v - 1, left - k, ways * binomial(avail[static_cast<std::size_t>(v)], k));
    }
    picks[static_cast<std::size_t>(v)] = 0;
  };
  rec(top, need, 1);
}

/// Residual classes after the picked vertices each lose one unit of degree.
inline ClassCounts apply_picks(ClassCounts avail, const ClassCounts& picks) {
  for (std::size_t v = 1; v < avail.size(); ++v) {
    avail[v] -= picks[v];
    if (v >= 2) avail[v - 1] += picks[v];
  }
  while (avail.size() > 1 && avail.back() == 0) avail.pop_back();
  return avail;
}

inline bool class_counts_graphical(const ClassCounts& c) {
  std::vector<int> seq;
  for (int v = static_cast<int>(c.size()) - 1; v >= 1; --v)
    for (int i = 0; i < c[static_cast<std::size_t>(v)]; ++i) seq.push_back(v);
  std::int64_t total = 0;
  for (int x : seq) total += x;
  if (total % 2 != 0) return false;
  if (seq.empty()) return true;
  if (seq.front() > static_cast<int>(seq.size()) - 1) return false;
  return !first_erdos_gallai_violation(seq, false).has_value();
}

}  // namespace detail

/// Memoised count of labeled graphs on a multiset of residual degrees.
/// Always eliminates a vertex of largest residual degree and sums over how
/// many of its partners come from each residual-degree class; the count only
/// depends on the multiset, which is what gets memoised.
class GraphCountingEngine {
 public:
  explicit GraphCountingEngine(bool prune = true) : prune_(prune) {}

  static detail::ClassCounts classes_of(std::span<const int> degrees) {
    int top = 0;
    for (int d : degrees) top = std::max(top, d);
    detail::ClassCounts c(static_cast<std::size_t>(top) + 1, 0);
    for (int d : degrees)
      if (d > 0) ++c[static_cast<std::size_t>(d)];
    while (c.size() > 1 && c.back() == 0) c.pop_back();
    return c;
  }

  const BigInt& count(const detail::ClassCounts& state) {
    const std::string key = detail::state_key(state);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    BigInt total = 0;
    if (state.size() <= 1) {
      total = 1;
    } else if (!prune_ || detail::class_counts_graphical(state)) {
      for_each_step(state, [&](const detail::ClassCounts&, std::uint64_t ways, const detail::ClassCounts& next) {
        const BigInt& sub = count(next);
        if (!sub.is_zero()) total += sub * ways;
      });
    }
    return memo_.emplace(key, std::move(total)).first->second;
  }

  /// Each way to connect one vertex of the largest residual degree:
  /// fn(picks per class, number of labeled partner sets, next state).
  template <class Fn>
  void for_each_step(const detail::ClassCounts& state, Fn&& fn) const {
    const int d = static_cast<int>(state.size()) - 1;
    detail::ClassCounts avail = state;
    --avail[static_cast<std::size_t>(d)];
    detail::for_each_composition(avail, d, [&](const detail::ClassCounts& picks, std::uint64_t ways) {
      fn(picks, ways, detail::apply_picks(avail, picks));
    });
  }

  std::size_t states() const { return memo_.size(); }

 private:
  bool prune_;
  std::unordered_map<std::string, BigInt> memo_;
};

/// Exact |G(D)| for n <= 14.
inline ExactCount exact_count_graphs(const DegreeSequence& d, bool prune = true) {
  if (d.size() > kMaxExactGraphVertices)
    throw Error(ErrorKind::TooLarge, "exact graph count limited to n <= " + std::to_string(kMaxExactGraphVertices));
  if (!check_parity(d)) return {BigInt(0), CountMethod::backtrack};
  GraphCountingEngine engine(prune);
  return {engine.count(GraphCountingEngine::classes_of(d.degrees())), CountMethod::backtrack};
}

/// Plain labeled backtracking: every graph with degree sequence d is passed
/// to `visit` as a sorted edge list. Takes the unsatisfied vertex of largest
/// residual degree (lowest index on ties) and tries partner subsets in
/// lexicographic order. Returns the number of graphs visited.
inline std::uint64_t enumerate_graphs(const DegreeSequence& d, bool prune,
                                      const std::function<void(const std::vector<Edge>&)>& visit) {
  const int n = d.size();
  std::vector<int> residual(d.degrees().begin(), d.degrees().end());
  std::vector<char> done(static_cast<std::size_t>(n), 0);
  std::vector<Edge> edges;
  std::uint64_t found = 0;

  const auto graphical = [&] {
    std::vector<int> seq;
    for (int v = 0; v < n; ++v)
      if (!done[static_cast<std::size_t>(v)]) seq.push_back(residual[static_cast<std::size_t>(v)]);
    std::stable_sort(seq.begin(), seq.end(), std::greater<>());
    std::int64_t sum = 0;
    for (int x : seq) sum += x;
    return sum % 2 == 0 && !detail::first_erdos_gallai_violation(seq, false).has_value();
  };

  std::function<void()> rec = [&] {
    if (prune && !graphical()) return;
    int pick = -1;
    for (int v = 0; v < n; ++v) {
      if (done[static_cast<std::size_t>(v)]) continue;
      if (pick < 0 || residual[static_cast<std::size_t>(v)] > residual[static_cast<std::size_t>(pick)]) pick = v;
    }
    if (pick < 0 || residual[static_cast<std::size_t>(pick)] == 0) {
      ++found;
      if (visit) {
        std::vector<Edge> sorted = edges;
        std::sort(sorted.begin(), sorted.end(), [](Edge a, Edge b) { return a.j != b.j ? a.j < b.j : a.k < b.k; });
        visit(sorted);
      }
      return;
    }
    std::vector<int> candidates;
    for (int v = 0; v < n; ++v)
      if (v != pick && !done[static_cast<std::size_t>(v)] && residual[static_cast<std::size_t>(v)] > 0)
        candidates.push_back(v);
    const int need = residual[static_cast<std::size_t>(pick)];
    if (static_cast<int>(candidates.size()) < need) return;
    done[static_cast<std::size_t>(pick)] = 1;
    residual[static_cast<std::size_t>(pick)] = 0;
    std::vector<int> chosen;
    std::function<void(std::size_t)> choose = [&](std::size_t from) {
      if (static_cast<int>(chosen.size()) == need) {
        for (int v : chosen) {
          --residual[static_cast<std::size_t>(v)];
          edges.push_back({std::min(pick, v), std::max(pick, v)});
        }
        rec();
        for (int v : chosen) {
          ++residual[static_cast<std::size_t>(v)];
          edges.pop_back();
        }
        return;
      }
      for (std::size_t i = from; i + (need - chosen.size()) <= candidates.size(); ++i) {
        chosen.push_back(candidates[i]);
        choose(i + 1);
        chosen.pop_back();
      }
    };
    choose(0);
    residual[static_cast<std::size_t>(pick)] = need;
    done[static_cast<std::size_t>(pick)] = 0;
  };
  rec();
  return found;
}

/// Exact number of m x n 0-1 matrices with the given margins (m n <= 64).
/// Column-by-column DP memoised on the multiset of residual row sums.
inline ExactCount exact_count_bipartite(const BipartiteMargins& margins) {
  const int m = margins.num_rows(), n = margins.num_cols();
  if (m * n > kMaxExactCells)
    throw Error(ErrorKind::TooLarge, "exact matrix count limited to m*n <= " + std::to_string(kMaxExactCells));
  if (margins.row_total() != margins.col_total()) return {BigInt(0), CountMethod::dp};

  std::vector<int> cols(margins.cols().begin(), margins.cols().end());
  std::sort(cols.begin(), cols.end(), std::greater<>());
  std::vector<std::unordered_map<std::string, BigInt>> memo(static_cast<std::size_t>(n));
  std::size_t states = 0;

  std::function<BigInt(int, const detail::ClassCounts&)> rec = [&](int col, const detail::ClassCounts& rows) -> BigInt {
    if (col == n) return rows.size() <= 1 ? BigInt(1) : BigInt(0);
    auto& table = memo[static_cast<std::size_t>(col)];
    const std::string key = detail::state_key(rows);
    if (auto it = table.find(key); it != table.end()) return it->second;
    if (++states > kMaxDpStates) throw Error(ErrorKind::TooLarge, "DP state space exceeded");
    BigInt total = 0;
    detail::for_each_composition(rows, cols[static_cast<std::size_t>(col)],
                                 [&](const detail::ClassCounts& picks, std::uint64_t ways) {
                                   const BigInt sub = rec(col + 1, detail::apply_picks(rows, picks));
                                   if (!sub.is_zero()) total += sub * ways;
                                 });
    table.emplace(key, total);
    return total;
  };
  return {rec(0, GraphCountingEngine::classes_of(margins.rows())), CountMethod::dp};
}

/// Exact |G(D)| from the characteristic-function integral of the
/// independent-edge model with potentials `lambda`,
///   |G(D)| = e^{g(lambda)} (2 pi)^{-n} int F(t) dt,
/// evaluated by the periodic trapezoid rule on N = 2n + 1 points per axis.
/// F is a trigonometric polynomial of degree at most n - 1 in every
/// coordinate, so the grid sum is exact up to rounding. Any lambda gives the
/// same value; the maximum entropy potentials give the best conditioning.
inline ExactCount fourier_count_graphs(const DegreeSequence& d, std::span<const double> lambda, unsigned threads = 1) {
  const int n = d.size();
  if (n > kMaxFourierVertices)
    throw Error(ErrorKind::TooLarge, "Fourier oracle limited to n <= " + std::to_string(kMaxFourierVertices));
  if (static_cast<int>(lambda.size()) != n) throw Error(ErrorKind::InvalidInput, "lambda has the wrong length");
  const int grid = 2 * n + 1;
  using Complex = std::complex<double>;

  std::vector<Complex> roots(static_cast<std::size_t>(grid));
  for (int s = 0; s < grid; ++s) roots[static_cast<std::size_t>(s)] = std::polar(1.0, 2.0 * std::numbers::pi * s / grid);

  // factor[j][k][s] = 1 - zeta + zeta * w^s
  std::vector<std::vector<std::vector<Complex>>> factor(
      static_cast<std::size_t>(n),
      std::vector<std::vector<Complex>>(static_cast<std::size_t>(n), std::vector<Complex>(static_cast<std::size_t>(grid))));
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      const double z = edge_probability(lambda[static_cast<std::size_t>(j)] + lambda[static_cast<std::size_t>(k)]);
      for (int s = 0; s < grid; ++s)
        factor[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)][static_cast<std::size_t>(s)] =
            (1.0 - z) + z * roots[static_cast<std::size_t>(s)];
    }
  }
  const auto phase = [&](int v, int a) {
    const int e = static_cast<int>((static_cast<std::int64_t>(grid) * grid - static_cast<std::int64_t>(d[v]) * a) % grid);
    return roots[static_cast<std::size_t>(e)];
  };

  std::vector<Complex> partial(static_cast<std::size_t>(grid));
  for_each_block(static_cast<std::size_t>(grid), threads, [&](std::size_t block) {
    std::vector<int> a(static_cast<std::size_t>(n), 0);
    a[0] = static_cast<int>(block);
    KahanSum re, im;
    std::function<void(int, Complex)> rec = [&](int v, Complex prod) {
      if (v == n) {
        re.add(prod.real());
        im.add(prod.imag());
        return;
      }
      for (int s = 0; s < grid; ++s) {
        a[static_cast<std::size_t>(v)] = s;
        Complex p = prod * phase(v, s);
        for (int j = 0; j < v; ++j)
          p *= factor[static_cast<std::size_t>(j)][static_cast<std::size_t>(v)]
                     [static_cast<std::size_t>((a[static_cast<std::size_t>(j)] + s) % grid)];
        rec(v + 1, p);
      }
    };
    rec(1, phase(0, a[0]));
    partial[block] = {re.value(), im.value()};
  });
  KahanSum re, im;
  for (const auto& p : partial) {
    re.add(p.real());
    im.add(p.imag());
  }
  const double points = std::pow(static_cast<double>(grid), n);
  std::vector<double> lam(lambda.begin(), lambda.end());
  const double scale = std::exp(graph_dual_objective(d, lam)) / points;
  const double value = re.value() * scale;
  const double rounded = std::round(value);
  const double allowed = 1e-6 * std::max(1.0, std::abs(rounded));
  if (std::abs(value - rounded) >= allowed || std::abs(im.value() * scale) >= allowed || rounded < 0.0) {
    throw Error(ErrorKind::NotAnInteger, "grid integral " + std::to_string(value) + " is not an integer");
  }
  return {BigInt(static_cast<long long>(rounded)), CountMethod::fourier};
}

inline ExactCount fourier_count_graphs(const DegreeSequence& d, const MaxEntSolution& sol, unsigned threads = 1) {
  return fourier_count_graphs(d, std::span<const double>(sol.lambda), threads);
}

/// Variant for sequences without an interior maximum entropy point: uses the
/// uniform tilt zeta = 1/2.
inline ExactCount fourier_count_graphs(const DegreeSequence& d, unsigned threads = 1) {
  const std::vector<double> zero(static_cast<std::size_t>(d.size()), 0.0);
  return fourier_count_graphs(d, std::span<const double>(zero), threads);
}

struct MonteCarloMoments {
  double mu_hat = 0.0;
  double nu_hat = 0.0;
  double se_mu = 0.0;
  double se_nu = 0.0;
  std::size_t samples = 0;
};

inline constexpr std::size_t kMinMonteCarloSamples = 10'000;

namespace detail {

inline constexpr std::size_t kSampleBlock = 4096;

/// draw(sample index, stream, out) fills one Gaussian vector of form coordinates.
template <class Draw>
MonteCarloMoments mc_over_forms(std::size_t samples, unsigned threads, const std::vector<Edge>& forms,
                                const std::vector<double>& a, const std::vector<double>& b, Draw&& draw) {
  if (samples < kMinMonteCarloSamples)
    throw Error(ErrorKind::InvalidInput, "Monte Carlo needs at least " + std::to_string(kMinMonteCarloSamples) + " samples");
  const std::size_t blocks = (samples + kSampleBlock - 1) / kSampleBlock;
  std::vector<std::array<double, 4>> partial(blocks);
  for_each_block(blocks, threads, [&](std::size_t blk) {
    std::array<KahanSum, 4> acc;  // f^2, f^4, h, h^2
    Eigen::VectorXd x;
    const std::size_t end = std::min(samples, (blk + 1) * kSampleBlock);
    for (std::size_t i = blk * kSampleBlock; i < end; ++i) {
      draw(i, x);
      double f = 0.0, h = 0.0;
      for (std::size_t e = 0; e < forms.size(); ++e) {
        const double s = x(forms[e].j) + x(forms[e].k);
        const double s2 = s * s;
        f += a[e] * s2 * s;
        h += b[e] * s2 * s2;
      }
      const double f2 = f * f;
      acc[0].add(f2);
      acc[1].add(f2 * f2);
      acc[2].add(h);
      acc[3].add(h * h);
    }
    partial[blk] = {acc[0].value(), acc[1].value(), acc[2].value(), acc[3].value()};
  });
  std::array<KahanSum, 4> total;
  for (const auto& p : partial)
    for (std::size_t i = 0; i < 4; ++i) total[i].add(p[i]);
  const double count = static_cast<double>(samples);
  MonteCarloMoments out;
  out.samples = samples;
  out.mu_hat = total[0].value() / count;
  out.nu_hat = total[2].value() / count;
  const double var_f2 = std::max(0.0, total[1].value() / count - out.mu_hat * out.mu_hat) * count / (count - 1.0);
  const double var_h = std::max(0.0, total[3].value() / count - out.nu_hat * out.nu_hat) * count / (count - 1.0);
  out.se_mu = std::sqrt(var_f2 / count);
  out.se_nu = std::sqrt(var_h / count);
  return out;
}

inline void fill_normals(PhiloxStream& rng, Eigen::VectorXd& z) {
  for (Eigen::Index i = 0; i < z.size(); i += 2) {
    const auto [g0, g1] = rng.normal_pair();
    z(i) = g0;
    if (i + 1 < z.size()) z(i + 1) = g1;
  }
}

}  // namespace detail

/// Sample estimates of E f^2 and E h under the graph Gaussian: t = L^{-T} g
/// for standard normal g, one Philox stream per sample index.
inline MonteCarloMoments mc_moments(const GaussianModel& model, const MaxEntSolution& sol, std::size_t samples,
                                    std::uint64_t seed, unsigned threads = 1) {
  const int n = model.size();
  const auto edges = all_pairs(n);
  std::vector<double> a(edges.size()), b(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double z = sol.zeta(edges[e].j, edges[e].k);
    a[e] = cubic_coefficient(z);
    b[e] = quartic_coefficient(z);
  }
  const Eigen::MatrixXd upper = model.chol.transpose();
  return detail::mc_over_forms(samples, threads, edges, a, b, [&](std::size_t i, Eigen::VectorXd& x) {
    PhiloxStream rng(seed, i);
    x.resize(n);
    detail::fill_normals(rng, x);
    upper.triangularView<Eigen::Upper>().solveInPlace(x);
  });
}

/// Same for the bipartite Gaussian restricted to u-perp.
inline MonteCarloMoments mc_moments(const BipartiteGaussianModel& model, const BipartiteMaxEntSolution& sol,
                                    std::size_t samples, std::uint64_t seed, unsigned threads = 1) {
  const auto forms = cell_forms(model.m, model.n);
  std::vector<double> a(forms.size()), b(forms.size());
  for (std::size_t e = 0; e < forms.size(); ++e) {
    const double z = sol.zeta(forms[e].j, forms[e].k - model.m);
    a[e] = cubic_coefficient(z);
    b[e] = quartic_coefficient(z);
  }
  return detail::mc_over_forms(samples, threads, forms, a, b, [&](std::size_t i, Eigen::VectorXd& x) {
    PhiloxStream rng(seed, i);
    Eigen::VectorXd g(model.dim() - 1);
    detail::fill_normals(rng, g);
    x.noalias() = model.factor * g;
  });
}

}  // namespace degcount
