#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "degrees.hpp"
#include "edgeworth.hpp"
#include "error.hpp"
#include "maxent.hpp"
#include "oracle.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace degcount {

/// Simple graph on vertices 0..n-1, edges sorted with j < k.
struct GraphSample {
  int n = 0;
  std::vector<Edge> edges;

  std::vector<int> degrees() const {
    std::vector<int> deg(static_cast<std::size_t>(n), 0);
    for (const auto& e : edges) {
      ++deg[static_cast<std::size_t>(e.j)];
      ++deg[static_cast<std::size_t>(e.k)];
    }
    return deg;
  }
};

struct SampleResult {
  GraphSample graph;
  std::uint64_t trials_used = 0;  ///< trials consumed, counting the accepted one
  std::uint64_t trial_index = 0;  ///< global index of the accepted trial
};

struct SamplerOptions {
  std::uint64_t seed = 0;
  std::uint64_t max_trials = 10'000'000;
  std::uint64_t first_trial = 0;  ///< trials before this index are skipped
  unsigned threads = 1;
};

namespace detail {

/// One proposal: pairs are visited in lexicographic order, each kept with
/// probability zeta_jk, drawing from the stream addressed by (seed, trial).
/// Stops as soon as a degree overshoots its target.
inline bool run_trial(const DegreeSequence& d, const std::vector<Edge>& pairs, const std::vector<double>& zeta,
                      std::uint64_t seed, std::uint64_t trial, std::vector<int>& deg, std::vector<Edge>* kept) {
  PhiloxStream rng(seed, trial);
  std::fill(deg.begin(), deg.end(), 0);
  if (kept) kept->clear();
  std::pair<double, double> u{};
  for (std::size_t e = 0; e < pairs.size(); ++e) {
    if (e % 2 == 0) u = rng.uniform_pair();
    const double draw = e % 2 == 0 ? u.first : u.second;
    if (draw < zeta[e]) {
      const auto [j, k] = pairs[e];
      if (++deg[static_cast<std::size_t>(j)] > d[j] || ++deg[static_cast<std::size_t>(k)] > d[k]) return false;
      if (kept) kept->push_back(pairs[e]);
    }
  }
  for (int v = 0; v < d.size(); ++v)
    if (deg[static_cast<std::size_t>(v)] != d[v]) return false;
  return true;
}

inline std::vector<double> pair_probabilities(const MaxEntSolution& sol, const std::vector<Edge>& pairs) {
  std::vector<double> z(pairs.size());
  for (std::size_t e = 0; e < pairs.size(); ++e) z[e] = sol.zeta(pairs[e].j, pairs[e].k);
  return z;
}

inline constexpr std::uint64_t kTrialBlock = 1024;

/// Smallest accepting trial index in [begin, end), if any; deterministic for any thread count.
inline std::optional<std::uint64_t> first_accepted(const DegreeSequence& d, const std::vector<Edge>& pairs,
                                                   const std::vector<double>& zeta, std::uint64_t seed,
                                                   std::uint64_t begin, std::uint64_t end, unsigned threads) {
  const std::uint64_t blocks = (end - begin + kTrialBlock - 1) / kTrialBlock;
  std::vector<std::uint64_t> hit(blocks, std::numeric_limits<std::uint64_t>::max());
  for_each_block(blocks, threads, [&](std::size_t b) {
    std::vector<int> deg(static_cast<std::size_t>(d.size()));
    const std::uint64_t lo = begin + b * kTrialBlock, hi = std::min(end, lo + kTrialBlock);
    for (std::uint64_t t = lo; t < hi; ++t) {
      if (run_trial(d, pairs, zeta, seed, t, deg, nullptr)) {
        hit[b] = t;
        return;
      }
    }
  });
  for (auto h : hit)
    if (h != std::numeric_limits<std::uint64_t>::max()) return h;
  return std::nullopt;
}

inline std::string acceptance_estimate(const DegreeSequence& d, const MaxEntSolution& sol) {
  if (!(sol.residual_inf <= sol.tol)) return "proposal is not the maximum entropy tilt; no acceptance estimate";
  try {
    const auto model = build_gaussian(sol, d);
    const auto report = assemble_graph_count(sol, model, compute_mu(model, sol), compute_nu(model, sol));
    std::ostringstream os;
    os << "estimated acceptance probability exp(ln_count - H(z)) = " << std::exp(report.ln_count - sol.entropy);
    return os.str();
  } catch (const Error&) {
    return "acceptance probability could not be estimated";
  }
}

}  // namespace detail

/// Proposal parameters for rejection sampling: the maximum entropy solution
/// when it exists, otherwise the flat tilt zeta = 1/2. Any tilt of the form
/// 1/(1 + e^{lambda_j + lambda_k}) gives uniform accepted samples; the
/// maximum entropy one maximizes the acceptance rate.
inline MaxEntSolution proposal_tilt(const DegreeSequence& d) {
  try {
    return solve_maxent(d);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DivergedToBoundary && e.kind() != ErrorKind::MaxIterExceeded) throw;
  }
  const int n = d.size();
  const auto st = detail::evaluate_graph_dual(d, Eigen::VectorXd::Zero(n));
  MaxEntSolution sol;
  sol.lambda.assign(static_cast<std::size_t>(n), 0.0);
  sol.entropy = st.entropy;
  sol.dual_value = st.value;
  sol.zeta_min = st.zeta_min;
  sol.zeta_max = st.zeta_max;
  sol.residual_inf = st.gradient.lpNorm<Eigen::Infinity>();
  sol.tol = default_tolerance(d.max_degree());
  return sol;
}

/// Exactly uniform sample from G(D) by rejection from the independent-edge
/// model with probabilities zeta: every graph in G(D) has the same proposal
/// probability, so the first accepted proposal is uniform.
inline SampleResult sample_uniform(const DegreeSequence& d, const MaxEntSolution& sol, const SamplerOptions& opts = {}) {
  if (!check_parity(d)) throw Error(ErrorKind::OddParity, "sum of degrees is odd; no graph exists");
  if (sol.size() != d.size()) throw Error(ErrorKind::InvalidInput, "solution and degree sequence sizes differ");
  const auto pairs = all_pairs(d.size());
  const auto zeta = detail::pair_probabilities(sol, pairs);
  const std::uint64_t chunk = detail::kTrialBlock * std::max(1u, opts.threads) * 4;
  const std::uint64_t stop = opts.first_trial + opts.max_trials;
  for (std::uint64_t begin = opts.first_trial; begin < stop; begin += chunk) {
    const std::uint64_t end = std::min(stop, begin + chunk);
    if (auto t = detail::first_accepted(d, pairs, zeta, opts.seed, begin, end, opts.threads)) {
      SampleResult out;
      std::vector<int> deg(static_cast<std::size_t>(d.size()));
      detail::run_trial(d, pairs, zeta, opts.seed, *t, deg, &out.graph.edges);
      out.graph.n = d.size();
      out.trial_index = *t;
      out.trials_used = *t - opts.first_trial + 1;
      return out;
    }
  }
  throw Error(ErrorKind::TrialsExhausted, "no proposal accepted in " + std::to_string(opts.max_trials) +
                                              " trials; " + detail::acceptance_estimate(d, sol));
}

/// Number of accepted proposals among trials [first_trial, first_trial + trials).
inline std::uint64_t count_accepted_trials(const DegreeSequence& d, const MaxEntSolution& sol, std::uint64_t seed,
                                           std::uint64_t trials, std::uint64_t first_trial = 0, unsigned threads = 1) {
  const auto pairs = all_pairs(d.size());
  const auto zeta = detail::pair_probabilities(sol, pairs);
  const std::uint64_t blocks = (trials + detail::kTrialBlock - 1) / detail::kTrialBlock;
  std::vector<std::uint64_t> hits(blocks, 0);
  for_each_block(blocks, threads, [&](std::size_t b) {
    std::vector<int> deg(static_cast<std::size_t>(d.size()));
    const std::uint64_t lo = first_trial + b * detail::kTrialBlock;
    const std::uint64_t hi = std::min(first_trial + trials, lo + detail::kTrialBlock);
    for (std::uint64_t t = lo; t < hi; ++t) hits[b] += detail::run_trial(d, pairs, zeta, seed, t, deg, nullptr);
  });
  std::uint64_t total = 0;
  for (auto h : hits) total += h;
  return total;
}

namespace detail {

/// Uniform integer in [0, bound) by rejection on random bits.
inline BigInt uniform_below(const BigInt& bound, PhiloxStream& rng) {
  const unsigned bits = boost::multiprecision::msb(bound) + 1;
  for (;;) {
    BigInt r = 0;
    for (unsigned have = 0; have < bits; have += 64) r = (r << 64) | BigInt(rng.next_u64());
    const unsigned words = (bits + 63) / 64;
    r >>= (words * 64 - bits);
    if (r < bound) return r;
  }
}

}  // namespace detail

/// Exactly uniform sample from G(D) drawn sequentially from exact counts:
/// the vertex of largest residual degree picks its partner-class composition
/// with probability proportional to the number of completions, then the
/// partners uniformly within each class. Practical wherever the counting
/// engine is (regular and near-regular sequences up to a few dozen vertices).
/// The engine is reused across calls to share its memo.
inline GraphSample sample_uniform_exact(const DegreeSequence& d, GraphCountingEngine& engine, std::uint64_t seed,
                                        std::uint64_t sample_index) {
  if (!check_parity(d)) throw Error(ErrorKind::OddParity, "sum of degrees is odd; no graph exists");
  const int n = d.size();
  auto state = GraphCountingEngine::classes_of(d.degrees());
  if (engine.count(state).is_zero()) throw Error(ErrorKind::Infeasible, "no graph has this degree sequence");
  PhiloxStream rng(seed, sample_index);
  std::vector<int> residual(d.degrees().begin(), d.degrees().end());
  std::vector<char> done(static_cast<std::size_t>(n), 0);
  GraphSample g;
  g.n = n;
  while (state.size() > 1) {
    int pick = -1;
    for (int v = 0; v < n; ++v)
      if (!done[static_cast<std::size_t>(v)] &&
          (pick < 0 || residual[static_cast<std::size_t>(v)] > residual[static_cast<std::size_t>(pick)]))
        pick = v;
    BigInt r = detail::uniform_below(engine.count(state), rng);
    std::optional<detail::ClassCounts> chosen, next_state;
    engine.for_each_step(state, [&](const detail::ClassCounts& picks, std::uint64_t ways,
                                    const detail::ClassCounts& next) {
      if (chosen) return;
      const BigInt weight = engine.count(next) * ways;
      if (r < weight) {
        chosen = picks;
        next_state = next;
      } else {
        r -= weight;
      }
    });
    done[static_cast<std::size_t>(pick)] = 1;
    residual[static_cast<std::size_t>(pick)] = 0;
    std::vector<int> partners;
    for (std::size_t cls = 1; cls < chosen->size(); ++cls) {
      std::vector<int> members;
      for (int v = 0; v < n; ++v)
        if (!done[static_cast<std::size_t>(v)] && residual[static_cast<std::size_t>(v)] == static_cast<int>(cls))
          members.push_back(v);
      const int take = (*chosen)[cls];
      for (int i = 0; i < take; ++i) {
        const auto span = static_cast<std::uint64_t>(members.size() - static_cast<std::size_t>(i));
        const auto off = static_cast<std::size_t>(rng.next_u64() % span);  // modulo bias below 2^-57
        std::swap(members[static_cast<std::size_t>(i)], members[static_cast<std::size_t>(i) + off]);
        partners.push_back(members[static_cast<std::size_t>(i)]);
      }
    }
    for (int v : partners) {
      --residual[static_cast<std::size_t>(v)];
      g.edges.push_back({std::min(pick, v), std::max(pick, v)});
    }
    state = *next_state;
  }
  std::sort(g.edges.begin(), g.edges.end(), [](Edge a, Edge b) { return a.j != b.j ? a.j < b.j : a.k < b.k; });
  return g;
}

/// sigma_S(G) against sigma_S(z) for a set S of pairs.
struct EdgeStatistic {
  std::size_t subset_size = 0;
  std::int64_t sigma_G = 0;
  double sigma_z = 0.0;
  double relative_deviation = 0.0;
};

inline EdgeStatistic edge_statistic(const GraphSample& g, const MaxEntSolution& sol, std::vector<Edge> subset) {
  for (auto& e : subset) {
    if (e.j < 0 || e.k < 0 || e.j >= g.n || e.k >= g.n || e.j == e.k)
      throw Error(ErrorKind::IndexOutOfRange, "pair (" + std::to_string(e.j) + ", " + std::to_string(e.k) + ")");
    if (e.j > e.k) std::swap(e.j, e.k);
  }
  const auto less = [](Edge a, Edge b) { return a.j != b.j ? a.j < b.j : a.k < b.k; };
  std::sort(subset.begin(), subset.end(), less);
  subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
  EdgeStatistic st;
  st.subset_size = subset.size();
  KahanSum z;
  for (const auto& e : subset) {
    z.add(sol.zeta(e.j, e.k));
    if (std::binary_search(g.edges.begin(), g.edges.end(), e, less)) ++st.sigma_G;
  }
  st.sigma_z = z.value();
  st.relative_deviation = std::abs(static_cast<double>(st.sigma_G) - st.sigma_z) / std::max(st.sigma_z, 1.0);
  return st;
}

}  // namespace degcount
