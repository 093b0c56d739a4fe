#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "degrees.hpp"
#include "error.hpp"
#include "maxent.hpp"
#include "parallel.hpp"

namespace degcount {

/// Unordered vertex pair, 0-based, j != k.
struct Edge {
  int j = 0;
  int k = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// All n(n-1)/2 pairs in lexicographic order.
inline std::vector<Edge> all_pairs(int n) {
  std::vector<Edge> out;
  out.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) out.push_back({j, k});
  return out;
}

/// Gaussian with density proportional to exp(-t'Qt/2) on R^n.
struct GaussianModel {
  Eigen::MatrixXd Q;
  Eigen::MatrixXd chol;  ///< lower factor, Q = L L'
  double log_det_Q = 0.0;
  Eigen::MatrixXd C;  ///< covariance Q^{-1}

  int size() const { return static_cast<int>(Q.rows()); }
};

/// Q_jk = zeta_jk(1 - zeta_jk) for j != k and Q_jj = d_j - sum_k zeta_jk^2.
inline GaussianModel build_gaussian(const MaxEntSolution& sol, const DegreeSequence& d) {
  const int n = sol.size();
  if (n != d.size()) throw Error(ErrorKind::InvalidInput, "solution and degree sequence sizes differ");
  if (n <= 2) throw Error(ErrorKind::NotPositiveDefinite, "Q is singular for n <= 2");
  GaussianModel model;
  model.Q = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) model.Q(j, j) = d[j];
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      const double z = sol.zeta(j, k);
      model.Q(j, k) = model.Q(k, j) = z * (1.0 - z);
      model.Q(j, j) -= z * z;
      model.Q(k, k) -= z * z;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(model.Q);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::NotPositiveDefinite, "Cholesky factorization of Q failed");
  model.chol = llt.matrixL();
  model.log_det_Q = 2.0 * model.chol.diagonal().array().log().sum();
  model.C = llt.solve(Eigen::MatrixXd::Identity(n, n));
  return model;
}

/// E (t_j1 + t_k1)(t_j2 + t_k2) under the model.
inline double edge_covariance(const GaussianModel& model, Edge e1, Edge e2) {
  const int n = model.size();
  for (int v : {e1.j, e1.k, e2.j, e2.k})
    if (v < 0 || v >= n) throw Error(ErrorKind::IndexOutOfRange, "vertex index " + std::to_string(v));
  if (e1.j == e1.k || e2.j == e2.k) throw Error(ErrorKind::IndexOutOfRange, "edge endpoints must differ");
  const auto& c = model.C;
  return c(e1.j, e2.j) + c(e1.j, e2.k) + c(e1.k, e2.j) + c(e1.k, e2.k);
}

/// Coefficient of (t_j + t_k)^3 in f.
inline double cubic_coefficient(double z) { return z * (1.0 - z) * (2.0 * z - 1.0) / 6.0; }
/// Coefficient of (t_j + t_k)^4 in h.
inline double quartic_coefficient(double z) { return z * (1.0 - z) * (6.0 * z * z - 6.0 * z + 1.0) / 24.0; }

namespace detail {

inline constexpr std::size_t kMomentBlock = 32;

/// Shared kernel for E f^2 with f = sum_e a_e X_e^3 and the X_e jointly
/// Gaussian linear forms sigma_{row(e)} + tau_{col(e)} over coordinates of
/// `cov`:  E X1^3 X2^3 = 9 v1 v2 c12 + 6 c12^3.
inline double third_moment_energy(const Eigen::MatrixXd& cov, const std::vector<Edge>& forms,
                                  const std::vector<double>& a, unsigned threads) {
  const std::size_t p = forms.size();
  std::vector<double> var(p);
  for (std::size_t e = 0; e < p; ++e) {
    const auto [j, k] = forms[e];
    var[e] = cov(j, j) + 2.0 * cov(j, k) + cov(k, k);
  }
  const std::size_t blocks = (p + kMomentBlock - 1) / kMomentBlock;
  return block_reduce(blocks, threads, [&](std::size_t b) {
    KahanSum acc;
    Eigen::VectorXd w(cov.rows());
    const std::size_t end = std::min(p, (b + 1) * kMomentBlock);
    for (std::size_t e1 = b * kMomentBlock; e1 < end; ++e1) {
      if (a[e1] == 0.0) continue;
      w = cov.col(forms[e1].j) + cov.col(forms[e1].k);
      double row = 0.0;
      for (std::size_t e2 = 0; e2 < p; ++e2) {
        const double c = w(forms[e2].j) + w(forms[e2].k);
        row += a[e2] * (9.0 * var[e1] * var[e2] * c + 6.0 * c * c * c);
      }
      acc.add(a[e1] * row);
    }
    return acc.value();
  });
}

inline double fourth_moment_mean(const Eigen::MatrixXd& cov, const std::vector<Edge>& forms,
                                 const std::vector<double>& b) {
  KahanSum acc;
  for (std::size_t e = 0; e < forms.size(); ++e) {
    const auto [j, k] = forms[e];
    const double v = cov(j, j) + 2.0 * cov(j, k) + cov(k, k);
    acc.add(b[e] * 3.0 * v * v);
  }
  return acc.value();
}

}  // namespace detail

/// mu = E f^2, exact by Wick's formula over all ordered pairs of edges.
inline double compute_mu(const GaussianModel& model, const MaxEntSolution& sol, unsigned threads = 1) {
  const auto edges = all_pairs(model.size());
  std::vector<double> a(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) a[e] = cubic_coefficient(sol.zeta(edges[e].j, edges[e].k));
  return detail::third_moment_energy(model.C, edges, a, threads);
}

/// nu = E h = sum_e b_e * 3 * Var(X_e)^2.
inline double compute_nu(const GaussianModel& model, const MaxEntSolution& sol) {
  const auto edges = all_pairs(model.size());
  std::vector<double> b(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) b[e] = quartic_coefficient(sol.zeta(edges[e].j, edges[e].k));
  return detail::fourth_moment_mean(model.C, edges, b);
}

/// Above this the exponential is not reported (still fine in log space).
inline constexpr double kMaxRepresentableLnCount = 690.7755278982137;  // ln(1e300)

/// Additive decomposition of ln |G(D)|.
struct CountReport {
  double log2_term = 0.0;       ///< ln 2
  double entropy_term = 0.0;    ///< H(z)
  double gaussian_term = 0.0;   ///< -(n/2) ln 2pi - (1/2) ln det Q
  double mu = 0.0;
  double nu = 0.0;
  double edgeworth_term = 0.0;  ///< -mu/2 + nu
  double ln_count = 0.0;
  std::optional<double> count;

  double log_det_Q = 0.0;
  double delta_observed = 0.0;
  int iterations = 0;
};

inline CountReport assemble_graph_count(const MaxEntSolution& sol, const GaussianModel& model, double mu, double nu) {
  const int n = model.size();
  CountReport r;
  r.log2_term = std::numbers::ln2;
  r.entropy_term = sol.entropy;
  r.gaussian_term = -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * model.log_det_Q;
  r.mu = mu;
  r.nu = nu;
  r.edgeworth_term = -mu / 2.0 + nu;
  r.ln_count = r.log2_term + r.entropy_term + r.gaussian_term + r.edgeworth_term;
  if (r.ln_count < kMaxRepresentableLnCount) r.count = std::exp(r.ln_count);
  r.log_det_Q = model.log_det_Q;
  r.delta_observed = tameness_observed(sol);
  r.iterations = sol.iterations;
  return r;
}

/// Asymptotic count of labeled graphs with degree sequence d:
///   2 e^{H(z)} / ((2 pi)^{n/2} sqrt(det Q)) * exp(-mu/2 + nu).
inline CountReport count_graphs(const DegreeSequence& d, SolverOptions opts = {}, unsigned threads = 1) {
  if (!check_parity(d)) throw Error(ErrorKind::OddParity, "sum of degrees is odd; no graph exists");
  const auto eg = erdos_gallai(d);
  if (!eg.feasible)
    throw Error(ErrorKind::Infeasible, "Erdos-Gallai violated at k=" + std::to_string(eg.first_violated_k.value_or(0)));
  const auto sol = solve_maxent(d, opts);
  const auto model = build_gaussian(sol, d);
  return assemble_graph_count(sol, model, compute_mu(model, sol, threads), compute_nu(model, sol));
}

}  // namespace degcount
