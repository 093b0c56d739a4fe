#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "degrees.hpp"
#include "edgeworth.hpp"
#include "error.hpp"
#include "maxent.hpp"
#include "parallel.hpp"

namespace degcount {

/// Quadratic form q(s, t) = <B (s,t), (s,t)> on R^{m+n}, whose kernel is
/// spanned by u = (1,...,1; -1,...,-1), together with the Gaussian of density
/// proportional to exp(-q) on the complement of u.
struct BipartiteGaussianModel {
  int m = 0;
  int n = 0;
  Eigen::MatrixXd B;
  Eigen::VectorXd u;
  Eigen::VectorXd restricted_eigenvalues;  ///< eigenvalues of B on u-perp, ascending
  double log_pdet = 0.0;                   ///< sum of ln of restricted_eigenvalues
  Eigen::MatrixXd Cplus;                   ///< covariance (2B)^+, supported on u-perp
  Eigen::MatrixXd factor;                  ///< (m+n) x (m+n-1), factor * factor' = Cplus

  int dim() const { return m + n; }
};

/// Eigenvalues below this fraction of the largest are treated as kernel.
inline constexpr double kKernelThreshold = 1e-8;

/// Each cell (j, k) as the linear form sigma_j + tau_k in (rows; cols) coordinates.
inline std::vector<Edge> cell_forms(int m, int n) {
  std::vector<Edge> out;
  out.reserve(static_cast<std::size_t>(m) * n);
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < n; ++k) out.push_back({j, m + k});
  return out;
}

inline BipartiteGaussianModel build_bipartite_gaussian(const BipartiteMaxEntSolution& sol) {
  BipartiteGaussianModel model;
  model.m = sol.num_rows();
  model.n = sol.num_cols();
  const int m = model.m, n = model.n, dim = m + n;
  if (dim < 3) throw Error(ErrorKind::KernelDimensionNotOne, "need m + n >= 3");

  model.B = Eigen::MatrixXd::Zero(dim, dim);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < n; ++k) {
      const double z = sol.zeta(j, k);
      const double half_w = 0.5 * z * (1.0 - z);
      model.B(j, m + k) = model.B(m + k, j) = half_w;
      model.B(j, j) += half_w;
      model.B(m + k, m + k) += half_w;
    }
  }
  model.u.resize(dim);
  model.u.head(m).setOnes();
  model.u.tail(n).setConstant(-1.0);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(model.B, Eigen::EigenvaluesOnly);
  const double top = full.eigenvalues().cwiseAbs().maxCoeff();
  const auto kernel = (full.eigenvalues().array().abs() < kKernelThreshold * top).count();
  if (kernel != 1) {
    throw Error(ErrorKind::KernelDimensionNotOne,
                "quadratic form has " + std::to_string(kernel) + " near-zero eigenvalues, expected 1");
  }

  // Orthonormal basis of u-perp: columns 2..dim of the Householder reflector taking u to e_1.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(model.u));
  const Eigen::MatrixXd reflector = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::MatrixXd basis = reflector.rightCols(dim - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> restricted(basis.transpose() * model.B * basis);
  model.restricted_eigenvalues = restricted.eigenvalues();
  if (model.restricted_eigenvalues.minCoeff() < kKernelThreshold * top) {
    throw Error(ErrorKind::KernelDimensionNotOne, "restriction of the form to u-perp is not positive definite");
  }
  model.log_pdet = model.restricted_eigenvalues.array().log().sum();

  const Eigen::MatrixXd vecs = basis * restricted.eigenvectors();
  const Eigen::VectorXd scale = (2.0 * model.restricted_eigenvalues.array()).rsqrt();
  model.factor = vecs * scale.asDiagonal();
  model.Cplus = model.factor * model.factor.transpose();
  return model;
}

/// Variance of sigma_j + tau_k under the restricted Gaussian.
inline double cell_variance(const BipartiteGaussianModel& model, int j, int k) {
  if (j < 0 || j >= model.m || k < 0 || k >= model.n)
    throw Error(ErrorKind::IndexOutOfRange, "cell (" + std::to_string(j) + ", " + std::to_string(k) + ")");
  const auto& c = model.Cplus;
  const int col = model.m + k;
  return c(j, j) + 2.0 * c(j, col) + c(col, col);
}

inline double compute_mu(const BipartiteGaussianModel& model, const BipartiteMaxEntSolution& sol,
                         unsigned threads = 1) {
  const auto forms = cell_forms(model.m, model.n);
  std::vector<double> a(forms.size());
  for (std::size_t e = 0; e < forms.size(); ++e) a[e] = cubic_coefficient(sol.zeta(forms[e].j, forms[e].k - model.m));
  return detail::third_moment_energy(model.Cplus, forms, a, threads);
}

inline double compute_nu(const BipartiteGaussianModel& model, const BipartiteMaxEntSolution& sol) {
  const auto forms = cell_forms(model.m, model.n);
  std::vector<double> b(forms.size());
  for (std::size_t e = 0; e < forms.size(); ++e)
    b[e] = quartic_coefficient(sol.zeta(forms[e].j, forms[e].k - model.m));
  return detail::fourth_moment_mean(model.Cplus, forms, b);
}

struct BipartiteCountReport {
  double entropy_term = 0.0;
  double gaussian_term = 0.0;  ///< (1/2) ln(m+n) - ((m+n-1)/2) ln 4pi - (1/2) ln det q|L
  double mu = 0.0;
  double nu = 0.0;
  double edgeworth_term = 0.0;
  double ln_count = 0.0;
  std::optional<double> count;

  double log_pdet = 0.0;
  double delta_observed = 0.0;
  int iterations = 0;
};

inline BipartiteCountReport assemble_bipartite_count(const BipartiteMaxEntSolution& sol,
                                                     const BipartiteGaussianModel& model, double mu, double nu) {
  const int dim = model.dim();
  BipartiteCountReport r;
  r.entropy_term = sol.entropy;
  r.gaussian_term = 0.5 * std::log(static_cast<double>(dim)) -
                    0.5 * (dim - 1) * std::log(4.0 * std::numbers::pi) - 0.5 * model.log_pdet;
  r.mu = mu;
  r.nu = nu;
  r.edgeworth_term = -mu / 2.0 + nu;
  r.ln_count = r.entropy_term + r.gaussian_term + r.edgeworth_term;
  if (r.ln_count < kMaxRepresentableLnCount) r.count = std::exp(r.ln_count);
  r.log_pdet = model.log_pdet;
  // Tameness for margins also bounds the aspect ratio: delta m <= n and delta n <= m.
  const double aspect = std::min(static_cast<double>(model.m) / model.n, static_cast<double>(model.n) / model.m);
  r.delta_observed = std::min(tameness_observed(sol), aspect);
  r.iterations = sol.iterations;
  return r;
}

/// Asymptotic number of m x n 0-1 matrices with row sums R and column sums C.
inline BipartiteCountReport count_bipartite(const BipartiteMargins& margins, SolverOptions opts = {},
                                            unsigned threads = 1) {
  const auto gr = gale_ryser(margins);
  if (!gr.feasible) {
    if (!gr.parity_ok) throw Error(ErrorKind::Infeasible, "row and column totals differ");
    throw Error(ErrorKind::Infeasible, "Gale-Ryser violated at k=" + std::to_string(gr.first_violated_k.value_or(0)));
  }
  const auto sol = solve_maxent_bipartite(margins, opts);
  const auto model = build_bipartite_gaussian(sol);
  return assemble_bipartite_count(sol, model, compute_mu(model, sol, threads), compute_nu(model, sol));
}

}  // namespace degcount
