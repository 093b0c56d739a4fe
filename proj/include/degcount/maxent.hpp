#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "degrees.hpp"
#include "error.hpp"

namespace degcount {

/// ln(1 + e^x) without overflow.
inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// Edge probability 1 / (1 + e^s) for dual potential sum s = lambda_j + lambda_k.
inline double edge_probability(double s) {
  if (s >= 0.0) {
    const double e = std::exp(-s);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(s));
}

/// Bernoulli entropy of the edge probability at potential sum s, in nats.
inline double edge_entropy(double s) {
  const double z = edge_probability(s);
  return z * softplus(s) + (1.0 - z) * softplus(-s);
}

/// Newton iterations stop once the dual gradient is below tol in max norm;
/// tol <= 0 selects default_tolerance().
struct SolverOptions {
  double tol = 0.0;
  int max_iter = 100;
};

inline double default_tolerance(int max_margin) { return 1e-10 * std::max(1, max_margin); }

/// Divergence guard: beyond this every entry is within 1e-17 of 0 or 1.
inline constexpr double kLambdaBound = 40.0;

struct MaxEntSolution {
  std::vector<double> lambda;
  double entropy = 0.0;     ///< H(z), primal sum over pairs
  double dual_value = 0.0;  ///< g(lambda); equals entropy at the optimum
  double zeta_min = 0.0;
  double zeta_max = 0.0;
  double residual_inf = 0.0;
  double tol = 0.0;
  int iterations = 0;

  int size() const { return static_cast<int>(lambda.size()); }
  double zeta(int j, int k) const {
    return edge_probability(lambda[static_cast<std::size_t>(j)] + lambda[static_cast<std::size_t>(k)]);
  }
};

struct BipartiteMaxEntSolution {
  std::vector<double> lambda_rows;
  std::vector<double> lambda_cols;
  double entropy = 0.0;
  double dual_value = 0.0;
  double zeta_min = 0.0;
  double zeta_max = 0.0;
  double residual_inf = 0.0;
  double tol = 0.0;
  int iterations = 0;

  int num_rows() const { return static_cast<int>(lambda_rows.size()); }
  int num_cols() const { return static_cast<int>(lambda_cols.size()); }
  double zeta(int j, int k) const {
    return edge_probability(lambda_rows[static_cast<std::size_t>(j)] + lambda_cols[static_cast<std::size_t>(k)]);
  }
};

/// Symmetric n x n matrix of edge probabilities with zero diagonal.
inline Eigen::MatrixXd zeta_matrix(const MaxEntSolution& sol) {
  const int n = sol.size();
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) z(j, k) = z(k, j) = sol.zeta(j, k);
  return z;
}

inline Eigen::MatrixXd zeta_matrix(const BipartiteMaxEntSolution& sol) {
  Eigen::MatrixXd z(sol.num_rows(), sol.num_cols());
  for (int j = 0; j < sol.num_rows(); ++j)
    for (int k = 0; k < sol.num_cols(); ++k) z(j, k) = sol.zeta(j, k);
  return z;
}

/// Hessian of the graph dual: zeta(1-zeta) off the diagonal, row sums of the
/// same weights on it.
inline Eigen::MatrixXd dual_hessian(const std::vector<double>& lambda) {
  const int n = static_cast<int>(lambda.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k) {
      const double z = edge_probability(lambda[static_cast<std::size_t>(j)] + lambda[static_cast<std::size_t>(k)]);
      const double w = z * (1.0 - z);
      h(j, k) = h(k, j) = w;
      h(j, j) += w;
      h(k, k) += w;
    }
  }
  return h;
}

/// g(lambda) = sum_{j<k} ln(1 + e^{-lambda_j - lambda_k}) + sum_k lambda_k d_k.
inline double graph_dual_objective(const DegreeSequence& d, const std::vector<double>& lambda) {
  const int n = d.size();
  double g = 0.0;
  for (int j = 0; j < n; ++j) {
    g += lambda[static_cast<std::size_t>(j)] * d[j];
    for (int k = j + 1; k < n; ++k)
      g += softplus(-(lambda[static_cast<std::size_t>(j)] + lambda[static_cast<std::size_t>(k)]));
  }
  return g;
}

namespace detail {

struct GraphDualState {
  double value = 0.0;
  Eigen::VectorXd gradient;
  double entropy = 0.0;
  double zeta_min = 1.0;
  double zeta_max = 0.0;
};

inline GraphDualState evaluate_graph_dual(const DegreeSequence& d, const Eigen::VectorXd& lambda) {
  const int n = d.size();
  GraphDualState st;
  st.gradient = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    st.value += lambda(j) * d[j];
    st.gradient(j) += d[j];
    for (int k = j + 1; k < n; ++k) {
      const double s = lambda(j) + lambda(k);
      const double z = edge_probability(s);
      st.value += softplus(-s);
      st.entropy += z * softplus(s) + (1.0 - z) * softplus(-s);
      st.gradient(j) -= z;
      st.gradient(k) -= z;
      st.zeta_min = std::min(st.zeta_min, z);
      st.zeta_max = std::max(st.zeta_max, z);
    }
  }
  return st;
}

inline double graph_dual_value(const DegreeSequence& d, const Eigen::VectorXd& lambda) {
  const int n = d.size();
  double g = 0.0;
  for (int j = 0; j < n; ++j) {
    g += lambda(j) * d[j];
    for (int k = j + 1; k < n; ++k) g += softplus(-(lambda(j) + lambda(k)));
  }
  return g;
}

inline void check_bound(const Eigen::VectorXd& x) {
  if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > kLambdaBound) {
    throw Error(ErrorKind::DivergedToBoundary,
                "dual variables left [-40, 40]; the polytope has no interior point (some entries are forced to 0 or 1)");
  }
}

/// Damped Newton with Armijo backtracking. `evaluate` returns value and
/// gradient, `value` only the objective, `solve` maps a gradient to the
/// Newton direction (throws on factorization failure), `normalize` fixes any
/// gauge after a step.
template <class Evaluate, class Value, class Solve, class Normalize>
int newton_minimize(Eigen::VectorXd& x, double tol, int max_iter, Evaluate&& evaluate, Value&& value, Solve&& solve,
                    Normalize&& normalize) {
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxHalvings = 60;
  constexpr int kPolishSteps = 3;
  int iter = 0;
  for (;; ++iter) {
    auto st = evaluate(x);
    const double res = st.gradient.template lpNorm<Eigen::Infinity>();
    if (!std::isfinite(res)) throw Error(ErrorKind::DivergedToBoundary, "dual gradient is not finite");
    if (res <= tol) {
      // A few undamped steps push the residual down to rounding level.
      double best = res;
      for (int p = 0; p < kPolishSteps && best > 0.0; ++p) {
        Eigen::VectorXd trial = x + solve(x, st.gradient);
        normalize(trial);
        auto ts = evaluate(trial);
        const double r = ts.gradient.template lpNorm<Eigen::Infinity>();
        if (!(r < best)) break;
        x = trial;
        best = r;
        st = std::move(ts);
      }
      return iter;
    }
    if (iter >= max_iter) {
      std::ostringstream msg;
      msg << "Newton did not reach tolerance " << tol << " in " << max_iter << " iterations (residual " << res << ")";
      throw Error(ErrorKind::MaxIterExceeded, msg.str());
    }
    const Eigen::VectorXd step = solve(x, st.gradient);
    const double slope = st.gradient.dot(step);
    Eigen::VectorXd trial = x + step;
    // Close to the optimum the predicted decrease drops below the rounding
    // level of g; there the full step is judged by the gradient instead.
    const bool rounding_limited = -slope <= 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(st.value));
    if (!(rounding_limited && evaluate(trial).gradient.template lpNorm<Eigen::Infinity>() < res)) {
      double t = 1.0;
      int halvings = 0;
      for (; halvings < kMaxHalvings; ++halvings) {
        trial = x + t * step;
        const double v = value(trial);
        if (std::isfinite(v) && v <= st.value + kArmijo * t * slope) break;
        t *= 0.5;
      }
      if (halvings == kMaxHalvings) trial = x + step;
    }
    normalize(trial);
    x = trial;
    check_bound(x);
  }
}

}  // namespace detail

/// Maximum entropy matrix of a degree sequence via Newton on the convex dual
///   g(lambda) = sum_{j<k} ln(1 + e^{-lambda_j - lambda_k}) + sum_k lambda_k d_k.
/// At the minimizer zeta_jk = 1 / (1 + e^{lambda_j + lambda_k}) has row sums d
/// and the Hessian is the matrix Q of the counting formula.
inline MaxEntSolution solve_maxent(const DegreeSequence& d, SolverOptions opts = {}) {
  const int n = d.size();
  const double tol = opts.tol > 0.0 ? opts.tol : default_tolerance(d.max_degree());
  if (detail::first_erdos_gallai_violation(detail::sorted_descending(d.degrees()), false)) {
    throw Error(ErrorKind::Infeasible, "Erdos-Gallai inequalities fail; the degree polytope is empty");
  }
  if (d.max_degree() >= n - 1) {
    throw Error(ErrorKind::DivergedToBoundary,
                "a vertex of degree n-1 forces all its entries to 1; the polytope has no interior point");
  }

  Eigen::VectorXd x(n);
  for (int k = 0; k < n; ++k) x(k) = 0.5 * std::log(static_cast<double>(n - 1) / d[k] - 1.0);

  const auto solve = [](const Eigen::VectorXd& lam, const Eigen::VectorXd& grad) -> Eigen::VectorXd {
    std::vector<double> l(lam.data(), lam.data() + lam.size());
    Eigen::LLT<Eigen::MatrixXd> llt(dual_hessian(l));
    if (llt.info() != Eigen::Success)
      throw Error(ErrorKind::DivergedToBoundary, "dual Hessian lost positive definiteness");
    return -llt.solve(grad);
  };
  const int iterations = detail::newton_minimize(
      x, tol, opts.max_iter, [&](const Eigen::VectorXd& v) { return detail::evaluate_graph_dual(d, v); },
      [&](const Eigen::VectorXd& v) { return detail::graph_dual_value(d, v); }, solve, [](Eigen::VectorXd&) {});

  const auto st = detail::evaluate_graph_dual(d, x);
  MaxEntSolution sol;
  sol.lambda.assign(x.data(), x.data() + n);
  sol.entropy = st.entropy;
  sol.dual_value = st.value;
  sol.zeta_min = st.zeta_min;
  sol.zeta_max = st.zeta_max;
  sol.residual_inf = st.gradient.lpNorm<Eigen::Infinity>();
  sol.tol = tol;
  sol.iterations = iterations;
  return sol;
}

namespace detail {

inline GraphDualState evaluate_bipartite_dual(const BipartiteMargins& mg, const Eigen::VectorXd& x) {
  const int m = mg.num_rows(), n = mg.num_cols();
  GraphDualState st;
  st.gradient = Eigen::VectorXd::Zero(m + n);
  for (int j = 0; j < m; ++j) {
    st.value += x(j) * mg.rows()[static_cast<std::size_t>(j)];
    st.gradient(j) += mg.rows()[static_cast<std::size_t>(j)];
  }
  for (int k = 0; k < n; ++k) {
    st.value += x(m + k) * mg.cols()[static_cast<std::size_t>(k)];
    st.gradient(m + k) += mg.cols()[static_cast<std::size_t>(k)];
  }
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < n; ++k) {
      const double s = x(j) + x(m + k);
      const double z = edge_probability(s);
      st.value += softplus(-s);
      st.entropy += z * softplus(s) + (1.0 - z) * softplus(-s);
      st.gradient(j) -= z;
      st.gradient(m + k) -= z;
      st.zeta_min = std::min(st.zeta_min, z);
      st.zeta_max = std::max(st.zeta_max, z);
    }
  }
  return st;
}

/// Shifts (lambda + c, mu - c) so that sum(lambda) = sum(mu).
inline void fix_bipartite_gauge(Eigen::VectorXd& x, int m) {
  const int n = static_cast<int>(x.size()) - m;
  const double c = (x.tail(n).sum() - x.head(m).sum()) / (m + n);
  x.head(m).array() += c;
  x.tail(n).array() -= c;
}

}  // namespace detail

/// Hessian of the bipartite dual in (rows; cols) coordinates. Singular along
/// the gauge direction (1,...,1; -1,...,-1).
inline Eigen::MatrixXd bipartite_dual_hessian(const BipartiteMaxEntSolution& sol) {
  const int m = sol.num_rows(), n = sol.num_cols();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + n, m + n);
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < n; ++k) {
      const double z = sol.zeta(j, k);
      const double w = z * (1.0 - z);
      h(j, m + k) = h(m + k, j) = w;
      h(j, j) += w;
      h(m + k, m + k) += w;
    }
  }
  return h;
}

/// Maximum entropy 0-1 matrix for margins (R, C); same Newton scheme with the
/// one-dimensional gauge projected out of every step.
inline BipartiteMaxEntSolution solve_maxent_bipartite(const BipartiteMargins& mg, SolverOptions opts = {}) {
  const int m = mg.num_rows(), n = mg.num_cols();
  const int max_margin = std::max(*std::max_element(mg.rows().begin(), mg.rows().end()),
                                  *std::max_element(mg.cols().begin(), mg.cols().end()));
  const double tol = opts.tol > 0.0 ? opts.tol : default_tolerance(max_margin);
  if (!gale_ryser(mg).feasible) throw Error(ErrorKind::Infeasible, "Gale-Ryser conditions fail");
  for (int r : mg.rows())
    if (r >= n) throw Error(ErrorKind::DivergedToBoundary, "a full row forces its entries to 1");
  for (int c : mg.cols())
    if (c >= m) throw Error(ErrorKind::DivergedToBoundary, "a full column forces its entries to 1");

  Eigen::VectorXd x(m + n);
  for (int j = 0; j < m; ++j) x(j) = 0.5 * std::log(static_cast<double>(n) / mg.rows()[static_cast<std::size_t>(j)] - 1.0);
  for (int k = 0; k < n; ++k)
    x(m + k) = 0.5 * std::log(static_cast<double>(m) / mg.cols()[static_cast<std::size_t>(k)] - 1.0);
  detail::fix_bipartite_gauge(x, m);

  Eigen::VectorXd gauge(m + n);
  gauge.head(m).setOnes();
  gauge.tail(n).setConstant(-1.0);
  gauge.normalize();

  const auto to_solution = [&](const Eigen::VectorXd& v) {
    BipartiteMaxEntSolution s;
    s.lambda_rows.assign(v.data(), v.data() + m);
    s.lambda_cols.assign(v.data() + m, v.data() + m + n);
    return s;
  };
  const auto solve = [&](const Eigen::VectorXd& v, const Eigen::VectorXd& grad) -> Eigen::VectorXd {
    Eigen::MatrixXd h = bipartite_dual_hessian(to_solution(v));
    const double scale = h.diagonal().mean();
    h.noalias() += scale * gauge * gauge.transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success)
      throw Error(ErrorKind::DivergedToBoundary, "bipartite dual Hessian lost positive definiteness");
    Eigen::VectorXd g = grad - gauge * gauge.dot(grad);
    Eigen::VectorXd step = -llt.solve(g);
    return step - gauge * gauge.dot(step);
  };
  const int iterations = detail::newton_minimize(
      x, tol, opts.max_iter, [&](const Eigen::VectorXd& v) { return detail::evaluate_bipartite_dual(mg, v); },
      [&](const Eigen::VectorXd& v) { return detail::evaluate_bipartite_dual(mg, v).value; }, solve,
      [&](Eigen::VectorXd& v) { detail::fix_bipartite_gauge(v, m); });

  const auto st = detail::evaluate_bipartite_dual(mg, x);
  BipartiteMaxEntSolution sol = to_solution(x);
  sol.entropy = st.entropy;
  sol.dual_value = st.value;
  sol.zeta_min = st.zeta_min;
  sol.zeta_max = st.zeta_max;
  sol.residual_inf = st.gradient.lpNorm<Eigen::Infinity>();
  sol.tol = tol;
  sol.iterations = iterations;
  return sol;
}

/// Largest delta for which the computed matrix witnesses delta-tameness.
inline double tameness_observed(const MaxEntSolution& sol) { return std::min(sol.zeta_min, 1.0 - sol.zeta_max); }
inline double tameness_observed(const BipartiteMaxEntSolution& sol) {
  return std::min(sol.zeta_min, 1.0 - sol.zeta_max);
}

/// Closed-form tameness certificate from the degree range alone.
struct TamenessCertificate {
  double alpha = 0.0;
  double beta = 0.0;
  double n0 = 0.0;  ///< the certificate applies for n > n0
  double delta = 0.0;
  bool applies = false;
};

/// Margin that turns alpha < d_i/(n-1) < beta into computable bounds.
inline constexpr double kTamenessMargin = 1e-9;

inline TamenessCertificate tameness_sufficient(const DegreeSequence& d) {
  const int n = d.size();
  TamenessCertificate cert;
  if (n < 2) return cert;
  const double scale = static_cast<double>(n - 1);
  cert.alpha = d.min_degree() / scale - kTamenessMargin;
  cert.beta = d.max_degree() / scale + kTamenessMargin;
  const double a = cert.alpha, b = cert.beta;
  const double gap = 4.0 * a - (a + b) * (a + b);
  const bool hypothesis = 0.0 < a && a < b && b < 1.0 && gap > 0.0;
  if (hypothesis) {
    cert.n0 = std::max(b / (a * (1.0 - b)), 4.0 * (b - a) / gap) + 1.0;
    const double eps = std::min(a, a - (a + b) * (a + b) / 4.0);
    const double e6 = std::pow(eps, 6);
    cert.delta = e6 / (1.0 + e6);
  } else {
    cert.n0 = std::numeric_limits<double>::infinity();
  }
  cert.applies = hypothesis && n > cert.n0;
  return cert;
}

}  // namespace degcount
