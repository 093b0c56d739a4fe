#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace degcount {

/// Degrees (d_1, ..., d_n) of a simple labeled graph, kept in input order.
/// Every degree lies in [1, n-1]; isolated vertices must be stripped by the caller.
class DegreeSequence {
 public:
  explicit DegreeSequence(std::vector<int> degrees) : degrees_(std::move(degrees)) {
    const int n = size();
    if (n < 1) throw Error(ErrorKind::InvalidInput, "degree sequence is empty");
    for (int i = 0; i < n; ++i) {
      const int d = degrees_[static_cast<std::size_t>(i)];
      // d > n - 1 is accepted here and reported as infeasible by erdos_gallai
      if (d < 1) {
        throw Error(ErrorKind::InvalidInput, "degree d_" + std::to_string(i + 1) + " = " + std::to_string(d) +
                                                 " is not positive");
      }
    }
  }

  int size() const { return static_cast<int>(degrees_.size()); }
  int operator[](int i) const { return degrees_[static_cast<std::size_t>(i)]; }
  std::span<const int> degrees() const { return degrees_; }
  std::int64_t sum() const { return std::accumulate(degrees_.begin(), degrees_.end(), std::int64_t{0}); }
  int max_degree() const { return *std::max_element(degrees_.begin(), degrees_.end()); }
  int min_degree() const { return *std::min_element(degrees_.begin(), degrees_.end()); }

 private:
  std::vector<int> degrees_;
};

/// Row sums R (length m) and column sums C (length n) of a 0-1 matrix.
/// Balance of the totals is a feasibility question, not a construction one.
class BipartiteMargins {
 public:
  BipartiteMargins(std::vector<int> rows, std::vector<int> cols) : rows_(std::move(rows)), cols_(std::move(cols)) {
    if (rows_.empty() || cols_.empty()) throw Error(ErrorKind::InvalidInput, "margins must be non-empty");
    for (int r : rows_) {
      if (r < 1 || r > num_cols())
        throw Error(ErrorKind::InvalidInput, "row sum " + std::to_string(r) + " outside [1, " +
                                                 std::to_string(num_cols()) + "]");
    }
    for (int c : cols_) {
      if (c < 1 || c > num_rows())
        throw Error(ErrorKind::InvalidInput, "column sum " + std::to_string(c) + " outside [1, " +
                                                 std::to_string(num_rows()) + "]");
    }
  }

  int num_rows() const { return static_cast<int>(rows_.size()); }
  int num_cols() const { return static_cast<int>(cols_.size()); }
  std::span<const int> rows() const { return rows_; }
  std::span<const int> cols() const { return cols_; }
  std::int64_t row_total() const { return std::accumulate(rows_.begin(), rows_.end(), std::int64_t{0}); }
  std::int64_t col_total() const { return std::accumulate(cols_.begin(), cols_.end(), std::int64_t{0}); }

  BipartiteMargins transposed() const { return BipartiteMargins(cols_, rows_); }

 private:
  std::vector<int> rows_;
  std::vector<int> cols_;
};

/// Outcome of a feasibility test.
///
/// `feasible` is the exact realizability predicate (parity included for graphs).
/// `strictly_feasible` means every inequality holds strictly; parity plays no
/// role there because it certifies a non-empty interior of the real polytope,
/// not the existence of an integer point.
/// `first_violated_k` is 1-based and refers to the mode that was requested.
struct FeasibilityReport {
  bool parity_ok = false;
  bool feasible = false;
  bool strictly_feasible = false;
  std::optional<int> first_violated_k;
};

inline bool check_parity(const DegreeSequence& d) { return d.sum() % 2 == 0; }

namespace detail {

inline std::vector<int> sorted_descending(std::span<const int> values) {
  std::vector<int> out(values.begin(), values.end());
  std::stable_sort(out.begin(), out.end(), std::greater<>());
  return out;
}

/// For k = 1..n, compares prefix sums against k(k-1) + sum_{i>k} min(k, d_i).
/// Returns the first k violating the inequality (strict or not).
inline std::optional<int> first_erdos_gallai_violation(const std::vector<int>& sorted, bool strict) {
  const int n = static_cast<int>(sorted.size());
  std::int64_t prefix = 0;
  for (int k = 1; k <= n; ++k) {
    prefix += sorted[static_cast<std::size_t>(k - 1)];
    std::int64_t rhs = static_cast<std::int64_t>(k) * (k - 1);
    for (int i = k; i < n; ++i) rhs += std::min(k, sorted[static_cast<std::size_t>(i)]);
    if (strict ? prefix >= rhs : prefix > rhs) return k;
  }
  return std::nullopt;
}

}  // namespace detail

/// Erdos-Gallai test on a descending copy of `d`. With strict = true the
/// inequalities must hold strictly, which guarantees a point of the degree
/// polytope with every coordinate in (0, 1); the converse does not hold.
inline FeasibilityReport erdos_gallai(const DegreeSequence& d, bool strict = false) {
  const auto sorted = detail::sorted_descending(d.degrees());
  const auto loose = detail::first_erdos_gallai_violation(sorted, false);
  const auto tight = detail::first_erdos_gallai_violation(sorted, true);
  FeasibilityReport report;
  report.parity_ok = check_parity(d);
  report.feasible = report.parity_ok && !loose.has_value();
  report.strictly_feasible = !tight.has_value();
  report.first_violated_k = strict ? tight : loose;
  return report;
}

/// Gale-Ryser test. `strictly_feasible` additionally requires every row sum
/// below n, every column sum below m, and strict inequalities for k < m
/// (at k = m equality always holds).
inline FeasibilityReport gale_ryser(const BipartiteMargins& margins) {
  FeasibilityReport report;
  report.parity_ok = margins.row_total() == margins.col_total();
  if (!report.parity_ok) return report;

  const auto rows = detail::sorted_descending(margins.rows());
  const int m = margins.num_rows();
  std::int64_t prefix = 0;
  bool strict = std::all_of(rows.begin(), rows.end(), [&](int r) { return r < margins.num_cols(); }) &&
                std::all_of(margins.cols().begin(), margins.cols().end(), [&](int c) { return c < m; });
  for (int k = 1; k <= m; ++k) {
    prefix += rows[static_cast<std::size_t>(k - 1)];
    std::int64_t rhs = 0;
    for (int c : margins.cols()) rhs += std::min(c, k);
    if (prefix > rhs) {
      report.first_violated_k = k;
      return report;
    }
    if (k < m && prefix == rhs) strict = false;
  }
  report.feasible = true;
  report.strictly_feasible = strict;
  return report;
}

}  // namespace degcount
