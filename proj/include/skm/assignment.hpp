#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "skm/error.hpp"

namespace skm {

struct AssignmentResult {
  std::vector<std::size_t> row_to_col;  // injective
  double value = 0.0;                   // sum of cost[r][row_to_col[r]] in row order
};

namespace detail {

struct HungarianSolution {
  std::vector<std::size_t> row_to_col;
  std::vector<double> u, v;  // feasible duals: u[r] + v[c] <= cost(r, c)
};

// Shortest augmenting path Hungarian method on a square n x n matrix, O(n^3).
template <class Cost>
HungarianSolution hungarian_square(std::size_t n, Cost&& cost) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), char{0});
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta || j1 == 0) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  HungarianSolution sol;
  sol.row_to_col.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) sol.row_to_col[p[j] - 1] = j - 1;
  sol.u.assign(u.begin() + 1, u.end());
  sol.v.assign(v.begin() + 1, v.end());
  return sol;
}

}  // namespace detail

/// Minimum-cost injection of `rows` rows into `cols` columns (rows <= cols) for a
/// row-major cost matrix. Among assignments within `tie_tol` of the optimum the
/// lexicographically smallest row_to_col is returned.
inline AssignmentResult solve_assignment(std::size_t rows, std::size_t cols, std::span<const double> cost,
                                         double tie_tol = -1.0) {
  if (rows > cols) throw InvalidArgument("solve_assignment: more rows than columns");
  if (cost.size() != rows * cols) throw InvalidArgument("solve_assignment: cost matrix has wrong size");
  for (double c : cost) {
    if (!std::isfinite(c)) throw InvalidArgument("solve_assignment: non-finite cost");
  }
  AssignmentResult res;
  if (rows == 0) return res;

  // Square up with zero-cost dummy rows so the duals certify a lower bound.
  const std::size_t n = cols;
  auto padded = [&](std::size_t r, std::size_t c) { return r < rows ? cost[r * cols + c] : 0.0; };
  const auto full = detail::hungarian_square(n, padded);
  std::vector<std::size_t> best(full.row_to_col.begin(), full.row_to_col.begin() + static_cast<long>(rows));

  auto value_of = [&](const std::vector<std::size_t>& assignment) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += cost[r * cols + assignment[r]];
    return s;
  };
  const double optimum = value_of(best);
  const double tol = tie_tol >= 0.0 ? tie_tol : 1e-12 * (1.0 + std::abs(optimum));

  // Lexicographic refinement: fix rows in order, trying smaller columns that
  // can still complete to an optimal assignment. Columns whose reduced cost
  // exceeds tol cannot appear in any near-optimal assignment.
  // Pruning uses a looser threshold than tol because the duals carry rounding error.
  const double prune = std::max(tol, 1e-9 * (1.0 + std::abs(optimum)));
  std::vector<char> taken(cols, 0);
  double fixed_sum = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < best[r]; ++c) {
      if (taken[c]) continue;
      if (cost[r * cols + c] - full.u[r] - full.v[c] > prune) continue;
      // Remaining rows r+1.. over remaining columns with (r, c) fixed.
      std::vector<std::size_t> free_cols;
      for (std::size_t j = 0; j < cols; ++j) {
        if (!taken[j] && j != c) free_cols.push_back(j);
      }
      const std::size_t rest = rows - r - 1;
      const std::size_t m = free_cols.size();
      auto sub_cost = [&](std::size_t i, std::size_t j) {
        return i < rest ? cost[(r + 1 + i) * cols + free_cols[j]] : 0.0;
      };
      const auto sub = detail::hungarian_square(m, sub_cost);
      double total = fixed_sum + cost[r * cols + c];
      for (std::size_t i = 0; i < rest; ++i) total += cost[(r + 1 + i) * cols + free_cols[sub.row_to_col[i]]];
      if (total <= optimum + tol) {
        best[r] = c;
        for (std::size_t i = 0; i < rest; ++i) best[r + 1 + i] = free_cols[sub.row_to_col[i]];
        break;
      }
    }
    taken[best[r]] = 1;
    fixed_sum += cost[r * cols + best[r]];
  }
  res.row_to_col = std::move(best);
  res.value = value_of(res.row_to_col);
  return res;
}

}  // namespace skm
