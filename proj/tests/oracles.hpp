// Independent brute-force reference computations used by the tests. Nothing
// here calls into the library except to read dataset rows.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "skm/dataset.hpp"

namespace oracle {

using Point = std::vector<double>;

inline std::vector<Point> rows(const skm::Dataset& ds) {
  std::vector<Point> out;
  for (std::size_t i = 0; i < ds.size(); ++i) out.push_back(ds.row_vector(i));
  return out;
}

inline double sqdist(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

/// Index of the closest centre, lowest index on ties.
inline std::size_t nearest(const Point& x, const std::vector<Point>& centres) {
  std::size_t best = 0;
  for (std::size_t r = 1; r < centres.size(); ++r) {
    if (sqdist(x, centres[r]) < sqdist(x, centres[best])) best = r;
  }
  return best;
}

inline double cost(const std::vector<Point>& x, const std::vector<Point>& centres) {
  double s = 0.0;
  for (const auto& p : x) s += sqdist(p, centres[nearest(p, centres)]);
  return s;
}

inline double cost_of_pair(const std::vector<Point>& x, const std::vector<Point>& centres,
                           const std::vector<std::size_t>& labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += sqdist(x[i], centres[labels[i]]);
  return s;
}

inline Point mean(const std::vector<Point>& pts) {
  Point m(pts.front().size(), 0.0);
  for (const auto& p : pts) {
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += p[j];
  }
  for (auto& v : m) v /= static_cast<double>(pts.size());
  return m;
}

/// Cost of a labelling with every cluster at its own mean (empty clusters cost 0).
inline double cost_of_clustering(const std::vector<Point>& x, const std::vector<std::size_t>& labels, std::size_t k) {
  double s = 0.0;
  for (std::size_t r = 0; r < k; ++r) {
    std::vector<Point> members;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (labels[i] == r) members.push_back(x[i]);
    }
    if (members.empty()) continue;
    const Point m = mean(members);
    for (const auto& p : members) s += sqdist(p, m);
  }
  return s;
}

/// Minimum of sum_r cost[r][pi(r)] over all injections pi, by enumeration.
/// Returns the value summed in row order and the lexicographically first minimiser.
struct BruteAssignment {
  double value = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> row_to_col;
};

inline BruteAssignment brute_assignment(std::size_t rows, std::size_t cols, const std::vector<double>& cost) {
  BruteAssignment best;
  std::vector<std::size_t> cur;
  std::vector<char> used(cols, 0);
  auto rec = [&](auto&& self, double partial) -> void {
    const std::size_t r = cur.size();
    if (r == rows) {
      double s = 0.0;
      for (std::size_t i = 0; i < rows; ++i) s += cost[i * cols + cur[i]];
      if (s < best.value) {
        best.value = s;
        best.row_to_col = cur;
      }
      return;
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (used[c]) continue;
      used[c] = 1;
      cur.push_back(c);
      self(self, partial + cost[r * cols + c]);
      cur.pop_back();
      used[c] = 0;
    }
  };
  rec(rec, 0.0);
  return best;
}

/// Every labelling of n points into k clusters with all clusters non-empty.
inline std::vector<std::vector<std::size_t>> all_partitions(std::size_t n, std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> labels(n, 0);
  while (true) {
    std::vector<char> seen(k, 0);
    for (auto l : labels) seen[l] = 1;
    if (std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; })) out.push_back(labels);
    std::size_t i = 0;
    while (i < n && ++labels[i] == k) labels[i++] = 0;
    if (i == n) break;
  }
  return out;
}

struct Optimum {
  double phi = std::numeric_limits<double>::infinity();
  std::vector<std::vector<std::size_t>> labellings;  // every labelling attaining phi (within slack)
};

/// Global k-means optimum by exhaustive enumeration of labellings.
inline Optimum brute_optimum(const std::vector<Point>& x, std::size_t k, double slack = 1e-12) {
  Optimum best;
  for (const auto& labels : all_partitions(x.size(), k)) {
    const double phi = cost_of_clustering(x, labels, k);
    if (phi < best.phi - slack) {
      best.phi = phi;
      best.labellings = {labels};
    } else if (phi <= best.phi + slack) {
      best.labellings.push_back(labels);
    }
  }
  return best;
}

inline std::vector<Point> cluster_means(const std::vector<Point>& x, const std::vector<std::size_t>& labels,
                                        std::size_t k) {
  std::vector<Point> out;
  for (std::size_t r = 0; r < k; ++r) {
    std::vector<Point> members;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (labels[i] == r) members.push_back(x[i]);
    }
    // Empty clusters get the origin; callers skip them.
    out.push_back(members.empty() ? Point(x.front().size(), 0.0) : mean(members));
  }
  return out;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace oracle
