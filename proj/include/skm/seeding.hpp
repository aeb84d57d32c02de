#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "skm/dataset.hpp"
#include "skm/error.hpp"
#include "skm/geometry.hpp"
#include "skm/rng.hpp"

namespace skm {

enum class SeedMethod { random_points, buckshot };

struct SeedConfig {
  SeedMethod method = SeedMethod::random_points;
  std::size_t k = 1;
  std::size_t m0 = 0;  // buckshot sample size
  std::uint64_t seed = 0;
};

/// k distinct data points chosen uniformly without replacement (partial Fisher-Yates).
inline CentroidSet random_seeds(Rng& rng, const Dataset& ds, std::size_t k) {
  if (k == 0) throw InvalidArgument("random_seeds: k must be >= 1");
  if (k > ds.size()) {
    throw InvalidArgument("random_seeds: k=" + std::to_string(k) + " exceeds n=" + std::to_string(ds.size()));
  }
  std::vector<std::size_t> idx(ds.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  return CentroidSet::from_points(ds, idx);
}

struct LinkageResult {
  std::vector<std::vector<std::size_t>> components;  // ordered by smallest member
  std::vector<double> merge_distances;               // Euclidean, in merge order
};

/// Agglomerative single linkage on the rows of `points` until k components
/// remain. Each step merges the two components with the smallest minimum
/// pairwise distance; ties go to the smallest (i, j) pair of component ids,
/// where a component's id is its smallest member. O(m^2) memory, O(m^3) time.
inline LinkageResult single_linkage_components(const Dataset& points, std::size_t k) {
  const std::size_t m = points.size();
  if (k == 0) throw InvalidArgument("single_linkage_components: k must be >= 1");
  if (m < k) throw InvalidArgument("single_linkage_components: fewer points than components");
  std::vector<double> dist(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) dist[i * m + j] = dist[j * m + i] = points.squared_distance_between(i, j);
  }
  std::vector<char> alive(m, 1);
  std::vector<std::vector<std::size_t>> members(m);
  for (std::size_t i = 0; i < m; ++i) members[i] = {i};

  LinkageResult res;
  for (std::size_t remaining = m; remaining > k; --remaining) {
    std::size_t bi = m, bj = m;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
      if (!alive[i]) continue;
      for (std::size_t j = i + 1; j < m; ++j) {
        if (alive[j] && (dist[i * m + j] < best || bi == m)) {
          best = dist[i * m + j];
          bi = i;
          bj = j;
        }
      }
    }
    // Merge bj into bi; bi < bj keeps the id equal to the smallest member.
    for (std::size_t c = 0; c < m; ++c) {
      if (!alive[c] || c == bi || c == bj) continue;
      const double v = std::min(dist[bi * m + c], dist[bj * m + c]);
      dist[bi * m + c] = dist[c * m + bi] = v;
    }
    alive[bj] = 0;
    members[bi].insert(members[bi].end(), members[bj].begin(), members[bj].end());
    members[bj].clear();
    res.merge_distances.push_back(std::sqrt(best));
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!alive[i]) continue;
    std::sort(members[i].begin(), members[i].end());
    res.components.push_back(std::move(members[i]));
  }
  return res;
}

/// Component means of a single-linkage partition of the given sample.
inline CentroidSet component_means(const Dataset& sample, const LinkageResult& link) {
  CentroidSet c(link.components.size(), sample.dim());
  std::vector<double> acc(sample.dim());
  for (std::size_t r = 0; r < link.components.size(); ++r) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i : link.components[r]) sample.accumulate(i, acc);
    for (auto& v : acc) v /= static_cast<double>(link.components[r].size());
    c.set_centroid(r, acc);
  }
  return c;
}

/// Buckshot seeding: m0 uniform draws with replacement, single linkage down to
/// k components, one seed per component mean. Duplicate draws are kept as
/// separate zero-distance items.
inline CentroidSet buckshot(Rng& rng, const Dataset& ds, std::size_t k, std::size_t m0) {
  if (k == 0) throw InvalidArgument("buckshot: k must be >= 1");
  if (m0 < k) throw InvalidArgument("buckshot: m0=" + std::to_string(m0) + " is smaller than k=" + std::to_string(k));
  std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
  std::vector<std::size_t> idx(m0);
  for (auto& i : idx) i = pick(rng);
  const Dataset sample = ds.subset(idx);
  return component_means(sample, single_linkage_components(sample, k));
}

inline CentroidSet make_seeds(const Dataset& ds, const SeedConfig& cfg) {
  Rng rng(cfg.seed);
  if (cfg.method == SeedMethod::buckshot) return buckshot(rng, ds, cfg.k, cfg.m0);
  return random_seeds(rng, ds, cfg.k);
}

}  // namespace skm
