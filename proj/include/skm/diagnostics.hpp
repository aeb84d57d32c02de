#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "skm/assignment.hpp"
#include "skm/clustering.hpp"
#include "skm/dataset.hpp"
#include "skm/error.hpp"
#include "skm/geometry.hpp"
#include "skm/rng.hpp"

namespace skm {

inline constexpr std::size_t kUnmatched = static_cast<std::size_t>(-1);

/// Result of the centroidal distance Delta(C', C).
struct Matching {
  std::vector<std::size_t> permutation;  // reference index r -> index in C'; kUnmatched for inactive r
  double delta = 0.0;                    // sum_r n_r ||c'_{pi(r)} - c_r||^2
  bool in_definition_domain = true;      // false when C is not the mean of its own induced clustering
};

/// Delta(C', C) = min over injections pi of C's active centroids into C''s
/// active centroids of sum_r weights[r] ||c'_{pi(r)} - c_r||^2. Ties resolve to
/// the lexicographically smallest pi.
inline Matching centroidal_distance(const CentroidSet& other, const CentroidSet& reference,
                                   std::span<const std::size_t> weights) {
  if (other.dim() != reference.dim()) throw DimensionMismatch("centroidal_distance", reference.dim(), other.dim());
  if (weights.size() != reference.size()) throw InvalidArgument("centroidal_distance: need one weight per centroid");
  std::vector<std::size_t> rows, cols;
  for (std::size_t r = 0; r < reference.size(); ++r) {
    if (reference.active(r)) rows.push_back(r);
  }
  for (std::size_t c = 0; c < other.size(); ++c) {
    if (other.active(c)) cols.push_back(c);
  }
  if (cols.size() < rows.size()) {
    throw InvalidArgument("centroidal_distance: C' has " + std::to_string(cols.size()) +
                          " active centroids but the reference has " + std::to_string(rows.size()));
  }
  const std::size_t d = reference.dim();
  std::vector<double> table(rows.size() * cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto c = reference.centroid(rows[i]);
    const double w = static_cast<double>(weights[rows[i]]);
    for (std::size_t j = 0; j < cols.size(); ++j) {
      auto o = other.centroid(cols[j]);
      double s = 0.0;
      for (std::size_t x = 0; x < d; ++x) {
        const double diff = o[x] - c[x];
        s += diff * diff;
      }
      table[i * cols.size() + j] = w * s;
    }
  }
  const auto sol = solve_assignment(rows.size(), cols.size(), table);
  Matching m;
  m.permutation.assign(reference.size(), kUnmatched);
  for (std::size_t i = 0; i < rows.size(); ++i) m.permutation[rows[i]] = cols[sol.row_to_col[i]];
  m.delta = sol.value;
  return m;
}

/// Delta(C', C) with weights n_r taken from v(C) on ds. Flags the result when
/// C is not m(v(C)), the setting in which Delta is defined.
inline Matching centroidal_distance(const Dataset& ds, const CentroidSet& other, const CentroidSet& reference) {
  const Clustering a = assign(ds, reference);
  CentroidSet ref = reference;
  for (std::size_t r = 0; r < ref.size(); ++r) {
    if (a.sizes[r] == 0) ref.set_active(r, false);
  }
  Matching m = centroidal_distance(other, ref, a.sizes);
  const CentroidSet centred = means(ds, a, ref);
  double gap = 0.0;
  for (std::size_t r = 0; r < ref.size(); ++r) {
    if (!ref.active(r)) continue;
    auto c = ref.centroid(r);
    auto mu = centred.centroid(r);
    double s = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) s += (c[j] - mu[j]) * (c[j] - mu[j]);
    gap += static_cast<double>(a.sizes[r]) * s;
  }
  m.in_definition_domain = gap <= cost_slack(cost_of_pair(ds, ref, a).total);
  return m;
}

/// ClustDist = max_r |A'_{pi(r)} symmetric-difference A_r| / n_r over non-empty reference clusters.
inline double clust_dist(const Clustering& other, const Clustering& reference, std::span<const std::size_t> perm) {
  if (other.size() != reference.size()) throw InvalidArgument("clust_dist: clusterings cover different point counts");
  if (perm.size() != reference.k) throw InvalidArgument("clust_dist: permutation must have one entry per reference cluster");
  for (std::size_t r = 0; r < reference.k; ++r) {
    if (perm[r] != kUnmatched && perm[r] >= other.k) throw InvalidArgument("clust_dist: permutation entry out of range");
  }
  std::vector<std::size_t> shared(reference.k, 0);
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const std::size_t r = reference.labels[i];
    if (perm[r] != kUnmatched && other.labels[i] == perm[r]) ++shared[r];
  }
  double worst = 0.0;
  for (std::size_t r = 0; r < reference.k; ++r) {
    if (reference.sizes[r] == 0) continue;
    const std::size_t matched = perm[r] == kUnmatched ? 0 : other.sizes[perm[r]];
    const std::size_t sym = matched + reference.sizes[r] - 2 * shared[r];
    worst = std::max(worst, static_cast<double>(sym) / static_cast<double>(reference.sizes[r]));
  }
  return worst;
}

struct PairMargin {
  std::size_t r = 0;
  std::size_t s = 0;
  double margin = std::numeric_limits<double>::infinity();  // Delta_rs(C); +inf when both cells are empty
  std::size_t point = 0;                                     // a point attaining it
};

struct MarginReport {
  double delta = std::numeric_limits<double>::infinity();
  std::size_t r = 0, s = 0, point = 0;  // where delta is attained
  bool boundary = false;                // delta <= tol
  std::vector<PairMargin> pairs;        // every active pair r < s
};

/// delta-margin of C on ds. For every active pair (r, s) and every x in
/// A_r u A_s, x is projected onto the line through c_r and c_s and the gap
/// | ||xbar - c_r|| - ||xbar - c_s|| | is taken; delta is the overall minimum.
inline MarginReport margin(const Dataset& ds, const CentroidSet& c, double tol = 0.0) {
  const Clustering a = assign(ds, c);
  std::vector<std::size_t> act;
  for (std::size_t r = 0; r < c.size(); ++r) {
    if (c.active(r)) act.push_back(r);
  }
  if (act.size() < 2) throw InvalidArgument("margin: need at least two active centroids");
  std::vector<std::vector<std::size_t>> members(c.size());
  for (std::size_t i = 0; i < ds.size(); ++i) members[a.labels[i]].push_back(i);

  const std::size_t d = c.dim();
  MarginReport rep;
  std::vector<double> dir(d);
  for (std::size_t ai = 0; ai < act.size(); ++ai) {
    for (std::size_t bi = ai + 1; bi < act.size(); ++bi) {
      const std::size_t r = act[ai], s = act[bi];
      PairMargin pm{r, s};
      if (members[r].empty() && members[s].empty()) {
        rep.pairs.push_back(pm);
        continue;
      }
      auto cr = c.centroid(r);
      auto cs = c.centroid(s);
      double len2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        dir[j] = cs[j] - cr[j];
        len2 += dir[j] * dir[j];
      }
      if (len2 == 0.0) {
        throw InvalidArgument("margin: centroids " + std::to_string(r) + " and " + std::to_string(s) + " coincide");
      }
      const double len = std::sqrt(len2);
      for (auto& v : dir) v /= len;
      double offset = 0.0;  // c_r . u
      for (std::size_t j = 0; j < d; ++j) offset += cr[j] * dir[j];
      for (std::size_t cell : {r, s}) {
        for (std::size_t i : members[cell]) {
          const double tau = ds.dot(i, dir) - offset;
          const double gap = std::abs(std::abs(tau) - std::abs(tau - len));
          if (gap < pm.margin) {
            pm.margin = gap;
            pm.point = i;
          }
        }
      }
      if (pm.margin < rep.delta) {
        rep.delta = pm.margin;
        rep.r = r;
        rep.s = s;
        rep.point = pm.point;
      }
      rep.pairs.push_back(pm);
    }
  }
  rep.boundary = rep.delta <= tol;
  return rep;
}

/// True iff some point is (within tol) equidistant from two centroids of its joint cells.
inline bool is_boundary(const Dataset& ds, const CentroidSet& c, double tol) { return margin(ds, c, tol).boundary; }

struct StationarityOptions {
  double tol = 1e-9;           // relative: drift <= tol * (1 + phi)
  double boundary_tol = 1e-9;  // absolute margin threshold
  bool estimate_radius = false;
  std::size_t radius_trials = 32;
  std::uint64_t radius_seed = 0;
};

struct StationarityReport {
  bool is_stationary = false;
  double drift = 0.0;  // Delta(m(v(C)), C)
  double phi = 0.0;
  bool boundary = false;
  std::optional<double> r_min_estimate;  // empirical, see estimate_attraction_radius
};

/// Empirical estimate of the radius b such that every C with Delta(C, C*) <=
/// b phi* induces the same clustering as C*. Searches random directions with a
/// bisection along each ray; returns the smallest radius seen. This is an
/// estimate from sampling, not a certified bound. Empty when phi* = 0.
inline std::optional<double> estimate_attraction_radius(const Dataset& ds, const CentroidSet& cstar,
                                                        std::size_t trials, std::uint64_t seed) {
  const Clustering base = assign(ds, cstar);
  const double phi = cost_of_pair(ds, cstar, base).total;
  if (phi <= 0.0 || trials == 0) return std::nullopt;
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t k = cstar.size(), d = cstar.dim();
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> dir(k * d), row(d);
  for (std::size_t t = 0; t < trials; ++t) {
    double scale = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t j = 0; j < d; ++j) {
        dir[r * d + j] = cstar.active(r) ? normal(rng) : 0.0;
        scale += static_cast<double>(base.sizes[r]) * dir[r * d + j] * dir[r * d + j];
      }
    }
    if (scale == 0.0) continue;
    // Normalise so that a step of length s moves C by s^2 phi* in Delta.
    const double norm = std::sqrt(phi / scale);
    auto same_at = [&](double s) {
      CentroidSet moved = cstar;
      for (std::size_t r = 0; r < k; ++r) {
        auto c = cstar.centroid(r);
        for (std::size_t j = 0; j < d; ++j) row[j] = c[j] + s * norm * dir[r * d + j];
        moved.set_centroid(r, row);
      }
      return assign(ds, moved) == base;
    };
    double lo = 0.0, hi = 1.0;
    while (same_at(hi) && hi < 1e6) {
      lo = hi;
      hi *= 2.0;
    }
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (same_at(mid) ? lo : hi) = mid;
    }
    best = std::min(best, lo * lo);
  }
  if (!std::isfinite(best)) return std::nullopt;
  return best;
}

/// Checks m(v(C)) == C up to a relative tolerance and screens for boundary points.
inline StationarityReport is_stationary(const Dataset& ds, const CentroidSet& c, const StationarityOptions& opt = {}) {
  const Clustering a = assign(ds, c);
  CentroidSet ref = c;
  for (std::size_t r = 0; r < ref.size(); ++r) {
    if (a.sizes[r] == 0) ref.set_active(r, false);
  }
  const CentroidSet next = means(ds, a, ref);
  StationarityReport rep;
  rep.phi = cost_of_pair(ds, c, a).total;
  rep.drift = centroidal_distance(next, ref, a.sizes).delta;
  rep.is_stationary = rep.drift <= opt.tol * (1.0 + rep.phi);
  if (ref.active_count() >= 2) {
    try {
      rep.boundary = margin(ds, ref, opt.boundary_tol).boundary;
    } catch (const InvalidArgument&) {
      rep.boundary = true;  // coincident active centroids: every point of theirs is equidistant
    }
  }
  if (opt.estimate_radius) rep.r_min_estimate = estimate_attraction_radius(ds, ref, opt.radius_trials, opt.radius_seed);
  return rep;
}

struct ClusterabilityReport {
  double phi_star = 0.0;
  double delta = 0.0;                // margin of C*
  std::vector<PairMargin> pairs;     // per-pair margins Delta_rs
  double f_max = 0.0;                // largest f with delta >= f sqrt(phi*) (1/sqrt(n_r) + 1/sqrt(n_s)) for all pairs
  double floor = 0.0;                // max{64^2, (5a+5)/(256 a), max n_r/n_s}
  double floor_alt = 0.0;            // same with the (5a+5)/(16^2 a) form
  bool satisfied = false;            // f_max > floor
  double p_min = 0.0;                // min_r n_r / n
  double w_min = 0.0;                // min_r w_r
  std::vector<double> w;             // (phi_r / n_r) / max_{x in A_r} ||x - c_r||^2; 1 for zero-spread clusters
  bool stationary = false;           // C* passed is_stationary
};

/// f(alpha)-clusterability screening of (X, C*).
inline ClusterabilityReport clusterability(const Dataset& ds, const CentroidSet& cstar, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("clusterability: alpha must lie in (0, 1)");
  const Clustering a = assign(ds, cstar);
  for (std::size_t r = 0; r < cstar.size(); ++r) {
    if (cstar.active(r) && a.sizes[r] == 0) {
      throw InvalidArgument("clusterability: cluster " + std::to_string(r) + " of C* is empty");
    }
  }
  ClusterabilityReport rep;
  rep.stationary = is_stationary(ds, cstar).is_stationary;
  const CostReport cr = cost_of_pair(ds, cstar, a);
  rep.phi_star = cr.total;
  const MarginReport mr = margin(ds, cstar);
  rep.delta = mr.delta;
  rep.pairs = mr.pairs;

  const double n = static_cast<double>(ds.size());
  double worst_coeff = 0.0, ratio = 0.0;
  for (const auto& p : mr.pairs) {
    const double nr = static_cast<double>(a.sizes[p.r]), ns = static_cast<double>(a.sizes[p.s]);
    worst_coeff = std::max(worst_coeff, 1.0 / std::sqrt(nr) + 1.0 / std::sqrt(ns));
    ratio = std::max({ratio, nr / ns, ns / nr});
  }
  const double root_phi = std::sqrt(rep.phi_star);
  rep.f_max = root_phi == 0.0 ? std::numeric_limits<double>::infinity() : rep.delta / (root_phi * worst_coeff);
  rep.floor = std::max({64.0 * 64.0, (5.0 * alpha + 5.0) / (256.0 * alpha), ratio});
  rep.floor_alt = std::max({64.0 * 64.0, (5.0 * alpha + 5.0) / (16.0 * 16.0 * alpha), ratio});
  rep.satisfied = rep.f_max > rep.floor;

  std::vector<double> spread(cstar.size(), 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::size_t r = a.labels[i];
    spread[r] = std::max(spread[r], ds.squared_distance(i, cstar.centroid(r), cstar.squared_norm(r)));
  }
  rep.p_min = std::numeric_limits<double>::infinity();
  rep.w_min = std::numeric_limits<double>::infinity();
  rep.w.assign(cstar.size(), 0.0);
  for (std::size_t r = 0; r < cstar.size(); ++r) {
    if (!cstar.active(r)) continue;
    const double nr = static_cast<double>(a.sizes[r]);
    rep.p_min = std::min(rep.p_min, nr / n);
    rep.w[r] = spread[r] == 0.0 ? 1.0 : (cr.per_cluster[r] / nr) / spread[r];
    rep.w_min = std::min(rep.w_min, rep.w[r]);
  }
  return rep;
}

/// Probability that a cluster holding n_r of n points receives at least one
/// of m uniform draws with replacement: 1 - (1 - n_r/n)^m.
inline double update_probability(std::size_t n_r, std::size_t n, std::size_t m) {
  if (n == 0 || n_r > n) throw InvalidArgument("update_probability: need 0 <= n_r <= n and n >= 1");
  if (m == 0) throw InvalidArgument("update_probability: need m >= 1");
  return 1.0 - std::pow(1.0 - static_cast<double>(n_r) / static_cast<double>(n), static_cast<double>(m));
}

}  // namespace skm
