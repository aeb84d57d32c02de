#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "skm/clustering.hpp"
#include "skm/dataset.hpp"
#include "skm/error.hpp"
#include "skm/trace.hpp"

namespace skm {

/// k centroids in R^d. A centroid is inactive (degenerate) when it owned no
/// points at its last mean update; inactive centroids are frozen in place and
/// never receive points.
class CentroidSet {
 public:
  CentroidSet() = default;

  CentroidSet(std::size_t k, std::size_t d) : k_(k), d_(d), coords_(k * d, 0.0), active_(k, 1), norms_(k, 0.0) {}

  static CentroidSet from_rows(const std::vector<std::vector<double>>& rows, std::vector<bool> active = {}) {
    if (rows.empty()) throw InvalidArgument("centroid set must hold at least one centroid");
    CentroidSet c(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != c.d_) throw DimensionMismatch("CentroidSet::from_rows", c.d_, rows[r].size());
      c.set_centroid(r, rows[r]);
    }
    if (!active.empty()) {
      if (active.size() != c.k_) throw InvalidArgument("active mask must have k entries");
      for (std::size_t r = 0; r < c.k_; ++r) c.active_[r] = active[r];
    }
    return c;
  }

  /// Centroids placed on the listed data points, all active.
  static CentroidSet from_points(const Dataset& ds, std::span<const std::size_t> rows) {
    CentroidSet c(rows.size(), ds.dim());
    for (std::size_t r = 0; r < rows.size(); ++r) c.set_centroid(r, ds.row_vector(rows[r]));
    return c;
  }

  std::size_t size() const noexcept { return k_; }
  std::size_t dim() const noexcept { return d_; }

  std::span<const double> centroid(std::size_t r) const { return {coords_.data() + r * d_, d_}; }
  double squared_norm(std::size_t r) const { return norms_[r]; }
  bool active(std::size_t r) const { return active_[r] != 0; }
  const std::vector<double>& coords() const noexcept { return coords_; }

  void set_centroid(std::size_t r, std::span<const double> v) {
    if (v.size() != d_) throw DimensionMismatch("CentroidSet::set_centroid", d_, v.size());
    double s = 0.0;
    for (std::size_t j = 0; j < d_; ++j) {
      coords_[r * d_ + j] = v[j];
      s += v[j] * v[j];
    }
    norms_[r] = s;
  }

  void set_active(std::size_t r, bool on) { active_[r] = on ? 1 : 0; }

  std::size_t active_count() const noexcept {
    return static_cast<std::size_t>(std::count(active_.begin(), active_.end(), char{1}));
  }

  std::vector<double> row_vector(std::size_t r) const {
    auto c = centroid(r);
    return {c.begin(), c.end()};
  }

  /// Throws unless all coordinates are finite and at least one centroid is active.
  void validate() const {
    for (double v : coords_) {
      if (!std::isfinite(v)) throw InvalidArgument("centroid set has a non-finite coordinate");
    }
    if (active_count() == 0) throw InvalidArgument("centroid set has no active centroid");
  }

  friend bool operator==(const CentroidSet& a, const CentroidSet& b) {
    return a.k_ == b.k_ && a.d_ == b.d_ && a.coords_ == b.coords_ && a.active_ == b.active_;
  }

 private:
  std::size_t k_ = 0;
  std::size_t d_ = 0;
  std::vector<double> coords_;
  std::vector<char> active_;
  std::vector<double> norms_;
};

/// phi and its per-cluster parts.
struct CostReport {
  double total = 0.0;
  std::vector<double> per_cluster;
};

/// Relative slack used whenever two costs are compared.
inline double cost_slack(double value) noexcept { return 1e-9 * (1.0 + std::abs(value)); }

namespace detail {

inline void check_compatible(const Dataset& ds, const CentroidSet& c, const char* where) {
  if (ds.dim() != c.dim()) throw DimensionMismatch(where, ds.dim(), c.dim());
  if (c.active_count() == 0) throw InvalidArgument(std::string(where) + ": no active centroid");
}

}  // namespace detail

/// Nearest active centroid to point i and its squared distance. Ties go to the lowest index.
inline std::pair<std::size_t, double> nearest_centroid(const Dataset& ds, std::size_t i, const CentroidSet& c) {
  std::size_t best = c.size();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < c.size(); ++r) {
    if (!c.active(r)) continue;
    const double dist = ds.squared_distance(i, c.centroid(r), c.squared_norm(r));
    if (dist < best_d || best == c.size()) {
      best = r;
      best_d = dist;
    }
  }
  return {best, best_d};
}

/// Voronoi assignment v(C).
inline Clustering assign(const Dataset& ds, const CentroidSet& c) {
  detail::check_compatible(ds, c, "assign");
  std::vector<std::size_t> labels(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) labels[i] = nearest_centroid(ds, i, c).first;
  return Clustering::from_labels(std::move(labels), c.size());
}

/// Cluster means m(A). Empty clusters keep prev's centroid and become inactive.
inline CentroidSet means(const Dataset& ds, const Clustering& a, const CentroidSet& prev) {
  if (a.size() != ds.size()) throw InvalidArgument("means: clustering size does not match dataset");
  if (prev.size() != a.k) throw InvalidArgument("means: previous centroid count does not match clustering k");
  if (prev.dim() != ds.dim()) throw DimensionMismatch("means", ds.dim(), prev.dim());
  const std::size_t d = ds.dim();
  std::vector<double> sums(a.k * d, 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) ds.accumulate(i, {sums.data() + a.labels[i] * d, d});
  CentroidSet out = prev;
  std::vector<double> row(d);
  for (std::size_t r = 0; r < a.k; ++r) {
    if (a.sizes[r] == 0) {
      out.set_active(r, false);
      continue;
    }
    const double count = static_cast<double>(a.sizes[r]);
    for (std::size_t j = 0; j < d; ++j) row[j] = sums[r * d + j] / count;
    out.set_centroid(r, row);
    out.set_active(r, true);
  }
  return out;
}

/// phi(C, A): sum over points of the squared distance to the centroid named by its label.
inline CostReport cost_of_pair(const Dataset& ds, const CentroidSet& c, const Clustering& a) {
  if (ds.dim() != c.dim()) throw DimensionMismatch("cost_of_pair", ds.dim(), c.dim());
  if (a.size() != ds.size()) throw InvalidArgument("cost_of_pair: clustering size does not match dataset");
  CostReport rep;
  rep.per_cluster.assign(c.size(), 0.0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::size_t r = a.labels[i];
    if (r >= c.size()) throw InvalidArgument("cost_of_pair: label " + std::to_string(r) + " out of range");
    rep.per_cluster[r] += ds.squared_distance(i, c.centroid(r), c.squared_norm(r));
  }
  for (double v : rep.per_cluster) rep.total += v;
  return rep;
}

/// phi(C) = phi(C, v(C)).
inline CostReport cost(const Dataset& ds, const CentroidSet& c) { return cost_of_pair(ds, c, assign(ds, c)); }

/// phi(A) = phi(m(A), A); empty clusters contribute 0.
inline CostReport cost_of_clustering(const Dataset& ds, const Clustering& a) {
  CentroidSet zero(a.k, ds.dim());
  return cost_of_pair(ds, means(ds, a, zero), a);
}

/// One batch k-means iteration, m(v(C)).
inline CentroidSet lloyd_step(const Dataset& ds, const CentroidSet& c) { return means(ds, assign(ds, c), c); }

struct BatchResult {
  CentroidSet centroids;
  RunTrace trace;  // records t = 0, 1, ...: phi of the centroids entering iteration t+1
  bool converged = false;
  std::size_t iterations = 0;
};

/// Lloyd's algorithm from c0. Stops once an iteration reproduces its input
/// (the induced labelling repeats, so m(v(C)) == C) or after max_iter iterations.
inline BatchResult run_batch(const Dataset& ds, const CentroidSet& c0, std::size_t max_iter) {
  if (max_iter == 0) throw InvalidArgument("run_batch: max_iter must be >= 1");
  c0.validate();
  BatchResult res;
  CentroidSet current = c0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const Clustering a = assign(ds, current);
    TraceRecord rec;
    rec.t = it - 1;
    rec.phi = cost_of_pair(ds, current, a).total;
    rec.nhat.assign(a.sizes.begin(), a.sizes.end());
    if (!res.trace.initial_phi) res.trace.initial_phi = rec.phi;
    res.trace.records.push_back(std::move(rec));
    CentroidSet next = means(ds, a, current);
    res.iterations = it;
    const bool fixed = (next == current);
    current = std::move(next);
    if (fixed) {
      res.converged = true;
      break;
    }
  }
  res.centroids = std::move(current);
  return res;
}

/// Writes one centroid per CSV row, plus `<path>.active` holding the 0/1 active mask.
inline void write_centroids(const CentroidSet& c, const std::string& path) {
  {
    auto out = detail::open_for_write(path);
    for (std::size_t r = 0; r < c.size(); ++r) {
      auto row = c.centroid(r);
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (j) out << ',';
        out << detail::format_double(row[j]);
      }
      out << '\n';
    }
  }
  auto mask = detail::open_for_write(path + ".active");
  for (std::size_t r = 0; r < c.size(); ++r) mask << (r ? "," : "") << (c.active(r) ? 1 : 0);
  mask << '\n';
}

/// Reads what write_centroids produced. A missing mask file means all active.
inline CentroidSet read_centroids(const std::string& path) {
  const Dataset rows = load_dense_csv(path);
  CentroidSet c(rows.size(), rows.dim());
  for (std::size_t r = 0; r < rows.size(); ++r) c.set_centroid(r, rows.dense_row(r));
  const std::string mask_path = path + ".active";
  if (std::filesystem::exists(mask_path)) {
    const Dataset mask = load_dense_csv(mask_path);
    if (mask.size() != 1 || mask.dim() != c.size()) throw ParseError("active mask must be one line with k entries");
    for (std::size_t r = 0; r < c.size(); ++r) {
      const double v = mask.dense_row(0)[r];
      if (v != 0.0 && v != 1.0) throw ParseError("active mask entries must be 0 or 1");
      c.set_active(r, v == 1.0);
    }
  }
  return c;
}

}  // namespace skm
