#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "skm/clustering.hpp"
#include "skm/error.hpp"
#include "skm/rng.hpp"

namespace skm {

/// Immutable point collection, stored either as a dense row-major n x d
/// matrix or in compressed-row form. Squared norms are cached per point.
class Dataset {
 public:
  Dataset() = default;

  static Dataset from_dense(std::size_t n, std::size_t d, std::vector<double> values) {
    if (n == 0 || d == 0) throw InvalidArgument("dataset must have n >= 1 and d >= 1");
    if (values.size() != n * d) throw InvalidArgument("dense dataset: value count does not equal n*d");
    Dataset ds;
    ds.n_ = n;
    ds.d_ = d;
    ds.values_ = std::move(values);
    ds.check_finite();
    ds.compute_norms();
    return ds;
  }

  static Dataset from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw InvalidArgument("dataset must have n >= 1 and d >= 1");
    const std::size_t d = rows.front().size();
    std::vector<double> values;
    values.reserve(rows.size() * d);
    for (const auto& row : rows) {
      if (row.size() != d) throw DimensionMismatch("Dataset::from_rows", d, row.size());
      values.insert(values.end(), row.begin(), row.end());
    }
    return from_dense(rows.size(), d, std::move(values));
  }

  /// `offsets` has n+1 entries; row i owns [offsets[i], offsets[i+1]) of
  /// `indices`/`values`. Indices are 0-based and strictly increasing per row.
  static Dataset from_sparse(std::size_t d, std::vector<std::size_t> offsets, std::vector<std::uint32_t> indices,
                             std::vector<double> values) {
    if (offsets.size() < 2 || d == 0) throw InvalidArgument("dataset must have n >= 1 and d >= 1");
    if (offsets.front() != 0 || offsets.back() != indices.size() || indices.size() != values.size()) {
      throw InvalidArgument("sparse dataset: inconsistent offsets");
    }
    Dataset ds;
    ds.sparse_ = true;
    ds.n_ = offsets.size() - 1;
    ds.d_ = d;
    for (std::size_t i = 0; i < ds.n_; ++i) {
      if (offsets[i + 1] < offsets[i]) throw InvalidArgument("sparse dataset: offsets decrease");
      for (std::size_t p = offsets[i]; p < offsets[i + 1]; ++p) {
        if (indices[p] >= d) {
          throw InvalidArgument("sparse dataset: row " + std::to_string(i) + " has index >= d");
        }
        if (p > offsets[i] && indices[p] <= indices[p - 1]) {
          throw InvalidArgument("sparse dataset: row " + std::to_string(i) + " indices not strictly increasing");
        }
      }
    }
    ds.offsets_ = std::move(offsets);
    ds.indices_ = std::move(indices);
    ds.values_ = std::move(values);
    ds.check_finite();
    ds.compute_norms();
    return ds;
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return d_; }
  bool is_sparse() const noexcept { return sparse_; }
  std::size_t nonzeros() const noexcept { return sparse_ ? indices_.size() : n_ * d_; }

  double squared_norm(std::size_t i) const { return norms_[i]; }

  /// Row i of a dense dataset.
  std::span<const double> dense_row(std::size_t i) const {
    if (sparse_) throw InvalidArgument("dense_row called on a sparse dataset");
    return {values_.data() + i * d_, d_};
  }

  /// Calls f(column, value) for each stored entry of row i (every column when dense).
  template <class F>
  void for_each_nonzero(std::size_t i, F&& f) const {
    if (sparse_) {
      for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) f(static_cast<std::size_t>(indices_[p]), values_[p]);
    } else {
      const double* row = values_.data() + i * d_;
      for (std::size_t j = 0; j < d_; ++j) f(j, row[j]);
    }
  }

  double dot(std::size_t i, std::span<const double> v) const {
    double s = 0.0;
    for_each_nonzero(i, [&](std::size_t j, double x) { s += x * v[j]; });
    return s;
  }

  /// ||x_i - c||^2. Dense rows are differenced directly; sparse rows use the
  /// expansion ||x||^2 - 2 x.c + ||c||^2 (clamped at 0) so the cost is O(nnz).
  double squared_distance(std::size_t i, std::span<const double> c, double c_sq_norm) const {
    if (!sparse_) {
      const double* row = values_.data() + i * d_;
      double s = 0.0;
      for (std::size_t j = 0; j < d_; ++j) {
        const double diff = row[j] - c[j];
        s += diff * diff;
      }
      return s;
    }
    return std::max(0.0, norms_[i] - 2.0 * dot(i, c) + c_sq_norm);
  }

  /// ||x_i - x_j||^2 between two stored points.
  double squared_distance_between(std::size_t i, std::size_t j) const {
    if (!sparse_) {
      const double* a = values_.data() + i * d_;
      const double* b = values_.data() + j * d_;
      double s = 0.0;
      for (std::size_t c = 0; c < d_; ++c) {
        const double diff = a[c] - b[c];
        s += diff * diff;
      }
      return s;
    }
    double s = 0.0;
    std::size_t p = offsets_[i], q = offsets_[j];
    const std::size_t pe = offsets_[i + 1], qe = offsets_[j + 1];
    while (p < pe || q < qe) {
      if (q == qe || (p < pe && indices_[p] < indices_[q])) {
        s += values_[p] * values_[p];
        ++p;
      } else if (p == pe || indices_[q] < indices_[p]) {
        s += values_[q] * values_[q];
        ++q;
      } else {
        const double diff = values_[p] - values_[q];
        s += diff * diff;
        ++p;
        ++q;
      }
    }
    return s;
  }

  /// acc += scale * x_i
  void accumulate(std::size_t i, std::span<double> acc, double scale = 1.0) const {
    for_each_nonzero(i, [&](std::size_t j, double x) { acc[j] += scale * x; });
  }

  std::vector<double> row_vector(std::size_t i) const {
    std::vector<double> out(d_, 0.0);
    accumulate(i, out);
    return out;
  }

  /// New dataset made of the listed rows (repeats allowed), same storage kind.
  Dataset subset(std::span<const std::size_t> rows) const {
    if (rows.empty()) throw InvalidArgument("subset must select at least one row");
    if (!sparse_) {
      std::vector<double> vals;
      vals.reserve(rows.size() * d_);
      for (auto i : rows) {
        auto r = dense_row(i);
        vals.insert(vals.end(), r.begin(), r.end());
      }
      return from_dense(rows.size(), d_, std::move(vals));
    }
    std::vector<std::size_t> off{0};
    std::vector<std::uint32_t> idx;
    std::vector<double> vals;
    for (auto i : rows) {
      for (std::size_t p = offsets_[i]; p < offsets_[i + 1]; ++p) {
        idx.push_back(indices_[p]);
        vals.push_back(values_[p]);
      }
      off.push_back(idx.size());
    }
    return from_sparse(d_, std::move(off), std::move(idx), std::move(vals));
  }

  Dataset to_dense() const {
    if (!sparse_) return *this;
    std::vector<double> vals(n_ * d_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) accumulate(i, {vals.data() + i * d_, d_});
    return from_dense(n_, d_, std::move(vals));
  }

  /// Compressed-row copy; explicit zeros are dropped.
  Dataset to_sparse() const {
    if (sparse_) return *this;
    std::vector<std::size_t> off{0};
    std::vector<std::uint32_t> idx;
    std::vector<double> vals;
    for (std::size_t i = 0; i < n_; ++i) {
      auto r = dense_row(i);
      for (std::size_t j = 0; j < d_; ++j) {
        if (r[j] != 0.0) {
          idx.push_back(static_cast<std::uint32_t>(j));
          vals.push_back(r[j]);
        }
      }
      off.push_back(idx.size());
    }
    return from_sparse(d_, std::move(off), std::move(idx), std::move(vals));
  }

  /// Per-coordinate [min, max] over all points (implicit zeros included for sparse data).
  std::pair<std::vector<double>, std::vector<double>> bounding_box() const {
    std::vector<double> lo(d_, std::numeric_limits<double>::infinity());
    std::vector<double> hi(d_, -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n_; ++i) {
      auto row = row_vector(i);
      for (std::size_t j = 0; j < d_; ++j) {
        lo[j] = std::min(lo[j], row[j]);
        hi[j] = std::max(hi[j], row[j]);
      }
    }
    return {std::move(lo), std::move(hi)};
  }

 private:
  void check_finite() const {
    for (double v : values_) {
      if (!std::isfinite(v)) throw InvalidArgument("dataset contains a non-finite value");
    }
  }

  void compute_norms() {
    norms_.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for_each_nonzero(i, [&](std::size_t, double x) { s += x * x; });
      norms_[i] = s;
    }
  }

  bool sparse_ = false;
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> values_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint32_t> indices_;
  std::vector<double> norms_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::ifstream open_for_read(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

/// Shortest text that reads back to the same double (17 significant digits).
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parses comma-separated rows; one point per line, no header. Blank lines are skipped.
inline Dataset parse_dense_csv(std::istream& in) {
  std::vector<double> values;
  std::size_t d = 0, n = 0, lineno = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = detail::trim(line);
    if (sv.empty()) continue;
    std::size_t fields = 0;
    while (true) {
      const auto comma = sv.find(',');
      auto field = sv.substr(0, comma);
      auto v = detail::parse_double(field);
      if (!v) throw ParseError("non-numeric field '" + std::string(detail::trim(field)) + "'", lineno);
      if (!std::isfinite(*v)) throw ParseError("non-finite value", lineno);
      values.push_back(*v);
      ++fields;
      if (comma == std::string_view::npos) break;
      sv.remove_prefix(comma + 1);
    }
    if (n == 0) {
      d = fields;
    } else if (fields != d) {
      throw ParseError("ragged row " + std::to_string(n + 1) + ": expected " + std::to_string(d) + " fields, got " +
                           std::to_string(fields),
                       lineno);
    }
    ++n;
  }
  if (n == 0) throw ParseError("empty file");
  return Dataset::from_dense(n, d, std::move(values));
}

inline Dataset load_dense_csv(const std::string& path) {
  auto in = detail::open_for_read(path);
  return parse_dense_csv(in);
}

/// Parses svmlight/libsvm text: "<label> idx:val idx:val ...", 1-based indices,
/// label ignored, '#' starts a comment. `dim` overrides the inferred dimension.
inline Dataset parse_svmlight(std::istream& in, std::optional<std::size_t> dim = std::nullopt) {
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> indices;
  std::vector<double> values;
  std::size_t max_index = 0, lineno = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = line;
    if (auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    sv = detail::trim(sv);
    if (sv.empty()) continue;
    std::istringstream tokens{std::string(sv)};
    std::string tok;
    tokens >> tok;  // label
    if (!detail::parse_double(tok)) throw ParseError("bad label '" + tok + "'", lineno);
    long long prev = 0;
    while (tokens >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError("feature '" + tok + "' is not idx:val", lineno);
      std::string_view key(tok.data(), colon);
      if (key == "qid") continue;
      long long idx = 0;
      auto [p, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
      if (ec != std::errc() || p != key.data() + key.size()) throw ParseError("bad index '" + tok + "'", lineno);
      if (idx < 1) throw ParseError("index " + std::to_string(idx) + " < 1", lineno);
      if (idx <= prev) throw ParseError("unsorted or duplicate indices", lineno);
      auto v = detail::parse_double(std::string_view(tok).substr(colon + 1));
      if (!v || !std::isfinite(*v)) throw ParseError("bad value in '" + tok + "'", lineno);
      prev = idx;
      max_index = std::max<std::size_t>(max_index, static_cast<std::size_t>(idx));
      indices.push_back(static_cast<std::uint32_t>(idx - 1));
      values.push_back(*v);
    }
    offsets.push_back(indices.size());
  }
  if (offsets.size() < 2) throw ParseError("empty file");
  std::size_t d = max_index;
  if (dim) {
    if (*dim < max_index) throw ParseError("index " + std::to_string(max_index) + " exceeds explicit d");
    d = *dim;
  }
  if (d == 0) throw ParseError("no features found and no explicit dimension given");
  return Dataset::from_sparse(d, std::move(offsets), std::move(indices), std::move(values));
}

inline Dataset load_svmlight(const std::string& path, std::optional<std::size_t> dim = std::nullopt) {
  auto in = detail::open_for_read(path);
  return parse_svmlight(in, dim);
}

inline void write_dense_csv(const Dataset& ds, std::ostream& out) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    auto row = ds.row_vector(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << detail::format_double(row[j]);
    }
    out << '\n';
  }
}

inline void write_dense_csv(const Dataset& ds, const std::string& path) {
  auto out = detail::open_for_write(path);
  write_dense_csv(ds, out);
}

/// Writes 1-based svmlight rows; label 0 unless labels are supplied.
inline void write_svmlight(const Dataset& ds, std::ostream& out, std::span<const std::size_t> labels = {}) {
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out << (labels.empty() ? 0 : labels[i]);
    ds.for_each_nonzero(i, [&](std::size_t j, double v) {
      if (v != 0.0 || ds.is_sparse()) out << ' ' << (j + 1) << ':' << detail::format_double(v);
    });
    out << '\n';
  }
}

inline void write_svmlight(const Dataset& ds, const std::string& path, std::span<const std::size_t> labels = {}) {
  auto out = detail::open_for_write(path);
  write_svmlight(ds, out, labels);
}

/// Parameters of an isotropic Gaussian mixture.
struct MixtureSpec {
  std::size_t k = 0;
  std::size_t d = 0;
  std::vector<double> weights;  // k entries on the simplex
  std::vector<double> means;    // k x d, row-major
  std::vector<double> sigmas;   // k entries, >= 0 (0 gives point masses)
  std::uint64_t seed = 0;

  std::span<const double> mean(std::size_t r) const { return {means.data() + r * d, d}; }

  void validate() const {
    if (k == 0 || d == 0) throw InvalidArgument("mixture: k and d must be >= 1");
    if (weights.size() != k) throw InvalidArgument("mixture: weights must have k entries");
    if (means.size() != k * d) throw InvalidArgument("mixture: means must be k x d");
    if (sigmas.size() != k) throw InvalidArgument("mixture: sigmas must have k entries");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("mixture: weights must be non-negative");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("mixture: weights must sum to 1");
    for (double s : sigmas) {
      if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument("mixture: sigmas must be finite and >= 0");
    }
    for (double m : means) {
      if (!std::isfinite(m)) throw InvalidArgument("mixture: means must be finite");
    }
  }
};

/// k equally weighted components with common sigma; component r is centred at
/// (separation / sqrt 2) * e_r, so every pair of means is `separation` apart.
inline MixtureSpec separated_mixture(std::size_t k, std::size_t d, double separation, double sigma,
                                     std::uint64_t seed) {
  if (k > d) throw InvalidArgument("separated_mixture needs k <= d");
  MixtureSpec spec;
  spec.k = k;
  spec.d = d;
  spec.weights.assign(k, 1.0 / static_cast<double>(k));
  spec.means.assign(k * d, 0.0);
  for (std::size_t r = 0; r < k; ++r) spec.means[r * d + r] = separation / std::sqrt(2.0);
  spec.sigmas.assign(k, sigma);
  spec.seed = seed;
  return spec;
}

struct GaussSample {
  Dataset data;
  Clustering labels;  // generating component of each point
};

/// Draws n i.i.d. points from the mixture. Pure function of (spec, n).
inline GaussSample generate_gauss(const MixtureSpec& spec, std::size_t n) {
  spec.validate();
  if (n < spec.k) throw InvalidArgument("generate_gauss: need n >= k");
  Rng rng(spec.seed);
  std::discrete_distribution<std::size_t> pick(spec.weights.begin(), spec.weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> values(n * spec.d);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = pick(rng);
    labels[i] = r;
    auto mu = spec.mean(r);
    for (std::size_t j = 0; j < spec.d; ++j) values[i * spec.d + j] = mu[j] + spec.sigmas[r] * normal(rng);
  }
  return {Dataset::from_dense(n, spec.d, std::move(values)), Clustering::from_labels(std::move(labels), spec.k)};
}

}  // namespace skm
