#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "skm/dataset.hpp"
#include "skm/diagnostics.hpp"
#include "skm/error.hpp"
#include "skm/geometry.hpp"
#include "skm/rng.hpp"
#include "skm/trace.hpp"

namespace skm {

/// eta^t = min(1, c' / (t0 + t)), shared by all clusters.
struct FlatRate {
  double cprime = 1.0;
  double t0 = 0.0;
};

/// eta_r^t = nhat_r^t / sum_{i <= t} nhat_r^i; keeps the running counts.
struct BbsRate {
  std::vector<std::uint64_t> cumulative;
};

struct ConstantRate {
  double eta = 1.0;
};

/// Learning-rate schedule for the interpolation update. Only the BBS variant
/// carries state, which advances each time rate() is consulted.
class RateSchedule {
 public:
  RateSchedule() : rule_(FlatRate{}) {}

  static RateSchedule flat(double cprime, double t0) {
    if (!(cprime > 0.0) || !std::isfinite(cprime)) throw InvalidArgument("flat rate: c' must be positive");
    if (!(t0 >= 0.0) || !std::isfinite(t0)) throw InvalidArgument("flat rate: t0 must be non-negative");
    return RateSchedule(FlatRate{cprime, t0});
  }

  /// k = 0 leaves the counters unbound; run_stochastic binds them to the centroid count.
  static RateSchedule bbs(std::size_t k = 0) { return RateSchedule(BbsRate{std::vector<std::uint64_t>(k, 0)}); }

  static RateSchedule constant(double eta) {
    if (!(eta > 0.0 && eta <= 1.0)) throw InvalidArgument("constant rate: eta must lie in (0, 1]");
    return RateSchedule(ConstantRate{eta});
  }

  const std::variant<FlatRate, BbsRate, ConstantRate>& rule() const noexcept { return rule_; }
  bool is_flat() const noexcept { return std::holds_alternative<FlatRate>(rule_); }
  bool is_bbs() const noexcept { return std::holds_alternative<BbsRate>(rule_); }
  bool is_constant() const noexcept { return std::holds_alternative<ConstantRate>(rule_); }

  /// Sizes unbound BBS counters to k; no-op for the other variants.
  void bind(std::size_t k) {
    if (auto* b = std::get_if<BbsRate>(&rule_); b && b->cumulative.empty()) b->cumulative.assign(k, 0);
  }

  /// Number of clusters the BBS counters cover (0 for other variants).
  std::size_t bound_clusters() const noexcept {
    if (auto* b = std::get_if<BbsRate>(&rule_)) return b->cumulative.size();
    return 0;
  }

  /// Rate for cluster r at iteration t given nhat >= 1 hits this iteration.
  double rate(std::uint64_t t, std::size_t r, std::uint64_t nhat) {
    if (nhat == 0) throw InvalidArgument("rate: consulted for a cluster with no samples");
    if (t == 0) throw InvalidArgument("rate: iterations start at t = 1");
    if (auto* f = std::get_if<FlatRate>(&rule_)) return std::min(1.0, f->cprime / (f->t0 + static_cast<double>(t)));
    if (auto* c = std::get_if<ConstantRate>(&rule_)) return c->eta;
    auto& b = std::get<BbsRate>(rule_);
    if (r >= b.cumulative.size()) throw InvalidArgument("rate: BBS counters do not cover cluster " + std::to_string(r));
    b.cumulative[r] += nhat;
    return static_cast<double>(nhat) / static_cast<double>(b.cumulative[r]);
  }

  /// t0 used by the (phi^0 - phi_min) / (t + t0) baseline: the flat t0, else 0.
  double baseline_t0() const noexcept {
    if (auto* f = std::get_if<FlatRate>(&rule_)) return f->t0;
    return 0.0;
  }

  std::string label() const {
    if (auto* f = std::get_if<FlatRate>(&rule_)) {
      return "flat-c" + detail::format_double(f->cprime) + "-t" + detail::format_double(f->t0);
    }
    if (auto* c = std::get_if<ConstantRate>(&rule_)) return "const-" + detail::format_double(c->eta);
    return "bbs";
  }

 private:
  explicit RateSchedule(std::variant<FlatRate, BbsRate, ConstantRate> r) : rule_(std::move(r)) {}

  std::variant<FlatRate, BbsRate, ConstantRate> rule_;
};

/// What one mini-batch saw: the draws, hits per cluster, and per-cluster sample means.
struct MiniBatchStat {
  std::size_t d = 0;
  std::vector<std::size_t> indices;  // sampled points, with repeats
  std::vector<std::size_t> labels;   // nearest centroid of each draw under C^{t-1}
  std::vector<std::uint64_t> nhat;   // per cluster
  std::vector<double> means;         // k x d; row r meaningful only when nhat[r] > 0

  std::span<const double> mean(std::size_t r) const { return {means.data() + r * d, d}; }
};

/// Assigns the given draws against c (all before any centroid moves) and averages per cluster.
inline MiniBatchStat minibatch_stat(const Dataset& ds, const CentroidSet& c, std::vector<std::size_t> indices) {
  detail::check_compatible(ds, c, "minibatch_stat");
  MiniBatchStat st;
  st.d = ds.dim();
  st.nhat.assign(c.size(), 0);
  st.means.assign(c.size() * st.d, 0.0);
  st.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    const std::size_t r = nearest_centroid(ds, i, c).first;
    st.labels.push_back(r);
    ++st.nhat[r];
    ds.accumulate(i, {st.means.data() + r * st.d, st.d});
  }
  for (std::size_t r = 0; r < c.size(); ++r) {
    if (st.nhat[r] == 0) continue;
    const double count = static_cast<double>(st.nhat[r]);
    for (std::size_t j = 0; j < st.d; ++j) st.means[r * st.d + j] /= count;
  }
  st.indices = std::move(indices);
  return st;
}

/// m uniform draws with replacement from ds, assigned against c.
inline MiniBatchStat sample_minibatch(Rng& rng, const Dataset& ds, const CentroidSet& c, std::size_t m) {
  if (m == 0) throw InvalidArgument("sample_minibatch: m must be >= 1");
  std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
  std::vector<std::size_t> idx(m);
  for (auto& i : idx) i = pick(rng);
  return minibatch_stat(ds, c, std::move(idx));
}

/// Every point exactly once, in index order. Test mode: with eta = 1 the
/// stochastic step reduces to a Lloyd step.
inline MiniBatchStat full_batch_stat(const Dataset& ds, const CentroidSet& c) {
  std::vector<std::size_t> idx(ds.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return minibatch_stat(ds, c, std::move(idx));
}

/// c_r^t = (1 - eta_r) c_r^{t-1} + eta_r chat_r for every cluster hit by the
/// batch; unhit clusters are left untouched and BBS counters do not advance
/// for them. Active flags are never changed. Rates used land in *eta_out.
inline CentroidSet stochastic_step(const Dataset& ds, const CentroidSet& prev, const MiniBatchStat& stat,
                                   RateSchedule& schedule, std::uint64_t t, std::vector<double>* eta_out = nullptr) {
  if (ds.dim() != prev.dim() || stat.d != prev.dim()) throw DimensionMismatch("stochastic_step", prev.dim(), stat.d);
  if (stat.nhat.size() != prev.size()) throw InvalidArgument("stochastic_step: statistics built for a different k");
  if (schedule.is_bbs() && schedule.bound_clusters() != prev.size()) {
    throw InvalidArgument("stochastic_step: BBS counters cover " + std::to_string(schedule.bound_clusters()) +
                          " clusters, centroid set has " + std::to_string(prev.size()));
  }
  CentroidSet next = prev;
  if (eta_out) eta_out->assign(prev.size(), 0.0);
  std::vector<double> row(prev.dim());
  for (std::size_t r = 0; r < prev.size(); ++r) {
    if (stat.nhat[r] == 0) continue;
    const double eta = schedule.rate(t, r, stat.nhat[r]);
    if (eta_out) (*eta_out)[r] = eta;
    auto c = prev.centroid(r);
    auto chat = stat.mean(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = (1.0 - eta) * c[j] + eta * chat[j];
    next.set_centroid(r, row);
  }
  return next;
}

enum class Cadence { automatic, every_iteration, every_epoch, final_only };

struct RunConfig {
  std::size_t m = 1;                 // mini-batch size
  std::uint64_t iterations = 1;      // T
  std::uint64_t epoch_length = 0;    // E; 0 means T / 20 when epochs are needed
  RateSchedule schedule;
  std::uint64_t seed = 0;
  Cadence cadence = Cadence::automatic;
  bool full_batch = false;           // use every point once per iteration instead of sampling

  static RunConfig epochs(std::size_t m, std::uint64_t epoch_count, std::uint64_t epoch_length, RateSchedule s,
                          std::uint64_t seed) {
    RunConfig c;
    c.m = m;
    c.iterations = epoch_count * epoch_length;
    c.epoch_length = epoch_length;
    c.schedule = std::move(s);
    c.seed = seed;
    return c;
  }

  void validate() const {
    if (m == 0) throw InvalidArgument("run config: m must be >= 1");
    if (iterations == 0) throw InvalidArgument("run config: T must be >= 1");
  }

  /// Whether phi is evaluated after iteration t.
  bool evaluates(std::uint64_t t) const {
    Cadence c = cadence;
    if (c == Cadence::automatic) c = iterations <= 1000 ? Cadence::every_iteration : Cadence::every_epoch;
    switch (c) {
      case Cadence::every_iteration:
        return true;
      case Cadence::every_epoch: {
        const std::uint64_t e = epoch_length > 0 ? epoch_length : std::max<std::uint64_t>(1, iterations / 20);
        return t % e == 0 || t == iterations;
      }
      default:
        return t == iterations;
    }
  }
};

struct StochasticResult {
  CentroidSet centroids;
  RunTrace trace;
};

/// Called after every iteration with the new centroids and the batch that produced them.
using StepObserver = std::function<void(std::uint64_t t, const CentroidSet&, const MiniBatchStat&)>;

/// Stochastic k-means: T rounds of sample, assign against C^{t-1}, interpolate.
/// Deterministic given (config, c0). With a reference solution each evaluated
/// record also carries Delta(C^t, reference).
inline StochasticResult run_stochastic(const Dataset& ds, const CentroidSet& c0, const RunConfig& config,
                                       const CentroidSet* reference = nullptr, const StepObserver& observer = {}) {
  config.validate();
  c0.validate();
  detail::check_compatible(ds, c0, "run_stochastic");
  RateSchedule schedule = config.schedule;
  schedule.bind(c0.size());

  std::optional<CentroidSet> ref;
  std::vector<std::size_t> ref_weights;
  if (reference) {
    const Clustering ra = assign(ds, *reference);
    ref = *reference;
    for (std::size_t r = 0; r < ref->size(); ++r) {
      if (ra.sizes[r] == 0) ref->set_active(r, false);
    }
    ref_weights = ra.sizes;
  }

  Rng rng(config.seed);
  StochasticResult res;
  res.trace.initial_phi = cost(ds, c0).total;
  CentroidSet current = c0;
  std::vector<double> eta;
  for (std::uint64_t t = 1; t <= config.iterations; ++t) {
    const MiniBatchStat stat =
        config.full_batch ? full_batch_stat(ds, current) : sample_minibatch(rng, ds, current, config.m);
    current = stochastic_step(ds, current, stat, schedule, t, &eta);
    if (config.evaluates(t)) {
      TraceRecord rec;
      rec.t = t;
      rec.phi = cost(ds, current).total;
      rec.eta = eta;
      rec.nhat = stat.nhat;
      if (ref && current.active_count() >= ref->active_count()) {
        rec.delta = centroidal_distance(current, *ref, ref_weights).delta;
      }
      res.trace.records.push_back(std::move(rec));
    }
    if (observer) observer(t, current, stat);
  }
  res.centroids = std::move(current);
  return res;
}

using OnlineObserver = std::function<void(std::uint64_t t, const CentroidSet&)>;

/// Online k-means in the per-center counting form: for each draw x, find the
/// closest w_k, then n_k += 1 and w_k += (x - w_k) / n_k. Written separately
/// from run_stochastic so the two can be checked against each other; uses the
/// same draw sequence as run_stochastic with m = 1 for a given seed.
inline StochasticResult run_online_bottou_bengio(const Dataset& ds, const CentroidSet& c0, std::uint64_t iterations,
                                                 std::uint64_t seed, const OnlineObserver& observer = {}) {
  c0.validate();
  if (ds.dim() != c0.dim()) throw DimensionMismatch("run_online_bottou_bengio", ds.dim(), c0.dim());
  const std::size_t k = c0.size(), d = c0.dim();
  std::vector<double> w(c0.coords());
  std::vector<std::uint64_t> counts(k, 0);
  Rng rng(seed);
  CentroidSet snapshot = c0;
  std::vector<std::uint64_t> last_hits(k, 0);
  for (std::uint64_t t = 1; t <= iterations; ++t) {
    std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
    const std::vector<double> x = ds.row_vector(pick(rng));
    std::size_t best = k;
    double best_d = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
      if (!c0.active(r)) continue;
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = x[j] - w[r * d + j];
        s += diff * diff;
      }
      if (best == k || s < best_d) {
        best = r;
        best_d = s;
      }
    }
    ++counts[best];
    const double step = 1.0 / static_cast<double>(counts[best]);
    for (std::size_t j = 0; j < d; ++j) w[best * d + j] += step * (x[j] - w[best * d + j]);
    std::fill(last_hits.begin(), last_hits.end(), 0);
    last_hits[best] = 1;
    if (observer) {
      snapshot.set_centroid(best, {w.data() + best * d, d});
      observer(t, snapshot);
    }
  }
  StochasticResult res;
  res.centroids = c0;
  for (std::size_t r = 0; r < k; ++r) res.centroids.set_centroid(r, {w.data() + r * d, d});
  res.trace.initial_phi = cost(ds, c0).total;
  TraceRecord rec;
  rec.t = iterations;
  rec.phi = cost(ds, res.centroids).total;
  rec.nhat = last_hits;
  res.trace.records.push_back(std::move(rec));
  return res;
}

}  // namespace skm
