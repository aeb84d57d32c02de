#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "skm/dataset.hpp"
#include "skm/error.hpp"
#include "skm/geometry.hpp"
#include "skm/rng.hpp"
#include "skm/seeding.hpp"
#include "skm/stochastic.hpp"
#include "skm/trace.hpp"

namespace skm {

// ---------------------------------------------------------------------------
// Log-log slope fits

struct FitRange {
  enum class Kind { tail_half, all, explicit_range };
  Kind kind = Kind::tail_half;
  std::uint64_t lo = 0, hi = 0;  // inclusive, for explicit_range

  static FitRange tail_half() { return {}; }
  static FitRange all() { return {Kind::all}; }
  static FitRange between(std::uint64_t lo, std::uint64_t hi) { return {Kind::explicit_range, lo, hi}; }
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;  // of log y against log t
  std::uint64_t t_lo = 0, t_hi = 0;
  double residual_rms = 0.0;
  std::size_t points = 0;    // used in the regression
  std::size_t excluded = 0;  // in range but dropped for y <= 0 (or t = 0)
};

inline constexpr std::size_t kMinFitPoints = 10;

/// Ordinary least squares of log y on log t over the chosen range.
inline SlopeFit slope_fit(std::span<const std::uint64_t> t, std::span<const double> y, FitRange range = {}) {
  if (t.size() != y.size()) throw InvalidArgument("slope_fit: t and y differ in length");
  std::size_t begin = 0, end = t.size();
  if (range.kind == FitRange::Kind::tail_half) begin = t.size() / 2;
  SlopeFit fit;
  std::vector<double> lx, ly;
  std::vector<std::uint64_t> used_t;
  for (std::size_t i = begin; i < end; ++i) {
    if (range.kind == FitRange::Kind::explicit_range && (t[i] < range.lo || t[i] > range.hi)) continue;
    if (!(y[i] > 0.0) || t[i] == 0) {
      ++fit.excluded;
      continue;
    }
    lx.push_back(std::log(static_cast<double>(t[i])));
    ly.push_back(std::log(y[i]));
    used_t.push_back(t[i]);
  }
  if (lx.size() < kMinFitPoints) {
    throw InvalidArgument("slope_fit: only " + std::to_string(lx.size()) + " usable points (need " +
                          std::to_string(kMinFitPoints) + ")");
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw InvalidArgument("slope_fit: all t values coincide");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss += r * r;
  }
  fit.residual_rms = std::sqrt(ss / n);
  fit.points = lx.size();
  fit.t_lo = *std::min_element(used_t.begin(), used_t.end());
  fit.t_hi = *std::max_element(used_t.begin(), used_t.end());
  return fit;
}

// ---------------------------------------------------------------------------
// Experiment description

struct ScheduleSpec {
  enum class Kind { flat, bbs, constant };
  Kind kind = Kind::flat;
  double cprime = 4.0;
  std::vector<double> t0s{10.0};
  std::optional<double> eta;  // constant rate; defaults to 1/sqrt(E)

  std::string kind_name() const { return name_of(kind); }

  static std::string name_of(Kind kind) {
    switch (kind) {
      case Kind::flat:
        return "flat";
      case Kind::bbs:
        return "bbs";
      default:
        return "const";
    }
  }
};

struct DataSource {
  enum class Kind { gauss, csv, svmlight };
  Kind kind = Kind::gauss;
  std::string name = "gauss";
  std::string path;
  std::optional<std::size_t> dim;  // svmlight only
  MixtureSpec mixture;             // gauss only
  std::size_t n = 0;               // gauss only

  Dataset load() const {
    switch (kind) {
      case Kind::csv:
        return load_dense_csv(path);
      case Kind::svmlight:
        return load_svmlight(path, dim);
      default:
        return generate_gauss(mixture, n).data;
    }
  }
};

struct ExperimentSpec {
  std::string name = "experiment";
  DataSource data;
  std::vector<std::size_t> ks;
  std::vector<std::size_t> ms;
  std::vector<ScheduleSpec> schedules;
  std::uint64_t epochs = 20;
  std::vector<std::uint64_t> epoch_lengths;
  std::size_t repeats = 5;
  std::uint64_t seed = 0;
  SeedMethod seeding = SeedMethod::random_points;
  std::size_t m0 = 0;
  std::size_t batch_iterations = 20;
  Cadence cadence = Cadence::automatic;
  FitRange fit_range;

  void validate() const {
    if (repeats == 0) throw InvalidArgument("experiment: repeats must be >= 1");
    if (ks.empty() || ms.empty() || schedules.empty() || epoch_lengths.empty()) {
      throw InvalidArgument("experiment: k, m, schedule and epoch_length lists must be non-empty");
    }
    if (epochs == 0) throw InvalidArgument("experiment: epochs must be >= 1");
    for (auto k : ks) {
      if (k == 0) throw InvalidArgument("experiment: k must be >= 1");
    }
    for (auto m : ms) {
      if (m == 0) throw InvalidArgument("experiment: m must be >= 1");
    }
    for (auto e : epoch_lengths) {
      if (e == 0) throw InvalidArgument("experiment: epoch lengths must be >= 1");
    }
    for (const auto& s : schedules) {
      if (s.kind == ScheduleSpec::Kind::flat && s.t0s.empty()) throw InvalidArgument("experiment: flat schedule needs t0");
    }
    if (batch_iterations == 0) throw InvalidArgument("experiment: batch_iterations must be >= 1");
    if (seeding == SeedMethod::buckshot) {
      for (auto k : ks) {
        if (m0 < k) throw InvalidArgument("experiment: buckshot needs m0 >= k");
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Results

struct AveragedTrace {
  std::vector<std::uint64_t> t;
  std::vector<double> phi;       // pointwise mean over repeats
  std::vector<double> shifted;   // phi - phi_min
  std::vector<double> baseline;  // (phi0 - phi_min) / (t + t0)
  std::vector<std::vector<double>> eta;   // mean per cluster
  std::vector<std::vector<double>> nhat;  // mean per cluster
  std::vector<std::optional<double>> delta;
};

struct CellResult {
  std::string key;
  std::size_t k = 0, m = 0;
  std::uint64_t epoch_length = 0;
  std::uint64_t iterations = 0;
  ScheduleSpec::Kind kind = ScheduleSpec::Kind::flat;
  RateSchedule schedule;
  std::vector<std::uint64_t> seeds;  // sampling seed per repeat
  std::vector<RunTrace> runs;
  AveragedTrace average;
  double final_phi = 0.0;  // mean phi^T over repeats
  std::optional<SlopeFit> fit;
  std::string fit_error;
};

struct KSummary {
  std::uint64_t init_seed = 0;  // seed used for C0
  double phi0 = 0.0;            // cost of C0
  double phi_batch = 0.0;       // cost after batch_iterations Lloyd steps from C0
  double phi_min = 0.0;         // lowest phi seen by any run with this k
  CentroidSet c0;
};

struct ExperimentBundle {
  ExperimentSpec spec;
  std::map<std::size_t, KSummary> per_k;
  std::vector<CellResult> cells;  // ordered by (k, E, m, schedule, t0)
};

namespace detail {

/// Runs job(i) for i in [0, count) on up to `threads` workers. The first
/// exception is rethrown after all workers stop.
template <class Job>
void parallel_for(std::size_t count, std::size_t threads, Job&& job) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

inline std::string cell_key(std::size_t k, std::size_t m, std::uint64_t e, const RateSchedule& s) {
  return "k" + std::to_string(k) + "-m" + std::to_string(m) + "-E" + std::to_string(e) + "-" + s.label();
}

inline AveragedTrace average_runs(const std::vector<RunTrace>& runs) {
  AveragedTrace avg;
  const auto& first = runs.front().records;
  const double count = static_cast<double>(runs.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    avg.t.push_back(first[i].t);
    double phi = 0.0;
    std::vector<double> eta(first[i].eta.size(), 0.0), nhat(first[i].nhat.size(), 0.0);
    double delta = 0.0;
    bool have_delta = true;
    for (const auto& run : runs) {
      const auto& rec = run.records.at(i);
      if (rec.t != first[i].t) throw Error("average_runs: repeats evaluated at different iterations");
      phi += *rec.phi;
      for (std::size_t r = 0; r < eta.size(); ++r) eta[r] += rec.eta[r];
      for (std::size_t r = 0; r < nhat.size(); ++r) nhat[r] += static_cast<double>(rec.nhat[r]);
      if (rec.delta) {
        delta += *rec.delta;
      } else {
        have_delta = false;
      }
    }
    for (auto& v : eta) v /= count;
    for (auto& v : nhat) v /= count;
    avg.phi.push_back(phi / count);
    avg.eta.push_back(std::move(eta));
    avg.nhat.push_back(std::move(nhat));
    avg.delta.push_back(have_delta ? std::optional<double>(delta / count) : std::nullopt);
  }
  return avg;
}

}  // namespace detail

/// Runs every (k, E, m, schedule) cell `repeats` times. All cells with the same
/// k start from one shared C0; repeat r of every cell with the same (k, m)
/// uses the same sampling seed. phi_min is the lowest phi observed by any run
/// with that k; shifted traces and baselines are taken against it.
inline ExperimentBundle run_experiment(const ExperimentSpec& spec, const Dataset& ds, std::size_t threads = 1) {
  spec.validate();
  ExperimentBundle bundle;
  bundle.spec = spec;

  for (std::size_t k : spec.ks) {
    KSummary ks;
    ks.init_seed = derive_seed(spec.seed, {0x5eed, k});
    ks.c0 = make_seeds(ds, SeedConfig{spec.seeding, k, spec.m0, ks.init_seed});
    ks.phi0 = cost(ds, ks.c0).total;
    const auto batch = run_batch(ds, ks.c0, spec.batch_iterations);
    ks.phi_batch = cost(ds, batch.centroids).total;
    bundle.per_k.emplace(k, std::move(ks));
  }

  for (std::size_t k : spec.ks) {
    for (std::uint64_t e : spec.epoch_lengths) {
      for (std::size_t m : spec.ms) {
        for (const auto& ss : spec.schedules) {
          std::vector<RateSchedule> variants;
          switch (ss.kind) {
            case ScheduleSpec::Kind::flat:
              for (double t0 : ss.t0s) variants.push_back(RateSchedule::flat(ss.cprime, t0));
              break;
            case ScheduleSpec::Kind::bbs:
              variants.push_back(RateSchedule::bbs());
              break;
            default:
              variants.push_back(RateSchedule::constant(ss.eta.value_or(1.0 / std::sqrt(static_cast<double>(e)))));
          }
          for (auto& v : variants) {
            CellResult cell;
            cell.key = detail::cell_key(k, m, e, v);
            cell.k = k;
            cell.m = m;
            cell.epoch_length = e;
            cell.iterations = spec.epochs * e;
            cell.kind = ss.kind;
            cell.schedule = v;
            for (std::size_t r = 0; r < spec.repeats; ++r) cell.seeds.push_back(derive_seed(spec.seed, {k, m, r}));
            cell.runs.resize(spec.repeats);
            bundle.cells.push_back(std::move(cell));
          }
        }
      }
    }
  }

  const std::size_t jobs = bundle.cells.size() * spec.repeats;
  detail::parallel_for(jobs, threads, [&](std::size_t job) {
    CellResult& cell = bundle.cells[job / spec.repeats];
    const std::size_t r = job % spec.repeats;
    RunConfig cfg = RunConfig::epochs(cell.m, spec.epochs, cell.epoch_length, cell.schedule, cell.seeds[r]);
    cfg.cadence = spec.cadence;
    try {
      cell.runs[r] = run_stochastic(ds, bundle.per_k.at(cell.k).c0, cfg).trace;
    } catch (const std::exception& ex) {
      throw Error("cell " + cell.key + " repeat " + std::to_string(r) + ": " + ex.what());
    }
  });

  for (auto& [k, ks] : bundle.per_k) {
    ks.phi_min = std::numeric_limits<double>::infinity();
    for (const auto& cell : bundle.cells) {
      if (cell.k != k) continue;
      for (const auto& run : cell.runs) {
        for (double p : run.phis()) ks.phi_min = std::min(ks.phi_min, p);
      }
    }
  }

  for (auto& cell : bundle.cells) {
    const KSummary& ks = bundle.per_k.at(cell.k);
    cell.average = detail::average_runs(cell.runs);
    const double t0 = cell.schedule.baseline_t0();
    for (std::size_t i = 0; i < cell.average.t.size(); ++i) {
      cell.average.shifted.push_back(cell.average.phi[i] - ks.phi_min);
      cell.average.baseline.push_back((ks.phi0 - ks.phi_min) / (static_cast<double>(cell.average.t[i]) + t0));
    }
    cell.final_phi = cell.average.phi.back();
    try {
      cell.fit = slope_fit(cell.average.t, cell.average.shifted, spec.fit_range);
    } catch (const InvalidArgument& ex) {
      cell.fit_error = ex.what();
    }
  }
  return bundle;
}

inline ExperimentBundle run_experiment(const ExperimentSpec& spec, std::size_t threads = 1) {
  return run_experiment(spec, spec.data.load(), threads);
}

// ---------------------------------------------------------------------------
// Cost-ratio table

struct RatioRow {
  std::string dataset;
  std::size_t k = 0, m = 0;
  // (E, schedule kind) -> phi^T / phi_batch; flat takes the best t0.
  std::map<std::pair<std::uint64_t, ScheduleSpec::Kind>, double> ratio;
};

inline std::vector<RatioRow> cost_ratio_table(const ExperimentBundle& bundle) {
  std::vector<RatioRow> rows;
  for (std::size_t k : bundle.spec.ks) {
    for (std::size_t m : bundle.spec.ms) {
      RatioRow row{bundle.spec.data.name, k, m, {}};
      const double batch = bundle.per_k.at(k).phi_batch;
      for (const auto& cell : bundle.cells) {
        if (cell.k != k || cell.m != m) continue;
        const double ratio = batch > 0.0 ? cell.final_phi / batch : (cell.final_phi == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
        auto key = std::make_pair(cell.epoch_length, cell.kind);
        auto it = row.ratio.find(key);
        if (it == row.ratio.end() || ratio < it->second) row.ratio[key] = ratio;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline std::vector<RatioRow> cost_ratio_table(const ExperimentSpec& spec, std::size_t threads = 1) {
  return cost_ratio_table(run_experiment(spec, threads));
}

/// summary.csv: one row per (dataset, k, m), one column per (E, schedule).
inline void write_ratio_csv(const ExperimentBundle& bundle, const std::vector<RatioRow>& rows, std::ostream& out) {
  std::vector<std::pair<std::uint64_t, ScheduleSpec::Kind>> columns;
  for (auto e : bundle.spec.epoch_lengths) {
    for (auto kind : {ScheduleSpec::Kind::flat, ScheduleSpec::Kind::bbs, ScheduleSpec::Kind::constant}) {
      const bool present = std::any_of(bundle.spec.schedules.begin(), bundle.spec.schedules.end(),
                                       [&](const ScheduleSpec& s) { return s.kind == kind; });
      if (present) columns.emplace_back(e, kind);
    }
  }
  out << "dataset,k,m,phi_batch";
  for (const auto& [e, kind] : columns) out << ",E" << e << '_' << ScheduleSpec::name_of(kind);
  out << '\n';
  for (const auto& row : rows) {
    out << row.dataset << ',' << row.k << ',' << row.m << ','
        << detail::format_double(bundle.per_k.at(row.k).phi_batch);
    for (const auto& col : columns) {
      out << ',';
      if (auto it = row.ratio.find(col); it != row.ratio.end()) out << detail::format_double(it->second);
    }
    out << '\n';
  }
}

inline void write_slopes_csv(const ExperimentBundle& bundle, std::ostream& out) {
  out << "cell,k,m,E,schedule,slope,intercept,t_lo,t_hi,residual_rms,points,excluded,error\n";
  for (const auto& c : bundle.cells) {
    out << c.key << ',' << c.k << ',' << c.m << ',' << c.epoch_length << ',' << c.schedule.label() << ',';
    if (c.fit) {
      out << detail::format_double(c.fit->slope) << ',' << detail::format_double(c.fit->intercept) << ','
          << c.fit->t_lo << ',' << c.fit->t_hi << ',' << detail::format_double(c.fit->residual_rms) << ','
          << c.fit->points << ',' << c.fit->excluded << ",\n";
    } else {
      std::string err = c.fit_error;
      std::replace(err.begin(), err.end(), ',', ';');
      out << ",,,,,,," << err << '\n';
    }
  }
}

/// Averaged trace of one cell as NDJSON, in the run-trace schema plus the
/// shifted series and the baseline.
inline void write_cell_ndjson(const CellResult& cell, std::ostream& out) {
  const auto& a = cell.average;
  for (std::size_t i = 0; i < a.t.size(); ++i) {
    out << "{\"t\":" << a.t[i] << ",\"phi\":" << detail::format_double(a.phi[i]) << ",\"eta\":";
    detail::write_json_array(out, a.eta[i]);
    out << ",\"nhat\":";
    detail::write_json_array(out, a.nhat[i]);
    out << ",\"delta\":" << (a.delta[i] ? detail::format_double(*a.delta[i]) : std::string("null"))
        << ",\"phi_shifted\":" << detail::format_double(a.shifted[i])
        << ",\"baseline\":" << detail::format_double(a.baseline[i]) << "}\n";
  }
}

}  // namespace skm
