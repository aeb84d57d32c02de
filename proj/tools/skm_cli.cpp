// skm: command-line front end for the stochastic k-means library.
//
// Exit codes: 0 success, 1 usage error, 2 data or configuration error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "skm/json_io.hpp"
#include "skm/skm.hpp"
#include "skm/toml_io.hpp"

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataOptions {
  std::string path;
  std::string format = "csv";
  std::optional<std::size_t> dim;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--data", path, "Input points: dense CSV (one point per line, no header) or svmlight")
        ->required()
        ->check(CLI::ExistingFile);
    cmd.add_option("--format", format, "Input format")->check(CLI::IsMember({"csv", "svmlight"}));
    cmd.add_option("--dim", dim, "svmlight only: dimension d (default: largest index seen)")->check(CLI::PositiveNumber);
  }

  skm::Dataset load() const { return format == "csv" ? skm::load_dense_csv(path) : skm::load_svmlight(path, dim); }
};

struct InitOptions {
  std::string init;
  std::string seeding = "random";
  std::size_t m0 = 0;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--init", init, "Starting centroids (CSV, optional <file>.active mask); overrides --seeding")
        ->check(CLI::ExistingFile);
    cmd.add_option("--seeding", seeding, "Seeding when --init is absent")->check(CLI::IsMember({"random", "buckshot"}));
    cmd.add_option("--m0", m0, "Buckshot sample size (default 10 k)");
  }

  skm::CentroidSet make(const skm::Dataset& ds, std::size_t k, std::uint64_t seed) const {
    if (!init.empty()) {
      auto c = skm::read_centroids(init);
      if (c.size() != k) throw skm::InvalidArgument("--init holds " + std::to_string(c.size()) + " centroids, --k is " + std::to_string(k));
      return c;
    }
    const bool buck = seeding == "buckshot";
    return skm::make_seeds(ds, {buck ? skm::SeedMethod::buckshot : skm::SeedMethod::random_points, k,
                                m0 ? m0 : 10 * k, skm::derive_seed(seed, {0x5eed, k})});
  }
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw skm::Error("cannot open '" + p.string() + "' for writing");
  return out;
}

void print_centroids(const skm::CentroidSet& c, std::ostream& out) {
  for (std::size_t r = 0; r < c.size(); ++r) {
    auto row = c.centroid(r);
    for (std::size_t j = 0; j < row.size(); ++j) out << (j ? "," : "") << skm::detail::format_double(row[j]);
    out << '\n';
  }
}

nlohmann::json base_meta(const std::string& command, std::uint64_t seed) {
  return {{"software", {{"name", "skm"}, {"version", skm::kVersion}}},
          {"prng", skm::kPrngName},
          {"command", command},
          {"seed", seed}};
}

std::size_t default_threads() {
  if (const char* env = std::getenv("SKM_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw UsageError("SKM_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// ---------------------------------------------------------------------------

struct GenCommand {
  std::string spec, out, format = "csv";
  std::size_t n = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("gen", "Sample a Gaussian mixture");
    cmd->footer(
        "Mixture TOML keys: k, d, weights (k numbers summing to 1), means (k arrays of d numbers),\n"
        "sigmas (k numbers or one shared number, >= 0), seed.\n"
        "Writes <out>/data.csv (or data.svm) and <out>/labels.csv (generating component per point).");
    cmd->add_option("--spec", spec, "Mixture description (TOML)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--n", n, "Number of points")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->add_option("--format", format, "Data file format")->check(CLI::IsMember({"csv", "svmlight"}));
    cmd->callback([this] { run(); });
  }

  void run() const {
    const auto mix = skm::load_mixture_spec(spec);
    const auto sample = skm::generate_gauss(mix, n);
    fs::create_directories(out);
    if (format == "csv") {
      skm::write_dense_csv(sample.data, (fs::path(out) / "data.csv").string());
    } else {
      skm::write_svmlight(sample.data, (fs::path(out) / "data.svm").string(), sample.labels.labels);
    }
    auto labels = open_out(fs::path(out) / "labels.csv");
    for (auto l : sample.labels.labels) labels << l << '\n';
  }
};

struct SeedCommand {
  DataOptions data;
  std::size_t k = 0, m0 = 0;
  std::string method = "random", out;
  std::uint64_t seed = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("seed", "Choose initial centroids");
    cmd->footer("Output: one centroid per CSV row; with --out also <out>.active holding the active mask.");
    data.add_to(*cmd);
    cmd->add_option("--k", k, "Number of centroids")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--method", method, "Seeding method")->check(CLI::IsMember({"random", "buckshot"}));
    cmd->add_option("--m0", m0, "Buckshot sample size (default 10 k)");
    cmd->add_option("--seed", seed, "PRNG seed");
    cmd->add_option("--out", out, "Centroid CSV to write (default: stdout)");
    cmd->callback([this] { run(); });
  }

  void run() const {
    const auto ds = data.load();
    skm::SeedConfig cfg{method == "buckshot" ? skm::SeedMethod::buckshot : skm::SeedMethod::random_points, k,
                        m0 ? m0 : 10 * k, seed};
    const auto c = skm::make_seeds(ds, cfg);
    if (out.empty()) {
      print_centroids(c, std::cout);
    } else {
      skm::write_centroids(c, out);
    }
  }
};

struct RunCommand {
  DataOptions data;
  InitOptions init;
  std::size_t k = 0, m = 1;
  std::string schedule = "flat", cadence = "auto", reference, out;
  double cprime = 4.0, t0 = 10.0;
  std::optional<double> eta;
  std::uint64_t iters = 0, epochs = 0, epoch_len = 0, seed = 0;
  bool full_batch = false;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("run", "Stochastic (mini-batch) k-means");
    cmd->footer(
        "Iteration budget: either --iters T, or --epochs with --epoch-len E (T = epochs * E).\n"
        "Output: NDJSON, one line per evaluated iteration:\n"
        "  {\"t\":int,\"phi\":float,\"eta\":[...],\"nhat\":[...],\"delta\":float|null}\n"
        "With --out DIR: DIR/trace.ndjson, DIR/centroids.csv (+ .active) and DIR/meta.json.");
    data.add_to(*cmd);
    init.add_to(*cmd);
    cmd->add_option("--k", k, "Number of centroids")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--m", m, "Mini-batch size")->check(CLI::PositiveNumber);
    cmd->add_option("--schedule", schedule, "Learning rate: flat c'/(t0+t), bbs (adaptive counts), constant")
        ->check(CLI::IsMember({"flat", "bbs", "constant"}));
    cmd->add_option("--cprime", cprime, "Flat rate numerator c'")->check(CLI::PositiveNumber);
    cmd->add_option("--t0", t0, "Flat rate offset t0")->check(CLI::NonNegativeNumber);
    cmd->add_option("--eta", eta, "Constant rate in (0, 1] (default 1/sqrt(epoch length))");
    auto* it = cmd->add_option("--iters", iters, "Total iterations T")->check(CLI::PositiveNumber);
    auto* ep = cmd->add_option("--epochs", epochs, "Number of epochs")->check(CLI::PositiveNumber);
    auto* el = cmd->add_option("--epoch-len", epoch_len, "Epoch length E")->check(CLI::PositiveNumber);
    it->excludes(ep)->excludes(el);
    ep->needs(el);
    el->needs(ep);
    cmd->add_option("--seed", seed, "PRNG seed (sampling; also seeding when --init is absent)");
    cmd->add_option("--reference", reference, "Reference centroids; records Delta(C^t, reference)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--cadence", cadence, "When phi is evaluated: auto (every iteration if T <= 1000, else every epoch)")
        ->check(CLI::IsMember({"auto", "iteration", "epoch", "final"}));
    cmd->add_flag("--full-batch", full_batch,
                  "Test mode, not part of the algorithm: each iteration uses every point once instead of sampling");
    cmd->add_option("--out", out, "Output directory (default: NDJSON trace on stdout)");
    cmd->callback([this] { run(); });
  }

  skm::RateSchedule make_schedule(std::uint64_t e) const {
    if (schedule == "flat") return skm::RateSchedule::flat(cprime, t0);
    if (schedule == "bbs") return skm::RateSchedule::bbs();
    const double v = eta.value_or(1.0 / std::sqrt(static_cast<double>(e)));
    if (!(v > 0.0 && v <= 1.0)) throw UsageError("--eta must lie in (0, 1]");
    return skm::RateSchedule::constant(v);
  }

  void run() const {
    if (iters == 0 && epochs == 0) throw UsageError("give either --iters or --epochs with --epoch-len");
    const auto ds = data.load();
    skm::RunConfig cfg;
    cfg.m = m;
    cfg.iterations = iters ? iters : epochs * epoch_len;
    cfg.epoch_length = epoch_len;
    cfg.schedule = make_schedule(epoch_len ? epoch_len : cfg.iterations);
    cfg.seed = seed;
    cfg.full_batch = full_batch;
    cfg.cadence = cadence == "iteration" ? skm::Cadence::every_iteration
                  : cadence == "epoch"   ? skm::Cadence::every_epoch
                  : cadence == "final"   ? skm::Cadence::final_only
                                         : skm::Cadence::automatic;
    const auto c0 = init.make(ds, k, seed);
    std::optional<skm::CentroidSet> ref;
    if (!reference.empty()) ref = skm::read_centroids(reference);
    const auto res = skm::run_stochastic(ds, c0, cfg, ref ? &*ref : nullptr);
    if (out.empty()) {
      skm::write_ndjson(res.trace, std::cout);
      return;
    }
    fs::create_directories(out);
    {
      auto f = open_out(fs::path(out) / "trace.ndjson");
      skm::write_ndjson(res.trace, f);
    }
    skm::write_centroids(res.centroids, (fs::path(out) / "centroids.csv").string());
    auto meta = base_meta("run", seed);
    meta["k"] = k;
    meta["m"] = m;
    meta["iterations"] = cfg.iterations;
    meta["schedule"] = cfg.schedule.label();
    meta["full_batch"] = full_batch;
    meta["initial_phi"] = *res.trace.initial_phi;
    open_out(fs::path(out) / "meta.json") << meta.dump(2) << '\n';
  }
};

struct BatchCommand {
  DataOptions data;
  InitOptions init;
  std::size_t k = 0, max_iter = 20;
  std::uint64_t seed = 0;
  std::string out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("batch", "Batch k-means (Lloyd's algorithm)");
    cmd->footer("Stops when the assignment repeats or after --max-iter iterations. Output: NDJSON trace\n"
                "(t = 0, 1, ...: cost entering each iteration); with --out DIR also centroids and meta.json.");
    data.add_to(*cmd);
    init.add_to(*cmd);
    cmd->add_option("--k", k, "Number of centroids")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--max-iter", max_iter, "Iteration budget")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "Seed for initial centroids when --init is absent");
    cmd->add_option("--out", out, "Output directory (default: NDJSON trace on stdout)");
    cmd->callback([this] { run(); });
  }

  void run() const {
    const auto ds = data.load();
    const auto res = skm::run_batch(ds, init.make(ds, k, seed), max_iter);
    if (out.empty()) {
      skm::write_ndjson(res.trace, std::cout);
      return;
    }
    fs::create_directories(out);
    {
      auto f = open_out(fs::path(out) / "trace.ndjson");
      skm::write_ndjson(res.trace, f);
    }
    skm::write_centroids(res.centroids, (fs::path(out) / "centroids.csv").string());
    auto meta = base_meta("batch", seed);
    meta["k"] = k;
    meta["iterations"] = res.iterations;
    meta["converged"] = res.converged;
    meta["phi"] = skm::cost(ds, res.centroids).total;
    open_out(fs::path(out) / "meta.json") << meta.dump(2) << '\n';
  }
};

struct DiagnoseCommand {
  DataOptions data;
  std::string centroids, reference;
  std::optional<double> alpha;
  double tol = 1e-9, boundary_tol = 1e-9;
  bool radius = false, json = false;
  std::uint64_t seed = 0;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("diagnose", "Cost, stationarity, margin and clusterability of a centroid set");
    cmd->footer("Centroid files are CSV (one centroid per row) with an optional <file>.active 0/1 mask line.");
    data.add_to(*cmd);
    cmd->add_option("--centroids", centroids, "Centroid set C to examine")->required()->check(CLI::ExistingFile);
    cmd->add_option("--reference", reference, "Reference solution C*: report Delta(C, C*) and ClustDist")
        ->check(CLI::ExistingFile);
    cmd->add_option("--alpha", alpha, "Check f(alpha)-clusterability of C, alpha in (0, 1)");
    cmd->add_option("--tol", tol, "Relative stationarity tolerance")->check(CLI::NonNegativeNumber);
    cmd->add_option("--boundary-tol", boundary_tol, "Margin at or below which C is a boundary point")
        ->check(CLI::NonNegativeNumber);
    cmd->add_flag("--radius", radius, "Estimate the attraction radius by random perturbation (estimate only)");
    cmd->add_option("--seed", seed, "Seed for the radius estimate");
    cmd->add_flag("--json", json, "Print a JSON report instead of text");
    cmd->callback([this] { run(); });
  }

  void run() const {
    if (alpha && !(*alpha > 0.0 && *alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
    const auto ds = data.load();
    const auto c = skm::read_centroids(centroids);
    skm::StationarityOptions opt;
    opt.tol = tol;
    opt.boundary_tol = boundary_tol;
    opt.estimate_radius = radius;
    opt.radius_seed = seed;
    nlohmann::json rep;
    rep["cost"] = skm::to_json(skm::cost(ds, c));
    rep["stationarity"] = skm::to_json(skm::is_stationary(ds, c, opt));
    const auto a = skm::assign(ds, c);
    rep["sizes"] = a.sizes;
    if (a.nonempty_count() >= 2) {
      skm::CentroidSet live = c;
      for (std::size_t r = 0; r < c.size(); ++r) {
        if (a.sizes[r] == 0) live.set_active(r, false);
      }
      try {
        rep["margin"] = skm::to_json(skm::margin(ds, live, boundary_tol));
      } catch (const skm::InvalidArgument& ex) {
        rep["margin"] = {{"error", ex.what()}};
      }
    }
    if (alpha) rep["clusterability"] = skm::to_json(skm::clusterability(ds, c, *alpha));
    if (!reference.empty()) {
      const auto ref = skm::read_centroids(reference);
      const auto match = skm::centroidal_distance(ds, c, ref);
      rep["reference"] = skm::to_json(match);
      rep["reference"]["clust_dist"] = skm::clust_dist(a, skm::assign(ds, ref), match.permutation);
    }
    if (json) {
      std::cout << rep.dump(2) << '\n';
      return;
    }
    print_text(rep);
  }

  static std::string num(const nlohmann::json& v) {
    return v.is_null() ? std::string("inf") : skm::detail::format_double(v.get<double>());
  }

  static void print_text(const nlohmann::json& rep) {
    std::cout << "cost                 " << num(rep["cost"]["total"]) << '\n';
    std::cout << "cluster sizes        " << rep["sizes"].dump() << '\n';
    const auto& st = rep["stationarity"];
    std::cout << "stationary           " << (st["is_stationary"].get<bool>() ? "yes" : "no") << " (drift "
              << num(st["drift"]) << ")\n";
    std::cout << "boundary point       " << (st["boundary"].get<bool>() ? "yes" : "no") << '\n';
    if (!st["r_min_estimate"].is_null()) std::cout << "r_min estimate       " << num(st["r_min_estimate"]) << '\n';
    if (rep.contains("margin")) {
      const auto& m = rep["margin"];
      if (m.contains("error")) {
        std::cout << "margin               undefined: " << m["error"].get<std::string>() << '\n';
      } else {
        std::cout << "margin               " << num(m["delta"]) << " (centroids " << m["r"] << ", " << m["s"]
                  << "; point " << m["point"] << ")\n";
      }
    }
    if (rep.contains("clusterability")) {
      const auto& c = rep["clusterability"];
      std::cout << "clusterability       " << (c["satisfied"].get<bool>() ? "satisfied" : "not satisfied") << '\n'
                << "  f_max              " << num(c["f_max"]) << '\n'
                << "  floor              " << num(c["floor"]) << " (alternative form " << num(c["floor_alt"]) << ")\n"
                << "  p_min              " << num(c["p_min"]) << '\n'
                << "  w_min              " << num(c["w_min"]) << '\n';
    }
    if (rep.contains("reference")) {
      const auto& r = rep["reference"];
      std::cout << "Delta to reference   " << num(r["delta"]) << " (permutation " << r["permutation"].dump() << ")\n"
                << "ClustDist            " << num(r["clust_dist"]) << '\n';
      if (!r["in_definition_domain"].get<bool>()) {
        std::cout << "note: the reference is not the mean of its own clustering; Delta is outside its usual domain\n";
      }
    }
  }
};

struct ExperimentCommand {
  std::string spec, out;
  std::optional<std::size_t> threads;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("experiment", "Run an experiment grid from a TOML spec");
    cmd->footer(
        "Writes <out>/trace-<cell>.ndjson (averaged trace with phi_shifted and baseline),\n"
        "<out>/summary.csv (phi^T / phi_batch per (k, m) and (E, schedule)), <out>/slopes.csv and <out>/meta.json.\n"
        "See configs/ for annotated spec files. SKM_THREADS sets the default for --threads.");
    cmd->add_option("--spec", spec, "Experiment description (TOML)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "Output directory")->required();
    cmd->add_option("--threads", threads, "Worker threads for cells and repeats")->check(CLI::PositiveNumber);
    cmd->callback([this] { run(); });
  }

  void run() const {
    const auto s = skm::load_experiment_spec(spec);
    const auto bundle = skm::run_experiment(s, threads ? *threads : default_threads());
    fs::create_directories(out);
    for (const auto& cell : bundle.cells) {
      auto f = open_out(fs::path(out) / ("trace-" + cell.key + ".ndjson"));
      skm::write_cell_ndjson(cell, f);
    }
    {
      auto f = open_out(fs::path(out) / "summary.csv");
      skm::write_ratio_csv(bundle, skm::cost_ratio_table(bundle), f);
    }
    {
      auto f = open_out(fs::path(out) / "slopes.csv");
      skm::write_slopes_csv(bundle, f);
    }
    open_out(fs::path(out) / "meta.json") << skm::experiment_meta(bundle).dump(2) << '\n';
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic and batch k-means: data generation, seeding, runs, diagnostics, experiments"};
  app.set_version_flag("--version", std::string(skm::kVersion));
  app.require_subcommand(1, 1);
  GenCommand gen;
  SeedCommand seed;
  RunCommand run;
  BatchCommand batch;
  DiagnoseCommand diagnose;
  ExperimentCommand experiment;
  gen.add(app);
  seed.add(app);
  run.add(app);
  batch.add(app);
  diagnose.add(app);
  experiment.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\nRun with --help for usage.\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
