#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <toml.hpp>

#include "skm/dataset.hpp"
#include "skm/error.hpp"
#include "skm/harness.hpp"
#include "skm/seeding.hpp"
#include "skm/stochastic.hpp"

namespace skm {

namespace detail {

inline const toml::node& require(const toml::table& tbl, std::string_view key, std::string_view ctx) {
  const toml::node* node = tbl.get(key);
  if (!node) throw ParseError(std::string(ctx) + ": missing key '" + std::string(key) + "'");
  return *node;
}

inline double as_double(const toml::node& node, std::string_view what) {
  if (auto v = node.value<double>()) return *v;
  throw ParseError(std::string(what) + " must be a number");
}

inline std::uint64_t as_count(const toml::node& node, std::string_view what) {
  auto v = node.value<std::int64_t>();
  if (!v || *v < 0) throw ParseError(std::string(what) + " must be a non-negative integer");
  return static_cast<std::uint64_t>(*v);
}

inline std::vector<double> as_doubles(const toml::node& node, std::string_view what) {
  std::vector<double> out;
  if (const auto* arr = node.as_array()) {
    for (const auto& el : *arr) out.push_back(as_double(el, what));
  } else {
    out.push_back(as_double(node, what));
  }
  return out;
}

inline std::vector<std::uint64_t> as_counts(const toml::node& node, std::string_view what) {
  std::vector<std::uint64_t> out;
  if (const auto* arr = node.as_array()) {
    for (const auto& el : *arr) out.push_back(as_count(el, what));
  } else {
    out.push_back(as_count(node, what));
  }
  return out;
}

inline std::string as_string(const toml::node& node, std::string_view what) {
  if (auto v = node.value<std::string>()) return *v;
  throw ParseError(std::string(what) + " must be a string");
}

inline toml::table parse_toml(std::string_view text, std::string_view source) {
  try {
    return toml::parse(text, source);
  } catch (const toml::parse_error& err) {
    throw ParseError(std::string(err.description()), err.source().begin.line);
  }
}

inline toml::table parse_toml_file(const std::string& path) {
  if (!std::filesystem::exists(path)) throw Error("cannot open '" + path + "' for reading");
  try {
    return toml::parse_file(path);
  } catch (const toml::parse_error& err) {
    throw ParseError(path + ": " + std::string(err.description()), err.source().begin.line);
  }
}

/// Mixture from a table with keys k, d, weights, means, sigmas, seed. sigmas
/// may be a single number shared by all components.
inline MixtureSpec mixture_from_table(const toml::table& tbl) {
  MixtureSpec spec;
  spec.k = as_count(require(tbl, "k", "mixture"), "k");
  spec.d = as_count(require(tbl, "d", "mixture"), "d");
  spec.weights = as_doubles(require(tbl, "weights", "mixture"), "weights");
  const auto* means = require(tbl, "means", "mixture").as_array();
  if (!means) throw ParseError("mixture: means must be an array of k arrays");
  for (const auto& row : *means) {
    const auto values = as_doubles(row, "means");
    if (values.size() != spec.d) throw ParseError("mixture: every mean must have d entries");
    spec.means.insert(spec.means.end(), values.begin(), values.end());
  }
  spec.sigmas = as_doubles(require(tbl, "sigmas", "mixture"), "sigmas");
  if (spec.sigmas.size() == 1 && spec.k > 1) spec.sigmas.assign(spec.k, spec.sigmas.front());
  spec.seed = as_count(require(tbl, "seed", "mixture"), "seed");
  try {
    spec.validate();
  } catch (const InvalidArgument& ex) {
    throw ParseError(ex.what());
  }
  return spec;
}

}  // namespace detail

inline MixtureSpec parse_mixture_spec(std::string_view text) {
  return detail::mixture_from_table(detail::parse_toml(text, "mixture"));
}

inline MixtureSpec load_mixture_spec(const std::string& path) {
  return detail::mixture_from_table(detail::parse_toml_file(path));
}

namespace detail {

inline ExperimentSpec experiment_from_table(const toml::table& tbl, const std::filesystem::path& base_dir) {
  ExperimentSpec spec;
  if (auto v = tbl["name"].value<std::string>()) spec.name = *v;
  if (const auto* n = tbl.get("seed")) spec.seed = as_count(*n, "seed");
  if (const auto* n = tbl.get("repeats")) spec.repeats = as_count(*n, "repeats");
  for (auto k : as_counts(require(tbl, "k", "experiment"), "k")) spec.ks.push_back(k);
  for (auto m : as_counts(require(tbl, "m", "experiment"), "m")) spec.ms.push_back(m);
  if (const auto* n = tbl.get("epochs")) spec.epochs = as_count(*n, "epochs");
  spec.epoch_lengths = as_counts(require(tbl, "epoch_length", "experiment"), "epoch_length");
  if (const auto* n = tbl.get("batch_iterations")) spec.batch_iterations = as_count(*n, "batch_iterations");
  if (const auto* n = tbl.get("m0")) spec.m0 = as_count(*n, "m0");
  if (const auto* n = tbl.get("seeding")) {
    const auto s = as_string(*n, "seeding");
    if (s == "random") {
      spec.seeding = SeedMethod::random_points;
    } else if (s == "buckshot") {
      spec.seeding = SeedMethod::buckshot;
    } else {
      throw ParseError("seeding must be \"random\" or \"buckshot\"");
    }
  }
  if (const auto* n = tbl.get("cadence")) {
    const auto s = as_string(*n, "cadence");
    if (s == "auto") {
      spec.cadence = Cadence::automatic;
    } else if (s == "iteration") {
      spec.cadence = Cadence::every_iteration;
    } else if (s == "epoch") {
      spec.cadence = Cadence::every_epoch;
    } else if (s == "final") {
      spec.cadence = Cadence::final_only;
    } else {
      throw ParseError("cadence must be one of auto, iteration, epoch, final");
    }
  }
  if (const auto* fit = tbl["fit"].as_table()) {
    if (const auto* r = fit->get("range")) {
      if (const auto* arr = r->as_array()) {
        const auto bounds = as_counts(*arr, "fit.range");
        if (bounds.size() != 2 || bounds[0] >= bounds[1]) throw ParseError("fit.range must be [lo, hi] with lo < hi");
        spec.fit_range = FitRange::between(bounds[0], bounds[1]);
      } else {
        const auto s = as_string(*r, "fit.range");
        if (s == "tail") {
          spec.fit_range = FitRange::tail_half();
        } else if (s == "all") {
          spec.fit_range = FitRange::all();
        } else {
          throw ParseError("fit.range must be \"tail\", \"all\" or [lo, hi]");
        }
      }
    }
  }

  const auto* data = tbl["data"].as_table();
  if (!data) throw ParseError("experiment: missing [data] table");
  const auto source = as_string(require(*data, "source", "data"), "data.source");
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return (path.is_absolute() ? path : base_dir / path).string();
  };
  if (source == "gauss") {
    spec.data.kind = DataSource::Kind::gauss;
    spec.data.name = "gauss";
    spec.data.n = as_count(require(*data, "n", "data"), "data.n");
    if (const auto* mix = (*data)["mixture"].as_table()) {
      spec.data.mixture = mixture_from_table(*mix);
    } else if (const auto* sep = (*data)["separated"].as_table()) {
      spec.data.mixture = separated_mixture(as_count(require(*sep, "k", "separated"), "k"),
                                            as_count(require(*sep, "d", "separated"), "d"),
                                            as_double(require(*sep, "separation", "separated"), "separation"),
                                            as_double(require(*sep, "sigma", "separated"), "sigma"),
                                            as_count(require(*sep, "seed", "separated"), "seed"));
    } else if (const auto* file = data->get("mixture_file")) {
      spec.data.mixture = load_mixture_spec(resolve(as_string(*file, "data.mixture_file")));
    } else {
      throw ParseError("gauss data needs [data.mixture], [data.separated] or mixture_file");
    }
  } else if (source == "csv" || source == "svmlight") {
    spec.data.kind = source == "csv" ? DataSource::Kind::csv : DataSource::Kind::svmlight;
    spec.data.path = resolve(as_string(require(*data, "path", "data"), "data.path"));
    spec.data.name = std::filesystem::path(spec.data.path).stem().string();
    if (const auto* d = data->get("dim")) spec.data.dim = as_count(*d, "data.dim");
  } else {
    throw ParseError("data.source must be gauss, csv or svmlight");
  }
  if (auto v = (*data)["name"].value<std::string>()) spec.data.name = *v;

  const auto* schedules = tbl["schedule"].as_array();
  if (!schedules || schedules->empty()) throw ParseError("experiment: need at least one [[schedule]]");
  for (const auto& node : *schedules) {
    const auto* st = node.as_table();
    if (!st) throw ParseError("[[schedule]] entries must be tables");
    ScheduleSpec s;
    const auto type = as_string(require(*st, "type", "schedule"), "schedule.type");
    if (type == "flat") {
      s.kind = ScheduleSpec::Kind::flat;
      if (const auto* c = st->get("cprime")) s.cprime = as_double(*c, "cprime");
      if (const auto* t0 = st->get("t0")) s.t0s = as_doubles(*t0, "t0");
    } else if (type == "bbs") {
      s.kind = ScheduleSpec::Kind::bbs;
    } else if (type == "constant") {
      s.kind = ScheduleSpec::Kind::constant;
      if (const auto* e = st->get("eta")) s.eta = as_double(*e, "eta");
    } else {
      throw ParseError("schedule.type must be flat, bbs or constant");
    }
    spec.schedules.push_back(std::move(s));
  }
  try {
    spec.validate();
  } catch (const InvalidArgument& ex) {
    throw ParseError(ex.what());
  }
  return spec;
}

}  // namespace detail

inline ExperimentSpec parse_experiment_spec(std::string_view text, const std::filesystem::path& base_dir = ".") {
  return detail::experiment_from_table(detail::parse_toml(text, "experiment"), base_dir);
}

inline ExperimentSpec load_experiment_spec(const std::string& path) {
  return detail::experiment_from_table(detail::parse_toml_file(path), std::filesystem::path(path).parent_path());
}

}  // namespace skm
