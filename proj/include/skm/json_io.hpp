#pragma once

#include <cmath>
#include <string>

#include <json.hpp>

#include "skm/diagnostics.hpp"
#include "skm/harness.hpp"
#include "skm/rng.hpp"
#include "skm/version.hpp"

namespace skm {

namespace detail {

// JSON has no infinity; unbounded margins are written as null.
inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline nlohmann::json pairs_to_json(const std::vector<PairMargin>& pairs) {
  auto arr = nlohmann::json::array();
  for (const auto& p : pairs) arr.push_back({{"r", p.r}, {"s", p.s}, {"margin", finite_or_null(p.margin)}, {"point", p.point}});
  return arr;
}

}  // namespace detail

inline nlohmann::json to_json(const Matching& m) {
  auto perm = nlohmann::json::array();
  for (auto p : m.permutation) perm.push_back(p == kUnmatched ? nlohmann::json(nullptr) : nlohmann::json(p));
  return {{"permutation", perm}, {"delta", m.delta}, {"in_definition_domain", m.in_definition_domain}};
}

inline nlohmann::json to_json(const MarginReport& m) {
  return {{"delta", detail::finite_or_null(m.delta)},
          {"r", m.r},
          {"s", m.s},
          {"point", m.point},
          {"boundary", m.boundary},
          {"pairs", detail::pairs_to_json(m.pairs)}};
}

inline nlohmann::json to_json(const StationarityReport& s) {
  nlohmann::json j = {{"is_stationary", s.is_stationary}, {"drift", s.drift}, {"phi", s.phi}, {"boundary", s.boundary}};
  j["r_min_estimate"] = s.r_min_estimate ? detail::finite_or_null(*s.r_min_estimate) : nlohmann::json(nullptr);
  return j;
}

inline nlohmann::json to_json(const ClusterabilityReport& c) {
  return {{"phi_star", c.phi_star},
          {"delta", detail::finite_or_null(c.delta)},
          {"pairs", detail::pairs_to_json(c.pairs)},
          {"f_max", detail::finite_or_null(c.f_max)},
          {"floor", c.floor},
          {"floor_alt", c.floor_alt},
          {"satisfied", c.satisfied},
          {"p_min", c.p_min},
          {"w_min", c.w_min},
          {"w", c.w},
          {"stationary", c.stationary}};
}

inline nlohmann::json to_json(const CostReport& c) { return {{"total", c.total}, {"per_cluster", c.per_cluster}}; }

/// meta.json for an experiment: everything needed to reproduce the outputs.
inline nlohmann::json experiment_meta(const ExperimentBundle& b) {
  const auto& s = b.spec;
  nlohmann::json j;
  j["software"] = {{"name", "skm"}, {"version", kVersion}};
  j["prng"] = kPrngName;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["data"] = {{"name", s.data.name}};
  switch (s.data.kind) {
    case DataSource::Kind::gauss:
      j["data"]["source"] = "gauss";
      j["data"]["n"] = s.data.n;
      j["data"]["mixture"] = {{"k", s.data.mixture.k},
                              {"d", s.data.mixture.d},
                              {"weights", s.data.mixture.weights},
                              {"means", s.data.mixture.means},
                              {"sigmas", s.data.mixture.sigmas},
                              {"seed", s.data.mixture.seed}};
      break;
    case DataSource::Kind::csv:
      j["data"]["source"] = "csv";
      j["data"]["path"] = s.data.path;
      break;
    case DataSource::Kind::svmlight:
      j["data"]["source"] = "svmlight";
      j["data"]["path"] = s.data.path;
      if (s.data.dim) j["data"]["dim"] = *s.data.dim;
      break;
  }
  j["k"] = s.ks;
  j["m"] = s.ms;
  j["epochs"] = s.epochs;
  j["epoch_length"] = s.epoch_lengths;
  j["repeats"] = s.repeats;
  j["batch_iterations"] = s.batch_iterations;
  j["seeding"] = s.seeding == SeedMethod::buckshot ? "buckshot" : "random";
  j["m0"] = s.m0;
  auto per_k = nlohmann::json::object();
  for (const auto& [k, ks] : b.per_k) {
    per_k[std::to_string(k)] = {
        {"init_seed", ks.init_seed}, {"phi0", ks.phi0}, {"phi_batch", ks.phi_batch}, {"phi_min", ks.phi_min}};
  }
  j["per_k"] = per_k;
  auto cells = nlohmann::json::array();
  for (const auto& c : b.cells) {
    cells.push_back({{"key", c.key},
                     {"k", c.k},
                     {"m", c.m},
                     {"epoch_length", c.epoch_length},
                     {"iterations", c.iterations},
                     {"schedule", c.schedule.label()},
                     {"seeds", c.seeds},
                     {"final_phi", c.final_phi}});
  }
  j["cells"] = cells;
  return j;
}

}  // namespace skm
