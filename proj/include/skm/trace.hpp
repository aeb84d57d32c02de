#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <type_traits>
#include <string>
#include <vector>

#include "skm/dataset.hpp"

namespace skm {

/// One evaluated iteration of a run.
struct TraceRecord {
  std::uint64_t t = 0;
  std::optional<double> phi;         // k-means cost of the centroids after iteration t
  std::vector<double> eta;           // learning rate used per cluster (0 where not updated)
  std::vector<std::uint64_t> nhat;   // mini-batch hits per cluster
  std::optional<double> delta;       // centroidal distance to a reference solution
};

struct RunTrace {
  std::optional<double> initial_phi;  // cost of the starting centroids
  std::vector<TraceRecord> records;   // t strictly increasing

  std::vector<double> phis() const {
    std::vector<double> out;
    for (const auto& r : records) {
      if (r.phi) out.push_back(*r.phi);
    }
    return out;
  }
};

namespace detail {

inline void write_json_number(std::ostream& out, double v) { out << format_double(v); }

template <class T>
void write_json_array(std::ostream& out, const std::vector<T>& values) {
  out << '[';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ',';
    if constexpr (std::is_floating_point_v<T>) {
      write_json_number(out, values[i]);
    } else {
      out << values[i];
    }
  }
  out << ']';
}

}  // namespace detail

/// One JSON object per line: {"t":int,"phi":float,"eta":[...],"nhat":[...],"delta":float|null}.
inline void write_ndjson(const RunTrace& trace, std::ostream& out) {
  for (const auto& rec : trace.records) {
    out << "{\"t\":" << rec.t << ",\"phi\":";
    if (rec.phi) {
      detail::write_json_number(out, *rec.phi);
    } else {
      out << "null";
    }
    out << ",\"eta\":";
    detail::write_json_array(out, rec.eta);
    out << ",\"nhat\":";
    detail::write_json_array(out, rec.nhat);
    out << ",\"delta\":";
    if (rec.delta) {
      detail::write_json_number(out, *rec.delta);
    } else {
      out << "null";
    }
    out << "}\n";
  }
}

}  // namespace skm
