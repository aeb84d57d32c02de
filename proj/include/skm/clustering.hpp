#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "skm/error.hpp"

namespace skm {

/// A hard partition of the points into k label slots. Slots may be empty.
struct Clustering {
  std::size_t k = 0;
  std::vector<std::size_t> labels;  // one per point, each in [0, k)
  std::vector<std::size_t> sizes;   // sizes[r] = #{i : labels[i] == r}

  /// Builds sizes from labels; throws InvalidArgument on an out-of-range label.
  static Clustering from_labels(std::vector<std::size_t> labels, std::size_t k) {
    Clustering out;
    out.k = k;
    out.sizes.assign(k, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] >= k) {
        throw InvalidArgument("label " + std::to_string(labels[i]) + " of point " + std::to_string(i) +
                              " is out of range for k=" + std::to_string(k));
      }
      ++out.sizes[labels[i]];
    }
    out.labels = std::move(labels);
    return out;
  }

  std::size_t size() const noexcept { return labels.size(); }

  std::size_t nonempty_count() const noexcept {
    std::size_t c = 0;
    for (auto s : sizes) c += (s > 0);
    return c;
  }

  friend bool operator==(const Clustering&, const Clustering&) = default;
};

}  // namespace skm
