// Copyright 2026 The qstab authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "qstab/model.hpp"

namespace qstab {

/// Bin count chosen as ceil(sqrt(n)) from the larger sample. The default.
struct AutoBins {
  bool operator==(const AutoBins&) const = default;
};

struct FixedCount {
  std::size_t bins{1};
  bool operator==(const FixedCount&) const = default;
};

struct FixedWidth {
  double width{1.0};
  bool operator==(const FixedWidth&) const = default;
};

struct SharedEdges {
  std::vector<double> edges;
  bool operator==(const SharedEdges&) const = default;
};

using BinMode = std::variant<AutoBins, FixedCount, FixedWidth, SharedEdges>;

struct JointMinMax {
  bool operator==(const JointMinMax&) const = default;
};

struct ExplicitRange {
  double lo{0.0};
  double hi{1.0};
  bool operator==(const ExplicitRange&) const = default;
};

using RangePolicy = std::variant<JointMinMax, ExplicitRange>;

/// How to turn two raw samples into histograms over one shared edge set.
/// Shared edges are the one hard requirement for the discrete overlap sum;
/// everything else is configuration.
struct BinningSpec {
  BinMode mode{AutoBins{}};
  RangePolicy range{JointMinMax{}};

  bool operator==(const BinningSpec&) const = default;
};

namespace detail {

inline void check_bin_mode(const BinMode& mode) {
  if (const auto* fc = std::get_if<FixedCount>(&mode)) {
    if (fc->bins < 1) throw ValidationError("bin count must be at least 1");
  } else if (const auto* fw = std::get_if<FixedWidth>(&mode)) {
    if (!(fw->width > 0.0)) throw ValidationError("bin width must be positive");
  } else if (const auto* se = std::get_if<SharedEdges>(&mode)) {
    if (se->edges.size() < 2) throw ValidationError("shared edges need at least one bin");
    for (std::size_t i = 1; i < se->edges.size(); ++i) {
      if (!(se->edges[i - 1] < se->edges[i])) {
        throw ValidationError("shared edges must be strictly increasing");
      }
    }
  }
}

inline std::vector<std::uint64_t> bin_values(std::span<const double> values,
                                             const std::vector<double>& edges) {
  std::vector<std::uint64_t> counts(edges.size() - 1, 0);
  for (const double v : values) {
    // Bins are half-open [e_i, e_{i+1}); the last bin also takes its upper
    // edge. Out-of-range values land in the nearest boundary bin.
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    std::ptrdiff_t idx = (it - edges.begin()) - 1;
    idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(counts.size()) - 1);
    ++counts[static_cast<std::size_t>(idx)];
  }
  return counts;
}

}  // namespace detail

/// Resolves a BinningSpec against two samples into one concrete edge set.
inline std::vector<double> resolve_bin_edges(std::span<const double> a, std::span<const double> b,
                                             const BinningSpec& spec) {
  detail::check_bin_mode(spec.mode);
  if (const auto* se = std::get_if<SharedEdges>(&spec.mode)) return se->edges;

  double lo = 0.0, hi = 0.0;
  if (const auto* er = std::get_if<ExplicitRange>(&spec.range)) {
    if (!(er->lo < er->hi)) throw ValidationError("explicit range must satisfy lo < hi");
    lo = er->lo;
    hi = er->hi;
  } else {
    if (a.empty() || b.empty()) throw ValidationError("cannot bin an empty sample");
    const auto [amin, amax] = std::minmax_element(a.begin(), a.end());
    const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
    lo = std::min(*amin, *bmin);
    hi = std::max(*amax, *bmax);
  }

  if (const auto* fw = std::get_if<FixedWidth>(&spec.mode)) {
    std::vector<double> edges{lo};
    double e = lo;
    do {
      e += fw->width;
      edges.push_back(e);
    } while (e < hi);
    return edges;
  }

  std::size_t bins = 1;
  if (const auto* fc = std::get_if<FixedCount>(&spec.mode)) {
    bins = fc->bins;
  } else {
    bins = static_cast<std::size_t>(
        std::ceil(std::sqrt(static_cast<double>(std::max(a.size(), b.size())))));
    bins = std::max<std::size_t>(bins, 1);
  }

  if (lo == hi) {
    // All values identical: one degenerate bin holding everything.
    return {lo - 0.5, lo + 0.5};
  }
  std::vector<double> edges(bins + 1);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t i = 0; i <= bins; ++i) edges[i] = lo + width * static_cast<double>(i);
  edges.back() = hi;  // guard against accumulated rounding
  return edges;
}

/// Bins two samples onto one shared edge set so they can be compared.
inline std::pair<Histogram, Histogram> build_histograms(std::span<const double> a,
                                                        std::span<const double> b,
                                                        const BinningSpec& spec = {}) {
  if (a.empty() || b.empty()) throw ValidationError("cannot build histograms from empty samples");
  const std::vector<double> edges = resolve_bin_edges(a, b, spec);
  Histogram ha = make_histogram(edges, detail::bin_values(a, edges));
  Histogram hb = make_histogram(edges, detail::bin_values(b, edges));
  return {std::move(ha), std::move(hb)};
}

namespace detail {

inline void check_comparable(const Histogram& p, const Histogram& q) {
  if (p.bin_edges != q.bin_edges) {
    throw IncompatibleHistogramError("histograms do not share bin edges");
  }
  if (p.total == 0 || q.total == 0) {
    throw ValidationError("cannot compare a histogram with zero total count");
  }
}

// Exact test for p_i == q_i on every bin via integer cross-multiplication.
inline bool same_distribution(const Histogram& p, const Histogram& q) {
  for (std::size_t i = 0; i < p.bins(); ++i) {
    const auto lhs = static_cast<unsigned __int128>(p.counts[i]) * q.total;
    const auto rhs = static_cast<unsigned __int128>(q.counts[i]) * p.total;
    if (lhs != rhs) return false;
  }
  return true;
}

}  // namespace detail

/// Overlap of two binned distributions: sum over bins of sqrt(p_i * q_i).
/// Identical distributions give exactly 1 (checked in integer arithmetic so
/// the distance of a histogram to itself is exactly 0).
inline double bhattacharyya(const Histogram& p, const Histogram& q) {
  detail::check_comparable(p, q);
  if (detail::same_distribution(p, q)) return 1.0;
  double bc = 0.0;
  for (std::size_t i = 0; i < p.bins(); ++i) {
    bc += std::sqrt(p.probability(i) * q.probability(i));
  }
  return std::clamp(bc, 0.0, 1.0);
}

/// Hellinger distance sqrt(1 - BC): 0 for identical distributions, 1 for
/// distributions with no overlap.
inline double hellinger(const Histogram& p, const Histogram& q) {
  const double bc = bhattacharyya(p, q);
  return std::sqrt(std::max(0.0, 1.0 - bc));
}

/// Convenience: bin two raw samples with a shared spec, then measure them.
inline double hellinger(std::span<const double> a, std::span<const double> b,
                        const BinningSpec& spec = {}) {
  const auto [ha, hb] = build_histograms(a, b, spec);
  return hellinger(ha, hb);
}

}  // namespace qstab
