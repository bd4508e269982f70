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
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qstab/distance.hpp"
#include "qstab/model.hpp"

namespace qstab {

/// Reference window slides with the evaluation time (lagged by `lag`).
struct Sliding {
  bool operator==(const Sliding&) const = default;
};

/// Reference window is pinned to [t0, t0 + window).
struct FixedOrigin {
  Timestamp t0;
  bool operator==(const FixedOrigin&) const = default;
};

using ReferenceMode = std::variant<Sliding, FixedOrigin>;

struct TemporalOptions {
  std::int64_t stride_seconds{0};  // 0 means: use the lag (minimum one second)
  std::size_t min_count{10};       // windows thinner than this are skipped
};

/// H(t) over the evaluation grid, plus the skipped times and the median
/// (the dashed-line summary statistic).
struct TemporalStabilityResult {
  std::vector<Timestamp> times;
  std::vector<double> distances;
  std::int64_t window_seconds{0};
  std::int64_t lag_seconds{0};
  ReferenceMode mode{Sliding{}};
  double median{0.0};
  std::vector<Timestamp> skipped;
};

namespace detail {

inline std::vector<double> window_values(const MetricSeries& series, std::int64_t begin,
                                         std::int64_t end) {
  // Points are sorted; gather values with begin <= t < end.
  const auto lo = std::lower_bound(
      series.points.begin(), series.points.end(), begin,
      [](const SeriesPoint& p, std::int64_t t) { return p.time.epoch_seconds < t; });
  std::vector<double> out;
  for (auto it = lo; it != series.points.end() && it->time.epoch_seconds < end; ++it) {
    out.push_back(it->value);
  }
  return out;
}

inline double median_of(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace detail

/// Temporal stability: Hellinger distance between the metric's distribution
/// in the current window [t - window, t) and a reference window, swept over
/// an evaluation grid.
///
/// Sliding mode compares against [t - lag - window, t - lag); FixedOrigin
/// compares against [t0, t0 + window). The grid starts at the first t where
/// both windows fit inside the series and steps by the stride (default: the
/// lag). Evaluation points where either window holds fewer than `min_count`
/// values are skipped and flagged.
inline TemporalStabilityResult temporal_stability(const MetricSeries& series,
                                                  std::int64_t window_seconds,
                                                  std::int64_t lag_seconds,
                                                  const ReferenceMode& mode = Sliding{},
                                                  const BinningSpec& spec = {},
                                                  const TemporalOptions& options = {}) {
  if (window_seconds <= 0) throw ValidationError("window must be positive");
  if (lag_seconds < 0) throw ValidationError("lag must be non-negative");
  if (series.points.size() < 2) throw ValidationError("series too short for temporal analysis");

  const std::int64_t t_first = series.points.front().time.epoch_seconds;
  const std::int64_t t_last = series.points.back().time.epoch_seconds;
  const bool sliding = std::holds_alternative<Sliding>(mode);
  const std::int64_t origin = sliding ? 0 : std::get<FixedOrigin>(mode).t0.epoch_seconds;

  std::int64_t start = 0;
  if (sliding) {
    if (t_last - t_first < window_seconds + lag_seconds) {
      throw ValidationError("series span is shorter than window + lag");
    }
    start = t_first + window_seconds + lag_seconds;
  } else {
    if (t_last <= origin + window_seconds) {
      throw ValidationError("series does not reach past the fixed-origin window");
    }
    start = std::max(origin, t_first) + window_seconds;
  }

  const std::int64_t stride =
      options.stride_seconds > 0 ? options.stride_seconds : std::max<std::int64_t>(lag_seconds, 1);
  const std::size_t min_count = std::max<std::size_t>(options.min_count, 1);

  TemporalStabilityResult result;
  result.window_seconds = window_seconds;
  result.lag_seconds = lag_seconds;
  result.mode = mode;

  for (std::int64_t t = start; t <= t_last; t += stride) {
    const std::vector<double> current = detail::window_values(series, t - window_seconds, t);
    std::vector<double> reference;
    if (sliding) {
      reference = detail::window_values(series, t - lag_seconds - window_seconds, t - lag_seconds);
    } else {
      reference = detail::window_values(series, origin, origin + window_seconds);
    }
    const Timestamp eval{t, series.points.front().time.offset_minutes};
    if (current.size() < min_count || reference.size() < min_count) {
      result.skipped.push_back(eval);
      continue;
    }
    const auto [ref_hist, cur_hist] = build_histograms(reference, current, spec);
    result.times.push_back(eval);
    result.distances.push_back(hellinger(ref_hist, cur_hist));
  }

  result.median = detail::median_of(result.distances);
  return result;
}

/// A named sample set; the engine under spatial and inter-device stability.
struct LabeledSamples {
  std::string label;
  std::vector<double> values;
};

/// Pairwise Hellinger distances between labeled sample sets. Bin edges are
/// resolved per compared pair (the shared-edge requirement is pairwise).
/// Empty sample sets are excluded with a warning; at least two must remain.
inline DistanceMatrix pairwise_distance(std::span<const LabeledSamples> samples,
                                        const BinningSpec& spec = {},
                                        Diagnostics* diag = nullptr) {
  std::vector<const LabeledSamples*> kept;
  for (const LabeledSamples& s : samples) {
    if (s.values.empty()) {
      warn(diag, "excluding '" + s.label + "': empty sample set");
      continue;
    }
    kept.push_back(&s);
  }
  if (kept.size() < 2) {
    throw ValidationError("pairwise distance needs at least two non-empty sample sets");
  }

  std::vector<std::string> labels;
  labels.reserve(kept.size());
  for (const LabeledSamples* s : kept) labels.push_back(s->label);
  DistanceMatrix matrix = make_distance_matrix(std::move(labels));

  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (std::size_t j = i + 1; j < kept.size(); ++j) {
      const double d = hellinger(kept[i]->values, kept[j]->values, spec);
      matrix.at(i, j) = d;
      matrix.at(j, i) = d;
    }
  }
  return matrix;
}

/// Spatial stability H(i,j): distance between the full-history distributions
/// of one metric at two locations. Labels come from each series' location, in
/// supply order.
inline DistanceMatrix spatial_stability(std::span<const MetricSeries> series_by_location,
                                        const BinningSpec& spec = {},
                                        Diagnostics* diag = nullptr) {
  std::vector<LabeledSamples> samples;
  samples.reserve(series_by_location.size());
  for (const MetricSeries& s : series_by_location) {
    samples.push_back(LabeledSamples{location_label(s.location), s.values()});
  }
  return pairwise_distance(samples, spec, diag);
}

/// Inter-device stability: as spatial_stability but labeled by device.
inline DistanceMatrix interdevice_stability(std::span<const MetricSeries> series_by_device,
                                            const BinningSpec& spec = {},
                                            Diagnostics* diag = nullptr) {
  std::vector<LabeledSamples> samples;
  samples.reserve(series_by_device.size());
  for (const MetricSeries& s : series_by_device) {
    samples.push_back(LabeledSamples{s.device_id, s.values()});
  }
  return pairwise_distance(samples, spec, diag);
}

}  // namespace qstab
