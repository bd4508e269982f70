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
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qstab/errors.hpp"
#include "qstab/time.hpp"

namespace qstab {

/// Unordered register pair, canonicalized as (min, max).
struct Edge {
  int a{0};
  int b{0};

  auto operator<=>(const Edge&) const = default;
};

inline Edge make_edge(int i, int j) {
  if (i == j) throw ValidationError("edge endpoints must differ (got " + std::to_string(i) + ")");
  if (i < 0 || j < 0) throw ValidationError("edge endpoints must be non-negative");
  return i < j ? Edge{i, j} : Edge{j, i};
}

/// A register index or an edge; where a metric lives on the device.
using Location = std::variant<int, Edge>;

inline std::string location_label(const Location& loc) {
  if (std::holds_alternative<int>(loc)) return "q" + std::to_string(std::get<int>(loc));
  const Edge e = std::get<Edge>(loc);
  return "q" + std::to_string(e.a) + "-q" + std::to_string(e.b);
}

/// Accepts "3", "q3", "0-1", "q0-q1".
inline Location parse_location(std::string_view text) {
  const auto strip_q = [](std::string_view s) {
    return (!s.empty() && s.front() == 'q') ? s.substr(1) : s;
  };
  const auto to_index = [&](std::string_view s) -> int {
    s = strip_q(s);
    if (s.empty()) throw ParseError("malformed location '" + std::string(text) + "'");
    int v = 0;
    for (const char c : s) {
      if (c < '0' || c > '9') throw ParseError("malformed location '" + std::string(text) + "'");
      v = v * 10 + (c - '0');
    }
    return v;
  };
  const auto dash = text.find('-');
  if (dash == std::string_view::npos) return to_index(text);
  return make_edge(to_index(text.substr(0, dash)), to_index(text.substr(dash + 1)));
}

/// Device connectivity: register count plus the 2-qubit coupling edges.
struct DeviceTopology {
  std::string device_id;
  int capacity{0};
  std::vector<Edge> edges;  // sorted, unique, canonical
};

inline DeviceTopology make_topology(std::string device_id, int capacity, std::vector<Edge> edges) {
  if (capacity <= 0) throw ValidationError("topology capacity must be positive");
  for (Edge& e : edges) {
    e = make_edge(e.a, e.b);
    if (e.b >= capacity) {
      throw ValidationError("edge endpoint " + std::to_string(e.b) + " outside capacity " +
                            std::to_string(capacity));
    }
  }
  std::sort(edges.begin(), edges.end());
  if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
    throw ValidationError("duplicate edge in topology");
  }
  return DeviceTopology{std::move(device_id), capacity, std::move(edges)};
}

/// The register pairs eligible for Bell-state addressability analysis:
/// exactly the device's coupling edges.
inline std::vector<Edge> nearest_neighbor_pairs(const DeviceTopology& topology) {
  return topology.edges;
}

/// All C(n,2) unordered register pairs.
inline std::vector<Edge> all_register_pairs(int n) {
  if (n < 2) throw ValidationError("register pair enumeration needs capacity >= 2");
  std::vector<Edge> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) pairs.push_back(Edge{i, j});
  }
  return pairs;
}

/// One timestamped snapshot of device parameters. Maps are sparse: an absent
/// key means the source row had no value for it, and downstream metrics skip
/// it. cnot_length is only populated where the source carried gate durations.
struct CalibrationRecord {
  Timestamp last_update;
  std::map<int, double> readout_error;
  std::map<int, Timestamp> readout_cal_time;
  std::map<Edge, double> cnot_error;
  std::map<Edge, Timestamp> cnot_cal_time;
  std::map<int, Duration> t2;
  std::map<int, Timestamp> t2_cal_time;
  std::map<Edge, Duration> cnot_length;
  std::map<Edge, Timestamp> cnot_length_cal_time;
  // Raw directed column prefix per edge ("cx10" when the source listed the
  // control first); canonical keys keep direction as metadata only.
  std::map<Edge, std::string> cnot_source_label;

  bool has_gate_length() const { return !cnot_length.empty(); }

  bool operator==(const CalibrationRecord&) const = default;
};

inline void validate(const CalibrationRecord& record) {
  for (const auto& [reg, e] : record.readout_error) {
    if (!(e >= 0.0 && e <= 1.0)) {
      throw ValidationError("readout error for q" + std::to_string(reg) + " outside [0,1]");
    }
  }
  for (const auto& [edge, e] : record.cnot_error) {
    if (!(e >= 0.0 && e <= 1.0)) {
      throw ValidationError("gate error for " + location_label(edge) + " outside [0,1]");
    }
  }
  for (const auto& [reg, d] : record.t2) {
    if (!(d.seconds() > 0.0)) {
      throw ValidationError("T2 for q" + std::to_string(reg) + " must be positive");
    }
  }
  for (const auto& [edge, d] : record.cnot_length) {
    if (!(d.seconds() > 0.0)) {
      throw ValidationError("gate length for " + location_label(edge) + " must be positive");
    }
  }
}

/// State prepared before readout: the all-zeros fiducial state or a Bell pair
/// on one edge.
struct PreparedState {
  enum class Kind { AllZeros, BellPair };

  Kind kind{Kind::AllZeros};
  Edge pair{};  // meaningful for BellPair only

  bool operator==(const PreparedState&) const = default;
};

inline std::string prepared_state_label(const PreparedState& s) {
  if (s.kind == PreparedState::Kind::AllZeros) return "all_zeros";
  return "bell_pair:" + std::to_string(s.pair.a) + "-" + std::to_string(s.pair.b);
}

inline PreparedState parse_prepared_state(std::string_view text) {
  if (text == "all_zeros") return PreparedState{};
  constexpr std::string_view prefix = "bell_pair:";
  if (text.substr(0, prefix.size()) == prefix) {
    const Location loc = parse_location(text.substr(prefix.size()));
    if (!std::holds_alternative<Edge>(loc)) {
      throw ParseError("bell_pair needs an edge, got '" + std::string(text) + "'");
    }
    return PreparedState{PreparedState::Kind::BellPair, std::get<Edge>(loc)};
  }
  throw ParseError("unknown prepared state '" + std::string(text) + "'");
}

/// shots x registers binary outcome matrix from repeated measurement.
struct ReadoutMatrix {
  std::string device_id;
  PreparedState prepared_state;
  Timestamp window_start;
  Timestamp window_end;
  std::vector<int> register_labels;
  std::vector<std::uint8_t> bits;  // row-major, entries 0/1
  std::size_t shots{0};

  std::size_t registers() const { return register_labels.size(); }

  std::uint8_t bit(std::size_t shot, std::size_t column) const {
    return bits[shot * register_labels.size() + column];
  }

  std::optional<std::size_t> column_of(int register_index) const {
    for (std::size_t c = 0; c < register_labels.size(); ++c) {
      if (register_labels[c] == register_index) return c;
    }
    return std::nullopt;
  }

  bool operator==(const ReadoutMatrix&) const = default;
};

inline void validate(const ReadoutMatrix& m) {
  if (m.shots < 1) throw ValidationError("readout matrix needs at least one shot");
  if (m.register_labels.empty()) throw ValidationError("readout matrix needs at least one register");
  if (m.bits.size() != m.shots * m.register_labels.size()) {
    throw ValidationError("readout matrix bit storage does not match shots x registers");
  }
  for (const std::uint8_t b : m.bits) {
    if (b > 1) throw ValidationError("readout matrix entries must be 0 or 1");
  }
}

/// The five Table-1 metrics plus the raw quantities they are derived from.
enum class MetricKind {
  InitFidelity,
  GateFidelity,
  DutyCycle,
  Addressability,
  Nmi,
  T2,
  GateDuration,
};

inline std::string metric_kind_label(MetricKind kind) {
  switch (kind) {
    case MetricKind::InitFidelity: return "init_fidelity";
    case MetricKind::GateFidelity: return "gate_fidelity";
    case MetricKind::DutyCycle: return "duty_cycle";
    case MetricKind::Addressability: return "addressability";
    case MetricKind::Nmi: return "nmi";
    case MetricKind::T2: return "t2";
    case MetricKind::GateDuration: return "gate_duration";
  }
  throw ValidationError("unknown metric kind");
}

inline MetricKind parse_metric_kind(std::string_view text) {
  if (text == "init_fidelity") return MetricKind::InitFidelity;
  if (text == "gate_fidelity") return MetricKind::GateFidelity;
  if (text == "duty_cycle") return MetricKind::DutyCycle;
  if (text == "addressability") return MetricKind::Addressability;
  if (text == "nmi") return MetricKind::Nmi;
  if (text == "t2") return MetricKind::T2;
  if (text == "gate_duration") return MetricKind::GateDuration;
  throw ParseError("unknown metric kind '" + std::string(text) + "'");
}

struct SeriesPoint {
  Timestamp time;
  double value{0.0};

  bool operator==(const SeriesPoint&) const = default;
};

/// (timestamp, value) sequence for one metric at one location of one device.
struct MetricSeries {
  MetricKind kind{MetricKind::InitFidelity};
  Location location{0};
  std::string device_id;
  std::vector<SeriesPoint> points;

  std::vector<double> values() const {
    std::vector<double> out;
    out.reserve(points.size());
    for (const SeriesPoint& p : points) out.push_back(p.value);
    return out;
  }

  bool operator==(const MetricSeries&) const = default;
};

inline bool is_fidelity_kind(MetricKind kind) {
  return kind == MetricKind::InitFidelity || kind == MetricKind::GateFidelity ||
         kind == MetricKind::Addressability || kind == MetricKind::Nmi;
}

inline void validate(const MetricSeries& series) {
  for (std::size_t i = 1; i < series.points.size(); ++i) {
    if (!(series.points[i - 1].time.epoch_seconds < series.points[i].time.epoch_seconds)) {
      throw ValidationError("metric series timestamps must be strictly increasing");
    }
  }
  for (const SeriesPoint& p : series.points) {
    if (is_fidelity_kind(series.kind) && !(p.value >= 0.0 && p.value <= 1.0)) {
      throw ValidationError("fidelity-kind series value outside [0,1]");
    }
    if (series.kind == MetricKind::DutyCycle && !(p.value >= 0.0)) {
      throw ValidationError("duty-cycle series value must be non-negative");
    }
  }
}

/// Binned empirical distribution over explicit shared bin edges.
struct Histogram {
  std::vector<double> bin_edges;        // b+1, strictly increasing
  std::vector<std::uint64_t> counts;    // b
  std::uint64_t total{0};

  std::size_t bins() const { return counts.size(); }

  double probability(std::size_t bin) const {
    return total == 0 ? 0.0 : static_cast<double>(counts[bin]) / static_cast<double>(total);
  }

  bool operator==(const Histogram&) const = default;
};

inline Histogram make_histogram(std::vector<double> bin_edges, std::vector<std::uint64_t> counts) {
  if (bin_edges.size() < 2) throw ValidationError("histogram needs at least one bin");
  if (counts.size() + 1 != bin_edges.size()) {
    throw ValidationError("histogram counts/edges size mismatch");
  }
  for (std::size_t i = 1; i < bin_edges.size(); ++i) {
    if (!(bin_edges[i - 1] < bin_edges[i])) {
      throw ValidationError("histogram bin edges must be strictly increasing");
    }
  }
  std::uint64_t total = 0;
  for (const std::uint64_t c : counts) total += c;
  return Histogram{std::move(bin_edges), std::move(counts), total};
}

/// Labeled symmetric matrix of pairwise distances in [0,1].
struct DistanceMatrix {
  std::vector<std::string> labels;
  std::vector<double> values;  // row-major size() x size()

  std::size_t size() const { return labels.size(); }

  double at(std::size_t i, std::size_t j) const { return values[i * labels.size() + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * labels.size() + j]; }

  bool operator==(const DistanceMatrix&) const = default;
};

inline DistanceMatrix make_distance_matrix(std::vector<std::string> labels) {
  const std::size_t n = labels.size();
  return DistanceMatrix{std::move(labels), std::vector<double>(n * n, 0.0)};
}

inline void validate(const DistanceMatrix& m) {
  const std::size_t n = m.size();
  if (m.values.size() != n * n) throw ValidationError("distance matrix storage mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    if (m.at(i, i) != 0.0) throw ValidationError("distance matrix diagonal must be zero");
    for (std::size_t j = 0; j < n; ++j) {
      const double v = m.at(i, j);
      if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("distance matrix entry outside [0,1]");
      if (v != m.at(j, i)) throw ValidationError("distance matrix must be symmetric");
    }
  }
}

struct RBPoint {
  int sequence_length{0};
  double survival{0.0};

  bool operator==(const RBPoint&) const = default;
};

/// Survival probability vs Clifford sequence length, plus the group dimension
/// (4 for two-register Clifford benchmarking).
struct RBDecayData {
  std::vector<RBPoint> points;
  int dimension{4};
};

inline void validate(const RBDecayData& data) {
  if (data.points.size() < 3) throw ValidationError("decay fit needs at least 3 sequence lengths");
  if (data.dimension < 2) throw ValidationError("decay data dimension must be at least 2");
  for (std::size_t i = 0; i < data.points.size(); ++i) {
    const RBPoint& p = data.points[i];
    if (p.sequence_length < 1) throw ValidationError("sequence lengths must be positive");
    if (i > 0 && p.sequence_length <= data.points[i - 1].sequence_length) {
      throw ValidationError("sequence lengths must be strictly increasing");
    }
    if (!(p.survival >= 0.0 && p.survival <= 1.0)) {
      throw ValidationError("survival probabilities must lie in [0,1]");
    }
  }
}

}  // namespace qstab
