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
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "qstab/model.hpp"

namespace qstab {

/// Deterministic stream generator: xoshiro256** seeded through splitmix64.
/// Uniforms take the top 53 bits; Gaussians use Box-Muller and consume
/// exactly two uniforms per draw. The algorithms are fixed so ports can
/// reproduce the stream from the seed alone.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) {
      // splitmix64 step
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      word = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0,1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; u1 is shifted into (0,1].
  double next_gaussian() {
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> state_{};
};

/// Base level, daily Gaussian jitter, and scheduled step changes for one
/// device parameter at one location.
struct ParamDrift {
  double base{0.0};
  double jitter{0.0};
  std::vector<std::pair<Timestamp, double>> steps;  // (time, new base), sorted

  double base_at(const Timestamp& t) const {
    double level = base;
    for (const auto& [when, value] : steps) {
      if (when.epoch_seconds <= t.epoch_seconds) level = value;
    }
    return level;
  }
};

/// Ground-truth drift description for a whole device. Durations are in
/// seconds; the unit strings control how generated records are labeled.
struct DriftModel {
  std::string device_id{"synthetic"};
  std::map<int, ParamDrift> readout_error;
  std::map<int, ParamDrift> t2;             // seconds
  std::map<Edge, ParamDrift> cnot_error;
  std::map<Edge, ParamDrift> cnot_length;   // seconds
  std::string t2_unit{"us"};
  std::string cnot_length_unit{"ns"};
  std::uint64_t seed{0};
};

namespace detail {

inline double clip_rate(double v) { return std::clamp(v, 0.0, 1.0); }
inline double clip_duration(double v) { return std::max(v, 1e-12); }

inline double drift_value(const ParamDrift& drift, const Timestamp& t, Rng& rng) {
  const double level = drift.base_at(t);
  return drift.jitter > 0.0 ? level + drift.jitter * rng.next_gaussian() : level;
}

}  // namespace detail

/// One record per cadence tick in [start, end]. Deterministic given the
/// model seed: locations are visited in canonical order, parameters in a
/// fixed order per location. Out-of-range draws are clipped, not resampled,
/// so the stream stays aligned.
inline std::vector<CalibrationRecord> generate_calibration(const DriftModel& model,
                                                           const DeviceTopology& topology,
                                                           Timestamp start, Timestamp end,
                                                           std::int64_t cadence_seconds) {
  if (!(start.epoch_seconds < end.epoch_seconds)) {
    throw ValidationError("generation window must satisfy start < end");
  }
  if (cadence_seconds <= 0) throw ValidationError("cadence must be positive");
  for (const auto& [reg, drift] : model.readout_error) {
    if (reg < 0 || reg >= topology.capacity) {
      throw ValidationError("drift model register q" + std::to_string(reg) + " outside topology");
    }
    (void)drift;
  }
  for (const auto& [edge, drift] : model.cnot_error) {
    if (!std::binary_search(topology.edges.begin(), topology.edges.end(), edge)) {
      throw ValidationError("drift model edge " + location_label(edge) + " not in topology");
    }
    (void)drift;
  }

  Rng rng(model.seed);
  std::vector<CalibrationRecord> records;
  for (std::int64_t tick = start.epoch_seconds; tick <= end.epoch_seconds;
       tick += cadence_seconds) {
    const Timestamp now{tick, start.offset_minutes};
    CalibrationRecord rec;
    rec.last_update = now;
    for (const auto& [reg, drift] : model.readout_error) {
      rec.readout_error[reg] = detail::clip_rate(detail::drift_value(drift, now, rng));
      rec.readout_cal_time[reg] = now;
    }
    for (const auto& [reg, drift] : model.t2) {
      const double seconds = detail::clip_duration(detail::drift_value(drift, now, rng));
      rec.t2[reg] = duration_from_seconds(seconds, model.t2_unit);
      rec.t2_cal_time[reg] = now;
    }
    for (const auto& [edge, drift] : model.cnot_error) {
      rec.cnot_error[edge] = detail::clip_rate(detail::drift_value(drift, now, rng));
      rec.cnot_cal_time[edge] = now;
    }
    for (const auto& [edge, drift] : model.cnot_length) {
      const double seconds = detail::clip_duration(detail::drift_value(drift, now, rng));
      rec.cnot_length[edge] = duration_from_seconds(seconds, model.cnot_length_unit);
      rec.cnot_length_cal_time[edge] = now;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

/// Joint outcome probabilities for correlated register pairs; registers not
/// covered by any pair read 1 with probability `background_error`.
struct PairCorrelationModel {
  std::string device_id{"synthetic"};
  std::map<Edge, std::array<double, 4>> pair_probs;  // p00, p01, p10, p11
  double background_error{0.0};
  PreparedState prepared{};
  Timestamp window_start{};
  Timestamp window_end{};  // defaulted to start + shots seconds when not set
  std::uint64_t seed{0};
};

inline void validate(const PairCorrelationModel& model) {
  for (const auto& [edge, probs] : model.pair_probs) {
    double sum = 0.0;
    for (const double p : probs) {
      if (!(p >= 0.0)) {
        throw ValidationError("pair probabilities for " + location_label(edge) +
                              " must be non-negative");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw ValidationError("pair probabilities for " + location_label(edge) + " must sum to 1");
    }
  }
  if (!(model.background_error >= 0.0 && model.background_error <= 1.0)) {
    throw ValidationError("background error must lie in [0,1]");
  }
}

/// Closed-form normalized mutual information for a pair's joint
/// probabilities; the analytic oracle for the empirical estimator.
inline double analytic_nmi(const std::array<double, 4>& probs) {
  const auto h = [](double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; };
  const double pa1 = probs[2] + probs[3];
  const double pb1 = probs[1] + probs[3];
  const double ha = h(pa1) + h(1.0 - pa1);
  const double hb = h(pb1) + h(1.0 - pb1);
  const double hj = h(probs[0]) + h(probs[1]) + h(probs[2]) + h(probs[3]);
  const double avg = 0.5 * (ha + hb);
  if (avg <= 0.0) return 0.0;
  return std::clamp((ha + hb - hj) / avg, 0.0, 1.0);
}

/// Draws `shots` rows for the given registers. Per shot: one uniform per
/// modeled pair (in edge order), then one uniform per uncovered register in
/// ascending order when background_error > 0. Deterministic given the seed.
inline ReadoutMatrix generate_readout(const PairCorrelationModel& model, std::size_t shots,
                                      const std::vector<int>& registers) {
  if (shots < 1) throw ValidationError("readout generation needs at least one shot");
  if (registers.empty()) throw ValidationError("readout generation needs at least one register");
  validate(model);

  std::map<int, std::size_t> column_of;
  for (std::size_t c = 0; c < registers.size(); ++c) {
    if (!column_of.emplace(registers[c], c).second) {
      throw ValidationError("duplicate register q" + std::to_string(registers[c]));
    }
  }

  struct PairColumns {
    std::size_t a, b;
    std::array<double, 3> cumulative;  // P(<=00), P(<=01), P(<=10)
  };
  std::vector<PairColumns> pairs;
  std::map<int, bool> covered;
  for (const auto& [edge, probs] : model.pair_probs) {
    const auto ia = column_of.find(edge.a);
    const auto ib = column_of.find(edge.b);
    if (ia == column_of.end() || ib == column_of.end()) {
      throw ValidationError("modeled pair " + location_label(edge) +
                            " not covered by the register list");
    }
    if (covered[edge.a] || covered[edge.b]) {
      throw ValidationError("register pairs in the correlation model must be disjoint");
    }
    covered[edge.a] = covered[edge.b] = true;
    pairs.push_back(PairColumns{ia->second, ib->second,
                                {probs[0], probs[0] + probs[1], probs[0] + probs[1] + probs[2]}});
  }
  std::vector<std::size_t> background;
  for (const int reg : registers) {
    if (!covered[reg]) background.push_back(column_of[reg]);
  }

  ReadoutMatrix m;
  m.device_id = model.device_id;
  m.prepared_state = model.prepared;
  m.register_labels = registers;
  m.shots = shots;
  m.window_start = model.window_start;
  m.window_end = model.window_end;
  if (m.window_end.epoch_seconds <= m.window_start.epoch_seconds) {
    m.window_end = Timestamp{m.window_start.epoch_seconds + static_cast<std::int64_t>(shots),
                             m.window_start.offset_minutes};
  }
  m.bits.assign(shots * registers.size(), 0);

  Rng rng(model.seed);
  std::uint8_t* row = m.bits.data();
  for (std::size_t s = 0; s < shots; ++s, row += registers.size()) {
    for (const PairColumns& pc : pairs) {
      const double u = rng.next_unit();
      const int outcome = u < pc.cumulative[0] ? 0 : u < pc.cumulative[1] ? 1
                          : u < pc.cumulative[2] ? 2 : 3;
      row[pc.a] = static_cast<std::uint8_t>(outcome >> 1);
      row[pc.b] = static_cast<std::uint8_t>(outcome & 1);
    }
    if (model.background_error > 0.0) {
      for (const std::size_t c : background) {
        row[c] = rng.next_unit() < model.background_error ? 1 : 0;
      }
    }
  }
  return m;
}

}  // namespace qstab
