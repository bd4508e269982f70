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
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qstab/model.hpp"

namespace qstab {

/// Initialization fidelity F_I = 1 - e_R.
inline double init_fidelity(double readout_error) {
  if (!(readout_error >= 0.0 && readout_error <= 1.0)) {
    throw ValidationError("readout error must lie in [0,1]");
  }
  return 1.0 - readout_error;
}

/// Gate fidelity F_G = 1 - eps_G.
inline double gate_fidelity(double gate_error) {
  if (!(gate_error >= 0.0 && gate_error <= 1.0)) {
    throw ValidationError("gate error must lie in [0,1]");
  }
  return 1.0 - gate_error;
}

/// How per-register T2 values combine into the pair's effective coherence
/// time. ReducedHarmonic (1 / sum(1/T2_k)) is the default; it reproduces the
/// reference duty-cycle values. HarmonicMean is the textbook n / sum(1/T2_k).
enum class DutyCycleCombine { ReducedHarmonic, HarmonicMean };

/// Duty cycle tau = T2_eff / T_G, the dimensionless count of reliable
/// operations per coherence window.
inline double duty_cycle(std::span<const double> t2_seconds, double gate_seconds,
                         DutyCycleCombine combine = DutyCycleCombine::ReducedHarmonic) {
  if (t2_seconds.empty()) throw ValidationError("duty cycle needs at least one T2 value");
  if (!(gate_seconds > 0.0)) throw ValidationError("gate duration must be positive");
  double inv_sum = 0.0;
  for (const double t2 : t2_seconds) {
    if (!(t2 > 0.0)) throw ValidationError("T2 values must be positive");
    inv_sum += 1.0 / t2;
  }
  double effective = 1.0 / inv_sum;
  if (combine == DutyCycleCombine::HarmonicMean) {
    effective *= static_cast<double>(t2_seconds.size());
  }
  return effective / gate_seconds;
}

/// 2x2 joint outcome counts for a register pair. Index [x][y] counts shots
/// where the lower-index register read x and the higher-index register read y.
struct JointCounts {
  std::array<std::array<std::uint64_t, 2>, 2> table{{{0, 0}, {0, 0}}};

  std::uint64_t total() const {
    return table[0][0] + table[0][1] + table[1][0] + table[1][1];
  }

  JointCounts transposed() const {
    JointCounts t;
    t.table = {{{table[0][0], table[1][0]}, {table[0][1], table[1][1]}}};
    return t;
  }

  bool operator==(const JointCounts&) const = default;
};

/// Tallies pair outcomes over all shots of a readout matrix.
inline JointCounts empirical_joint(const ReadoutMatrix& m, Edge pair) {
  const auto ca = m.column_of(pair.a);
  const auto cb = m.column_of(pair.b);
  if (!ca || !cb) {
    throw LookupError("register pair " + location_label(pair) + " not present in readout matrix");
  }
  if (m.shots < 1) throw ValidationError("readout matrix has no shots");
  JointCounts joint;
  const std::size_t stride = m.register_labels.size();
  const std::uint8_t* row = m.bits.data();
  for (std::size_t s = 0; s < m.shots; ++s, row += stride) {
    ++joint.table[row[*ca]][row[*cb]];
  }
  return joint;
}

/// Entropies, mutual information, NMI and addressability for one pair.
/// Entropies are in bits.
struct AddressabilityResult {
  Edge pair{};
  double entropy_a{0.0};
  double entropy_b{0.0};
  double joint_entropy{0.0};
  double mutual_information{0.0};
  double nmi{0.0};
  double addressability{1.0};
};

namespace detail {

inline double entropy_term(double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; }

}  // namespace detail

/// Addressability F_A = 1 - eta with eta = I(X,Y) / ((H(X)+H(Y))/2), all from
/// the empirical joint frequencies. When both marginals are deterministic the
/// average entropy vanishes; eta is defined as 0 there (no shared
/// information), so F_A = 1.
inline AddressabilityResult addressability(const JointCounts& joint, Edge pair = Edge{0, 1}) {
  const std::uint64_t n = joint.total();
  if (n == 0) throw ValidationError("joint count table is empty");
  const double total = static_cast<double>(n);

  const double p00 = static_cast<double>(joint.table[0][0]) / total;
  const double p01 = static_cast<double>(joint.table[0][1]) / total;
  const double p10 = static_cast<double>(joint.table[1][0]) / total;
  const double p11 = static_cast<double>(joint.table[1][1]) / total;

  const double pa1 = p10 + p11;  // P(X=1)
  const double pb1 = p01 + p11;  // P(Y=1)

  AddressabilityResult r;
  r.pair = pair;
  r.entropy_a = detail::entropy_term(pa1) + detail::entropy_term(1.0 - pa1);
  r.entropy_b = detail::entropy_term(pb1) + detail::entropy_term(1.0 - pb1);
  r.joint_entropy = detail::entropy_term(p00) + detail::entropy_term(p01) +
                    detail::entropy_term(p10) + detail::entropy_term(p11);
  r.mutual_information = std::max(0.0, r.entropy_a + r.entropy_b - r.joint_entropy);

  const double avg_entropy = 0.5 * (r.entropy_a + r.entropy_b);
  r.nmi = avg_entropy > 0.0 ? std::clamp(r.mutual_information / avg_entropy, 0.0, 1.0) : 0.0;
  r.addressability = 1.0 - r.nmi;
  return r;
}

/// One F_A value per readout window, in window order. Timestamps follow the
/// windows' start times, nudged forward where needed to stay strictly
/// increasing.
inline MetricSeries addressability_series(std::span<const ReadoutMatrix> windows, Edge pair) {
  if (windows.empty()) throw ValidationError("addressability series needs at least one window");
  MetricSeries series;
  series.kind = MetricKind::Addressability;
  series.location = pair;
  series.device_id = windows.front().device_id;
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  for (const ReadoutMatrix& w : windows) {
    const AddressabilityResult r = addressability(empirical_joint(w, pair), pair);
    Timestamp t = w.window_start;
    if (t.epoch_seconds <= last) t.epoch_seconds = last + 1;
    last = t.epoch_seconds;
    series.points.push_back(SeriesPoint{t, r.addressability});
  }
  return series;
}

/// Result of fitting survival(m) = A * p^m + B.
struct RBFit {
  double amplitude{0.0};         // A
  double decay{1.0};             // p
  double offset{0.0};            // B
  double error_per_clifford{0.0};  // (d-1)(1-p)/d
  double residual_norm{0.0};     // sqrt(SSE)
  int iterations{0};
};

namespace detail {

// Solves a 3x3 linear system in place by Gaussian elimination with partial
// pivoting. Returns false when singular.
inline bool solve3(std::array<std::array<double, 3>, 3>& a, std::array<double, 3>& b,
                   std::array<double, 3>& x) {
  std::array<int, 3> piv{0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int best = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(a[piv[r]][col]) > std::abs(a[piv[best]][col])) best = r;
    }
    std::swap(piv[col], piv[best]);
    const double diag = a[piv[col]][col];
    if (std::abs(diag) < 1e-300) return false;
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[piv[r]][col] / diag;
      for (int c = col; c < 3; ++c) a[piv[r]][c] -= f * a[piv[col]][c];
      b[piv[r]] -= f * b[piv[col]];
    }
  }
  for (int row = 2; row >= 0; --row) {
    double s = b[piv[row]];
    for (int c = row + 1; c < 3; ++c) s -= a[piv[row]][c] * x[c];
    x[row] = s / a[piv[row]][row];
  }
  return true;
}

inline double rb_sse(const RBDecayData& data, double amp, double p, double off) {
  double sse = 0.0;
  for (const RBPoint& pt : data.points) {
    const double r = amp * std::pow(p, pt.sequence_length) + off - pt.survival;
    sse += r * r;
  }
  return sse;
}

// Log-linear initialization: B0 = min survival, then regress log(y - B0)
// against m over the points where that is positive.
inline void rb_initial_guess(const RBDecayData& data, double& amp, double& p, double& off) {
  double ymin = data.points.front().survival;
  double ymax = ymin;
  for (const RBPoint& pt : data.points) {
    ymin = std::min(ymin, pt.survival);
    ymax = std::max(ymax, pt.survival);
  }
  off = ymin;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (const RBPoint& pt : data.points) {
    const double z = pt.survival - off;
    if (z <= 0.0) continue;
    const double x = static_cast<double>(pt.sequence_length);
    const double y = std::log(z);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  amp = ymax - ymin;
  p = 0.95;
  if (n >= 2) {
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    if (std::abs(denom) > 0.0) {
      const double slope = (static_cast<double>(n) * sxy - sx * sy) / denom;
      const double intercept = (sy - slope * sx) / static_cast<double>(n);
      const double p0 = std::exp(slope);
      if (p0 > 0.0 && p0 < 1.0) p = p0;
      const double a0 = std::exp(intercept);
      if (std::isfinite(a0) && a0 > 0.0) amp = a0;
    }
  }
}

}  // namespace detail

/// Fits the SPAM-insensitive decay model survival(m) = A * p^m + B by
/// Levenberg-Marquardt least squares, then converts the decay to an error per
/// Clifford eps_G = (d-1)(1-p)/d.
inline RBFit rb_fit(const RBDecayData& data) {
  validate(data);

  RBFit fit;

  // No decay at all: A and B are not separately identifiable, report the
  // constant level as offset.
  {
    double ymin = data.points.front().survival, ymax = ymin;
    for (const RBPoint& pt : data.points) {
      ymin = std::min(ymin, pt.survival);
      ymax = std::max(ymax, pt.survival);
    }
    if (ymax - ymin < 1e-12) {
      fit.amplitude = 0.0;
      fit.decay = 1.0;
      fit.offset = data.points.front().survival;
      fit.error_per_clifford = 0.0;
      fit.residual_norm = 0.0;
      return fit;
    }
  }

  double amp = 0.0, p = 0.0, off = 0.0;
  detail::rb_initial_guess(data, amp, p, off);

  double sse = detail::rb_sse(data, amp, p, off);
  double lambda = 1e-3;
  int iter = 0;
  const int max_iter = 500;
  bool converged = false;

  for (; iter < max_iter; ++iter) {
    std::array<std::array<double, 3>, 3> jtj{};
    std::array<double, 3> jtr{};
    for (const RBPoint& pt : data.points) {
      const double m = static_cast<double>(pt.sequence_length);
      const double pm1 = std::pow(p, m - 1.0);
      const double pm = pm1 * p;
      const double resid = amp * pm + off - pt.survival;
      const std::array<double, 3> j{pm, amp * m * pm1, 1.0};
      for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) jtj[r][c] += j[r] * j[c];
        jtr[r] += j[r] * resid;
      }
    }

    bool stepped = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      std::array<std::array<double, 3>, 3> a = jtj;
      for (int d = 0; d < 3; ++d) a[d][d] += lambda * std::max(jtj[d][d], 1e-12);
      std::array<double, 3> rhs{-jtr[0], -jtr[1], -jtr[2]};
      std::array<double, 3> step{};
      if (detail::solve3(a, rhs, step)) {
        const double amp2 = amp + step[0];
        const double p2 = p + step[1];
        const double off2 = off + step[2];
        if (p2 > 0.0 && p2 < 1.5) {
          const double sse2 = detail::rb_sse(data, amp2, p2, off2);
          if (sse2 <= sse) {
            const double delta = sse - sse2;
            amp = amp2;
            p = p2;
            off = off2;
            sse = sse2;
            lambda = std::max(lambda / 3.0, 1e-14);
            stepped = true;
            if (delta <= 1e-20 + 1e-12 * sse) converged = true;
            break;
          }
        }
      }
      lambda *= 7.0;
      if (lambda > 1e14) break;
    }

    if (converged) break;
    if (!stepped) {
      converged = sse < 1e-18;  // already at machine-level floor
      break;
    }
  }

  fit.residual_norm = std::sqrt(sse);
  fit.iterations = iter;
  if (!converged && iter >= max_iter) {
    throw FitError("decay fit did not converge", fit.residual_norm);
  }
  if (!converged) {
    throw FitError("decay fit stalled before convergence", fit.residual_norm);
  }

  if (!(p > 0.0) || p > 1.0 + 1e-9) {
    throw DegenerateFitError("fitted decay p=" + std::to_string(p) + " outside (0,1]");
  }
  fit.amplitude = amp;
  fit.decay = std::min(p, 1.0);
  fit.offset = off;
  const double dim = static_cast<double>(data.dimension);
  fit.error_per_clifford = (dim - 1.0) * (1.0 - fit.decay) / dim;
  return fit;
}

/// Extracts one metric's time series from calibration records, skipping
/// records where the needed fields are absent. Throws LookupError when the
/// location never appears in any record.
inline MetricSeries metric_series_from_calibration(
    std::span<const CalibrationRecord> records, MetricKind kind, const Location& location,
    DutyCycleCombine combine = DutyCycleCombine::ReducedHarmonic, std::string device_id = {}) {
  const bool wants_edge = kind == MetricKind::GateFidelity || kind == MetricKind::DutyCycle ||
                          kind == MetricKind::GateDuration;
  if (kind == MetricKind::Addressability || kind == MetricKind::Nmi) {
    throw ValidationError("addressability metrics are not derivable from calibration records");
  }
  if (wants_edge && !std::holds_alternative<Edge>(location)) {
    throw LookupError(metric_kind_label(kind) + " needs an edge location");
  }
  if (!wants_edge && !std::holds_alternative<int>(location)) {
    throw LookupError(metric_kind_label(kind) + " needs a register location");
  }

  MetricSeries series;
  series.kind = kind;
  series.location = location;
  series.device_id = std::move(device_id);

  bool seen = false;
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  for (const CalibrationRecord& rec : records) {
    double value = 0.0;
    bool present = false;
    switch (kind) {
      case MetricKind::InitFidelity: {
        const auto it = rec.readout_error.find(std::get<int>(location));
        if (it != rec.readout_error.end()) {
          value = init_fidelity(it->second);
          present = true;
        }
        break;
      }
      case MetricKind::GateFidelity: {
        const auto it = rec.cnot_error.find(std::get<Edge>(location));
        if (it != rec.cnot_error.end()) {
          value = gate_fidelity(it->second);
          present = true;
        }
        break;
      }
      case MetricKind::T2: {
        const auto it = rec.t2.find(std::get<int>(location));
        if (it != rec.t2.end()) {
          value = it->second.seconds();
          present = true;
        }
        break;
      }
      case MetricKind::GateDuration: {
        const auto it = rec.cnot_length.find(std::get<Edge>(location));
        if (it != rec.cnot_length.end()) {
          value = it->second.seconds();
          present = true;
        }
        break;
      }
      case MetricKind::DutyCycle: {
        const Edge edge = std::get<Edge>(location);
        const auto ta = rec.t2.find(edge.a);
        const auto tb = rec.t2.find(edge.b);
        const auto tg = rec.cnot_length.find(edge);
        if (ta != rec.t2.end() && tb != rec.t2.end() && tg != rec.cnot_length.end()) {
          const std::array<double, 2> t2s{ta->second.seconds(), tb->second.seconds()};
          value = duty_cycle(t2s, tg->second.seconds(), combine);
          present = true;
        }
        break;
      }
      case MetricKind::Addressability:
      case MetricKind::Nmi:
        break;
    }
    if (!present) continue;
    seen = true;
    // Duplicate update stamps occasionally appear in long archives; keep the
    // first value for a given instant.
    if (rec.last_update.epoch_seconds <= last) continue;
    last = rec.last_update.epoch_seconds;
    series.points.push_back(SeriesPoint{rec.last_update, value});
  }

  if (!seen && !records.empty()) {
    throw LookupError("location " + location_label(location) + " carries no " +
                      metric_kind_label(kind) + " data in these records");
  }
  return series;
}

}  // namespace qstab
