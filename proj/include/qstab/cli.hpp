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
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qstab/ingest.hpp"
#include "qstab/metrics.hpp"
#include "qstab/stability.hpp"
#include "qstab/synth.hpp"

namespace qstab::cli {

/// Resolved settings for one command invocation. Flags override config-file
/// values, which override the defaults here.
struct AnalysisConfig {
  std::string command;
  std::string topology_path;
  std::vector<std::string> inputs;  // "path" or "label=path"
  std::string metric{"init_fidelity"};
  std::string location;  // empty: all locations (metrics/spatial) or pooled (interdevice)
  std::string window{"90d"};
  std::string lag{"30d"};
  std::string stride;  // empty: use the lag
  std::string bins{"auto"};
  std::string pairs{"all"};  // all | edges
  std::string reference{"sliding"};
  std::string format{"csv"};
  std::string out_dir{"."};
  std::uint64_t seed{0};
  bool seed_set{false};
  std::size_t shots_per_window{1000};
  std::size_t min_count{10};
  std::string t2_combine{"reduced"};  // reduced | mean
  std::string model_path;
  std::string start{"2020-01-01 00:00:00+00:00"};
  std::string end{"2020-12-31 00:00:00+00:00"};
  std::string cadence{"1d"};
  std::size_t shots{8192};
};

namespace detail {

inline BinningSpec binning_from(const AnalysisConfig& cfg) {
  BinningSpec spec;
  if (cfg.bins != "auto") {
    const double n = parse_double(cfg.bins);
    if (!(n >= 1.0)) throw ValidationError("--bins must be 'auto' or a positive integer");
    spec.mode = FixedCount{static_cast<std::size_t>(n)};
  }
  return spec;
}

inline DutyCycleCombine combine_from(const AnalysisConfig& cfg) {
  if (cfg.t2_combine == "reduced") return DutyCycleCombine::ReducedHarmonic;
  if (cfg.t2_combine == "mean") return DutyCycleCombine::HarmonicMean;
  throw ValidationError("--t2-combine must be 'reduced' or 'mean'");
}

inline Timestamp parse_timestamp_lenient(std::string text) {
  if (text.size() == 10) text += " 00:00:00";  // bare date
  return parse_timestamp(text);
}

inline ReferenceMode reference_from(const AnalysisConfig& cfg,
                                    const std::optional<Timestamp>& series_start) {
  if (cfg.reference == "sliding") return Sliding{};
  if (cfg.reference == "origin") {
    if (!series_start) throw ValidationError("--reference origin needs a series");
    return FixedOrigin{*series_start};
  }
  constexpr std::string_view prefix = "origin=";
  if (cfg.reference.rfind(prefix, 0) == 0) {
    return FixedOrigin{parse_timestamp_lenient(cfg.reference.substr(prefix.size()))};
  }
  throw ValidationError("--reference must be 'sliding', 'origin' or 'origin=<date>'");
}

inline DeviceTopology require_topology(const AnalysisConfig& cfg) {
  if (cfg.topology_path.empty()) {
    throw ValidationError("this input needs --topology <file>");
  }
  return parse_topology_json(cfg.topology_path);
}

struct LabeledInput {
  std::string label;
  std::filesystem::path path;
};

inline std::vector<LabeledInput> labeled_inputs(const AnalysisConfig& cfg) {
  std::vector<LabeledInput> out;
  for (const std::string& raw : cfg.inputs) {
    const std::size_t eq = raw.find('=');
    if (eq != std::string::npos && eq > 0) {
      out.push_back({raw.substr(0, eq), raw.substr(eq + 1)});
    } else {
      out.push_back({std::filesystem::path(raw).stem().string(), raw});
    }
  }
  return out;
}

inline void require_exists(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw ValidationError("input path does not exist: " + path.string());
  }
}

inline void flush_warnings(const Diagnostics& diag, std::ostream& err) {
  for (const std::string& w : diag.warnings) err << "warning: " << w << "\n";
}

inline nlohmann::json config_json(const AnalysisConfig& cfg) {
  nlohmann::json j;
  j["command"] = cfg.command;
  j["topology"] = cfg.topology_path;
  j["inputs"] = cfg.inputs;
  j["metric"] = cfg.metric;
  j["location"] = cfg.location;
  j["window"] = cfg.window;
  j["lag"] = cfg.lag;
  j["stride"] = cfg.stride;
  j["bins"] = cfg.bins;
  j["pairs"] = cfg.pairs;
  j["reference"] = cfg.reference;
  j["format"] = cfg.format;
  j["out"] = cfg.out_dir;
  if (cfg.seed_set) j["seed"] = cfg.seed;
  j["shots_per_window"] = cfg.shots_per_window;
  j["min_count"] = cfg.min_count;
  j["t2_combine"] = cfg.t2_combine;
  j["model"] = cfg.model_path;
  j["start"] = cfg.start;
  j["end"] = cfg.end;
  j["cadence"] = cfg.cadence;
  j["shots"] = cfg.shots;
  return j;
}

inline std::filesystem::path prepare_out_dir(const AnalysisConfig& cfg) {
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  write_text_atomic(dir / "config.json", config_json(cfg).dump(2) + "\n");
  return dir;
}

inline void write_series(const std::filesystem::path& dir, const std::string& stem,
                         const MetricSeries& series, const std::string& format) {
  if (format == "json") {
    write_series_json(dir / (stem + ".json"), series);
  } else {
    write_series_csv(dir / (stem + ".csv"), series);
  }
}

// Matrix outputs always emit the labeled CSV plus its JSON twin.
inline void write_matrix(const std::filesystem::path& dir, const std::string& stem,
                         const DistanceMatrix& matrix,
                         const std::vector<std::pair<std::string, std::string>>& metadata) {
  write_text_atomic(dir / (stem + ".csv"), matrix_to_csv(matrix, metadata));
  write_text_atomic(dir / (stem + ".json"), matrix_to_json(matrix, metadata).dump(2) + "\n");
}

inline std::string safe_stem(std::string label) {
  for (char& c : label) {
    if (c == '/' || c == '\\' || c == ' ' || c == ':') c = '_';
  }
  return label;
}

// Register pairs to analyze for a readout matrix: every pair of present
// registers, or the topology edges restricted to present registers.
inline std::vector<Edge> pairs_for(const AnalysisConfig& cfg, const ReadoutMatrix& matrix) {
  std::vector<Edge> pairs;
  if (cfg.pairs == "edges") {
    const DeviceTopology topology = require_topology(cfg);
    for (const Edge& e : nearest_neighbor_pairs(topology)) {
      if (matrix.column_of(e.a) && matrix.column_of(e.b)) pairs.push_back(e);
    }
  } else if (cfg.pairs == "all") {
    const auto& labels = matrix.register_labels;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      for (std::size_t j = i + 1; j < labels.size(); ++j) {
        pairs.push_back(make_edge(labels[i], labels[j]));
      }
    }
  } else {
    throw ValidationError("--pairs must be 'all' or 'edges'");
  }
  return pairs;
}

inline std::vector<MetricSeries> addressability_windows_series(const AnalysisConfig& cfg,
                                                               const ReadoutMatrix& matrix,
                                                               std::ostream& err) {
  Diagnostics diag;
  SegmentSummary summary;
  const std::vector<ReadoutMatrix> windows =
      segment_shots(matrix, cfg.shots_per_window, &summary, &diag);
  flush_warnings(diag, err);
  if (windows.empty()) {
    throw ValidationError("no full windows of " + std::to_string(cfg.shots_per_window) +
                          " shots available");
  }
  std::vector<MetricSeries> out;
  for (const Edge& pair : pairs_for(cfg, matrix)) {
    out.push_back(addressability_series(windows, pair));
  }
  return out;
}

// Pools one metric's values across all locations of a device; used for
// inter-device comparison when no single shared location makes sense.
inline std::vector<double> pooled_samples(std::span<const CalibrationRecord> records,
                                          MetricKind kind, DutyCycleCombine combine) {
  std::vector<double> values;
  for (const CalibrationRecord& rec : records) {
    switch (kind) {
      case MetricKind::InitFidelity:
        for (const auto& [reg, e] : rec.readout_error) values.push_back(init_fidelity(e));
        break;
      case MetricKind::GateFidelity:
        for (const auto& [edge, e] : rec.cnot_error) values.push_back(gate_fidelity(e));
        break;
      case MetricKind::T2:
        for (const auto& [reg, d] : rec.t2) values.push_back(d.seconds());
        break;
      case MetricKind::GateDuration:
        for (const auto& [edge, d] : rec.cnot_length) values.push_back(d.seconds());
        break;
      case MetricKind::DutyCycle:
        for (const auto& [edge, d] : rec.cnot_length) {
          const auto ta = rec.t2.find(edge.a);
          const auto tb = rec.t2.find(edge.b);
          if (ta == rec.t2.end() || tb == rec.t2.end()) continue;
          const std::array<double, 2> t2s{ta->second.seconds(), tb->second.seconds()};
          values.push_back(duty_cycle(t2s, d.seconds(), combine));
        }
        break;
      case MetricKind::Addressability:
      case MetricKind::Nmi:
        throw ValidationError("addressability metrics are not derivable from calibration records");
    }
  }
  return values;
}

// ---------------------------------------------------------------------------
// Synth model files
// ---------------------------------------------------------------------------

inline ParamDrift drift_from_json(const nlohmann::json& j) {
  ParamDrift drift;
  drift.base = j.at("base").get<double>();
  drift.jitter = j.value("jitter", 0.0);
  if (j.contains("steps")) {
    for (const auto& step : j["steps"]) {
      drift.steps.emplace_back(parse_timestamp_lenient(step.at(0).get<std::string>()),
                               step.at(1).get<double>());
    }
  }
  return drift;
}

inline DriftModel drift_model_from_json(const nlohmann::json& doc) {
  DriftModel model;
  model.device_id = doc.value("device_id", std::string("synthetic"));
  model.seed = doc.value("seed", 0ULL);
  model.t2_unit = doc.value("t2_unit", std::string("us"));
  model.cnot_length_unit = doc.value("cnot_length_unit", std::string("ns"));
  if (doc.contains("registers")) {
    for (const auto& [key, params] : doc["registers"].items()) {
      const Location loc = parse_location(key);
      const int reg = std::get<int>(loc);
      if (params.contains("readout_error")) {
        model.readout_error[reg] = drift_from_json(params["readout_error"]);
      }
      if (params.contains("t2")) model.t2[reg] = drift_from_json(params["t2"]);
    }
  }
  if (doc.contains("edges")) {
    for (const auto& [key, params] : doc["edges"].items()) {
      const Location loc = parse_location(key);
      const Edge edge = std::get<Edge>(loc);
      if (params.contains("cnot_error")) {
        model.cnot_error[edge] = drift_from_json(params["cnot_error"]);
      }
      if (params.contains("cnot_length")) {
        model.cnot_length[edge] = drift_from_json(params["cnot_length"]);
      }
    }
  }
  return model;
}

inline PairCorrelationModel correlation_model_from_json(const nlohmann::json& doc) {
  PairCorrelationModel model;
  model.device_id = doc.value("device_id", std::string("synthetic"));
  model.seed = doc.value("seed", 0ULL);
  model.background_error = doc.value("background_error", 0.0);
  if (doc.contains("prepared_state")) {
    model.prepared = parse_prepared_state(doc["prepared_state"].get<std::string>());
  }
  if (doc.contains("window_start")) {
    model.window_start = parse_timestamp_lenient(doc["window_start"].get<std::string>());
  }
  if (doc.contains("window_end")) {
    model.window_end = parse_timestamp_lenient(doc["window_end"].get<std::string>());
  }
  if (doc.contains("pairs")) {
    for (const auto& [key, probs] : doc["pairs"].items()) {
      const Location loc = parse_location(key);
      std::array<double, 4> p{};
      for (std::size_t i = 0; i < 4; ++i) p[i] = probs.at(i).get<double>();
      model.pair_probs[std::get<Edge>(loc)] = p;
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline int cmd_metrics(const AnalysisConfig& cfg, std::ostream& out, std::ostream& err) {
  const DeviceTopology topology = require_topology(cfg);
  if (cfg.inputs.size() != 1) throw ValidationError("metrics needs exactly one --input file");
  const std::filesystem::path input = labeled_inputs(cfg).front().path;
  require_exists(input);

  Diagnostics diag;
  const std::vector<CalibrationRecord> records = parse_calibration_file(input, topology, &diag);
  flush_warnings(diag, err);

  const MetricKind kind = parse_metric_kind(cfg.metric);
  const DutyCycleCombine combine = combine_from(cfg);
  const bool edge_metric = kind == MetricKind::GateFidelity || kind == MetricKind::DutyCycle ||
                           kind == MetricKind::GateDuration;

  std::vector<Location> locations;
  if (!cfg.location.empty()) {
    locations.push_back(parse_location(cfg.location));
  } else if (edge_metric) {
    for (const Edge& e : topology.edges) locations.push_back(e);
  } else {
    for (int r = 0; r < topology.capacity; ++r) locations.push_back(r);
  }

  const std::filesystem::path dir = prepare_out_dir(cfg);
  std::size_t written = 0;
  for (const Location& loc : locations) {
    MetricSeries series;
    try {
      series = metric_series_from_calibration(records, kind, loc, combine, topology.device_id);
    } catch (const LookupError& e) {
      if (!cfg.location.empty()) throw;  // explicit location: surface the error
      err << "warning: " << e.what() << "\n";
      continue;
    }
    if (series.points.size() < records.size()) {
      err << "warning: " << metric_kind_label(kind) << " at " << location_label(loc) << ": only "
          << series.points.size() << " of " << records.size() << " records carry the needed fields\n";
    }
    write_series(dir, metric_kind_label(kind) + "_" + safe_stem(location_label(loc)), series,
                 cfg.format);
    ++written;
  }
  if (written == 0) throw ValidationError("no locations produced a series");
  out << "wrote " << written << " series file(s) to " << dir.string() << "\n";
  return 0;
}

inline MetricSeries load_single_series(const AnalysisConfig& cfg, std::ostream& err) {
  if (cfg.inputs.size() != 1) throw ValidationError("this command needs exactly one --input file");
  const std::filesystem::path input = labeled_inputs(cfg).front().path;
  require_exists(input);

  switch (sniff_input(input)) {
    case InputKind::Series:
      return parse_series_file(input);
    case InputKind::Calibration: {
      const DeviceTopology topology = require_topology(cfg);
      if (cfg.location.empty()) throw ValidationError("calibration input needs --location");
      Diagnostics diag;
      const auto records = parse_calibration_file(input, topology, &diag);
      flush_warnings(diag, err);
      return metric_series_from_calibration(records, parse_metric_kind(cfg.metric),
                                            parse_location(cfg.location), combine_from(cfg),
                                            topology.device_id);
    }
    case InputKind::Readout: {
      if (cfg.location.empty()) throw ValidationError("readout input needs --location <pair>");
      const Location loc = parse_location(cfg.location);
      if (!std::holds_alternative<Edge>(loc)) {
        throw ValidationError("readout input needs an edge location like 0-1");
      }
      const ReadoutMatrix matrix = parse_readout_file(input);
      Diagnostics diag;
      SegmentSummary summary;
      const auto windows = segment_shots(matrix, cfg.shots_per_window, &summary, &diag);
      flush_warnings(diag, err);
      if (windows.empty()) throw ValidationError("no full readout windows available");
      return addressability_series(windows, std::get<Edge>(loc));
    }
    case InputKind::Unknown:
      break;
  }
  throw ValidationError("cannot determine the input kind of " + input.string());
}

inline int cmd_temporal(const AnalysisConfig& cfg, std::ostream& out, std::ostream& err) {
  const MetricSeries series = load_single_series(cfg, err);
  if (series.points.empty()) throw ValidationError("input series is empty");

  TemporalOptions options;
  options.min_count = cfg.min_count;
  if (!cfg.stride.empty()) options.stride_seconds = parse_duration_seconds(cfg.stride);

  const ReferenceMode mode = reference_from(cfg, series.points.front().time);
  const TemporalStabilityResult result =
      temporal_stability(series, parse_duration_seconds(cfg.window), parse_duration_seconds(cfg.lag),
                         mode, binning_from(cfg), options);
  for (const Timestamp& t : result.skipped) {
    err << "warning: skipped evaluation at " << format_timestamp(t)
        << " (window below minimum count)\n";
  }

  const std::filesystem::path dir = prepare_out_dir(cfg);
  const std::string stem =
      "temporal_" + metric_kind_label(series.kind) + "_" + safe_stem(location_label(series.location));

  std::string csv = "timestamp,hellinger\n";
  for (std::size_t i = 0; i < result.times.size(); ++i) {
    csv += format_timestamp(result.times[i]) + "," + format_double(result.distances[i]) + "\n";
  }
  nlohmann::json body;
  body["metric"] = metric_kind_label(series.kind);
  body["location"] = location_label(series.location);
  body["device_id"] = series.device_id;
  body["window_seconds"] = result.window_seconds;
  body["lag_seconds"] = result.lag_seconds;
  body["reference"] = cfg.reference;
  body["median"] = result.median;
  body["evaluations"] = result.times.size();
  nlohmann::json skipped = nlohmann::json::array();
  for (const Timestamp& t : result.skipped) skipped.push_back(format_timestamp(t));
  body["skipped"] = std::move(skipped);

  if (cfg.format == "json") {
    nlohmann::json doc = body;
    nlohmann::json points = nlohmann::json::array();
    for (std::size_t i = 0; i < result.times.size(); ++i) {
      points.push_back(
          {{"timestamp", format_timestamp(result.times[i])}, {"hellinger", result.distances[i]}});
    }
    doc["points"] = std::move(points);
    write_text_atomic(dir / (stem + ".json"), doc.dump(2) + "\n");
  } else {
    write_text_atomic(dir / (stem + ".csv"), csv);
  }
  write_text_atomic(dir / (stem + "_summary.json"), body.dump(2) + "\n");

  out << "median Hellinger distance: " << format_double(result.median) << "\n";
  return 0;
}

inline int cmd_spatial(const AnalysisConfig& cfg, std::ostream& out, std::ostream& err) {
  std::vector<MetricSeries> series;
  std::string metric_label = cfg.metric;

  const std::vector<LabeledInput> inputs = labeled_inputs(cfg);
  if (inputs.empty()) throw ValidationError("spatial needs at least one --input file");
  for (const LabeledInput& input : inputs) require_exists(input.path);

  if (inputs.size() > 1) {
    for (const LabeledInput& input : inputs) series.push_back(parse_series_file(input.path));
    metric_label = metric_kind_label(series.front().kind);
  } else {
    const std::filesystem::path input = inputs.front().path;
    switch (sniff_input(input)) {
      case InputKind::Series:
        throw ValidationError("spatial over series files needs at least two inputs");
      case InputKind::Calibration: {
        const DeviceTopology topology = require_topology(cfg);
        Diagnostics diag;
        const auto records = parse_calibration_file(input, topology, &diag);
        flush_warnings(diag, err);
        const MetricKind kind = parse_metric_kind(cfg.metric);
        const bool edge_metric = kind == MetricKind::GateFidelity ||
                                 kind == MetricKind::DutyCycle ||
                                 kind == MetricKind::GateDuration;
        std::vector<Location> locations;
        if (edge_metric) {
          for (const Edge& e : topology.edges) locations.push_back(e);
        } else {
          for (int r = 0; r < topology.capacity; ++r) locations.push_back(r);
        }
        for (const Location& loc : locations) {
          try {
            series.push_back(metric_series_from_calibration(records, kind, loc, combine_from(cfg),
                                                            topology.device_id));
          } catch (const LookupError& e) {
            err << "warning: " << e.what() << "\n";
          }
        }
        metric_label = metric_kind_label(kind);
        break;
      }
      case InputKind::Readout: {
        const ReadoutMatrix matrix = parse_readout_file(input);
        series = addressability_windows_series(cfg, matrix, err);
        metric_label = metric_kind_label(MetricKind::Addressability);
        break;
      }
      case InputKind::Unknown:
        throw ValidationError("cannot determine the input kind of " + input.string());
    }
  }

  Diagnostics diag;
  const DistanceMatrix matrix = spatial_stability(series, binning_from(cfg), &diag);
  flush_warnings(diag, err);

  const std::filesystem::path dir = prepare_out_dir(cfg);
  write_matrix(dir, "spatial_" + safe_stem(metric_label), matrix,
               {{"kind", "spatial"}, {"metric", metric_label}});
  out << "wrote " << matrix.size() << "x" << matrix.size() << " distance matrix to " << dir.string()
      << "\n";
  return 0;
}

inline int cmd_interdevice(const AnalysisConfig& cfg, std::ostream& out, std::ostream& err) {
  const std::vector<LabeledInput> inputs = labeled_inputs(cfg);
  if (inputs.size() < 2) throw ValidationError("interdevice needs at least two --input files");
  for (const LabeledInput& input : inputs) require_exists(input.path);

  const MetricKind kind = parse_metric_kind(cfg.metric);
  const DutyCycleCombine combine = combine_from(cfg);

  std::vector<LabeledSamples> samples;
  for (const LabeledInput& input : inputs) {
    switch (sniff_input(input.path)) {
      case InputKind::Series: {
        const MetricSeries s = parse_series_file(input.path);
        samples.push_back(LabeledSamples{input.label, s.values()});
        break;
      }
      case InputKind::Calibration: {
        // Topology is only needed to interpret column names; without a file,
        // fall back to a permissive map that accepts any pair of registers.
        const DeviceTopology topology = cfg.topology_path.empty()
                                            ? make_topology(input.label, 128, all_register_pairs(128))
                                            : parse_topology_json(cfg.topology_path);
        Diagnostics diag;
        const auto records = parse_calibration_file(input.path, topology, &diag);
        flush_warnings(diag, err);
        std::vector<double> values;
        if (cfg.location.empty()) {
          values = pooled_samples(records, kind, combine);
        } else {
          const MetricSeries s = metric_series_from_calibration(
              records, kind, parse_location(cfg.location), combine, input.label);
          values = s.values();
        }
        samples.push_back(LabeledSamples{input.label, std::move(values)});
        break;
      }
      case InputKind::Readout:
        throw ValidationError("interdevice does not take readout inputs");
      case InputKind::Unknown:
        throw ValidationError("cannot determine the input kind of " + input.path.string());
    }
  }

  Diagnostics diag;
  const DistanceMatrix matrix = pairwise_distance(samples, binning_from(cfg), &diag);
  flush_warnings(diag, err);

  const std::filesystem::path dir = prepare_out_dir(cfg);
  write_matrix(dir, "interdevice_" + safe_stem(cfg.metric), matrix,
               {{"kind", "interdevice"}, {"metric", cfg.metric}});
  out << "wrote " << matrix.size() << "x" << matrix.size() << " distance matrix to " << dir.string()
      << "\n";
  return 0;
}

inline int cmd_addressability(const AnalysisConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.inputs.size() != 1) throw ValidationError("addressability needs exactly one --input file");
  const std::filesystem::path input = labeled_inputs(cfg).front().path;
  require_exists(input);
  const ReadoutMatrix matrix = parse_readout_file(input);
  const std::vector<MetricSeries> series = addressability_windows_series(cfg, matrix, err);

  const std::filesystem::path dir = prepare_out_dir(cfg);
  std::string summary_csv = "pair,windows,mean,min,max\n";
  nlohmann::json summary_rows = nlohmann::json::array();
  for (const MetricSeries& s : series) {
    write_series(dir, "addressability_" + safe_stem(location_label(s.location)), s, cfg.format);
    double sum = 0.0, lo = 1.0, hi = 0.0;
    for (const SeriesPoint& p : s.points) {
      sum += p.value;
      lo = std::min(lo, p.value);
      hi = std::max(hi, p.value);
    }
    const double mean = sum / static_cast<double>(s.points.size());
    summary_csv += location_label(s.location) + "," + std::to_string(s.points.size()) + "," +
                   format_double(mean) + "," + format_double(lo) + "," + format_double(hi) + "\n";
    summary_rows.push_back({{"pair", location_label(s.location)},
                            {"windows", s.points.size()},
                            {"mean", mean},
                            {"min", lo},
                            {"max", hi}});
  }
  write_text_atomic(dir / "addressability_summary.csv", summary_csv);
  write_text_atomic(dir / "addressability_summary.json", summary_rows.dump(2) + "\n");
  out << "wrote " << series.size() << " pair series to " << dir.string() << "\n";
  return 0;
}

inline int cmd_synth(const AnalysisConfig& cfg, std::ostream& out, std::ostream& err) {
  (void)err;
  if (cfg.model_path.empty()) throw ValidationError("synth needs --model <file>");
  require_exists(cfg.model_path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(cfg.model_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("invalid JSON in " + cfg.model_path + ": " + e.what());
  }
  const std::string kind = doc.value("kind", std::string{});
  const std::filesystem::path dir = prepare_out_dir(cfg);

  if (kind == "calibration_drift") {
    DriftModel model = drift_model_from_json(doc);
    if (cfg.seed_set) model.seed = cfg.seed;
    const DeviceTopology topology = require_topology(cfg);
    const auto records = generate_calibration(model, topology, parse_timestamp_lenient(cfg.start),
                                              parse_timestamp_lenient(cfg.end),
                                              parse_duration_seconds(cfg.cadence));
    if (cfg.format == "json") {
      write_calibration_json(dir / "calibration.json", records);
    } else {
      write_calibration_csv(dir / "calibration.csv", records);
    }
    out << "wrote " << records.size() << " calibration records to " << dir.string() << "\n";
    return 0;
  }

  if (kind == "readout_correlation") {
    PairCorrelationModel model = correlation_model_from_json(doc);
    if (cfg.seed_set) model.seed = cfg.seed;
    std::vector<int> registers;
    if (doc.contains("registers")) {
      for (const auto& r : doc["registers"]) registers.push_back(r.get<int>());
    } else {
      for (const auto& [edge, probs] : model.pair_probs) {
        registers.push_back(edge.a);
        registers.push_back(edge.b);
      }
      std::sort(registers.begin(), registers.end());
      registers.erase(std::unique(registers.begin(), registers.end()), registers.end());
    }
    if (registers.empty()) throw ValidationError("readout model lists no registers");
    const ReadoutMatrix matrix = generate_readout(model, cfg.shots, registers);
    const std::vector<std::pair<std::string, std::string>> extra{
        {"seed", std::to_string(model.seed)}};
    if (cfg.format == "json") {
      nlohmann::json j = readout_to_json(matrix);
      j["seed"] = model.seed;
      write_text_atomic(dir / "readout.json", j.dump() + "\n");
    } else {
      write_text_atomic(dir / "readout.csv", readout_to_csv(matrix, extra));
    }
    out << "wrote " << matrix.shots << " shots for " << registers.size() << " register(s) to "
        << dir.string() << "\n";
    return 0;
  }

  throw ValidationError("model kind must be 'calibration_drift' or 'readout_correlation'");
}

}  // namespace detail

/// Entry point used by both the binary and the in-process tests. Returns the
/// process exit code: 0 success, 1 input or validation problem, 2 internal
/// error. Diagnostics go to `err` only.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  AnalysisConfig cfg;

  // Config-file values load first so command-line flags override them.
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") {
      try {
        const nlohmann::json doc = nlohmann::json::parse(read_text_file(args[i + 1]));
        const auto set = [&](const char* key, auto& field) {
          using Field = std::decay_t<decltype(field)>;
          if (!doc.contains(key)) return;
          if constexpr (std::is_same_v<Field, std::vector<std::string>>) {
            field = doc[key].get<std::vector<std::string>>();
          } else {
            field = doc[key].get<Field>();
          }
        };
        set("topology", cfg.topology_path);
        set("inputs", cfg.inputs);
        set("metric", cfg.metric);
        set("location", cfg.location);
        set("window", cfg.window);
        set("lag", cfg.lag);
        set("stride", cfg.stride);
        set("bins", cfg.bins);
        set("pairs", cfg.pairs);
        set("reference", cfg.reference);
        set("format", cfg.format);
        set("out", cfg.out_dir);
        set("shots_per_window", cfg.shots_per_window);
        set("min_count", cfg.min_count);
        set("t2_combine", cfg.t2_combine);
        set("model", cfg.model_path);
        set("start", cfg.start);
        set("end", cfg.end);
        set("cadence", cfg.cadence);
        set("shots", cfg.shots);
        if (doc.contains("seed")) {
          cfg.seed = doc["seed"].get<std::uint64_t>();
          cfg.seed_set = true;
        }
      } catch (const std::exception& e) {
        err << "error: cannot load config file: " << e.what() << "\n";
        return 1;
      }
    }
  }

  CLI::App app{"Stability analysis for noisy quantum computing devices"};
  app.require_subcommand(1);
  std::string config_path;  // consumed above; registered so CLI11 accepts it

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file (flags override it)");
    cmd->add_option("--topology", cfg.topology_path, "Topology JSON file");
    cmd->add_option("--input", cfg.inputs, "Input file, optionally label=path");
    cmd->add_option("--metric", cfg.metric,
                    "init_fidelity|gate_fidelity|duty_cycle|t2|gate_duration|addressability|nmi");
    cmd->add_option("--location", cfg.location, "Register (q0) or edge (0-1)");
    cmd->add_option("--window", cfg.window, "Histogram window, e.g. 90d");
    cmd->add_option("--lag", cfg.lag, "Reference lag, e.g. 30d");
    cmd->add_option("--stride", cfg.stride, "Evaluation stride (default: the lag)");
    cmd->add_option("--bins", cfg.bins, "Bin count or 'auto' (ceil(sqrt(n)))");
    cmd->add_option("--pairs", cfg.pairs, "all|edges");
    cmd->add_option("--reference", cfg.reference, "sliding|origin|origin=<date>");
    cmd->add_option("--format", cfg.format, "csv|json");
    cmd->add_option("--out", cfg.out_dir, "Output directory");
    cmd->add_option("--min-count", cfg.min_count, "Minimum values per window");
    cmd->add_option("--shots-per-window", cfg.shots_per_window, "Readout segmentation window");
    cmd->add_option("--t2-combine", cfg.t2_combine, "reduced|mean");
    auto* seed = cmd->add_option("--seed", cfg.seed, "Generator seed");
    cmd->callback([&cfg, seed]() {
      if (seed->count() > 0) cfg.seed_set = true;
    });
  };

  CLI::App* metrics = app.add_subcommand("metrics", "Per-location metric series from calibration");
  CLI::App* temporal = app.add_subcommand("temporal", "Windowed Hellinger distance over time");
  CLI::App* spatial = app.add_subcommand("spatial", "Pairwise distance across locations");
  CLI::App* interdevice = app.add_subcommand("interdevice", "Pairwise distance across devices");
  CLI::App* addr = app.add_subcommand("addressability", "Per-pair addressability from readout");
  CLI::App* synth = app.add_subcommand("synth", "Generate synthetic device data");
  for (CLI::App* cmd : {metrics, temporal, spatial, interdevice, addr, synth}) add_common(cmd);
  synth->add_option("--model", cfg.model_path, "Model JSON file");
  synth->add_option("--start", cfg.start, "Generation start timestamp");
  synth->add_option("--end", cfg.end, "Generation end timestamp");
  synth->add_option("--cadence", cfg.cadence, "Record cadence, e.g. 1d");
  synth->add_option("--shots", cfg.shots, "Readout shots to generate");

  try {
    std::reverse(args.begin(), args.end());  // CLI11's vector overload pops from the back
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);  // help/version
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (metrics->parsed()) {
      cfg.command = "metrics";
      return detail::cmd_metrics(cfg, out, err);
    }
    if (temporal->parsed()) {
      cfg.command = "temporal";
      return detail::cmd_temporal(cfg, out, err);
    }
    if (spatial->parsed()) {
      cfg.command = "spatial";
      return detail::cmd_spatial(cfg, out, err);
    }
    if (interdevice->parsed()) {
      cfg.command = "interdevice";
      return detail::cmd_interdevice(cfg, out, err);
    }
    if (addr->parsed()) {
      cfg.command = "addressability";
      return detail::cmd_addressability(cfg, out, err);
    }
    if (synth->parsed()) {
      cfg.command = "synth";
      return detail::cmd_synth(cfg, out, err);
    }
    err << "error: no command selected\n";
    return 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const LookupError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace qstab::cli
