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
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qstab/model.hpp"

namespace qstab {

/// Shortest decimal form that parses back to the same double.
inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, std::size_t row = 0, std::size_t col = 0) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw ParseError("cannot parse number '" + std::string(text) + "'", row, col);
  }
  return v;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open input file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline std::string read_file(const std::filesystem::path& path) { return read_text_file(path); }

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    pos = nl + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

// Plain comma split; the formats here never quote fields.
inline std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      cells.emplace_back(line.substr(pos));
      break;
    }
    cells.emplace_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return cells;
}

inline std::optional<int> parse_index_token(std::string_view token) {
  if (token.empty()) return std::nullopt;
  if (token.size() > 1 && token.front() == '0') return std::nullopt;  // no leading zeros
  int v = 0;
  for (const char c : token) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

}  // namespace detail

/// What a calibration column holds, resolved against the device topology.
struct ColumnRole {
  enum class Kind {
    LastUpdate,
    ReadoutErr,
    ReadoutErrCalTime,
    GateErr,
    GateErrCalTime,
    T2,
    T2Unit,
    T2CalTime,
    GateLength,
    GateLengthUnit,
    GateLengthCalTime,
  };

  Kind kind{Kind::LastUpdate};
  int reg{-1};
  Edge edge{};
  std::string raw_prefix;  // directed source label, e.g. "cx10"
};

/// Classifies one header name. Returns nullopt for columns that do not match
/// the schema or whose indices fall outside the topology (callers warn and
/// ignore those). Concatenated edge digits ("cx01") are disambiguated against
/// the topology edge set; an underscore form ("cx10_11") is also accepted.
inline std::optional<ColumnRole> classify_column(const std::string& name,
                                                 const DeviceTopology& topology) {
  if (name == "last_update_date") return ColumnRole{ColumnRole::Kind::LastUpdate, -1, {}, {}};

  const auto strip_suffix = [&](std::string_view body, std::string_view suffix,
                                std::string_view& stem) {
    if (body.size() <= suffix.size()) return false;
    if (body.substr(body.size() - suffix.size()) != suffix) return false;
    stem = body.substr(0, body.size() - suffix.size());
    return true;
  };

  if (name.rfind("q", 0) == 0) {
    static constexpr std::pair<std::string_view, ColumnRole::Kind> kSuffixes[] = {
        {"_readout_err_cal_time", ColumnRole::Kind::ReadoutErrCalTime},
        {"_readout_err", ColumnRole::Kind::ReadoutErr},
        {"_T2_cal_time", ColumnRole::Kind::T2CalTime},
        {"_T2_unit", ColumnRole::Kind::T2Unit},
        {"_T2", ColumnRole::Kind::T2},
    };
    for (const auto& [suffix, kind] : kSuffixes) {
      std::string_view stem;
      if (!strip_suffix(std::string_view(name).substr(1), suffix, stem)) continue;
      const auto reg = detail::parse_index_token(stem);
      if (!reg || *reg >= topology.capacity) return std::nullopt;
      return ColumnRole{kind, *reg, {}, {}};
    }
    return std::nullopt;
  }

  if (name.rfind("cx", 0) == 0) {
    static constexpr std::pair<std::string_view, ColumnRole::Kind> kSuffixes[] = {
        {"_gate_err_cal_time", ColumnRole::Kind::GateErrCalTime},
        {"_gate_err", ColumnRole::Kind::GateErr},
        {"_gate_length_cal_time", ColumnRole::Kind::GateLengthCalTime},
        {"_gate_length_unit", ColumnRole::Kind::GateLengthUnit},
        {"_gate_length", ColumnRole::Kind::GateLength},
    };
    for (const auto& [suffix, kind] : kSuffixes) {
      std::string_view stem;
      if (!strip_suffix(std::string_view(name).substr(2), suffix, stem)) continue;

      std::vector<Edge> candidates;
      const auto consider = [&](std::string_view left, std::string_view right) {
        const auto i = detail::parse_index_token(left);
        const auto j = detail::parse_index_token(right);
        if (!i || !j || *i == *j) return;
        if (*i >= topology.capacity || *j >= topology.capacity) return;
        const Edge e = make_edge(*i, *j);
        if (!std::binary_search(topology.edges.begin(), topology.edges.end(), e)) return;
        if (std::find(candidates.begin(), candidates.end(), e) == candidates.end()) {
          candidates.push_back(e);
        }
      };

      const std::size_t underscore = stem.find('_');
      if (underscore != std::string_view::npos) {
        consider(stem.substr(0, underscore), stem.substr(underscore + 1));
      } else {
        for (std::size_t k = 1; k < stem.size(); ++k) {
          consider(stem.substr(0, k), stem.substr(k));
        }
      }
      if (candidates.empty()) return std::nullopt;
      if (candidates.size() > 1) {
        throw ParseError("ambiguous gate column '" + name + "' for this topology");
      }
      return ColumnRole{kind, -1, candidates.front(),
                        "cx" + std::string(stem.substr(0, stem.size()))};
    }
    return std::nullopt;
  }

  return std::nullopt;
}

namespace detail {

// Cells of one calibration row, grouped before assembly so value and unit
// columns can arrive in any order.
struct RowCells {
  std::optional<Timestamp> last_update;
  std::map<int, double> readout_err;
  std::map<int, Timestamp> readout_cal;
  std::map<Edge, double> gate_err;
  std::map<Edge, Timestamp> gate_err_cal;
  std::map<int, double> t2_value;
  std::map<int, std::string> t2_unit;
  std::map<int, Timestamp> t2_cal;
  std::map<Edge, double> len_value;
  std::map<Edge, std::string> len_unit;
  std::map<Edge, Timestamp> len_cal;
  std::map<Edge, std::string> edge_label;
};

inline void assign_cell(RowCells& cells, const ColumnRole& role, const std::string& text,
                        std::size_t row, std::size_t col) {
  const auto stamp = [&]() -> Timestamp {
    try {
      return parse_timestamp(text);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), row, col);
    }
  };
  const auto rate = [&]() -> double {
    const double v = parse_double(text, row, col);
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("error rate " + text + " outside [0,1] (row " + std::to_string(row) +
                            ")");
    }
    return v;
  };

  using Kind = ColumnRole::Kind;
  switch (role.kind) {
    case Kind::LastUpdate: cells.last_update = stamp(); break;
    case Kind::ReadoutErr: cells.readout_err[role.reg] = rate(); break;
    case Kind::ReadoutErrCalTime: cells.readout_cal[role.reg] = stamp(); break;
    case Kind::GateErr:
      cells.gate_err[role.edge] = rate();
      cells.edge_label.emplace(role.edge, role.raw_prefix);
      break;
    case Kind::GateErrCalTime:
      cells.gate_err_cal[role.edge] = stamp();
      cells.edge_label.emplace(role.edge, role.raw_prefix);
      break;
    case Kind::T2: cells.t2_value[role.reg] = parse_double(text, row, col); break;
    case Kind::T2Unit: cells.t2_unit[role.reg] = text; break;
    case Kind::T2CalTime: cells.t2_cal[role.reg] = stamp(); break;
    case Kind::GateLength:
      cells.len_value[role.edge] = parse_double(text, row, col);
      cells.edge_label.emplace(role.edge, role.raw_prefix);
      break;
    case Kind::GateLengthUnit: cells.len_unit[role.edge] = text; break;
    case Kind::GateLengthCalTime:
      cells.len_cal[role.edge] = stamp();
      cells.edge_label.emplace(role.edge, role.raw_prefix);
      break;
  }
}

inline CalibrationRecord assemble_record(RowCells&& cells, std::size_t row) {
  if (!cells.last_update) {
    throw ParseError("row is missing last_update_date", row);
  }
  CalibrationRecord rec;
  rec.last_update = *cells.last_update;
  rec.readout_error = std::move(cells.readout_err);
  rec.readout_cal_time = std::move(cells.readout_cal);
  rec.cnot_error = std::move(cells.gate_err);
  rec.cnot_cal_time = std::move(cells.gate_err_cal);
  for (const auto& [reg, value] : cells.t2_value) {
    const auto unit = cells.t2_unit.find(reg);
    rec.t2[reg] = Duration{value, unit != cells.t2_unit.end() ? unit->second : "us"};
  }
  rec.t2_cal_time = std::move(cells.t2_cal);
  for (const auto& [edge, value] : cells.len_value) {
    const auto unit = cells.len_unit.find(edge);
    rec.cnot_length[edge] = Duration{value, unit != cells.len_unit.end() ? unit->second : "ns"};
  }
  rec.cnot_length_cal_time = std::move(cells.len_cal);
  rec.cnot_source_label = std::move(cells.edge_label);
  validate(rec);
  return rec;
}

}  // namespace detail

/// Parses a calibration CSV: one header row in the Appendix-style column
/// naming, one record per data row, sorted by last_update. Unknown columns
/// are ignored with a warning; empty cells leave that entry absent.
inline std::vector<CalibrationRecord> parse_calibration_csv(const std::filesystem::path& path,
                                                            const DeviceTopology& topology,
                                                            Diagnostics* diag = nullptr) {
  const std::vector<std::string> lines = detail::split_lines(detail::read_file(path));
  if (lines.empty()) throw ParseError("calibration file " + path.string() + " has no header");

  const std::vector<std::string> header = detail::split_csv(lines.front());
  std::vector<std::optional<ColumnRole>> roles(header.size());
  std::set<std::pair<int, std::string>> seen;  // (kind, location) duplicates
  for (std::size_t c = 0; c < header.size(); ++c) {
    auto role = classify_column(header[c], topology);
    if (!role) {
      warn(diag, "ignoring unknown column '" + header[c] + "'");
      continue;
    }
    const std::string where =
        role->reg >= 0 ? std::to_string(role->reg) : location_label(role->edge);
    if (!seen.emplace(static_cast<int>(role->kind), where).second) {
      warn(diag, "ignoring duplicate column '" + header[c] + "'");
      continue;
    }
    roles[c] = std::move(role);
  }

  std::vector<CalibrationRecord> records;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    if (lines[r].empty()) continue;
    const std::vector<std::string> cells = detail::split_csv(lines[r]);
    if (cells.size() != header.size()) {
      throw ParseError("row has " + std::to_string(cells.size()) + " fields, expected " +
                           std::to_string(header.size()),
                       r + 1);
    }
    detail::RowCells row;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!roles[c] || cells[c].empty()) continue;
      detail::assign_cell(row, *roles[c], cells[c], r + 1, c + 1);
    }
    records.push_back(detail::assemble_record(std::move(row), r + 1));
  }

  std::stable_sort(records.begin(), records.end(),
                   [](const CalibrationRecord& a, const CalibrationRecord& b) {
                     return a.last_update.epoch_seconds < b.last_update.epoch_seconds;
                   });
  return records;
}

/// JSON mirror of the calibration schema: an array of row objects keyed by
/// the same column names. Values may be numbers or strings.
inline std::vector<CalibrationRecord> parse_calibration_json(const std::filesystem::path& path,
                                                             const DeviceTopology& topology,
                                                             Diagnostics* diag = nullptr) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("invalid JSON in " + path.string() + ": " + e.what());
  }
  if (!doc.is_array()) {
    throw ParseError("calibration JSON must be an array of row objects");
  }

  std::set<std::string> warned;
  std::vector<CalibrationRecord> records;
  std::size_t row_index = 0;
  for (const auto& row_json : doc) {
    ++row_index;
    if (!row_json.is_object()) throw ParseError("calibration row must be an object", row_index);
    detail::RowCells row;
    for (const auto& [key, value] : row_json.items()) {
      if (value.is_null()) continue;
      const auto role = classify_column(key, topology);
      if (!role) {
        if (warned.insert(key).second) warn(diag, "ignoring unknown column '" + key + "'");
        continue;
      }
      const std::string text =
          value.is_string() ? value.get<std::string>() : format_double(value.get<double>());
      if (text.empty()) continue;
      detail::assign_cell(row, *role, text, row_index, 0);
    }
    records.push_back(detail::assemble_record(std::move(row), row_index));
  }

  std::stable_sort(records.begin(), records.end(),
                   [](const CalibrationRecord& a, const CalibrationRecord& b) {
                     return a.last_update.epoch_seconds < b.last_update.epoch_seconds;
                   });
  return records;
}

/// Dispatches on the file extension: ".json" for the JSON mirror, CSV
/// otherwise.
inline std::vector<CalibrationRecord> parse_calibration_file(const std::filesystem::path& path,
                                                             const DeviceTopology& topology,
                                                             Diagnostics* diag = nullptr) {
  if (path.extension() == ".json") return parse_calibration_json(path, topology, diag);
  return parse_calibration_csv(path, topology, diag);
}

namespace detail {

struct CalibrationColumns {
  std::set<int> readout_regs;
  std::set<int> t2_regs;
  std::set<Edge> err_edges;
  std::set<Edge> len_edges;
  std::map<Edge, std::string> edge_label;

  std::string label(const Edge& e) const {
    const auto it = edge_label.find(e);
    if (it != edge_label.end()) return it->second;
    if (e.a <= 9 && e.b <= 9) return "cx" + std::to_string(e.a) + std::to_string(e.b);
    return "cx" + std::to_string(e.a) + "_" + std::to_string(e.b);
  }
};

inline CalibrationColumns collect_columns(std::span<const CalibrationRecord> records) {
  CalibrationColumns cols;
  for (const CalibrationRecord& rec : records) {
    for (const auto& [reg, v] : rec.readout_error) cols.readout_regs.insert(reg);
    for (const auto& [reg, v] : rec.readout_cal_time) cols.readout_regs.insert(reg);
    for (const auto& [reg, v] : rec.t2) cols.t2_regs.insert(reg);
    for (const auto& [reg, v] : rec.t2_cal_time) cols.t2_regs.insert(reg);
    for (const auto& [edge, v] : rec.cnot_error) cols.err_edges.insert(edge);
    for (const auto& [edge, v] : rec.cnot_cal_time) cols.err_edges.insert(edge);
    for (const auto& [edge, v] : rec.cnot_length) cols.len_edges.insert(edge);
    for (const auto& [edge, v] : rec.cnot_length_cal_time) cols.len_edges.insert(edge);
    for (const auto& [edge, label] : rec.cnot_source_label) cols.edge_label.emplace(edge, label);
  }
  return cols;
}

template <typename Map>
inline std::string cell_or_empty(const Map& map, const typename Map::key_type& key,
                                 const auto& to_text) {
  const auto it = map.find(key);
  return it == map.end() ? std::string{} : to_text(it->second);
}

}  // namespace detail

inline std::string calibration_to_csv(std::span<const CalibrationRecord> records) {
  const detail::CalibrationColumns cols = detail::collect_columns(records);

  std::string out = "last_update_date";
  for (const int reg : cols.readout_regs) {
    out += ",q" + std::to_string(reg) + "_readout_err";
    out += ",q" + std::to_string(reg) + "_readout_err_cal_time";
  }
  for (const Edge& e : cols.err_edges) {
    out += "," + cols.label(e) + "_gate_err";
    out += "," + cols.label(e) + "_gate_err_cal_time";
  }
  for (const int reg : cols.t2_regs) {
    out += ",q" + std::to_string(reg) + "_T2";
    out += ",q" + std::to_string(reg) + "_T2_unit";
    out += ",q" + std::to_string(reg) + "_T2_cal_time";
  }
  for (const Edge& e : cols.len_edges) {
    out += "," + cols.label(e) + "_gate_length";
    out += "," + cols.label(e) + "_gate_length_unit";
    out += "," + cols.label(e) + "_gate_length_cal_time";
  }
  out += "\n";

  const auto num = [](double v) { return format_double(v); };
  const auto stamp = [](const Timestamp& t) { return format_timestamp(t); };
  const auto dur_value = [](const Duration& d) { return format_double(d.value); };
  const auto dur_unit = [](const Duration& d) { return d.unit; };

  for (const CalibrationRecord& rec : records) {
    out += format_timestamp(rec.last_update);
    for (const int reg : cols.readout_regs) {
      out += "," + detail::cell_or_empty(rec.readout_error, reg, num);
      out += "," + detail::cell_or_empty(rec.readout_cal_time, reg, stamp);
    }
    for (const Edge& e : cols.err_edges) {
      out += "," + detail::cell_or_empty(rec.cnot_error, e, num);
      out += "," + detail::cell_or_empty(rec.cnot_cal_time, e, stamp);
    }
    for (const int reg : cols.t2_regs) {
      out += "," + detail::cell_or_empty(rec.t2, reg, dur_value);
      out += "," + detail::cell_or_empty(rec.t2, reg, dur_unit);
      out += "," + detail::cell_or_empty(rec.t2_cal_time, reg, stamp);
    }
    for (const Edge& e : cols.len_edges) {
      out += "," + detail::cell_or_empty(rec.cnot_length, e, dur_value);
      out += "," + detail::cell_or_empty(rec.cnot_length, e, dur_unit);
      out += "," + detail::cell_or_empty(rec.cnot_length_cal_time, e, stamp);
    }
    out += "\n";
  }
  return out;
}

inline nlohmann::json calibration_to_json(std::span<const CalibrationRecord> records) {
  const detail::CalibrationColumns cols = detail::collect_columns(records);
  nlohmann::json rows = nlohmann::json::array();
  for (const CalibrationRecord& rec : records) {
    nlohmann::json row;
    row["last_update_date"] = format_timestamp(rec.last_update);
    for (const auto& [reg, v] : rec.readout_error) {
      row["q" + std::to_string(reg) + "_readout_err"] = v;
    }
    for (const auto& [reg, t] : rec.readout_cal_time) {
      row["q" + std::to_string(reg) + "_readout_err_cal_time"] = format_timestamp(t);
    }
    for (const auto& [edge, v] : rec.cnot_error) {
      row[cols.label(edge) + "_gate_err"] = v;
    }
    for (const auto& [edge, t] : rec.cnot_cal_time) {
      row[cols.label(edge) + "_gate_err_cal_time"] = format_timestamp(t);
    }
    for (const auto& [reg, d] : rec.t2) {
      row["q" + std::to_string(reg) + "_T2"] = d.value;
      row["q" + std::to_string(reg) + "_T2_unit"] = d.unit;
    }
    for (const auto& [reg, t] : rec.t2_cal_time) {
      row["q" + std::to_string(reg) + "_T2_cal_time"] = format_timestamp(t);
    }
    for (const auto& [edge, d] : rec.cnot_length) {
      row[cols.label(edge) + "_gate_length"] = d.value;
      row[cols.label(edge) + "_gate_length_unit"] = d.unit;
    }
    for (const auto& [edge, t] : rec.cnot_length_cal_time) {
      row[cols.label(edge) + "_gate_length_cal_time"] = format_timestamp(t);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Writes content through a temp file plus rename so readers never observe a
/// partial file.
inline void write_text_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ValidationError("cannot write output file " + tmp.string());
    out << content;
    if (!out) throw Error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_calibration_csv(const std::filesystem::path& path,
                                  std::span<const CalibrationRecord> records) {
  write_text_atomic(path, calibration_to_csv(records));
}

inline void write_calibration_json(const std::filesystem::path& path,
                                   std::span<const CalibrationRecord> records) {
  write_text_atomic(path, calibration_to_json(records).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Readout bitstream files
// ---------------------------------------------------------------------------

namespace detail {

inline std::map<std::string, std::string> parse_metadata_lines(
    const std::vector<std::string>& lines, std::size_t& first_data_line) {
  std::map<std::string, std::string> meta;
  std::size_t i = 0;
  for (; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (line.empty()) continue;
    if (line.front() != '#') break;
    line.remove_prefix(1);
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("metadata line without '=' at line " + std::to_string(i + 1));
    }
    meta[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
  }
  first_data_line = i;
  return meta;
}

}  // namespace detail

/// Parses a readout CSV: '#'-prefixed key=value metadata, a q0,q1,... header,
/// then one binary row per shot.
inline ReadoutMatrix parse_readout_csv(const std::filesystem::path& path) {
  const std::vector<std::string> lines = detail::split_lines(detail::read_file(path));
  std::size_t first = 0;
  const auto meta = detail::parse_metadata_lines(lines, first);
  if (first >= lines.size()) throw ParseError("readout file " + path.string() + " has no header");

  ReadoutMatrix m;
  const auto get = [&](const std::string& key) -> std::optional<std::string> {
    const auto it = meta.find(key);
    if (it == meta.end()) return std::nullopt;
    return it->second;
  };
  if (const auto v = get("device_id")) m.device_id = *v;
  if (const auto v = get("prepared_state")) m.prepared_state = parse_prepared_state(*v);
  if (const auto v = get("window_start")) m.window_start = parse_timestamp(*v);
  if (const auto v = get("window_end")) m.window_end = parse_timestamp(*v);

  const std::vector<std::string> header = detail::split_csv(lines[first]);
  for (const std::string& h : header) {
    const Location loc = parse_location(h);
    if (!std::holds_alternative<int>(loc)) {
      throw ParseError("readout header column '" + h + "' is not a register");
    }
    m.register_labels.push_back(std::get<int>(loc));
  }

  const std::size_t width = m.register_labels.size();
  m.bits.reserve((lines.size() - first - 1) * width);
  for (std::size_t r = first + 1; r < lines.size(); ++r) {
    if (lines[r].empty()) continue;
    const std::vector<std::string> cells = detail::split_csv(lines[r]);
    if (cells.size() != width) {
      throw ParseError("ragged row: " + std::to_string(cells.size()) + " entries, expected " +
                           std::to_string(width),
                       r + 1);
    }
    for (std::size_t c = 0; c < width; ++c) {
      if (cells[c] == "0") {
        m.bits.push_back(0);
      } else if (cells[c] == "1") {
        m.bits.push_back(1);
      } else {
        throw ParseError("entry '" + cells[c] + "' is not binary", r + 1, c + 1);
      }
    }
    ++m.shots;
  }
  validate(m);
  return m;
}

inline ReadoutMatrix parse_readout_json(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("invalid JSON in " + path.string() + ": " + e.what());
  }
  ReadoutMatrix m;
  m.device_id = doc.value("device_id", std::string{});
  if (doc.contains("prepared_state")) {
    m.prepared_state = parse_prepared_state(doc["prepared_state"].get<std::string>());
  }
  if (doc.contains("window_start")) {
    m.window_start = parse_timestamp(doc["window_start"].get<std::string>());
  }
  if (doc.contains("window_end")) {
    m.window_end = parse_timestamp(doc["window_end"].get<std::string>());
  }
  for (const auto& label : doc.at("register_labels")) {
    m.register_labels.push_back(label.get<int>());
  }
  std::size_t row_index = 0;
  for (const auto& row : doc.at("bits")) {
    ++row_index;
    if (row.size() != m.register_labels.size()) {
      throw ParseError("ragged row in readout JSON", row_index);
    }
    std::size_t col = 0;
    for (const auto& bit : row) {
      ++col;
      const int v = bit.get<int>();
      if (v != 0 && v != 1) throw ParseError("entry is not binary", row_index, col);
      m.bits.push_back(static_cast<std::uint8_t>(v));
    }
    ++m.shots;
  }
  validate(m);
  return m;
}

inline ReadoutMatrix parse_readout_file(const std::filesystem::path& path) {
  if (path.extension() == ".json") return parse_readout_json(path);
  return parse_readout_csv(path);
}

inline std::string readout_to_csv(
    const ReadoutMatrix& m,
    std::span<const std::pair<std::string, std::string>> extra_metadata = {}) {
  std::string out;
  out += "# device_id=" + m.device_id + "\n";
  out += "# prepared_state=" + prepared_state_label(m.prepared_state) + "\n";
  out += "# window_start=" + format_timestamp(m.window_start) + "\n";
  out += "# window_end=" + format_timestamp(m.window_end) + "\n";
  for (const auto& [key, value] : extra_metadata) out += "# " + key + "=" + value + "\n";
  for (std::size_t c = 0; c < m.register_labels.size(); ++c) {
    out += (c == 0 ? "q" : ",q") + std::to_string(m.register_labels[c]);
  }
  out += "\n";
  out.reserve(out.size() + m.shots * (2 * m.register_labels.size() + 1));
  for (std::size_t s = 0; s < m.shots; ++s) {
    for (std::size_t c = 0; c < m.register_labels.size(); ++c) {
      if (c != 0) out += ',';
      out += static_cast<char>('0' + m.bit(s, c));
    }
    out += '\n';
  }
  return out;
}

inline nlohmann::json readout_to_json(const ReadoutMatrix& m) {
  nlohmann::json doc;
  doc["device_id"] = m.device_id;
  doc["prepared_state"] = prepared_state_label(m.prepared_state);
  doc["window_start"] = format_timestamp(m.window_start);
  doc["window_end"] = format_timestamp(m.window_end);
  doc["register_labels"] = m.register_labels;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t s = 0; s < m.shots; ++s) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < m.register_labels.size(); ++c) row.push_back(int(m.bit(s, c)));
    rows.push_back(std::move(row));
  }
  doc["bits"] = std::move(rows);
  return doc;
}

inline void write_readout_csv(const std::filesystem::path& path, const ReadoutMatrix& m) {
  write_text_atomic(path, readout_to_csv(m));
}

inline void write_readout_json(const std::filesystem::path& path, const ReadoutMatrix& m) {
  write_text_atomic(path, readout_to_json(m).dump() + "\n");
}

// ---------------------------------------------------------------------------
// Metric series files
// ---------------------------------------------------------------------------

inline std::string series_to_csv(const MetricSeries& series) {
  std::string out;
  out += "# device_id=" + series.device_id + "\n";
  out += "# metric=" + metric_kind_label(series.kind) + "\n";
  out += "# location=" + location_label(series.location) + "\n";
  out += "timestamp,value\n";
  for (const SeriesPoint& p : series.points) {
    out += format_timestamp(p.time) + "," + format_double(p.value) + "\n";
  }
  return out;
}

inline MetricSeries parse_series_csv(const std::filesystem::path& path) {
  const std::vector<std::string> lines = detail::split_lines(detail::read_file(path));
  std::size_t first = 0;
  const auto meta = detail::parse_metadata_lines(lines, first);

  MetricSeries series;
  if (const auto it = meta.find("device_id"); it != meta.end()) series.device_id = it->second;
  if (const auto it = meta.find("metric"); it != meta.end()) {
    series.kind = parse_metric_kind(it->second);
  }
  if (const auto it = meta.find("location"); it != meta.end()) {
    series.location = parse_location(it->second);
  }

  if (first >= lines.size() || detail::split_csv(lines[first]) !=
                                   std::vector<std::string>{"timestamp", "value"}) {
    throw ParseError("series file " + path.string() + " is missing the timestamp,value header");
  }
  for (std::size_t r = first + 1; r < lines.size(); ++r) {
    if (lines[r].empty()) continue;
    const std::vector<std::string> cells = detail::split_csv(lines[r]);
    if (cells.size() != 2) throw ParseError("series row needs two fields", r + 1);
    Timestamp t;
    try {
      t = parse_timestamp(cells[0]);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), r + 1, 1);
    }
    series.points.push_back(SeriesPoint{t, parse_double(cells[1], r + 1, 2)});
  }
  validate(series);
  return series;
}

inline nlohmann::json series_to_json(const MetricSeries& series) {
  nlohmann::json doc;
  doc["device_id"] = series.device_id;
  doc["metric"] = metric_kind_label(series.kind);
  doc["location"] = location_label(series.location);
  nlohmann::json points = nlohmann::json::array();
  for (const SeriesPoint& p : series.points) {
    points.push_back({{"timestamp", format_timestamp(p.time)}, {"value", p.value}});
  }
  doc["points"] = std::move(points);
  return doc;
}

inline MetricSeries parse_series_json(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("invalid JSON in " + path.string() + ": " + e.what());
  }
  MetricSeries series;
  series.device_id = doc.value("device_id", std::string{});
  if (doc.contains("metric")) series.kind = parse_metric_kind(doc["metric"].get<std::string>());
  if (doc.contains("location")) {
    series.location = parse_location(doc["location"].get<std::string>());
  }
  for (const auto& p : doc.at("points")) {
    series.points.push_back(
        SeriesPoint{parse_timestamp(p.at("timestamp").get<std::string>()), p.at("value").get<double>()});
  }
  validate(series);
  return series;
}

inline MetricSeries parse_series_file(const std::filesystem::path& path) {
  if (path.extension() == ".json") return parse_series_json(path);
  return parse_series_csv(path);
}

inline void write_series_csv(const std::filesystem::path& path, const MetricSeries& series) {
  write_text_atomic(path, series_to_csv(series));
}

inline void write_series_json(const std::filesystem::path& path, const MetricSeries& series) {
  write_text_atomic(path, series_to_json(series).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Distance matrix files (labeled CSV plus a JSON twin)
// ---------------------------------------------------------------------------

inline std::string matrix_to_csv(const DistanceMatrix& matrix,
                                 std::span<const std::pair<std::string, std::string>> metadata) {
  std::string out;
  for (const auto& [key, value] : metadata) out += "# " + key + "=" + value + "\n";
  out += "label";
  for (const std::string& l : matrix.labels) out += "," + l;
  out += "\n";
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    out += matrix.labels[i];
    for (std::size_t j = 0; j < matrix.size(); ++j) out += "," + format_double(matrix.at(i, j));
    out += "\n";
  }
  return out;
}

inline nlohmann::json matrix_to_json(const DistanceMatrix& matrix,
                                     std::span<const std::pair<std::string, std::string>> metadata) {
  nlohmann::json doc;
  for (const auto& [key, value] : metadata) doc[key] = value;
  doc["labels"] = matrix.labels;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < matrix.size(); ++j) row.push_back(matrix.at(i, j));
    rows.push_back(std::move(row));
  }
  doc["values"] = std::move(rows);
  return doc;
}

// ---------------------------------------------------------------------------
// Topology config
// ---------------------------------------------------------------------------

/// Loads {"device_id": ..., "capacity": n, "edges": [[i,j], ...]}.
inline DeviceTopology parse_topology_json(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("invalid JSON in " + path.string() + ": " + e.what());
  }
  std::vector<Edge> edges;
  for (const auto& pair : doc.at("edges")) {
    if (!pair.is_array() || pair.size() != 2) {
      throw ParseError("topology edges must be [i, j] pairs");
    }
    edges.push_back(Edge{pair[0].get<int>(), pair[1].get<int>()});
  }
  return make_topology(doc.value("device_id", std::string{}), doc.at("capacity").get<int>(),
                       std::move(edges));
}

// ---------------------------------------------------------------------------
// Segmentation
// ---------------------------------------------------------------------------

struct SegmentSummary {
  std::size_t window_size{0};
  std::size_t windows{0};
  std::size_t dropped_shots{0};
};

/// Splits a long readout stream into floor(shots/window) contiguous
/// non-overlapping windows; the remainder is dropped and reported. Window
/// timestamps interpolate the parent's span (falling back to one second per
/// window when the span is too short to divide).
inline std::vector<ReadoutMatrix> segment_shots(const ReadoutMatrix& m, std::size_t window,
                                                SegmentSummary* summary = nullptr,
                                                Diagnostics* diag = nullptr) {
  if (window < 1) throw ValidationError("segmentation window must be at least 1");
  const std::size_t count = m.shots / window;
  const std::size_t dropped = m.shots - count * window;
  if (summary != nullptr) *summary = SegmentSummary{window, count, dropped};
  if (count == 0) {
    warn(diag, "window of " + std::to_string(window) + " shots exceeds the " +
                   std::to_string(m.shots) + " available; no windows produced");
    return {};
  }
  if (dropped > 0) {
    warn(diag, "dropped " + std::to_string(dropped) + " trailing shots (not a full window)");
  }

  const std::int64_t span = m.window_end.epoch_seconds - m.window_start.epoch_seconds;
  const bool interpolate = span >= static_cast<std::int64_t>(count);
  const std::size_t width = m.register_labels.size();

  std::vector<ReadoutMatrix> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ReadoutMatrix w;
    w.device_id = m.device_id;
    w.prepared_state = m.prepared_state;
    w.register_labels = m.register_labels;
    w.shots = window;
    const std::int64_t begin =
        interpolate ? span * static_cast<std::int64_t>(i) / static_cast<std::int64_t>(count)
                    : static_cast<std::int64_t>(i);
    const std::int64_t finish =
        interpolate ? span * static_cast<std::int64_t>(i + 1) / static_cast<std::int64_t>(count)
                    : static_cast<std::int64_t>(i + 1);
    w.window_start = Timestamp{m.window_start.epoch_seconds + begin, m.window_start.offset_minutes};
    w.window_end = Timestamp{m.window_start.epoch_seconds + finish, m.window_start.offset_minutes};
    const auto begin_it = m.bits.begin() + static_cast<std::ptrdiff_t>(i * window * width);
    w.bits.assign(begin_it, begin_it + static_cast<std::ptrdiff_t>(window * width));
    out.push_back(std::move(w));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Input sniffing (used by the CLI to route files)
// ---------------------------------------------------------------------------

enum class InputKind { Calibration, Readout, Series, Unknown };

inline InputKind sniff_input(const std::filesystem::path& path) {
  const std::string content = detail::read_file(path);
  if (path.extension() == ".json") {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(content);
    } catch (const nlohmann::json::parse_error&) {
      return InputKind::Unknown;
    }
    if (doc.is_array()) return InputKind::Calibration;
    if (doc.is_object() && doc.contains("bits")) return InputKind::Readout;
    if (doc.is_object() && doc.contains("points")) return InputKind::Series;
    return InputKind::Unknown;
  }
  const std::vector<std::string> lines = detail::split_lines(content);
  for (const std::string& line : lines) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (line.find("prepared_state=") != std::string::npos) return InputKind::Readout;
      if (line.find("metric=") != std::string::npos) return InputKind::Series;
      continue;
    }
    if (line.find("last_update_date") != std::string::npos) return InputKind::Calibration;
    if (line.rfind("timestamp,value", 0) == 0) return InputKind::Series;
    if (line.rfind("q", 0) == 0) return InputKind::Readout;
    break;
  }
  return InputKind::Unknown;
}

}  // namespace qstab
