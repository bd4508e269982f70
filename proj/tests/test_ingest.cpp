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

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "qstab/ingest.hpp"
#include "qstab/synth.hpp"

using namespace qstab;

namespace {

const DeviceTopology& pair_topology() {
  static const DeviceTopology t = make_topology("pairdev", 2, {{0, 1}});
  return t;
}

}  // namespace

TEST_CASE("calibration csv parsing") {
  helpers::TempDir tmp;
  const std::string header =
      "last_update_date,q0_readout_err,q0_readout_err_cal_time,cx01_gate_err,"
      "cx01_gate_err_cal_time,q0_T2,q0_T2_unit,q0_T2_cal_time\n";

  SECTION("header only gives an empty list") {
    const auto path = helpers::write_file(tmp.file("empty.csv"), header);
    CHECK(parse_calibration_csv(path, pair_topology()).empty());
  }

  SECTION("one full row") {
    const auto path = helpers::write_file(
        tmp.file("row.csv"),
        header +
            "2019-02-27 06:56:32-05:00,0.05,2019-02-27 06:00:00-05:00,0.015,"
            "2019-02-27 06:30:00-05:00,77.0,us,2019-02-27 05:00:00-05:00\n");
    const auto records = parse_calibration_csv(path, pair_topology());
    REQUIRE(records.size() == 1);
    const CalibrationRecord& rec = records.front();
    CHECK(rec.readout_error.at(0) == 0.05);
    CHECK(rec.cnot_error.at(Edge{0, 1}) == 0.015);
    CHECK(rec.t2.at(0).value == 77.0);
    CHECK(rec.t2.at(0).unit == "us");
    CHECK(rec.t2.at(0).seconds() == Catch::Approx(77e-6).epsilon(1e-12));
    CHECK(rec.cnot_source_label.at(Edge{0, 1}) == "cx01");
  }

  SECTION("empty cells leave entries absent") {
    const auto path = helpers::write_file(
        tmp.file("gaps.csv"), header + "2019-02-27 06:56:32-05:00,,,0.015,,,,\n");
    const auto records = parse_calibration_csv(path, pair_topology());
    REQUIRE(records.size() == 1);
    CHECK(records.front().readout_error.empty());
    CHECK(records.front().t2.empty());
    CHECK(records.front().cnot_error.size() == 1);
  }

  SECTION("malformed timestamp carries the row index") {
    const auto path = helpers::write_file(
        tmp.file("badtime.csv"), header + "not-a-time,0.05,,0.015,,77.0,us,\n");
    try {
      parse_calibration_csv(path, pair_topology());
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.row() == 2);
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
  }

  SECTION("error rate outside the unit interval") {
    const auto path = helpers::write_file(
        tmp.file("badrate.csv"), header + "2019-02-27 06:56:32-05:00,1.5,,0.015,,77.0,us,\n");
    CHECK_THROWS_AS(parse_calibration_csv(path, pair_topology()), ValidationError);
  }

  SECTION("unknown columns warn and are ignored") {
    const auto path = helpers::write_file(
        tmp.file("extra.csv"),
        "last_update_date,q0_readout_err,q9_readout_err,favorite_color\n"
        "2019-02-27 06:56:32-05:00,0.05,0.5,blue\n");
    Diagnostics diag;
    const auto records = parse_calibration_csv(path, pair_topology(), &diag);
    REQUIRE(records.size() == 1);
    CHECK(records.front().readout_error.size() == 1);
    REQUIRE(diag.warnings.size() == 2);  // q9 outside capacity, favorite_color unknown
  }

  SECTION("directed labels map to one canonical edge") {
    const auto path = helpers::write_file(
        tmp.file("directed.csv"),
        "last_update_date,cx10_gate_err\n2019-02-27 06:56:32-05:00,0.02\n");
    const auto records = parse_calibration_csv(path, pair_topology());
    REQUIRE(records.size() == 1);
    CHECK(records.front().cnot_error.at(Edge{0, 1}) == 0.02);
    CHECK(records.front().cnot_source_label.at(Edge{0, 1}) == "cx10");
  }

  SECTION("duplicate directed columns keep the first") {
    const auto path = helpers::write_file(
        tmp.file("dup.csv"),
        "last_update_date,cx01_gate_err,cx10_gate_err\n2019-02-27 06:56:32-05:00,0.02,0.09\n");
    Diagnostics diag;
    const auto records = parse_calibration_csv(path, pair_topology(), &diag);
    CHECK(records.front().cnot_error.at(Edge{0, 1}) == 0.02);
    CHECK(diag.warnings.size() == 1);
  }

  SECTION("rows sort by last_update") {
    const auto path = helpers::write_file(
        tmp.file("sort.csv"), "last_update_date,q0_readout_err\n"
                              "2019-03-01 00:00:00+00:00,0.2\n"
                              "2019-02-01 00:00:00+00:00,0.1\n");
    const auto records = parse_calibration_csv(path, pair_topology());
    REQUIRE(records.size() == 2);
    CHECK(records[0].readout_error.at(0) == 0.1);
  }

  SECTION("ragged row fails with its index") {
    const auto path = helpers::write_file(
        tmp.file("ragged.csv"), header + "2019-02-27 06:56:32-05:00,0.05\n");
    CHECK_THROWS_AS(parse_calibration_csv(path, pair_topology()), ParseError);
  }
}

TEST_CASE("multi-digit gate columns disambiguate against the topology") {
  helpers::TempDir tmp;
  const DeviceTopology topo =
      parse_topology_json(QSTAB_DATA_DIR "/topologies/toronto.json");
  const auto path = helpers::write_file(
      tmp.file("big.csv"),
      "last_update_date,cx1012_gate_err,cx10_12_gate_err_cal_time\n"
      "2020-12-11 08:00:00-05:00,0.03,2020-12-11 07:00:00-05:00\n");
  const auto records = parse_calibration_csv(path, topo);
  REQUIRE(records.size() == 1);
  // Only the split (10, 12) lands on a coupling edge; (1, 012) has a leading zero.
  CHECK(records.front().cnot_error.at(Edge{10, 12}) == 0.03);
  CHECK(records.front().cnot_cal_time.count(Edge{10, 12}) == 1);
}

TEST_CASE("calibration round trip is field exact") {
  DriftModel model;
  model.seed = 424242;
  model.readout_error[0] = {0.05, 0.004, {}};
  model.readout_error[1] = {0.03, 0.002, {}};
  model.t2[0] = {77e-6, 2e-6, {}};
  model.t2[1] = {82e-6, 3e-6, {}};
  model.cnot_error[{0, 1}] = {0.015, 0.001, {}};
  model.cnot_length[{0, 1}] = {370e-9, 5e-9, {}};
  const DeviceTopology topo = make_topology("synthetic", 2, {{0, 1}});
  const auto records =
      generate_calibration(model, topo, parse_timestamp("2020-01-01 00:00:00-05:00"),
                           parse_timestamp("2020-03-01 00:00:00-05:00"), 86400);
  REQUIRE(records.size() == 61);

  helpers::TempDir tmp;
  write_calibration_csv(tmp.file("out.csv"), records);
  const auto csv_again = parse_calibration_csv(tmp.file("out.csv"), topo);
  CHECK(csv_again == records);

  write_calibration_json(tmp.file("out.json"), records);
  const auto json_again = parse_calibration_json(tmp.file("out.json"), topo);
  CHECK(json_again == records);
}

TEST_CASE("readout csv parsing") {
  helpers::TempDir tmp;

  SECTION("single entry") {
    const auto path = helpers::write_file(tmp.file("one.csv"), "q0\n0\n");
    const ReadoutMatrix m = parse_readout_csv(path);
    CHECK(m.shots == 1);
    CHECK(m.register_labels == std::vector<int>{0});
    CHECK(m.bit(0, 0) == 0);
  }

  SECTION("metadata lines") {
    const auto path = helpers::write_file(tmp.file("meta.csv"),
                                          "# device_id=toronto\n"
                                          "# prepared_state=bell_pair:0-1\n"
                                          "# window_start=2020-12-11 23:00:00-05:00\n"
                                          "# window_end=2020-12-11 23:30:00-05:00\n"
                                          "q0,q1\n0,1\n1,0\n");
    const ReadoutMatrix m = parse_readout_csv(path);
    CHECK(m.device_id == "toronto");
    CHECK(m.prepared_state == PreparedState{PreparedState::Kind::BellPair, Edge{0, 1}});
    CHECK(m.shots == 2);
    CHECK(m.window_end.epoch_seconds - m.window_start.epoch_seconds == 1800);
  }

  SECTION("non-binary entry names row and column") {
    const auto path = helpers::write_file(tmp.file("bad.csv"), "q0,q1\n0,2\n");
    try {
      parse_readout_csv(path);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.row() == 2);
      CHECK(e.column() == 2);
    }
  }

  SECTION("ragged rows fail") {
    const auto path = helpers::write_file(tmp.file("ragged.csv"), "q0,q1\n0,1\n0\n");
    CHECK_THROWS_AS(parse_readout_csv(path), ParseError);
  }
}

TEST_CASE("readout round trip") {
  PairCorrelationModel model;
  model.seed = 7;
  model.device_id = "loop";
  model.pair_probs[{0, 1}] = {0.4, 0.1, 0.1, 0.4};
  model.background_error = 0.25;
  const ReadoutMatrix m = generate_readout(model, 200, {0, 1, 2});

  helpers::TempDir tmp;
  write_readout_csv(tmp.file("m.csv"), m);
  CHECK(parse_readout_csv(tmp.file("m.csv")) == m);

  write_readout_json(tmp.file("m.json"), m);
  CHECK(parse_readout_json(tmp.file("m.json")) == m);
}

TEST_CASE("series round trip") {
  MetricSeries s;
  s.kind = MetricKind::DutyCycle;
  s.location = Edge{0, 1};
  s.device_id = "loop";
  s.points = {{parse_timestamp("2020-01-01 00:00:00+00:00"), 107.326},
              {parse_timestamp("2020-01-02 00:00:00+00:00"), 30.675}};

  helpers::TempDir tmp;
  write_series_csv(tmp.file("s.csv"), s);
  CHECK(parse_series_csv(tmp.file("s.csv")) == s);
  write_series_json(tmp.file("s.json"), s);
  CHECK(parse_series_json(tmp.file("s.json")) == s);
}

TEST_CASE("segmentation drops the remainder") {
  PairCorrelationModel model;
  model.seed = 3;
  model.background_error = 0.5;
  ReadoutMatrix m = generate_readout(model, 2000, {0, 1});

  SegmentSummary summary;
  const auto windows = segment_shots(m, 1000, &summary);
  REQUIRE(windows.size() == 2);
  CHECK(summary.dropped_shots == 0);
  CHECK(windows[0].shots == 1000);
  CHECK(windows[0].window_start.epoch_seconds < windows[1].window_start.epoch_seconds);

  Diagnostics diag;
  const auto none = segment_shots(m, 5000, &summary, &diag);
  CHECK(none.empty());
  CHECK(summary.dropped_shots == 2000);
  CHECK(diag.warnings.size() == 1);
}

TEST_CASE("segmentation concatenation reconstructs the stream") {
  PairCorrelationModel model;
  model.seed = 11;
  model.background_error = 0.3;
  const ReadoutMatrix m = generate_readout(model, 2350, {0, 1, 2});

  SegmentSummary summary;
  const auto windows = segment_shots(m, 500, &summary);
  REQUIRE(windows.size() == 4);
  CHECK(summary.dropped_shots == 350);

  std::vector<std::uint8_t> rebuilt;
  for (const ReadoutMatrix& w : windows) {
    rebuilt.insert(rebuilt.end(), w.bits.begin(), w.bits.end());
  }
  rebuilt.insert(rebuilt.end(), m.bits.begin() + static_cast<std::ptrdiff_t>(rebuilt.size()),
                 m.bits.end());
  CHECK(rebuilt == m.bits);
}

TEST_CASE("input sniffing") {
  helpers::TempDir tmp;
  const auto cal = helpers::write_file(tmp.file("c.csv"),
                                       "last_update_date,q0_readout_err\n"
                                       "2020-01-01 00:00:00+00:00,0.1\n");
  const auto series = helpers::write_file(tmp.file("s.csv"),
                                          "# metric=init_fidelity\n# location=q0\n"
                                          "timestamp,value\n2020-01-01 00:00:00+00:00,0.9\n");
  const auto readout = helpers::write_file(tmp.file("r.csv"), "q0,q1\n0,1\n");
  CHECK(sniff_input(cal) == InputKind::Calibration);
  CHECK(sniff_input(series) == InputKind::Series);
  CHECK(sniff_input(readout) == InputKind::Readout);
}

TEST_CASE("topology config") {
  const DeviceTopology yorktown =
      parse_topology_json(QSTAB_DATA_DIR "/topologies/yorktown.json");
  CHECK(yorktown.capacity == 5);
  CHECK(yorktown.edges.size() == 6);
  CHECK(yorktown.device_id == "yorktown");
}
