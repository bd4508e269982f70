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

#include "qstab/ingest.hpp"
#include "qstab/model.hpp"

using namespace qstab;

TEST_CASE("edges are canonicalized") {
  CHECK(make_edge(3, 1) == Edge{1, 3});
  CHECK(make_edge(1, 3) == Edge{1, 3});
  CHECK_THROWS_AS(make_edge(2, 2), ValidationError);
  CHECK_THROWS_AS(make_edge(-1, 2), ValidationError);
}

TEST_CASE("topology invariants") {
  CHECK_NOTHROW(make_topology("dev", 3, {{0, 1}, {1, 2}}));
  CHECK_THROWS_AS(make_topology("dev", 2, {{0, 2}}), ValidationError);   // endpoint out of range
  CHECK_THROWS_AS(make_topology("dev", 3, {{0, 1}, {1, 0}}), ValidationError);  // duplicate
  CHECK_THROWS_AS(make_topology("dev", 3, {{1, 1}}), ValidationError);   // self loop
  CHECK_THROWS_AS(make_topology("dev", 0, {}), ValidationError);
}

TEST_CASE("nearest neighbor pairs are the coupling edges") {
  const DeviceTopology none = make_topology("flat", 4, {});
  CHECK(nearest_neighbor_pairs(none).empty());

  const DeviceTopology tiny = make_topology("tiny", 2, {{0, 1}});
  CHECK(nearest_neighbor_pairs(tiny) == std::vector<Edge>{{0, 1}});

  const DeviceTopology toronto = parse_topology_json(QSTAB_DATA_DIR "/topologies/toronto.json");
  CHECK(toronto.capacity == 27);
  CHECK(nearest_neighbor_pairs(toronto).size() == 28);
}

TEST_CASE("all register pairs") {
  CHECK(all_register_pairs(27).size() == 351);
  CHECK(all_register_pairs(2).size() == 1);
  CHECK_THROWS_AS(all_register_pairs(1), ValidationError);

  // n=5 against direct enumeration
  const std::vector<Edge> expected{{0, 1}, {0, 2}, {0, 3}, {0, 4}, {1, 2},
                                   {1, 3}, {1, 4}, {2, 3}, {2, 4}, {3, 4}};
  CHECK(all_register_pairs(5) == expected);

  for (int n = 2; n <= 64; ++n) {
    CHECK(all_register_pairs(n).size() == static_cast<std::size_t>(n) * (n - 1) / 2);
  }
}

TEST_CASE("timestamps live on the absolute timeline") {
  const Timestamp local = parse_timestamp("2019-02-27 06:56:32-05:00");
  const Timestamp utc = parse_timestamp("2019-02-27 11:56:32+00:00");
  CHECK(local.epoch_seconds == utc.epoch_seconds);
  CHECK(local.offset_minutes == -300);
  CHECK(format_timestamp(local) == "2019-02-27 06:56:32-05:00");
  CHECK(format_timestamp(utc) == "2019-02-27 11:56:32+00:00");

  CHECK(parse_timestamp("1970-01-01 00:00:00+00:00").epoch_seconds == 0);
  CHECK(parse_timestamp("2020-12-30T01:18:20Z").epoch_seconds ==
        parse_timestamp("2020-12-30 01:18:20+00:00").epoch_seconds);
  CHECK(parse_timestamp("2020-01-01 00:00:00.125-05:00").epoch_seconds ==
        parse_timestamp("2020-01-01 00:00:00-05:00").epoch_seconds);

  CHECK_THROWS_AS(parse_timestamp("yesterday"), ParseError);
  CHECK_THROWS_AS(parse_timestamp("2020-13-01 00:00:00"), ParseError);
  CHECK_THROWS_AS(parse_timestamp("2020-01-01 00:00"), ParseError);
}

TEST_CASE("durations keep their source unit") {
  const Duration t2{77.0, "us"};
  CHECK(t2.seconds() == Catch::Approx(77e-6).epsilon(1e-12));
  CHECK(Duration{370.0, "ns"}.seconds() == Catch::Approx(3.7e-7).epsilon(1e-12));
  CHECK(Duration{1.5, "s"}.seconds() == 1.5);
  const Duration odd{1.0, "fortnight"};
  CHECK_THROWS_AS(odd.seconds(), ValidationError);

  const Duration back = duration_from_seconds(7.7e-5, "us");
  CHECK(back.unit == "us");
  CHECK(back.seconds() == Catch::Approx(7.7e-5).epsilon(1e-12));
}

TEST_CASE("duration strings") {
  CHECK(parse_duration_seconds("90d") == 90 * 86400);
  CHECK(parse_duration_seconds("12h") == 12 * 3600);
  CHECK(parse_duration_seconds("30m") == 1800);
  CHECK(parse_duration_seconds("45s") == 45);
  CHECK(parse_duration_seconds("7") == 7 * 86400);
  CHECK_THROWS_AS(parse_duration_seconds("soon"), ParseError);
}

TEST_CASE("locations parse and print") {
  CHECK(location_label(Location{3}) == "q3");
  CHECK(location_label(Location{Edge{0, 1}}) == "q0-q1");
  CHECK(parse_location("q3") == Location{3});
  CHECK(parse_location("3") == Location{3});
  CHECK(parse_location("0-1") == Location{Edge{0, 1}});
  CHECK(parse_location("q1-q0") == Location{Edge{0, 1}});
  CHECK_THROWS_AS(parse_location("left"), ParseError);
}

TEST_CASE("histogram construction checks invariants") {
  const Histogram h = make_histogram({0.0, 1.0, 2.0}, {3, 5});
  CHECK(h.total == 8);
  CHECK(h.probability(0) + h.probability(1) == 1.0);
  CHECK_THROWS_AS(make_histogram({1.0, 1.0}, {1}), ValidationError);
  CHECK_THROWS_AS(make_histogram({0.0, 1.0}, {1, 2}), ValidationError);
  CHECK_THROWS_AS(make_histogram({0.0}, {}), ValidationError);
}

TEST_CASE("distance matrix validation") {
  DistanceMatrix m = make_distance_matrix({"a", "b"});
  m.at(0, 1) = m.at(1, 0) = 0.25;
  CHECK_NOTHROW(validate(m));
  m.at(0, 1) = 0.3;
  CHECK_THROWS_AS(validate(m), ValidationError);  // asymmetric
  m.at(0, 1) = m.at(1, 0) = 1.5;
  CHECK_THROWS_AS(validate(m), ValidationError);  // out of range
}

TEST_CASE("metric series validation") {
  MetricSeries s;
  s.kind = MetricKind::InitFidelity;
  s.points = {{Timestamp{0, 0}, 0.9}, {Timestamp{10, 0}, 0.95}};
  CHECK_NOTHROW(validate(s));
  s.points.push_back({Timestamp{10, 0}, 0.9});
  CHECK_THROWS_AS(validate(s), ValidationError);  // not strictly increasing
  s.points = {{Timestamp{0, 0}, 1.2}};
  CHECK_THROWS_AS(validate(s), ValidationError);  // fidelity outside [0,1]
  s.kind = MetricKind::DutyCycle;
  s.points = {{Timestamp{0, 0}, -0.5}};
  CHECK_THROWS_AS(validate(s), ValidationError);
}

TEST_CASE("readout matrix validation") {
  ReadoutMatrix m;
  m.register_labels = {0, 1};
  m.shots = 1;
  m.bits = {0, 1};
  CHECK_NOTHROW(validate(m));
  m.bits = {0, 2};
  CHECK_THROWS_AS(validate(m), ValidationError);
  m.bits = {0};
  CHECK_THROWS_AS(validate(m), ValidationError);
}

TEST_CASE("decay data validation") {
  RBDecayData ok{{{1, 0.9}, {5, 0.7}, {10, 0.6}}, 4};
  CHECK_NOTHROW(validate(ok));
  RBDecayData few{{{1, 0.9}, {5, 0.7}}, 4};
  CHECK_THROWS_AS(validate(few), ValidationError);
  RBDecayData unsorted{{{5, 0.9}, {1, 0.7}, {10, 0.6}}, 4};
  CHECK_THROWS_AS(validate(unsorted), ValidationError);
  RBDecayData range{{{1, 1.4}, {5, 0.7}, {10, 0.6}}, 4};
  CHECK_THROWS_AS(validate(range), ValidationError);
}

TEST_CASE("prepared state labels") {
  CHECK(prepared_state_label(PreparedState{}) == "all_zeros");
  const PreparedState bell{PreparedState::Kind::BellPair, Edge{2, 5}};
  CHECK(prepared_state_label(bell) == "bell_pair:2-5");
  CHECK(parse_prepared_state("bell_pair:2-5") == bell);
  CHECK(parse_prepared_state("all_zeros") == PreparedState{});
  CHECK_THROWS_AS(parse_prepared_state("ghz"), ParseError);
}
