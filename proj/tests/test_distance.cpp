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

#include "oracles.hpp"
#include "qstab/distance.hpp"

using namespace qstab;

namespace {

Histogram from_counts(std::vector<std::uint64_t> counts) {
  std::vector<double> edges(counts.size() + 1);
  for (std::size_t i = 0; i < edges.size(); ++i) edges[i] = static_cast<double>(i);
  return make_histogram(std::move(edges), std::move(counts));
}

Histogram random_histogram(oracles::TestRng& rng, std::size_t bins, bool allow_empty_bins) {
  std::vector<std::uint64_t> counts(bins);
  for (auto& c : counts) {
    c = rng.integer(50);
    if (!allow_empty_bins) c += 1;
  }
  // Guard against an all-zero histogram.
  counts[rng.integer(bins)] += 1;
  return from_counts(std::move(counts));
}

}  // namespace

TEST_CASE("histogram building shares edges") {
  const std::vector<double> same{1.0, 2.0, 3.0};
  const auto [ha, hb] = build_histograms(same, same, BinningSpec{FixedCount{3}, JointMinMax{}});
  CHECK(ha == hb);
  CHECK(ha.total == 3);

  const std::vector<double> zeros{0.0, 0.0};
  const std::vector<double> ones{1.0, 1.0};
  const auto [hz, ho] = build_histograms(zeros, ones, BinningSpec{FixedCount{2}, JointMinMax{}});
  CHECK(hz.counts == std::vector<std::uint64_t>{2, 0});
  CHECK(ho.counts == std::vector<std::uint64_t>{0, 2});
  CHECK(hz.bin_edges == ho.bin_edges);

  // 90 daily values per sample, auto bin rule: ceil(sqrt(90)) = 10 bins.
  std::vector<double> a, b;
  oracles::TestRng rng(11);
  for (int i = 0; i < 90; ++i) {
    a.push_back(rng.unit());
    b.push_back(rng.unit());
  }
  const auto [h90a, h90b] = build_histograms(a, b);
  CHECK(h90a.total == 90);
  CHECK(h90b.total == 90);
  CHECK(h90a.bins() == 10);
}

TEST_CASE("degenerate samples collapse to one bin") {
  const std::vector<double> flat{2.5, 2.5, 2.5};
  const auto [ha, hb] = build_histograms(flat, flat, BinningSpec{FixedCount{4}, JointMinMax{}});
  CHECK(ha.bins() == 1);
  CHECK(ha.counts.front() == 3);
}

TEST_CASE("fixed width and explicit range binning") {
  const std::vector<double> a{0.0, 0.9, 2.1};
  const std::vector<double> b{0.4, 1.5, 2.9};
  const auto [ha, hb] = build_histograms(a, b, BinningSpec{FixedWidth{1.0}, JointMinMax{}});
  CHECK(ha.bins() == 3);
  CHECK(ha.total == 3);
  CHECK(hb.total == 3);

  const auto [he, hf] =
      build_histograms(a, b, BinningSpec{FixedCount{2}, ExplicitRange{0.0, 4.0}});
  CHECK(he.bin_edges == std::vector<double>{0.0, 2.0, 4.0});

  CHECK_THROWS_AS(build_histograms(a, b, BinningSpec{FixedCount{2}, ExplicitRange{1.0, 1.0}}),
                  ValidationError);
  CHECK_THROWS_AS(build_histograms({}, b, BinningSpec{}), ValidationError);
}

TEST_CASE("bhattacharyya hand values") {
  CHECK(bhattacharyya(from_counts({5, 5}), from_counts({5, 5})) == 1.0);
  CHECK(bhattacharyya(from_counts({4, 0}), from_counts({0, 4})) == 0.0);

  const double bc = bhattacharyya(from_counts({5, 5}), from_counts({9, 1}));
  CHECK(bc == Catch::Approx(std::sqrt(0.45) + std::sqrt(0.05)).epsilon(1e-12));

  CHECK_THROWS_AS(bhattacharyya(from_counts({1, 1}), make_histogram({0.0, 0.5, 1.0}, {1, 1})),
                  IncompatibleHistogramError);
  CHECK_THROWS_AS(bhattacharyya(from_counts({0, 0}), from_counts({1, 1})), ValidationError);
}

TEST_CASE("hellinger hand values") {
  CHECK(hellinger(from_counts({7, 3}), from_counts({7, 3})) == 0.0);
  CHECK(hellinger(from_counts({4, 0}), from_counts({0, 4})) == 1.0);
  const double d = hellinger(from_counts({5, 5}), from_counts({9, 1}));
  CHECK(d == Catch::Approx(0.3249196962).margin(1e-9));
}

TEST_CASE("proportional counts are the same distribution") {
  CHECK(bhattacharyya(from_counts({1, 2, 1}), from_counts({25, 50, 25})) == 1.0);
  CHECK(hellinger(from_counts({3, 3, 3}), from_counts({7, 7, 7})) == 0.0);
}

TEST_CASE("distance properties over random histograms") {
  oracles::TestRng rng(20260810);
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t bins = 2 + rng.integer(14);
    const Histogram p = random_histogram(rng, bins, true);
    const Histogram q = random_histogram(rng, bins, true);
    const Histogram r = random_histogram(rng, bins, true);

    const double dpq = hellinger(p, q);
    const double dqp = hellinger(q, p);
    CHECK(dpq == dqp);  // exact symmetry
    CHECK((dpq >= 0.0 && dpq <= 1.0));

    const double bc = bhattacharyya(p, q);
    CHECK((bc >= 0.0 && bc <= 1.0));
    CHECK(bc == Catch::Approx(oracles::naive_bhattacharyya(p, q)).margin(1e-12));

    const double dpr = hellinger(p, r);
    const double drq = hellinger(r, q);
    CHECK(dpq <= dpr + drq + 1e-12);
  }
}

TEST_CASE("merging empty bins never changes the overlap") {
  oracles::TestRng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t bins = 3 + rng.integer(10);
    Histogram p = random_histogram(rng, bins, true);
    Histogram q = random_histogram(rng, bins, true);
    const std::size_t hole = 1 + rng.integer(bins - 2);
    p.total -= p.counts[hole];
    q.total -= q.counts[hole];
    p.counts[hole] = 0;
    q.counts[hole] = 0;
    if (p.total == 0) p.total = ++p.counts[0];
    if (q.total == 0) q.total = ++q.counts[0];

    const double before = bhattacharyya(p, q);

    // Merge the empty bin into its left neighbor by dropping its lower edge.
    Histogram pm = p, qm = q;
    pm.bin_edges.erase(pm.bin_edges.begin() + static_cast<std::ptrdiff_t>(hole));
    qm.bin_edges.erase(qm.bin_edges.begin() + static_cast<std::ptrdiff_t>(hole));
    pm.counts.erase(pm.counts.begin() + static_cast<std::ptrdiff_t>(hole));
    qm.counts.erase(qm.counts.begin() + static_cast<std::ptrdiff_t>(hole));

    CHECK(bhattacharyya(pm, qm) == before);
  }
}
