#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "archgraph/rng.hpp"
#include "archgraph/trust.hpp"
#include "oracles.hpp"

using namespace archgraph;

namespace {

// two tight clusters on the x axis, far enough apart for hand arithmetic
ReferenceSet hand_reference() {
  ReferenceSet ref;
  ref.dim = 2;
  ref.class_points[0] = {{0.0, 0.0}, {0.0, 1.0}};
  ref.class_points[1] = {{3.0, 0.0}, {3.0, 1.0}};
  return ref;
}

}  // namespace

TEST_CASE("reference set input validation") {
  std::vector<std::vector<double>> pts(8, std::vector<double>{0.0});
  std::vector<int> labels{0, 0, 0, 0, 1, 1, 1, 1};
  CHECK_THROWS_AS(build_reference_set(pts, {0, 1}, 0.1, 1), DimensionMismatch);
  CHECK_THROWS_AS(build_reference_set({}, {}, 0.1, 1), InsufficientData);
  CHECK_THROWS_AS(build_reference_set(pts, labels, 1.0, 1), Error);
  CHECK_THROWS_AS(build_reference_set(pts, labels, -0.1, 1), Error);
  CHECK_THROWS_AS(build_reference_set(pts, labels, 0.1, 0), Error);
  CHECK_THROWS_AS(build_reference_set(pts, {0, 0, 0, 2, 1, 1, 1, 1}, 0.1, 1), Error);
  // four points per class cannot support k = 4
  CHECK_THROWS_AS(build_reference_set(pts, labels, 0.1, 4), InsufficientData);
  auto ragged = pts;
  ragged[3] = {0.0, 0.0};
  CHECK_THROWS_AS(build_reference_set(ragged, labels, 0.1, 1), DimensionMismatch);
}

TEST_CASE("density filter drops the isolated point") {
  std::vector<std::vector<double>> pts{
      {0.0}, {0.1}, {0.2}, {10.0},       // class 0; 10.0 is the outlier
      {5.0}, {5.1}, {5.2}, {5.3},        // class 1; nobody filtered at alpha 0.25? no:
  };                                     // floor(0.25 * 4) = 1 drops one per class
  std::vector<int> labels{0, 0, 0, 0, 1, 1, 1, 1};
  auto ref = build_reference_set(pts, labels, 0.25, 1);
  CHECK(ref.class_points[0] == std::vector<std::vector<double>>{{0.0}, {0.1}, {0.2}});
  // class 1 is evenly spaced; the largest 1-NN radius belongs to an endpoint,
  // ties resolve toward keeping the lower input index
  CHECK(ref.class_points[1].size() == 3);
  CHECK(ref.dim == 1);
}

TEST_CASE("density filter agrees with the exhaustive kth neighbour oracle") {
  Rng rng(19);
  for (int rep = 0; rep < 25; ++rep) {
    std::vector<std::vector<double>> pts;
    std::vector<int> labels;
    for (int i = 0; i < 30; ++i) {
      pts.push_back({rng.normal(), rng.normal(), rng.normal()});
      labels.push_back(i < 14 ? 0 : 1);
    }
    const double alpha = 0.2;
    const int k = 3;
    auto ref = build_reference_set(pts, labels, alpha, k);

    for (int cls = 0; cls < 2; ++cls) {
      std::vector<std::vector<double>> mine;
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (labels[i] == cls) mine.push_back(pts[i]);
      std::vector<std::pair<double, std::size_t>> radii;
      for (std::size_t i = 0; i < mine.size(); ++i)
        radii.push_back({oracles::kth_neighbor_sq(mine, i, k), i});
      std::sort(radii.begin(), radii.end());
      std::size_t keep = mine.size() - static_cast<std::size_t>(alpha * mine.size());
      std::set<std::size_t> kept;
      for (std::size_t i = 0; i < keep; ++i) kept.insert(radii[i].second);

      REQUIRE(ref.class_points[cls].size() == keep);
      std::size_t at = 0;
      for (std::size_t i = 0; i < mine.size(); ++i)
        if (kept.count(i)) CHECK(ref.class_points[cls][at++] == mine[i]);
    }
  }
}

TEST_CASE("trust score hand values") {
  auto ref = hand_reference();
  CHECK(trust_score({1.0, 0.0}, 0, ref) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(trust_score({1.0, 0.0}, 1, ref) == doctest::Approx(0.5).epsilon(1e-12));
  // clamped by the cap
  CHECK(trust_score({1.0, 0.0}, 0, ref, 1.5) == 1.5);
  // sitting exactly on an own-class point
  CHECK(trust_score({0.0, 1.0}, 0, ref, 1e6) == 1e6);
  // sitting exactly on an other-class point
  CHECK(trust_score({0.0, 1.0}, 1, ref) == 0.0);
  CHECK_THROWS_AS(trust_score({1.0}, 0, ref), DimensionMismatch);
  CHECK_THROWS_AS(trust_score({1.0, 0.0}, 2, ref), Error);
}

TEST_CASE("trust score is translation invariant") {
  Rng rng(37);
  for (int rep = 0; rep < 20; ++rep) {
    ReferenceSet ref;
    ref.dim = 2;
    for (int cls = 0; cls < 2; ++cls)
      for (int i = 0; i < 6; ++i)
        ref.class_points[cls].push_back({rng.normal() + 3.0 * cls, rng.normal()});
    std::vector<double> x{rng.normal(), rng.normal()};
    double base = trust_score(x, 0, ref);

    double dx = rng.uniform(-5.0, 5.0), dy = rng.uniform(-5.0, 5.0);
    ReferenceSet moved = ref;
    for (int cls = 0; cls < 2; ++cls)
      for (auto& p : moved.class_points[cls]) {
        p[0] += dx;
        p[1] += dy;
      }
    CHECK(trust_score({x[0] + dx, x[1] + dy}, 0, moved) == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("edge weights carry per-edge trust scores") {
  auto ref = hand_reference();
  DirectedGraph g(3);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  EdgeDataMap data;
  data[{0, 1}] = EdgeData{{1.0, 0.0}, 0};   // trust 2.0
  data[{1, 2}] = EdgeData{{0.0, 1.0}, 1};   // trust 0.0, floored
  auto s = edge_weights(g, data, ref);
  CHECK(s(0, 1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s(1, 2) == 1e-12);
  CHECK(s(0, 2) == 0.0);  // no edge, no weight

  auto weighted = apply_edge_weights(g, s);
  CHECK(weighted.edge_count() == 2);
  CHECK(weighted.weight(0, 1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(weighted.weight(1, 2) == 1e-12);

  EdgeWeightMatrix wrong;
  wrong.n = 2;
  wrong.s.assign(4, 0.0);
  CHECK_THROWS_AS(apply_edge_weights(g, wrong), DimensionMismatch);
}

TEST_CASE("edge weights demand data for every edge") {
  auto ref = hand_reference();
  DirectedGraph g(2);
  g.add_edge(0, 1);
  CHECK_THROWS_AS(edge_weights(g, {}, ref), MissingEdgeData);
}

TEST_CASE("edge weight computation is independent of the job count") {
  Rng rng(51);
  ReferenceSet ref;
  ref.dim = 4;
  for (int cls = 0; cls < 2; ++cls)
    for (int i = 0; i < 8; ++i)
      ref.class_points[cls].push_back(
          {rng.normal() + 2.0 * cls, rng.normal(), rng.normal(), rng.normal()});

  DirectedGraph g(12);
  EdgeDataMap data;
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 12; ++j) {
      if (i == j || rng.uniform01() < 0.5) continue;
      g.add_edge(i, j);
      data[{i, j}] = EdgeData{{rng.normal(), rng.normal(), rng.normal(), rng.normal()},
                              rng.uniform01() < 0.5 ? 0 : 1};
    }
  auto serial = edge_weights(g, data, ref, 1e6, 1);
  auto parallel = edge_weights(g, data, ref, 1e6, 4);
  CHECK(serial.s == parallel.s);
}
