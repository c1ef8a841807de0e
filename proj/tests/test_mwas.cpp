#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "archgraph/mwas.hpp"
#include "archgraph/rng.hpp"
#include "oracles.hpp"

using namespace archgraph;

namespace {

DirectedGraph triangle_fixture() {
  DirectedGraph g(3);
  g.add_edge(0, 1, 0.9);
  g.add_edge(1, 2, 0.8);
  g.add_edge(2, 0, 0.1);
  return g;
}

std::vector<double> dense(const DirectedGraph& g) {
  std::size_t n = g.node_count();
  std::vector<double> a(n * n, 0.0);
  g.for_each_edge([&](std::size_t u, std::size_t v) { a[u * n + v] = g.weight(u, v); });
  return a;
}

}  // namespace

TEST_CASE("spectral radius of hand solvable matrices") {
  // diag entries are the block eigenvalues
  CHECK(spectral_radius({3.0, 0.0, 0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 2.0}, 3) == doctest::Approx(5.0).epsilon(1e-9));
  // [[0,4],[1,0]] has eigenvalues +-2
  CHECK(spectral_radius({0.0, 4.0, 1.0, 0.0}, 2) == doctest::Approx(2.0).epsilon(1e-9));
  // unweighted 5-cycle: roots of unity
  DirectedGraph c5(5);
  for (std::size_t i = 0; i < 5; ++i) c5.add_edge(i, (i + 1) % 5);
  CHECK(spectral_radius(dense(c5), 5) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("spectral radius is exactly zero on acyclic support") {
  Rng rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    std::size_t n = 2 + rng.below(20);
    auto g = oracles::random_dag(rng, n, rng.uniform(0.1, 0.6), true);
    CHECK(spectral_radius(dense(g), n) == 0.0);
  }
}

TEST_CASE("spectral radius matches a dense eigensolver") {
  Rng rng(17);
  for (int rep = 0; rep < 150; ++rep) {
    std::size_t n = 1 + rng.below(12);
    std::vector<double> a(n * n, 0.0);
    for (double& x : a)
      if (rng.uniform01() < 0.35) x = rng.uniform(0.0, 2.0);
    double expect = oracles::spectral_radius_by_eigensolver(a, n);
    CHECK(spectral_radius(a, n) == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("spectral radius below 1e-6 iff acyclic") {
  Rng rng(29);
  for (int rep = 0; rep < 250; ++rep) {
    std::size_t n = 2 + rng.below(25);
    auto g = oracles::random_digraph(rng, n, rng.uniform(0.03, 0.4), true);
    bool structural = is_acyclic(g);
    bool spectral = spectral_radius(dense(g), n) <= 1e-6;
    CHECK(structural == spectral);
  }
}

TEST_CASE("max_mas output is an acyclic subgraph within the cut budget") {
  Rng rng(41);
  for (int rep = 0; rep < 80; ++rep) {
    std::size_t n = 2 + rng.below(9);
    auto g = oracles::random_digraph(rng, n, rng.uniform(0.2, 0.8), true);
    if (g.edge_count() == 0) continue;
    std::size_t r = rng.below(4);
    auto sub = max_mas(g, r, rep);
    if (!sub) continue;
    CHECK(oracles::acyclic_by_nilpotency(*sub));
    auto in_full = g.in_degrees();
    auto in_sub = sub->in_degrees();
    for (std::size_t v = 0; v < n; ++v) CHECK(in_full[v] - in_sub[v] <= r);
    sub->for_each_edge([&](std::size_t u, std::size_t v) {
      CHECK(g.has_edge(u, v));
      CHECK(sub->weight(u, v) == g.weight(u, v));
    });
  }
}

TEST_CASE("max_mas returns acyclic inputs unchanged even at zero budget") {
  Rng rng(53);
  for (int rep = 0; rep < 30; ++rep) {
    auto g = oracles::random_dag(rng, 2 + rng.below(10), 0.5, true);
    auto sub = max_mas(g, 0, rep);
    REQUIRE(sub.has_value());
    CHECK(*sub == g);
  }
}

TEST_CASE("bruteforce triangle fixture") {
  auto res = mwas_bruteforce(triangle_fixture(), 0.5);
  CHECK(res.score == doctest::Approx(1.7).epsilon(1e-12));
  CHECK(res.drop_ratio == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(res.met_threshold);
  CHECK(res.subgraph.has_edge(0, 1));
  CHECK(res.subgraph.has_edge(1, 2));
  CHECK_FALSE(res.subgraph.has_edge(2, 0));
}

TEST_CASE("bruteforce tie-break keeps the lexicographically first edge set") {
  DirectedGraph g(2);
  g.add_edge(0, 1, 1.0);
  g.add_edge(1, 0, 1.0);
  auto res = mwas_bruteforce(g, 1.0);
  CHECK(res.score == 1.0);
  CHECK(res.subgraph.has_edge(0, 1));
  CHECK_FALSE(res.subgraph.has_edge(1, 0));
}

TEST_CASE("bruteforce falls back when eps admits nothing") {
  // any acyclic subset of a 2-cycle drops half the edges; eps 0.25 rejects all
  DirectedGraph g(2);
  g.add_edge(0, 1, 0.7);
  g.add_edge(1, 0, 0.2);
  auto res = mwas_bruteforce(g, 0.25);
  CHECK_FALSE(res.met_threshold);
  CHECK(res.score == doctest::Approx(0.7));
  CHECK(res.drop_ratio == doctest::Approx(0.5));
}

TEST_CASE("bruteforce enumeration cap") {
  DirectedGraph g(6);
  int edges = 0;
  for (std::size_t i = 0; i < 6 && edges < 23; ++i)
    for (std::size_t j = 0; j < 6 && edges < 23; ++j)
      if (i != j) {
        g.add_edge(i, j, 1.0);
        ++edges;
      }
  CHECK(g.edge_count() == 23);
  CHECK_THROWS_AS(mwas_bruteforce(g, 1.0), TooLarge);
}

TEST_CASE("approx triangle fixture reproduces the frozen trace") {
  MwasParams params;
  params.eps = 0.5;
  auto res = mwas_approx(triangle_fixture(), params, 7);
  CHECK(res.score == doctest::Approx(1.7).epsilon(1e-12));
  CHECK(res.drop_ratio == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(res.met_threshold);
  CHECK(res.subgraph.has_edge(0, 1));
  CHECK(res.subgraph.has_edge(1, 2));
}

TEST_CASE("approx passes acyclic inputs through untouched") {
  Rng rng(61);
  MwasParams params;
  params.eps = 0.5;
  for (int rep = 0; rep < 25; ++rep) {
    auto g = oracles::random_dag(rng, 2 + rng.below(12), 0.5, true);
    if (g.edge_count() == 0) continue;
    auto res = mwas_approx(g, params, rep);
    CHECK(res.subgraph == g);
    CHECK(res.drop_ratio == 0.0);
    CHECK(res.met_threshold);
  }
}

TEST_CASE("approx needs an edge, handles a single edge without looping") {
  DirectedGraph empty(3);
  MwasParams params;
  CHECK_THROWS_AS(mwas_approx(empty, params, 0), Error);

  DirectedGraph single(2);
  single.add_edge(0, 1, 0.4);
  auto res = mwas_approx(single, params, 0);
  CHECK(res.iterations == 0);
  CHECK(res.score == doctest::Approx(0.4));
  CHECK(res.met_threshold);
}

TEST_CASE("approx stays within the bisection iteration bound") {
  Rng rng(71);
  MwasParams params;
  params.eps = 0.3;
  for (int rep = 0; rep < 60; ++rep) {
    std::size_t n = 2 + rng.below(8);
    auto g = oracles::random_digraph(rng, n, rng.uniform(0.2, 0.9), true);
    if (g.edge_count() == 0) continue;
    auto res = mwas_approx(g, params, rep);
    double lg = std::ceil(std::log2(static_cast<double>(g.edge_count())));
    CHECK(res.iterations <= static_cast<int>(lg) + res.infeasible_probes + 1);
    CHECK(oracles::acyclic_by_nilpotency(res.subgraph));
  }
}

TEST_CASE("approx reaches at least 90 percent of the exact score") {
  Rng rng(83);
  MwasParams params;
  params.eps = 1.0;
  int equal = 0, cases = 0;
  for (int rep = 0; rep < 60; ++rep) {
    std::size_t n = 2 + rng.below(6);
    auto g = oracles::random_digraph(rng, n, rng.uniform(0.25, 0.8), true);
    if (g.edge_count() == 0 || g.edge_count() > 18) continue;
    auto exact = mwas_bruteforce(g, 1.0);
    auto approx = mwas_approx(g, params, rep);
    ++cases;
    CHECK(approx.score >= 0.9 * exact.score - 1e-12);
    if (std::abs(approx.score - exact.score) < 1e-9) ++equal;
  }
  CHECK(cases >= 40);
  CHECK(equal * 10 >= cases * 6);
}

TEST_CASE("approx is deterministic for a fixed seed") {
  Rng rng(97);
  auto g = oracles::random_digraph(rng, 8, 0.5, true);
  MwasParams params;
  params.eps = 0.4;
  auto a = mwas_approx(g, params, 123);
  auto b = mwas_approx(g, params, 123);
  CHECK(a.subgraph == b.subgraph);
  CHECK(a.score == b.score);
  CHECK(a.r_used == b.r_used);
  CHECK(a.iterations == b.iterations);
}
