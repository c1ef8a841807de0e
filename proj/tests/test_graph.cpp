#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "archgraph/graph.hpp"
#include "archgraph/rng.hpp"
#include "oracles.hpp"

using namespace archgraph;

TEST_CASE("bit matrix set/get/clear across word boundaries") {
  BitMatrix m(130);
  CHECK(m.size() == 130);
  m.set(0, 0);
  m.set(0, 63);
  m.set(0, 64);
  m.set(129, 129);
  CHECK(m.get(0, 0));
  CHECK(m.get(0, 63));
  CHECK(m.get(0, 64));
  CHECK(m.get(129, 129));
  CHECK_FALSE(m.get(0, 1));
  m.clear(0, 64);
  CHECK_FALSE(m.get(0, 64));

  std::vector<std::size_t> seen;
  m.for_each_in_row(0, [&](std::size_t j) { seen.push_back(j); });
  CHECK(seen == std::vector<std::size_t>{0, 63});
}

TEST_CASE("graph invariants: self-loops, weights, bounds") {
  DirectedGraph g(3);
  CHECK_THROWS_AS(g.add_edge(1, 1), Error);
  CHECK_THROWS_AS(g.add_edge(0, 3), Error);
  CHECK_THROWS_AS(g.add_edge(0, 1, -0.5), Error);

  g.add_edge(0, 1);
  CHECK(g.edge_count() == 1);
  CHECK(g.weight(0, 1) == 1.0);  // unweighted edges read as 1
  g.add_edge(1, 2, 2.5);
  CHECK(g.weight(1, 2) == 2.5);
  CHECK(g.total_weight() == 3.5);
  CHECK(g.out_degrees() == std::vector<std::size_t>{1, 1, 0});
  CHECK(g.in_degrees() == std::vector<std::size_t>{0, 1, 1});

  g.remove_edge(0, 1);
  CHECK(g.edge_count() == 1);
  CHECK_FALSE(g.has_edge(0, 1));
}

TEST_CASE("acyclicity agrees with boolean-matrix nilpotency") {
  Rng rng(11);
  int cyclic = 0, acyclic = 0;
  for (int rep = 0; rep < 300; ++rep) {
    std::size_t n = 1 + rng.below(10);
    auto g = oracles::random_digraph(rng, n, rng.uniform(0.05, 0.6), false);
    bool expect = oracles::acyclic_by_nilpotency(g);
    CHECK(is_acyclic(g) == expect);
    (expect ? acyclic : cyclic) += 1;
  }
  // both outcomes must actually be exercised
  CHECK(cyclic > 30);
  CHECK(acyclic > 30);
}

TEST_CASE("scc partition matches mutual reachability") {
  Rng rng(23);
  for (int rep = 0; rep < 120; ++rep) {
    std::size_t n = 1 + rng.below(12);
    auto g = oracles::random_digraph(rng, n, rng.uniform(0.1, 0.5), false);
    auto got = oracles::as_component_set(scc(g));
    auto expect = oracles::as_component_set(oracles::scc_by_reachability(g));
    CHECK(got == expect);
  }
}

TEST_CASE("scc covers every node exactly once") {
  Rng rng(31);
  auto g = oracles::random_digraph(rng, 40, 0.1, false);
  std::vector<int> hits(40, 0);
  for (const auto& c : scc(g))
    for (std::size_t v : c) ++hits[v];
  CHECK(hits == std::vector<int>(40, 1));
}

TEST_CASE("topological order respects edges and is deterministic") {
  Rng rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    std::size_t n = 2 + rng.below(15);
    auto g = oracles::random_dag(rng, n, rng.uniform(0.1, 0.7), true);
    auto order = topological_order(g);
    CHECK(oracles::order_respects_edges(g, order));
    CHECK(topological_order(g) == order);
  }
}

TEST_CASE("topological tie-break prefers large weighted out-minus-in degree") {
  // 0 ->2 1, 0 ->1 2, 1 ->1 3, 2 ->3 3: after 0, node 2 (out-in = +2) goes
  // before node 1 (out-in = -1)
  DirectedGraph g(4);
  g.add_edge(0, 1, 2.0);
  g.add_edge(0, 2, 1.0);
  g.add_edge(1, 3, 1.0);
  g.add_edge(2, 3, 3.0);
  CHECK(topological_order(g) == std::vector<std::size_t>{0, 2, 1, 3});
}

TEST_CASE("topological order rejects cycles") {
  DirectedGraph g(2);
  g.add_edge(0, 1);
  g.add_edge(1, 0);
  CHECK_THROWS_AS(topological_order(g), CyclicInput);
}

TEST_CASE("transitive reduction drops exactly the implied edge of a triangle") {
  DirectedGraph g(3);
  g.add_edge(0, 1, 5.0);
  g.add_edge(1, 2, 4.0);
  g.add_edge(0, 2, 3.0);
  auto r = transitive_reduction(g);
  CHECK(r.edge_count() == 2);
  CHECK(r.has_edge(0, 1));
  CHECK(r.has_edge(1, 2));
  CHECK_FALSE(r.has_edge(0, 2));
  CHECK(r.weight(0, 1) == 5.0);
  CHECK(r.weight(1, 2) == 4.0);
}

TEST_CASE("transitive reduction preserves reachability and is minimal") {
  Rng rng(43);
  for (int rep = 0; rep < 60; ++rep) {
    std::size_t n = 2 + rng.below(12);
    auto g = oracles::random_dag(rng, n, rng.uniform(0.2, 0.8), true);
    auto r = transitive_reduction(g);
    CHECK(oracles::reachability(r) == oracles::reachability(g));
    CHECK(transitive_reduction(r) == r);  // idempotent
    // every surviving edge is necessary
    r.for_each_edge([&](std::size_t u, std::size_t v) {
      DirectedGraph cut = r;
      cut.remove_edge(u, v);
      CHECK_FALSE(oracles::reachability(cut)[u][v]);
    });
  }
}

TEST_CASE("transitive reduction rejects cycles") {
  DirectedGraph g(3);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  g.add_edge(2, 0);
  CHECK_THROWS_AS(transitive_reduction(g), CyclicInput);
}

TEST_CASE("edge list round trip with comments and blanks") {
  std::istringstream in(
      "# fixture\n"
      "\n"
      "0 1 0.25\n"
      "1 2 1\n"
      "2 0 0.5   # closes the cycle\n");
  auto g = read_edge_list(in);
  CHECK(g.node_count() == 3);
  CHECK(g.edge_count() == 3);
  CHECK(g.weight(0, 1) == 0.25);
  CHECK(g.weight(2, 0) == 0.5);

  std::ostringstream out;
  write_edge_list(g, out);
  std::istringstream back(out.str());
  CHECK(read_edge_list(back) == g);
}

TEST_CASE("edge list parser reports 1-based line numbers") {
  auto line_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_edge_list(in);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  CHECK(line_of("0 1 1\n0 2\n") == 2);          // missing weight
  CHECK(line_of("0 1 1\n1 2 1 9\n") == 2);      // trailing token
  CHECK(line_of("# only comments\n") == 1);     // no edges at all
  CHECK(line_of("0 0 1\n") == 1);               // self-loop
  CHECK(line_of("0 1 1\n\n-1 2 1\n") == 3);     // negative id
  CHECK(line_of("0 1 nan\n") == 1);             // non-finite weight
}
