#pragma once

#include <bit>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "archgraph/errors.hpp"

namespace archgraph {

// Dense bit rows; row i holds the out-neighbourhood of node i.
class BitMatrix {
 public:
  explicit BitMatrix(std::size_t n)
      : n_(n), words_(n == 0 ? 0 : (n + 63) / 64), bits_(n_ * words_, 0) {}

  std::size_t size() const { return n_; }

  bool get(std::size_t i, std::size_t j) const {
    return (bits_[i * words_ + j / 64] >> (j % 64)) & 1u;
  }
  void set(std::size_t i, std::size_t j) { bits_[i * words_ + j / 64] |= 1ULL << (j % 64); }
  void clear(std::size_t i, std::size_t j) { bits_[i * words_ + j / 64] &= ~(1ULL << (j % 64)); }

  std::span<const std::uint64_t> row(std::size_t i) const {
    return {bits_.data() + i * words_, words_};
  }
  std::span<std::uint64_t> row(std::size_t i) { return {bits_.data() + i * words_, words_}; }

  // visit set bit positions of row i in increasing order
  template <class F>
  void for_each_in_row(std::size_t i, F&& f) const {
    const std::uint64_t* base = bits_.data() + i * words_;
    for (std::size_t w = 0; w < words_; ++w) {
      std::uint64_t word = base[w];
      while (word) {
        unsigned bit = static_cast<unsigned>(std::countr_zero(word));
        f(w * 64 + bit);
        word &= word - 1;
      }
    }
  }

 private:
  std::size_t n_, words_;
  std::vector<std::uint64_t> bits_;
};

/// Directed graph on nodes 0..n-1 with dense adjacency and an optional
/// non-negative weight per edge. Self-loops are rejected when an edge is
/// added, weights are rejected when negative, and a weight can exist only
/// where the corresponding edge exists (the add_edge API enforces all three).
class DirectedGraph {
 public:
  explicit DirectedGraph(std::size_t n);

  std::size_t node_count() const { return n_; }
  std::size_t edge_count() const { return edges_; }

  void add_edge(std::size_t u, std::size_t v);
  void add_edge(std::size_t u, std::size_t v, double weight);
  void remove_edge(std::size_t u, std::size_t v);

  bool has_edge(std::size_t u, std::size_t v) const { return adj_.get(u, v); }
  bool has_weights() const { return !weights_.empty(); }

  /// Weight of edge (u, v); 1.0 for an edge of an unweighted graph so that
  /// weighted algorithms degrade to their cardinality versions.
  double weight(std::size_t u, std::size_t v) const;

  const BitMatrix& adjacency() const { return adj_; }

  template <class F>
  void for_each_edge(F&& f) const {
    for (std::size_t u = 0; u < n_; ++u)
      adj_.for_each_in_row(u, [&](std::size_t v) { f(u, v); });
  }

  template <class F>
  void for_each_out(std::size_t u, F&& f) const {
    adj_.for_each_in_row(u, std::forward<F>(f));
  }

  std::vector<std::size_t> out_degrees() const;
  std::vector<std::size_t> in_degrees() const;

  /// Sum of weights over present edges.
  double total_weight() const;

  bool operator==(const DirectedGraph& other) const;

 private:
  void check_nodes(std::size_t u, std::size_t v) const;
  void ensure_weights();

  std::size_t n_;
  std::size_t edges_ = 0;
  BitMatrix adj_;
  std::vector<double> weights_;  // n*n row-major, allocated on first weighted edge
};

/// True iff the graph has no directed cycle (Kahn peeling).
bool is_acyclic(const DirectedGraph& g);

/// Strongly connected components (iterative Tarjan). Every node appears in
/// exactly one component; components come out in a deterministic order.
std::vector<std::vector<std::size_t>> scc(const DirectedGraph& g);

/// Topological order of a DAG. Among simultaneously available nodes the one
/// with the largest weighted out-degree minus weighted in-degree (computed
/// once on the input graph) goes first; remaining ties break toward the
/// smaller node id. Throws CyclicInput on a cyclic graph.
std::vector<std::size_t> topological_order(const DirectedGraph& g);

/// Unique minimal subgraph of a DAG with the same reachability relation.
/// Weights of surviving edges are preserved. Idempotent; throws CyclicInput
/// on a cyclic graph.
DirectedGraph transitive_reduction(const DirectedGraph& g);

/// Text edge list: one "src dst weight" triple per line; '#' starts a
/// comment; blank lines are skipped. Node count is max id + 1.
DirectedGraph read_edge_list(std::istream& in);
DirectedGraph read_edge_list(const std::string& path);
void write_edge_list(const DirectedGraph& g, std::ostream& out);
void write_edge_list(const DirectedGraph& g, const std::string& path);

}  // namespace archgraph
