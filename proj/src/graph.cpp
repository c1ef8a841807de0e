#include "archgraph/graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>

namespace archgraph {

DirectedGraph::DirectedGraph(std::size_t n) : n_(n), adj_(n) {
  if (n == 0) throw Error("graph needs at least one node");
}

void DirectedGraph::check_nodes(std::size_t u, std::size_t v) const {
  if (u >= n_ || v >= n_) throw Error("node id out of range");
  if (u == v) throw Error("self-loops are not allowed");
}

void DirectedGraph::ensure_weights() {
  if (!weights_.empty()) return;
  weights_.assign(n_ * n_, 0.0);
  // edges added before the first weighted one keep their implicit weight
  for_each_edge([&](std::size_t u, std::size_t v) { weights_[u * n_ + v] = 1.0; });
}

void DirectedGraph::add_edge(std::size_t u, std::size_t v) {
  check_nodes(u, v);
  if (!adj_.get(u, v)) ++edges_;
  adj_.set(u, v);
  if (!weights_.empty()) weights_[u * n_ + v] = 1.0;
}

void DirectedGraph::add_edge(std::size_t u, std::size_t v, double weight) {
  check_nodes(u, v);
  if (!(weight >= 0.0) || !std::isfinite(weight)) throw Error("edge weight must be finite and >= 0");
  if (!adj_.get(u, v)) ++edges_;
  adj_.set(u, v);
  ensure_weights();
  weights_[u * n_ + v] = weight;
}

void DirectedGraph::remove_edge(std::size_t u, std::size_t v) {
  check_nodes(u, v);
  if (!adj_.get(u, v)) return;
  adj_.clear(u, v);
  --edges_;
  if (!weights_.empty()) weights_[u * n_ + v] = 0.0;
}

double DirectedGraph::weight(std::size_t u, std::size_t v) const {
  if (!adj_.get(u, v)) return 0.0;
  return weights_.empty() ? 1.0 : weights_[u * n_ + v];
}

std::vector<std::size_t> DirectedGraph::out_degrees() const {
  std::vector<std::size_t> d(n_, 0);
  for (std::size_t u = 0; u < n_; ++u) {
    std::size_t c = 0;
    for (std::uint64_t w : adj_.row(u)) c += static_cast<std::size_t>(std::popcount(w));
    d[u] = c;
  }
  return d;
}

std::vector<std::size_t> DirectedGraph::in_degrees() const {
  std::vector<std::size_t> d(n_, 0);
  for_each_edge([&](std::size_t, std::size_t v) { ++d[v]; });
  return d;
}

double DirectedGraph::total_weight() const {
  double s = 0.0;
  for_each_edge([&](std::size_t u, std::size_t v) { s += weight(u, v); });
  return s;
}

bool DirectedGraph::operator==(const DirectedGraph& other) const {
  if (n_ != other.n_ || edges_ != other.edges_) return false;
  bool equal = true;
  for_each_edge([&](std::size_t u, std::size_t v) {
    if (!other.has_edge(u, v) || weight(u, v) != other.weight(u, v)) equal = false;
  });
  return equal;
}

bool is_acyclic(const DirectedGraph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::size_t> indeg = g.in_degrees();
  std::vector<std::size_t> stack;
  stack.reserve(n);
  for (std::size_t v = 0; v < n; ++v)
    if (indeg[v] == 0) stack.push_back(v);
  std::size_t seen = 0;
  while (!stack.empty()) {
    std::size_t u = stack.back();
    stack.pop_back();
    ++seen;
    g.for_each_out(u, [&](std::size_t v) {
      if (--indeg[v] == 0) stack.push_back(v);
    });
  }
  return seen == n;
}

std::vector<std::vector<std::size_t>> scc(const DirectedGraph& g) {
  const std::size_t n = g.node_count();
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnset), low(n, kUnset);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> components;
  std::size_t counter = 0;

  // adjacency snapshot for index-based iteration inside the explicit stack
  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t u = 0; u < n; ++u)
    g.for_each_out(u, [&](std::size_t v) { out[u].push_back(v); });

  struct Frame {
    std::size_t node;
    std::size_t next_child;
  };
  std::vector<Frame> call;

  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    call.push_back({root, 0});
    while (!call.empty()) {
      Frame& f = call.back();
      std::size_t u = f.node;
      if (f.next_child == 0) {
        index[u] = low[u] = counter++;
        stack.push_back(u);
        on_stack[u] = true;
      }
      bool descended = false;
      while (f.next_child < out[u].size()) {
        std::size_t v = out[u][f.next_child++];
        if (index[v] == kUnset) {
          call.push_back({v, 0});
          descended = true;
          break;
        }
        if (on_stack[v]) low[u] = std::min(low[u], index[v]);
      }
      if (descended) continue;
      if (low[u] == index[u]) {
        std::vector<std::size_t> comp;
        for (;;) {
          std::size_t w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
          if (w == u) break;
        }
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
      }
      call.pop_back();
      if (!call.empty()) {
        std::size_t parent = call.back().node;
        low[parent] = std::min(low[parent], low[u]);
      }
    }
  }
  return components;
}

std::vector<std::size_t> topological_order(const DirectedGraph& g) {
  const std::size_t n = g.node_count();
  // static priority: weighted out-degree minus weighted in-degree
  std::vector<double> priority(n, 0.0);
  g.for_each_edge([&](std::size_t u, std::size_t v) {
    double w = g.weight(u, v);
    priority[u] += w;
    priority[v] -= w;
  });

  auto later = [&](std::size_t a, std::size_t b) {
    // true when a should come out of the heap after b
    if (priority[a] != priority[b]) return priority[a] < priority[b];
    return a > b;
  };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(later)> ready(later);

  std::vector<std::size_t> indeg = g.in_degrees();
  for (std::size_t v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push(v);

  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    std::size_t u = ready.top();
    ready.pop();
    order.push_back(u);
    g.for_each_out(u, [&](std::size_t v) {
      if (--indeg[v] == 0) ready.push(v);
    });
  }
  if (order.size() != n) throw CyclicInput("topological order requested for a cyclic graph");
  return order;
}

DirectedGraph transitive_reduction(const DirectedGraph& g) {
  if (!is_acyclic(g)) throw CyclicInput("transitive reduction requires a DAG");
  const std::size_t n = g.node_count();
  std::vector<std::size_t> order = topological_order(g);

  // reach[v] = nodes reachable from v, v included
  BitMatrix reach(n);
  for (std::size_t k = n; k-- > 0;) {
    std::size_t v = order[k];
    reach.set(v, v);
    auto dst = reach.row(v);
    g.for_each_out(v, [&](std::size_t child) {
      auto src = reach.row(child);
      for (std::size_t w = 0; w < dst.size(); ++w) dst[w] |= src[w];
    });
  }

  // edge u->c is redundant iff some other child of u already reaches c
  DirectedGraph reduced(n);
  std::vector<std::size_t> children;
  for (std::size_t u = 0; u < n; ++u) {
    children.clear();
    g.for_each_out(u, [&](std::size_t v) { children.push_back(v); });
    for (std::size_t c : children) {
      bool redundant = false;
      for (std::size_t other : children) {
        if (other != c && reach.get(other, c)) {
          redundant = true;
          break;
        }
      }
      if (!redundant) {
        if (g.has_weights())
          reduced.add_edge(u, c, g.weight(u, c));
        else
          reduced.add_edge(u, c);
      }
    }
  }
  return reduced;
}

DirectedGraph read_edge_list(std::istream& in) {
  struct Tri {
    std::size_t u, v;
    double w;
  };
  std::vector<Tri> triples;
  std::size_t max_id = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
    std::istringstream ls(line);
    long long u, v;
    double w;
    if (!(ls >> u)) continue;  // blank or comment-only line
    if (!(ls >> v >> w)) throw ParseError("expected 'src dst weight'", line_no);
    std::string rest;
    if (ls >> rest) throw ParseError("trailing tokens after weight", line_no);
    if (u < 0 || v < 0) throw ParseError("negative node id", line_no);
    if (!(w >= 0.0) || !std::isfinite(w)) throw ParseError("weight must be finite and >= 0", line_no);
    if (u == v) throw ParseError("self-loop", line_no);
    triples.push_back({static_cast<std::size_t>(u), static_cast<std::size_t>(v), w});
    max_id = std::max({max_id, triples.back().u, triples.back().v});
  }
  if (triples.empty()) throw ParseError("no edges in input", line_no == 0 ? 1 : line_no);
  DirectedGraph g(max_id + 1);
  for (const Tri& t : triples) g.add_edge(t.u, t.v, t.w);
  return g;
}

DirectedGraph read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read_edge_list(in);
}

void write_edge_list(const DirectedGraph& g, std::ostream& out) {
  char buf[64];
  g.for_each_edge([&](std::size_t u, std::size_t v) {
    std::snprintf(buf, sizeof buf, "%.17g", g.weight(u, v));
    out << u << ' ' << v << ' ' << buf << '\n';
  });
}

void write_edge_list(const DirectedGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  write_edge_list(g, out);
}

}  // namespace archgraph
