#include "archgraph/trust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "archgraph/parallel.hpp"

namespace archgraph {

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double nearest_squared(const std::vector<double>& x, const std::vector<std::vector<double>>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) best = std::min(best, squared_distance(x, p));
  return best;
}

}  // namespace

ReferenceSet build_reference_set(const std::vector<std::vector<double>>& embeddings,
                                 const std::vector<int>& labels, double alpha, int k) {
  if (embeddings.size() != labels.size()) throw DimensionMismatch("one label per embedding required");
  if (embeddings.empty()) throw InsufficientData("empty reference input");
  if (!(alpha >= 0.0) || alpha >= 1.0) throw Error("alpha must be in [0, 1)");
  if (k < 1) throw Error("k must be >= 1");

  const std::size_t dim = embeddings.front().size();
  std::vector<std::size_t> members[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error("labels must be binary");
    if (embeddings[i].size() != dim) throw DimensionMismatch("embedding dimensions disagree");
    members[labels[i]].push_back(i);
  }

  ReferenceSet ref;
  ref.dim = dim;
  ref.alpha = alpha;
  ref.k = k;
  for (int cls = 0; cls < 2; ++cls) {
    const auto& idx = members[cls];
    if (idx.size() < static_cast<std::size_t>(k) + 1)
      throw InsufficientData("each class needs at least k + 1 points");

    // distance to the k-th nearest same-class neighbour, per point
    std::vector<double> knn(idx.size());
    std::vector<double> d(idx.size() - 1);
    for (std::size_t a = 0; a < idx.size(); ++a) {
      std::size_t m = 0;
      for (std::size_t b = 0; b < idx.size(); ++b)
        if (b != a) d[m++] = squared_distance(embeddings[idx[a]], embeddings[idx[b]]);
      std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
      knn[a] = d[k - 1];
    }

    std::size_t drop = static_cast<std::size_t>(alpha * static_cast<double>(idx.size()));
    if (drop >= idx.size()) throw InsufficientData("filtering would empty a class");
    // keep the points with the smallest k-NN radius; stable toward lower index
    std::vector<std::size_t> rank(idx.size());
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::stable_sort(rank.begin(), rank.end(),
                     [&](std::size_t a, std::size_t b) { return knn[a] < knn[b]; });
    rank.resize(idx.size() - drop);
    std::sort(rank.begin(), rank.end());
    for (std::size_t a : rank) ref.class_points[cls].push_back(embeddings[idx[a]]);
  }
  return ref;
}

double trust_score(const std::vector<double>& x, int predicted_class, const ReferenceSet& ref,
                   double t_max) {
  if (predicted_class != 0 && predicted_class != 1) throw Error("predicted class must be 0 or 1");
  if (x.size() != ref.dim) throw DimensionMismatch("query dimension differs from the reference set");
  double d_pred = std::sqrt(nearest_squared(x, ref.class_points[predicted_class]));
  double d_other = std::sqrt(nearest_squared(x, ref.class_points[1 - predicted_class]));
  if (d_pred == 0.0) return t_max;
  return std::min(t_max, d_other / d_pred);
}

EdgeWeightMatrix edge_weights(const DirectedGraph& g, const EdgeDataMap& data,
                              const ReferenceSet& ref, double t_max, unsigned jobs) {
  const std::size_t n = g.node_count();
  EdgeWeightMatrix s;
  s.n = n;
  s.s.assign(n * n, 0.0);

  std::vector<std::pair<std::size_t, std::size_t>> edges;
  edges.reserve(g.edge_count());
  g.for_each_edge([&](std::size_t i, std::size_t j) { edges.emplace_back(i, j); });

  std::vector<const EdgeData*> per_edge(edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    auto it = data.find(edges[e]);
    if (it == data.end())
      throw MissingEdgeData("edge " + std::to_string(edges[e].first) + "->" +
                            std::to_string(edges[e].second) + " has no scoring data");
    per_edge[e] = &it->second;
  }

  parallel_for(edges.size(), jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t e = begin; e < end; ++e) {
      auto [i, j] = edges[e];
      double score = trust_score(per_edge[e]->embedding, per_edge[e]->predicted_class, ref, t_max);
      s.s[i * n + j] = std::max(score, 1e-12);
    }
  });
  return s;
}

DirectedGraph apply_edge_weights(const DirectedGraph& g, const EdgeWeightMatrix& s) {
  if (s.n != g.node_count()) throw DimensionMismatch("weight matrix size differs from the graph");
  DirectedGraph out(g.node_count());
  g.for_each_edge([&](std::size_t i, std::size_t j) { out.add_edge(i, j, s(i, j)); });
  return out;
}

}  // namespace archgraph
