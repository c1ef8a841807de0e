#pragma once

#include <cstddef>
#include <map>
#include <utility>
#include <vector>

#include "archgraph/errors.hpp"
#include "archgraph/graph.hpp"

namespace archgraph {

/// Filtered labeled points for the two decision classes
/// (0 = first argument better, 1 = second argument better).
struct ReferenceSet {
  std::vector<std::vector<double>> class_points[2];
  std::size_t dim = 0;
  double alpha = 0.1;
  int k = 5;
};

/// Density filtering: within each class, drop the floor(alpha * count) points
/// with the largest distance to their k-th nearest same-class neighbour.
/// Requires at least k + 1 points per class and binary labels; throws
/// InsufficientData otherwise or when a class would come out empty.
ReferenceSet build_reference_set(const std::vector<std::vector<double>>& embeddings,
                                 const std::vector<int>& labels, double alpha = 0.1, int k = 5);

/// Ratio of the Euclidean distance to the nearest point of the other class
/// over the distance to the nearest point of the predicted class, capped at
/// t_max; a zero denominator also yields t_max. Large values mean the
/// prediction sits deep inside its own class.
double trust_score(const std::vector<double>& x, int predicted_class, const ReferenceSet& ref,
                   double t_max = 1e6);

struct EdgeWeightMatrix {
  std::size_t n = 0;
  std::vector<double> s;  // n*n row-major; meaningful only where an edge exists

  double operator()(std::size_t i, std::size_t j) const { return s[i * n + j]; }
};

/// Per-edge scoring data: the pair representation that produced the edge and
/// the class the predictor chose for it.
struct EdgeData {
  std::vector<double> embedding;
  int predicted_class = 0;

  bool operator==(const EdgeData&) const = default;
};

using EdgeDataMap = std::map<std::pair<std::size_t, std::size_t>, EdgeData>;

/// Trust score per edge of the relation graph. Every edge of g must have an
/// entry in data (MissingEdgeData otherwise). Scores are floored at 1e-12 so
/// that present edges always carry a positive weight.
EdgeWeightMatrix edge_weights(const DirectedGraph& g, const EdgeDataMap& data,
                              const ReferenceSet& ref, double t_max = 1e6, unsigned jobs = 1);

/// Copy of g carrying s as edge weights.
DirectedGraph apply_edge_weights(const DirectedGraph& g, const EdgeWeightMatrix& s);

}  // namespace archgraph
