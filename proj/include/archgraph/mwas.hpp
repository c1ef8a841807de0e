#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "archgraph/graph.hpp"

namespace archgraph {

struct MwasParams {
  /// Keep-threshold: a candidate counts as meeting the target when its drop
  /// ratio is strictly below eps. The pipeline sets eps = 1 - validation
  /// accuracy of the relation predictor.
  double eps = 0.5;
  /// Safety cap on bisection iterations.
  int max_iterations = 200;
  double power_iter_tol = 1e-9;
  int power_iter_max = 20000;
};

struct MwasResult {
  DirectedGraph subgraph;
  /// Sum of retained edge weights.
  double score = 0.0;
  /// Dropped edges / input edges.
  double drop_ratio = 0.0;
  /// False when no probed candidate had drop_ratio < eps and the best-scoring
  /// feasible candidate was returned instead.
  bool met_threshold = false;
  /// Per-vertex cut budget at which the retained subgraph was produced.
  std::size_t r_used = 0;
  /// Diagnostics: bisection iterations executed and infeasible probes seen.
  int iterations = 0;
  int infeasible_probes = 0;
};

/// Spectral radius of a non-negative square matrix (row-major, n*n).
///
/// The support pattern is condensed into strongly connected blocks first;
/// trivial blocks contribute their diagonal entry exactly, so nilpotent
/// (acyclic) inputs return 0.0 without iterating. Each nontrivial block is
/// solved by power iteration on (block + I) with the shift subtracted from
/// the converged estimate; the shift makes the block primitive, so the
/// iteration converges geometrically. Throws NonConvergence when a block
/// fails to reach tol within max_iter steps.
double spectral_radius(const std::vector<double>& a, std::size_t n, double tol = 1e-9,
                       int max_iter = 20000);

/// Largest-weight acyclic subgraph reachable by cutting at most r incoming
/// edges per vertex, or nullopt when no attempted ordering satisfies the cut
/// budget. Up to 12 nodes the optimal vertex order is found by an exact
/// subset DP (deterministic, seed unused). Beyond that a vertex order is
/// built greedily (repeatedly emit the remaining vertex with the largest
/// weighted out-minus-in degree, smaller id on ties) and then improved by
/// adjacent swaps that lower the backward-edge weight, with a budget of 20*n
/// accepted swaps. Backward edges form the cut. On an infeasible cut the
/// procedure retries 8 reseeded randomized orders before giving up. Acyclic
/// inputs are returned unchanged for any r.
std::optional<DirectedGraph> max_mas(const DirectedGraph& g, std::size_t r,
                                     std::uint64_t seed = 0);

/// Bisection over the per-vertex cut budget r in [0, |E|]:
///
///   s0 = a = 0, r = b = |E|, seg = b - a
///   while seg > 1:
///     probe max_mas(g, r)
///     infeasible: r = r + 1, a = r
///     feasible:   record candidate, seg = floor(seg / 2), r = r - seg, b = r
///
/// A candidate is recorded as best when its drop ratio is < eps and its score
/// beats the previous best. r stays clamped to [0, |E|] and the loop aborts
/// after max_iterations with the best so far. When no candidate met the
/// threshold, the feasible candidate with the largest score is returned with
/// met_threshold = false. When the loop cannot probe at all (|E| = 1 makes
/// seg = 1), r = |E| is probed once directly. Requires at least one edge.
MwasResult mwas_approx(const DirectedGraph& g, const MwasParams& params,
                       std::uint64_t seed = 0);

/// Exact maximizer of the retained weight over all acyclic edge subsets with
/// drop ratio < eps, by enumeration of all 2^|E| subsets; |E| <= 22 or
/// TooLarge is thrown. Ties prefer more retained edges, then the
/// lexicographically smallest edge set (edges ordered row-major). Falls back
/// to the best unconstrained acyclic subset with met_threshold = false when
/// nothing satisfies eps.
MwasResult mwas_bruteforce(const DirectedGraph& g, double eps);

}  // namespace archgraph
