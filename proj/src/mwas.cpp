#include "archgraph/mwas.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "archgraph/rng.hpp"

namespace archgraph {

namespace {

// Tarjan over an arbitrary support pattern (self-loops allowed).
std::vector<std::vector<std::size_t>> support_scc(const std::vector<std::vector<std::size_t>>& out) {
  const std::size_t n = out.size();
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnset), low(n, kUnset);
  std::vector<bool> on_stack(n, false);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> comps;
  std::size_t counter = 0;
  struct Frame {
    std::size_t node, next;
  };
  std::vector<Frame> call;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    call.push_back({root, 0});
    while (!call.empty()) {
      Frame& f = call.back();
      std::size_t u = f.node;
      if (f.next == 0) {
        index[u] = low[u] = counter++;
        stack.push_back(u);
        on_stack[u] = true;
      }
      bool descended = false;
      while (f.next < out[u].size()) {
        std::size_t v = out[u][f.next++];
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
        comps.push_back(std::move(comp));
      }
      call.pop_back();
      if (!call.empty()) low[call.back().node] = std::min(low[call.back().node], low[u]);
    }
  }
  return comps;
}

// Power iteration on (B + I) for an irreducible non-negative block; returns
// the dominant eigenvalue of B.
double block_radius(const std::vector<double>& block, std::size_t k, double tol, int max_iter) {
  std::vector<double> x(k, 1.0 / std::sqrt(static_cast<double>(k))), y(k);
  double lambda = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < k; ++i) {
      double acc = x[i];
      const double* row = block.data() + i * k;
      for (std::size_t j = 0; j < k; ++j) acc += row[j] * x[j];
      y[i] = acc;
    }
    // Rayleigh quotient of (B + I) at the unit vector x
    lambda = std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
    double residual = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double d = y[i] - lambda * x[i];
      residual += d * d;
    }
    residual = std::sqrt(residual);
    double norm = std::sqrt(std::inner_product(y.begin(), y.end(), y.begin(), 0.0));
    for (std::size_t i = 0; i < k; ++i) x[i] = y[i] / norm;
    if (residual <= tol * std::max(1.0, lambda)) return lambda - 1.0;
  }
  throw NonConvergence("power iteration did not reach tolerance");
}

struct OrderState {
  std::vector<std::size_t> order;  // order[pos] = vertex
  std::vector<std::size_t> pos;    // pos[vertex] = position
};

OrderState greedy_order(const DirectedGraph& g, const std::vector<double>* noise) {
  const std::size_t n = g.node_count();
  std::vector<double> score(n, 0.0);
  g.for_each_edge([&](std::size_t u, std::size_t v) {
    double w = g.weight(u, v);
    score[u] += w;
    score[v] -= w;
  });
  if (noise)
    for (std::size_t i = 0; i < n; ++i) score[i] += (*noise)[i];

  std::vector<bool> emitted(n, false);
  OrderState st;
  st.order.reserve(n);
  st.pos.assign(n, 0);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t best = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (emitted[v]) continue;
      if (best == n || score[v] > score[best]) best = v;
    }
    emitted[best] = true;
    st.pos[best] = st.order.size();
    st.order.push_back(best);
    // drop the emitted vertex from the remaining subgraph's degree balance
    g.for_each_out(best, [&](std::size_t v) {
      if (!emitted[v]) score[v] += g.weight(best, v);
    });
    for (std::size_t u = 0; u < n; ++u) {
      if (!emitted[u] && g.has_edge(u, best)) score[u] -= g.weight(u, best);
    }
  }
  return st;
}

// Adjacent swaps that strictly lower the backward-edge weight, swept to a
// fixpoint or until 20*n swaps were accepted.
void local_search(const DirectedGraph& g, OrderState& st) {
  const std::size_t n = g.node_count();
  std::size_t budget = 20 * n;
  bool improved = true;
  while (improved && budget > 0) {
    improved = false;
    for (std::size_t i = 0; i + 1 < n && budget > 0; ++i) {
      std::size_t u = st.order[i], v = st.order[i + 1];
      double delta = 0.0;
      if (g.has_edge(u, v)) delta += g.weight(u, v);  // forward edge becomes backward
      if (g.has_edge(v, u)) delta -= g.weight(v, u);  // backward edge becomes forward
      if (delta < 0.0) {
        std::swap(st.order[i], st.order[i + 1]);
        st.pos[u] = i + 1;
        st.pos[v] = i;
        --budget;
        improved = true;
      }
    }
  }
}

// nullopt when some vertex loses more than r incoming edges
std::optional<DirectedGraph> apply_cut(const DirectedGraph& g, const OrderState& st, std::size_t r) {
  const std::size_t n = g.node_count();
  std::vector<std::size_t> cut_in(n, 0);
  bool feasible = true;
  g.for_each_edge([&](std::size_t u, std::size_t v) {
    if (st.pos[u] > st.pos[v] && ++cut_in[v] > r) feasible = false;
  });
  if (!feasible) return std::nullopt;
  DirectedGraph sub(n);
  g.for_each_edge([&](std::size_t u, std::size_t v) {
    if (st.pos[u] < st.pos[v]) {
      if (g.has_weights())
        sub.add_edge(u, v, g.weight(u, v));
      else
        sub.add_edge(u, v);
    }
  });
  return sub;
}

double subgraph_score(const DirectedGraph& sub) { return sub.total_weight(); }

// Exact subset DP for small n: dp[S] = best kept weight over orders placing S
// first, where a vertex's in-edges from later vertices are cut and at most r
// of them are allowed. Deterministic (ascending subset and vertex scans).
std::optional<DirectedGraph> max_mas_exact(const DirectedGraph& g, std::size_t r) {
  const std::size_t n = g.node_count();
  std::vector<std::uint32_t> in_mask(n, 0);
  std::vector<std::vector<double>> w_in(n, std::vector<double>(n, 0.0));
  g.for_each_edge([&](std::size_t u, std::size_t v) {
    in_mask[v] |= 1u << u;
    w_in[v][u] = g.weight(u, v);
  });

  const std::uint32_t full = n == 32 ? 0xffffffffu : (1u << n) - 1u;
  constexpr double kInvalid = -1.0;
  std::vector<double> dp(static_cast<std::size_t>(full) + 1, kInvalid);
  std::vector<std::uint8_t> parent(static_cast<std::size_t>(full) + 1, 0xff);
  dp[0] = 0.0;
  for (std::uint32_t s = 0; s <= full; ++s) {
    if (dp[s] == kInvalid) continue;
    for (std::size_t v = 0; v < n; ++v) {
      std::uint32_t bit = 1u << v;
      if (s & bit) continue;
      std::uint32_t t = s | bit;
      std::uint32_t late = in_mask[v] & ~t;  // sources placed after v get cut
      if (static_cast<std::size_t>(std::popcount(late)) > r) continue;
      double gain = 0.0;
      for (std::uint32_t rem = in_mask[v] & s; rem;) {
        std::size_t u = static_cast<std::size_t>(std::countr_zero(rem));
        rem &= rem - 1;
        gain += w_in[v][u];
      }
      double cand = dp[s] + gain;
      if (cand > dp[t]) {
        dp[t] = cand;
        parent[t] = static_cast<std::uint8_t>(v);
      }
    }
  }
  if (dp[full] == kInvalid) return std::nullopt;

  OrderState st;
  st.order.assign(n, 0);
  st.pos.assign(n, 0);
  std::uint32_t s = full;
  for (std::size_t i = n; i-- > 0;) {
    std::size_t v = parent[s];
    st.order[i] = v;
    st.pos[v] = i;
    s &= ~(1u << v);
  }
  return apply_cut(g, st, r);
}

}  // namespace

double spectral_radius(const std::vector<double>& a, std::size_t n, double tol, int max_iter) {
  if (a.size() != n * n) throw DimensionMismatch("matrix must be n*n row-major");
  for (double v : a)
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error("matrix entries must be finite and >= 0");
  if (n == 0) return 0.0;

  std::vector<std::vector<std::size_t>> out(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a[i * n + j] > 0.0) out[i].push_back(j);

  double rho = 0.0;
  for (const auto& comp : support_scc(out)) {
    if (comp.size() == 1) {
      std::size_t v = comp[0];
      rho = std::max(rho, a[v * n + v]);
      continue;
    }
    std::vector<double> block(comp.size() * comp.size());
    for (std::size_t i = 0; i < comp.size(); ++i)
      for (std::size_t j = 0; j < comp.size(); ++j)
        block[i * comp.size() + j] = a[comp[i] * n + comp[j]];
    rho = std::max(rho, block_radius(block, comp.size(), tol, max_iter));
  }
  return rho;
}

std::optional<DirectedGraph> max_mas(const DirectedGraph& g, std::size_t r, std::uint64_t seed) {
  if (is_acyclic(g)) return g;
  if (g.node_count() <= 12) return max_mas_exact(g, r);

  OrderState st = greedy_order(g, nullptr);
  local_search(g, st);
  if (auto sub = apply_cut(g, st, r)) return sub;

  const std::size_t n = g.node_count();
  double weight_scale = g.total_weight() / static_cast<double>(std::max<std::size_t>(1, g.edge_count()));
  std::optional<DirectedGraph> best;
  double best_score = -1.0;
  for (int attempt = 1; attempt <= 8; ++attempt) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    OrderState trial;
    if (attempt <= 4) {
      // perturb the greedy priorities
      std::vector<double> noise(n);
      for (double& x : noise) x = rng.uniform(-1.0, 1.0) * weight_scale * static_cast<double>(attempt);
      trial = greedy_order(g, &noise);
    } else {
      trial.order.resize(n);
      std::iota(trial.order.begin(), trial.order.end(), std::size_t{0});
      rng.shuffle(trial.order);
      trial.pos.assign(n, 0);
      for (std::size_t i = 0; i < n; ++i) trial.pos[trial.order[i]] = i;
    }
    local_search(g, trial);
    if (auto sub = apply_cut(g, trial, r)) {
      double s = subgraph_score(*sub);
      if (s > best_score) {
        best_score = s;
        best = std::move(sub);
      }
    }
  }
  return best;
}

MwasResult mwas_approx(const DirectedGraph& g, const MwasParams& params, std::uint64_t seed) {
  const std::size_t total_edges = g.edge_count();
  if (total_edges == 0) throw Error("mwas_approx needs at least one edge");
  const double edges_d = static_cast<double>(total_edges);

  struct Candidate {
    DirectedGraph sub;
    double score;
    double drop;
    std::size_t r;
  };
  std::optional<Candidate> best_meeting, best_any;
  double s0 = 0.0;
  int iterations = 0, infeasible = 0;

  auto consider = [&](DirectedGraph&& sub, std::size_t r) {
    double s = subgraph_score(sub);
    double drop = 1.0 - static_cast<double>(sub.edge_count()) / edges_d;
    if (!best_any || s > best_any->score) best_any = Candidate{sub, s, drop, r};
    if (drop < params.eps && s > s0) {
      s0 = s;
      best_meeting = Candidate{std::move(sub), s, drop, r};
    }
  };

  std::size_t a = 0, b = total_edges, r = total_edges;
  std::size_t seg = b - a;
  while (seg > 1 && iterations < params.max_iterations) {
    ++iterations;
    auto sub = max_mas(g, r, mix_seed(seed, r));
    if (!sub) {
      ++infeasible;
      r = std::min(r + 1, total_edges);
      a = r;
    } else {
      consider(std::move(*sub), r);
      seg /= 2;
      r = r >= seg ? r - seg : 0;
      b = r;
    }
  }
  if (!best_any) {
    // |E| = 1 never enters the loop; probe the full budget once
    if (auto sub = max_mas(g, total_edges, mix_seed(seed, total_edges)))
      consider(std::move(*sub), total_edges);
  }
  (void)a;
  (void)b;

  const Candidate* chosen = best_meeting ? &*best_meeting : (best_any ? &*best_any : nullptr);
  if (!chosen) throw NoFeasibleSubgraph("no acyclic candidate found at any budget");

  MwasResult res{chosen->sub, chosen->score, chosen->drop, best_meeting.has_value(), chosen->r,
                 iterations, infeasible};
  return res;
}

MwasResult mwas_bruteforce(const DirectedGraph& g, double eps) {
  const std::size_t n = g.node_count();
  const std::size_t m = g.edge_count();
  if (m == 0) throw Error("mwas_bruteforce needs at least one edge");
  if (m > 22) throw TooLarge("edge count exceeds the enumeration cap of 22");

  // canonical row-major edge order
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<double> w;
  edges.reserve(m);
  g.for_each_edge([&](std::size_t u, std::size_t v) {
    edges.emplace_back(u, v);
    w.push_back(g.weight(u, v));
  });

  // compact node ids (only edge endpoints matter for acyclicity)
  std::vector<std::size_t> node_of;
  std::vector<int> local(n, -1);
  for (auto [u, v] : edges) {
    if (local[u] < 0) {
      local[u] = static_cast<int>(node_of.size());
      node_of.push_back(u);
    }
    if (local[v] < 0) {
      local[v] = static_cast<int>(node_of.size());
      node_of.push_back(v);
    }
  }
  const std::size_t k = node_of.size();

  auto acyclic_mask = [&](std::uint32_t mask) {
    // Kahn on the selected edges over compact ids
    std::array<std::uint8_t, 64> indeg{};
    std::uint64_t present = 0;
    for (std::size_t e = 0; e < m; ++e)
      if (mask >> e & 1u) {
        ++indeg[static_cast<std::size_t>(local[edges[e].second])];
        present |= 1ULL << e;
      }
    std::uint64_t ready = 0;
    for (std::size_t v = 0; v < k; ++v)
      if (indeg[v] == 0) ready |= 1ULL << v;
    std::size_t seen = 0;
    while (ready) {
      std::size_t v = static_cast<std::size_t>(std::countr_zero(ready));
      ready &= ready - 1;
      ++seen;
      std::uint64_t rem = present;
      while (rem) {
        std::size_t e = static_cast<std::size_t>(std::countr_zero(rem));
        rem &= rem - 1;
        if (static_cast<std::size_t>(local[edges[e].first]) == v) {
          present &= ~(1ULL << e);
          std::size_t dst = static_cast<std::size_t>(local[edges[e].second]);
          if (--indeg[dst] == 0) ready |= 1ULL << dst;
        }
      }
    }
    return seen == k;
  };

  auto lex_less = [](std::uint32_t x, std::uint32_t y) {
    // compare retained edge index sequences; equal popcount assumed
    std::uint32_t diff = x ^ y;
    if (diff == 0) return false;
    return ((x >> std::countr_zero(diff)) & 1u) != 0;
  };

  struct Best {
    bool valid = false;
    std::uint32_t mask = 0;
    double score = -1.0;
    int kept = -1;
  };
  auto better_subset = [&](const Best& cur, std::uint32_t mask, double score, int kept) {
    if (!cur.valid) return true;
    if (score != cur.score) return score > cur.score;
    if (kept != cur.kept) return kept > cur.kept;
    return lex_less(mask, cur.mask);
  };

  Best meeting, any;
  const std::uint32_t limit = static_cast<std::uint32_t>(1u << m);
  for (std::uint32_t mask = 0; mask < limit; ++mask) {
    if (!acyclic_mask(mask)) continue;
    double score = 0.0;
    int kept = std::popcount(mask);
    for (std::uint32_t rem = mask; rem;) {
      std::size_t e = static_cast<std::size_t>(std::countr_zero(rem));
      rem &= rem - 1;
      score += w[e];
    }
    double drop = 1.0 - static_cast<double>(kept) / static_cast<double>(m);
    if (better_subset(any, mask, score, kept)) any = {true, mask, score, kept};
    if (drop < eps && better_subset(meeting, mask, score, kept)) meeting = {true, mask, score, kept};
  }

  const Best& chosen = meeting.valid ? meeting : any;
  DirectedGraph sub(n);
  std::vector<std::size_t> cut_in(n, 0);
  for (std::size_t e = 0; e < m; ++e) {
    if (chosen.mask >> e & 1u)
      sub.add_edge(edges[e].first, edges[e].second, w[e]);
    else
      ++cut_in[edges[e].second];
  }
  MwasResult res{std::move(sub),
                 chosen.score,
                 1.0 - static_cast<double>(chosen.kept) / static_cast<double>(m),
                 meeting.valid,
                 *std::max_element(cut_in.begin(), cut_in.end()),
                 0,
                 0};
  return res;
}

}  // namespace archgraph
