#include "archgraph/search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "archgraph/graph.hpp"
#include "archgraph/rng.hpp"
#include "archgraph/trust.hpp"

namespace archgraph {

namespace {

TaskEmbedding embedding_or_zeros(const TabularBenchmark& bench, std::size_t task, int task_dim) {
  TaskEmbedding e = bench.task(task).embedding;
  if (e.vec.empty()) {
    e.vec.assign(static_cast<std::size_t>(task_dim), 0.0);
    e.source = TaskEmbedding::Source::Zeros;
  }
  return e;
}

double oriented_score(const TabularBenchmark& bench, std::size_t task, double raw_metric) {
  return bench.task(task).lower_better ? -raw_metric : raw_metric;
}

struct PretrainData {
  PredictorState state;
  std::vector<LabeledArch> data;
  TaskEmbedding emb;
};

// samples m architectures, charges them to the ledger phase, trains from a
// fresh initialization
PretrainData pretrain_full(const TabularBenchmark& bench, std::size_t task,
                           const SearchConfig& cfg, std::uint64_t seed, BudgetLedger& ledger,
                           const std::string& phase, std::vector<std::size_t>* sampled) {
  const std::size_t n = bench.arch_count();
  if (static_cast<std::size_t>(cfg.m) > n)
    throw Error("pretraining budget m exceeds the space size");
  Rng rng(derive_seed(seed, "source-sample"));
  std::vector<std::size_t> ids =
      rng.sample_without_replacement(n, static_cast<std::size_t>(cfg.m));

  PretrainData pre;
  pre.emb = embedding_or_zeros(bench, task, cfg.predictor.task_dim);
  ledger.begin_phase(phase, ids.size());
  for (std::size_t a : ids) {
    double raw = ledger.record(bench, a, task);
    pre.data.push_back({bench.arch(a), oriented_score(bench, task, raw)});
  }
  if (sampled) *sampled = ids;

  TrainConfig tc = cfg.pretrain;
  tc.m = cfg.m;
  PredictorState init = init_predictor(cfg.predictor, derive_seed(seed, "init"));
  pre.state = train_source(init, pre.data, pre.emb, tc, derive_seed(seed, "pretrain")).state;
  return pre;
}

// ordered labeled pairs from one task's evaluations, embedded through the
// current predictor; feeds the density-filtered reference set
void add_reference_pairs(const PredictorState& state, const std::vector<LabeledArch>& set,
                         const TaskEmbedding& emb, std::vector<std::vector<double>>& points,
                         std::vector<int>& labels) {
  if (set.size() < 2) return;
  std::vector<ArchEncoding> archs;
  archs.reserve(set.size());
  for (const auto& la : set) archs.push_back(la.arch);
  PairScorer scorer(state, archs, emb);
  for (std::size_t i = 0; i < set.size(); ++i)
    for (std::size_t j = 0; j < set.size(); ++j) {
      if (i == j || set[i].score == set[j].score) continue;
      points.push_back(scorer.query(i, j).penultimate);
      labels.push_back(set[i].score > set[j].score ? 0 : 1);
    }
}

// tau of a best-first ordering against the ground truth of the same set
double order_tau(const TabularBenchmark& bench, std::size_t task,
                 const std::vector<std::size_t>& order_best_first) {
  const std::size_t k = order_best_first.size();
  std::vector<double> pred(k), truth(k);
  for (std::size_t pos = 0; pos < k; ++pos) {
    pred[pos] = static_cast<double>(k - pos);
    truth[pos] = bench.oriented(order_best_first[pos], task);
  }
  return kendall_tau(pred, truth);
}

struct RefinementInput {
  const PredictorState* state = nullptr;       // learned mode
  const TaskEmbedding* target_emb = nullptr;
  const std::vector<LabeledArch>* source_data = nullptr;  // optional trust reference
  const TaskEmbedding* source_emb = nullptr;
  const std::vector<LabeledArch>* finetune_train = nullptr;
  const PairComparator* oracle = nullptr;      // injected comparator mode
};

// relation graph + trust + acyclic extraction + Hasse + topological order;
// returns the refined best-first ordering of `top` and fills the mwas summary
std::vector<std::size_t> refine_order(const TabularBenchmark& bench, const SearchConfig& cfg,
                                      const std::vector<std::size_t>& top,
                                      const RefinementInput& in, double eps, SearchResult& res) {
  const std::size_t k = top.size();
  RelationGraph rg{DirectedGraph(k), {}};
  if (in.oracle) {
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = i + 1; j < k; ++j) {
        PairOutcome o = (*in.oracle)(top[i], top[j]);
        if (o == PairOutcome::FirstBetter)
          rg.graph.add_edge(i, j);
        else if (o == PairOutcome::SecondBetter)
          rg.graph.add_edge(j, i);
      }
    // injected comparators carry no confidence signal; every edge keeps unit weight
  } else {
    std::vector<ArchEncoding> cands;
    cands.reserve(k);
    for (std::size_t a : top) cands.push_back(bench.arch(a));
    rg = build_relation_graph(*in.state, cands, *in.target_emb, cfg.jobs);
    if (rg.graph.edge_count() > 0) {
      std::vector<std::vector<double>> points;
      std::vector<int> labels;
      if (in.source_data && in.source_emb)
        add_reference_pairs(*in.state, *in.source_data, *in.source_emb, points, labels);
      add_reference_pairs(*in.state, *in.finetune_train, *in.target_emb, points, labels);
      ReferenceSet ref = build_reference_set(points, labels, cfg.trust_alpha, cfg.trust_k);
      EdgeWeightMatrix s = edge_weights(rg.graph, rg.edge_data, ref, cfg.trust_cap, cfg.jobs);
      rg.graph = apply_edge_weights(rg.graph, s);
    }
  }
  // a predictor that contradicts itself everywhere leaves nothing to refine
  if (rg.graph.edge_count() == 0) return top;

  MwasParams mp = cfg.mwas;
  mp.eps = eps;
  MwasResult mr = mwas_approx(rg.graph, mp, derive_seed(cfg.seed, "mwas"));
  res.mwas_score = mr.score;
  res.mwas_drop_ratio = mr.drop_ratio;
  res.mwas_met_threshold = mr.met_threshold;
  res.mwas_r_used = mr.r_used;
  res.mwas_iterations = mr.iterations;

  DirectedGraph hasse = transitive_reduction(mr.subgraph);
  std::vector<std::size_t> local = topological_order(hasse);
  std::vector<std::size_t> refined(k);
  for (std::size_t pos = 0; pos < k; ++pos) refined[pos] = top[local[pos]];
  return refined;
}

SearchResult search_impl(const TabularBenchmark& bench, const SearchConfig& cfg,
                         const PredictorState* pretrained,
                         const std::vector<LabeledArch>* source_data,
                         const TaskEmbedding* source_emb, const PairComparator* oracle) {
  validate_config(cfg, bench);
  const std::size_t n = bench.arch_count();
  const std::size_t target = bench.task_index(cfg.target_task);
  const std::string& target_name = bench.task(target).name;
  const bool single = cfg.source_task.empty() || cfg.source_task == cfg.target_task;

  SearchResult res;
  BudgetLedger& ledger = res.ledger;
  TaskEmbedding target_emb = embedding_or_zeros(bench, target, cfg.predictor.task_dim);

  PredictorState state;
  PretrainData own_pretrain;
  std::vector<std::size_t> excluded;  // single-mode pretrain draws, kept out of the finetune pool
  std::vector<LabeledArch> ft_train;
  if (!oracle) {
    if (pretrained) {
      state = *pretrained;
    } else if (single) {
      own_pretrain = pretrain_full(bench, target, cfg, cfg.seed, ledger, "pretrain", &excluded);
      state = own_pretrain.state;
      source_data = &own_pretrain.data;
      source_emb = &own_pretrain.emb;
    } else {
      std::size_t source = bench.task_index(cfg.source_task);
      own_pretrain = pretrain_full(bench, source, cfg, cfg.seed, ledger, "source", nullptr);
      state = own_pretrain.state;
      source_data = &own_pretrain.data;
      source_emb = &own_pretrain.emb;
    }

    // finetune on b_f/b_v fresh target evaluations
    std::vector<std::size_t> pool;
    {
      std::vector<char> out(n, 0);
      for (std::size_t a : excluded) out[a] = 1;
      for (std::size_t a = 0; a < n; ++a)
        if (!out[a]) pool.push_back(a);
    }
    const std::size_t want = static_cast<std::size_t>(cfg.b_f + cfg.b_v);
    if (pool.size() < want) throw Error("space too small for the finetune budget");
    Rng rng(derive_seed(cfg.seed, "finetune-sample"));
    std::vector<std::size_t> picks = rng.sample_without_replacement(pool.size(), want);

    std::vector<LabeledArch> ft_data;
    ledger.begin_phase("finetune", want);
    for (std::size_t pick : picks) {
      std::size_t a = pool[pick];
      double raw = ledger.record(bench, a, target);
      ft_data.push_back({bench.arch(a), oriented_score(bench, target, raw)});
    }

    TrainConfig tc = cfg.finetune;
    tc.b_f = cfg.b_f;
    tc.b_v = cfg.b_v;
    FinetuneResult fr =
        finetune_target(state, ft_data, target_emb, tc, derive_seed(cfg.seed, "finetune"));
    state = fr.state;
    res.val_acc = fr.val_acc;
    for (std::size_t idx : fr.train_indices) ft_train.push_back(ft_data[idx]);
  } else {
    res.val_acc = 1.0;
  }
  res.eps = 1.0 - res.val_acc;

  // coarse ranking of the whole space
  std::vector<std::size_t> order;
  if (oracle) {
    order = arch_graph_zero(n, *oracle);
  } else {
    std::vector<ArchEncoding> all;
    all.reserve(n);
    for (std::size_t a = 0; a < n; ++a) all.push_back(bench.arch(a));
    PairScorer scorer(state, all, target_emb);
    PairComparator cmp = [&scorer](std::size_t i, std::size_t j) {
      int cij = scorer.p_first(i, j) > 0.5 ? 0 : 1;
      int cji = scorer.p_first(j, i) > 0.5 ? 0 : 1;
      if (cij == 0 && cji == 1) return PairOutcome::FirstBetter;
      if (cij == 1 && cji == 0) return PairOutcome::SecondBetter;
      return PairOutcome::Incomparable;
    };
    order = arch_graph_zero(n, cmp);
  }

  const std::size_t k = std::min(static_cast<std::size_t>(cfg.top_k), n);
  std::vector<std::size_t> top(order.begin(), order.begin() + k);
  res.coarse_tau = order_tau(bench, target, top);

  std::vector<std::size_t> final_order = top;
  if (cfg.refine && k >= 2) {
    RefinementInput in;
    in.oracle = oracle;
    in.state = &state;
    in.target_emb = &target_emb;
    in.source_data = source_data;
    in.source_emb = source_emb;
    in.finetune_train = &ft_train;
    final_order = refine_order(bench, cfg, top, in, res.eps, res);
    res.final_tau = order_tau(bench, target, final_order);
  } else {
    res.final_tau = res.coarse_tau;
  }

  // spend the final budget down the refined order, then down the coarse tail
  ledger.begin_phase("final", static_cast<std::size_t>(cfg.p));
  std::size_t spent = 0;
  auto eval_down = [&](const std::vector<std::size_t>& seq) {
    for (std::size_t a : seq) {
      if (spent == static_cast<std::size_t>(cfg.p)) return;
      if (ledger.contains(bench.id(a), target_name)) continue;
      ledger.record(bench, a, target);
      ++spent;
    }
  };
  eval_down(final_order);
  if (spent < static_cast<std::size_t>(cfg.p))
    eval_down(std::vector<std::size_t>(order.begin() + static_cast<std::ptrdiff_t>(k), order.end()));

  // best by ground truth among every target evaluation
  bool found = false;
  double best = 0.0;
  for (const auto& e : ledger.entries()) {
    if (e.task != target_name) continue;
    double score = bench.task(target).lower_better ? -e.metric : e.metric;
    if (!found || score > best) {
      found = true;
      best = score;
      res.best_arch = e.arch_id;
      res.best_metric = e.metric;
    }
  }
  if (!found) throw Error("no target evaluation happened");
  res.best_true_rank = true_rank(bench, target, bench.arch_index(res.best_arch));
  return res;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::vector<std::size_t> arch_graph_zero(std::size_t count, const PairComparator& cmp) {
  std::vector<std::size_t> asc;  // worst..best
  asc.reserve(count);
  for (std::size_t x = 0; x < count; ++x) {
    std::size_t insert_at = 0;
    for (std::size_t j = asc.size(); j-- > 0;) {
      if (cmp(x, asc[j]) == PairOutcome::FirstBetter) {
        insert_at = j + 1;
        break;
      }
      // a worse-than or incomparable verdict keeps scanning toward the worse end
    }
    asc.insert(asc.begin() + static_cast<std::ptrdiff_t>(insert_at), x);
  }
  return {asc.rbegin(), asc.rend()};
}

void validate_config(const SearchConfig& cfg, const TabularBenchmark& bench) {
  if (cfg.m < 2) throw Error("m must be at least 2");
  if (cfg.b_f < 2 || cfg.b_v < 2) throw Error("b_f and b_v must be at least 2");
  if (cfg.p < 1) throw Error("p must be positive");
  if (cfg.top_k < 2) throw Error("top_k must be at least 2");
  if (cfg.p > cfg.top_k) throw Error("p must not exceed top_k");
  if (cfg.trust_alpha < 0.0 || cfg.trust_alpha >= 1.0)
    throw Error("trust_alpha must lie in [0, 1)");
  if (cfg.trust_k < 1) throw Error("trust_k must be positive");
  if (cfg.trust_cap <= 0.0) throw Error("trust_cap must be positive");
  if (cfg.jobs < 1) throw Error("jobs must be at least 1");
  if (cfg.target_task.empty()) throw Error("target task is required");
  (void)bench.task_index(cfg.target_task);
  if (!cfg.source_task.empty()) (void)bench.task_index(cfg.source_task);

  const bool single = cfg.source_task.empty() || cfg.source_task == cfg.target_task;
  const std::size_t need = static_cast<std::size_t>(cfg.b_f + cfg.b_v) +
                           (single ? static_cast<std::size_t>(cfg.m) : 0);
  if (need > bench.arch_count()) throw Error("budgets exceed the space size");
}

SearchResult arch_graph_search(const TabularBenchmark& bench, const SearchConfig& cfg,
                               const std::optional<PredictorState>& pretrained) {
  return search_impl(bench, cfg, pretrained ? &*pretrained : nullptr, nullptr, nullptr, nullptr);
}

SearchResult arch_graph_search_with_comparator(const TabularBenchmark& bench,
                                               const SearchConfig& cfg,
                                               const PairComparator& cmp) {
  return search_impl(bench, cfg, nullptr, nullptr, nullptr, &cmp);
}

PredictorState pretrain_on_task(const TabularBenchmark& bench, const std::string& task,
                                const SearchConfig& cfg, std::uint64_t seed,
                                BudgetLedger* ledger) {
  BudgetLedger own;
  return pretrain_full(bench, bench.task_index(task), cfg, seed, ledger ? *ledger : own,
                       "source", nullptr)
      .state;
}

std::string run_experiment(const TabularBenchmark& bench, const ExperimentConfig& cfg) {
  if (cfg.methods.empty()) throw Error("no methods requested");
  if (cfg.seeds.empty()) throw Error("no seeds requested");
  for (const std::string& m : cfg.methods)
    if (m != "arch-graph" && m != "arch-graph-zero" && m != "arch-graph-single" &&
        m != "random-search")
      throw Error("unknown method '" + m + "'");
  if (cfg.base.source_task.empty()) throw Error("experiments need a source task");
  const std::size_t source = bench.task_index(cfg.base.source_task);

  std::vector<std::size_t> targets;
  for (std::size_t t = 0; t < bench.task_count(); ++t)
    if (t != source) targets.push_back(t);
  if (targets.empty()) throw Error("benchmark has no target task besides the source");

  const bool needs_shared_pretrain =
      std::any_of(cfg.methods.begin(), cfg.methods.end(), [](const std::string& m) {
        return m == "arch-graph" || m == "arch-graph-zero";
      });
  // one pretrain per experiment seed, shared by both transfer methods across
  // every target; source evaluations live in their own ledger
  std::map<std::uint64_t, PretrainData> pretrain_cache;
  if (needs_shared_pretrain) {
    for (std::uint64_t seed : cfg.seeds) {
      if (pretrain_cache.count(seed)) continue;
      BudgetLedger source_ledger;
      pretrain_cache.emplace(seed,
                             pretrain_full(bench, source, cfg.base, derive_seed(seed, "pretrain"),
                                           source_ledger, "source", nullptr));
    }
  }

  struct Row {
    std::string method, task, metric;
    double value;
    std::string seed;
  };
  std::vector<Row> rows;
  std::map<std::pair<std::string, std::string>, std::vector<double>> ranks;

  for (const std::string& method : cfg.methods) {
    for (std::size_t t : targets) {
      const std::string& tname = bench.task(t).name;
      for (std::uint64_t seed : cfg.seeds) {
        std::string seed_str = std::to_string(seed);
        SearchResult res;
        bool has_quality = true;
        if (method == "random-search") {
          has_quality = false;
          const std::size_t budget =
              static_cast<std::size_t>(cfg.base.b_f + cfg.base.b_v + cfg.base.p);
          Rng rng(derive_seed(seed, "random/" + tname));
          std::vector<std::size_t> picks =
              rng.sample_without_replacement(bench.arch_count(), budget);
          res.ledger.begin_phase("random", budget);
          bool found = false;
          double best = 0.0;
          for (std::size_t a : picks) {
            double raw = res.ledger.record(bench, a, t);
            double score = oriented_score(bench, t, raw);
            if (!found || score > best) {
              found = true;
              best = score;
              res.best_arch = bench.id(a);
              res.best_metric = raw;
            }
          }
          res.best_true_rank = true_rank(bench, t, bench.arch_index(res.best_arch));
        } else {
          SearchConfig run = cfg.base;
          run.target_task = tname;
          if (method == "arch-graph-single") {
            run.source_task = tname;
            run.seed = derive_seed(seed, "single/" + tname);
            run.refine = true;
            res = search_impl(bench, run, nullptr, nullptr, nullptr, nullptr);
          } else {
            // paired streams: zero differs from the full method only by the
            // refinement stage
            run.seed = derive_seed(seed, "paired/" + tname);
            run.refine = method == "arch-graph";
            const PretrainData& pre = pretrain_cache.at(seed);
            res = search_impl(bench, run, &pre.state, &pre.data, &pre.emb, nullptr);
          }
        }

        rows.push_back({method, tname, "best_true_rank",
                        static_cast<double>(res.best_true_rank), seed_str});
        rows.push_back({method, tname, "best_metric", res.best_metric, seed_str});
        if (has_quality) {
          rows.push_back({method, tname, "coarse_tau", res.coarse_tau, seed_str});
          rows.push_back({method, tname, "final_tau", res.final_tau, seed_str});
          rows.push_back({method, tname, "val_acc", res.val_acc, seed_str});
        }
        ranks[{method, tname}].push_back(static_cast<double>(res.best_true_rank));
      }
    }
  }

  std::ostringstream out;
  out << "method,task,metric,value,seed\n";
  for (const Row& r : rows)
    out << r.method << ',' << r.task << ',' << r.metric << ',' << format_value(r.value) << ','
        << r.seed << '\n';
  for (const std::string& method : cfg.methods)
    for (std::size_t t : targets) {
      const std::string& tname = bench.task(t).name;
      const std::vector<double>& v = ranks.at({method, tname});
      double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      var /= static_cast<double>(v.size());
      out << method << ',' << tname << ",best_true_rank_mean," << format_value(mean) << ",all\n";
      out << method << ',' << tname << ",best_true_rank_variance," << format_value(var)
          << ",all\n";
    }
  return out.str();
}

}  // namespace archgraph
