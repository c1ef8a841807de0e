#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "archgraph/benchmark.hpp"
#include "archgraph/mwas.hpp"
#include "archgraph/predictor.hpp"

namespace archgraph {

enum class PairOutcome { FirstBetter, SecondBetter, Incomparable };

using PairComparator = std::function<PairOutcome(std::size_t, std::size_t)>;

/// Insertion sort with a fallible comparator. The sorted prefix is scanned
/// from its best end; an Incomparable answer skips to the next position, and
/// an element every comparison skipped lands in front of the prefix. Returns
/// candidate indices best-first. O(count^2) comparator calls worst case.
std::vector<std::size_t> arch_graph_zero(std::size_t count, const PairComparator& cmp);

struct SearchConfig {
  int m = 50;      // source (or single-task pretrain) evaluations
  int b_f = 20;    // finetune train evaluations
  int b_v = 10;    // finetune validation evaluations
  int p = 20;      // final evaluations
  int top_k = 500; // subgraph size for the refinement stage
  std::string source_task;
  std::string target_task;
  std::uint64_t seed = 0;
  MwasParams mwas;
  double trust_alpha = 0.1;
  int trust_k = 5;
  double trust_cap = 1e6;
  PredictorConfig predictor;
  TrainConfig pretrain;  // epochs default 100
  TrainConfig finetune;  // epochs default 50
  // false runs the coarse stage only and evaluates the top of the sorted
  // order directly (the insertion-sort-only pipeline)
  bool refine = true;
  unsigned jobs = 1;

  SearchConfig() {
    pretrain.epochs = 100;
    finetune.epochs = 50;
  }
};

// throws Error on invalid budgets (non-positive, p > top_k, ...)
void validate_config(const SearchConfig& cfg, const TabularBenchmark& bench);

struct SearchResult {
  std::string best_arch;
  double best_metric = 0.0;  // raw value in the task's native direction
  std::size_t best_true_rank = 0;
  // rank quality over the top_k set: coarse order, and the final order after
  // the refinement stage (equal to coarse_tau when refinement is off)
  double coarse_tau = 0.0;
  double final_tau = 0.0;
  double val_acc = 0.0;
  double eps = 0.0;
  BudgetLedger ledger;
  double mwas_score = 0.0;
  double mwas_drop_ratio = 0.0;
  bool mwas_met_threshold = false;
  std::size_t mwas_r_used = 0;
  int mwas_iterations = 0;
};

/// Trains on the source task when no pretrained state is given (or on the
/// target itself when source and target coincide: the single-task variant),
/// then: finetune on b_f/b_v target evaluations, eps = 1 - val_acc, coarse
/// insertion sort of the whole space, relation graph over the top_k coarse
/// candidates, trust weights, acyclic subgraph extraction, transitive
/// reduction, topological order, and evaluation of the top p unseen
/// architectures. Best architecture is picked by ground truth among every
/// target evaluation in the ledger.
SearchResult arch_graph_search(const TabularBenchmark& bench, const SearchConfig& cfg,
                               const std::optional<PredictorState>& pretrained = std::nullopt);

/// Same pipeline with an injected comparator instead of a learned predictor:
/// no pretraining or finetuning happens, val_acc is taken as 1 (eps = 0), and
/// relation edges get unit trust weight. cmp must be pure; cmp(i, j) answers
/// for the pair of candidate indices (i first).
SearchResult arch_graph_search_with_comparator(const TabularBenchmark& bench,
                                               const SearchConfig& cfg, const PairComparator& cmp);

/// Pretraining shared across methods/targets of one experiment seed.
PredictorState pretrain_on_task(const TabularBenchmark& bench, const std::string& task,
                                const SearchConfig& cfg, std::uint64_t seed,
                                BudgetLedger* ledger = nullptr);

struct ExperimentConfig {
  // subset of {"arch-graph", "arch-graph-zero", "arch-graph-single", "random-search"}
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
  SearchConfig base;  // target_task ignored; every non-source task is a target
};

/// One run per (method, target task, seed); per-run streams are derived by
/// hashing the seed with the task (shared between arch-graph and
/// arch-graph-zero so the pair is ablation-comparable) and the method for the
/// others. Returns CSV text with columns method,task,metric,value,seed; per-run
/// rows first, then per-(method, task) aggregate rows with seed "all" carrying
/// mean and population variance of best_true_rank. Byte-deterministic for
/// identical inputs.
std::string run_experiment(const TabularBenchmark& bench, const ExperimentConfig& cfg);

}  // namespace archgraph
