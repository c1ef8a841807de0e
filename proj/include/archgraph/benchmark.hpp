#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "archgraph/errors.hpp"
#include "archgraph/predictor.hpp"

namespace archgraph {

struct TaskSpec {
  std::string name;
  bool lower_better = false;
  TaskEmbedding embedding;

  bool operator==(const TaskSpec&) const = default;
};

// Architecture/metric lookup table. Immutable once built; all pipeline code
// treats metric access as the expensive "evaluation" step and meters it
// through a BudgetLedger.
class TabularBenchmark {
 public:
  // throws Error on duplicate task name or empty name
  void add_task(TaskSpec spec);
  // metrics aligned with the declared tasks; throws Error on duplicate id,
  // MissingMetric on a non-finite cell, DimensionMismatch on length mismatch
  void add_arch(std::string id, ArchEncoding arch, std::vector<double> metrics);

  std::size_t arch_count() const { return archs_.size(); }
  std::size_t task_count() const { return tasks_.size(); }
  const ArchEncoding& arch(std::size_t i) const { return archs_.at(i); }
  const std::string& id(std::size_t i) const { return ids_.at(i); }
  const TaskSpec& task(std::size_t t) const { return tasks_.at(t); }
  const std::vector<TaskSpec>& tasks() const { return tasks_; }

  // throws Error when the name/id is unknown
  std::size_t task_index(const std::string& name) const;
  std::size_t arch_index(const std::string& id) const;
  bool has_task(const std::string& name) const { return task_lookup_.count(name) != 0; }

  double metric(std::size_t arch, std::size_t task) const;
  // metric mapped so that larger is always better
  double oriented(std::size_t arch, std::size_t task) const;

  void set_task_embedding(std::size_t task, TaskEmbedding emb);

  bool operator==(const TabularBenchmark&) const = default;

 private:
  std::vector<ArchEncoding> archs_;
  std::vector<std::string> ids_;
  std::vector<TaskSpec> tasks_;
  std::vector<std::vector<double>> metrics_;  // arch-major
  std::map<std::string, std::size_t> id_lookup_;
  std::map<std::string, std::size_t> task_lookup_;
};

enum class Ordering { IBetter, JBetter, Tie };

// direction-aware strict comparison of two architectures on one task
Ordering better(const TabularBenchmark& bench, std::size_t task, std::size_t i, std::size_t j);

// 1 = best; ties share the minimum rank
std::size_t true_rank(const TabularBenchmark& bench, std::size_t task, std::size_t arch);

// JSON-lines persistence. First line is a header
//   {"tasks":[{"name":..,"direction":"higher"|"lower","embedding":[..],"embedding_source":..}],
//    "op_vocab":N, "adjacency":[[..]]}
// where "adjacency" is an optional space-level default; each following line is
//   {"id":..,"ops":[..],"adjacency":[[..]],"metrics":{task:value}}
// with "adjacency" optional when the header supplied the default.
// Errors: ParseError with a 1-based line number; MissingMetric for absent,
// null, or non-finite cells.
TabularBenchmark load_benchmark(std::istream& in);
TabularBenchmark load_benchmark(const std::string& path);
void save_benchmark(const TabularBenchmark& bench, std::ostream& out);
void save_benchmark(const TabularBenchmark& bench, const std::string& path);

struct SyntheticTask {
  std::string name;
  bool lower_better = false;
  // target rank correlation with the first task, in [-1, 1]
  double corr = 1.0;
};

// Deterministic synthetic space. Architectures share a fixed DAG (chain plus
// one-hop skips) and differ in per-node op assignments; when
// op_vocab^node_count == n_archs the assignments are enumerated exhaustively,
// otherwise n_archs distinct assignments are sampled. Task 0's latent score is
// a smooth function of ops and positions; task k mixes task 0's standardized
// latent with an independent one at weight corr, so realized rank correlation
// approaches corr as n grows. Per-task embeddings come from the diagonal
// Fisher information of a seeded linear-sigmoid probe on shared inputs.
TabularBenchmark gen_synthetic(int n_archs, int node_count, int op_vocab,
                               const std::vector<SyntheticTask>& tasks, double noise_sd,
                               std::uint64_t seed);

// the space used by the shipped experiments: 4096 archs (6 nodes, 4 ops),
// tasks src/t1/t2/t3 with correlations 1.0/0.8/0.6/0.4, t2 lower-better,
// noiseless
TabularBenchmark default_benchmark(std::uint64_t seed);

// Kendall tau-b with tie correction, O(n log n). DegenerateInput when either
// side has zero variance (all values tied).
double kendall_tau(const std::vector<double>& a, const std::vector<double>& b);
// Spearman rho: Pearson correlation of average ranks.
double spearman(const std::vector<double>& a, const std::vector<double>& b);
double pearson(const std::vector<double>& a, const std::vector<double>& b);

// Meters ground-truth metric access. One ledger per search run.
class BudgetLedger {
 public:
  struct Entry {
    std::string arch_id;
    std::string task;
    double metric = 0.0;
    std::string phase;

    bool operator==(const Entry&) const = default;
  };

  // caps apply per phase; recording without an open phase throws
  void begin_phase(std::string name, std::size_t cap);

  // charges one evaluation and returns the raw metric; BudgetExceeded on a
  // duplicate (arch, task) pair in any phase or when the phase cap is hit
  double record(const TabularBenchmark& bench, std::size_t arch, std::size_t task);

  bool contains(const std::string& arch_id, const std::string& task) const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t total() const { return entries_.size(); }
  std::size_t phase_used() const { return phase_used_; }

  bool operator==(const BudgetLedger&) const = default;

 private:
  std::vector<Entry> entries_;
  std::map<std::pair<std::string, std::string>, bool> seen_;
  std::string phase_;
  std::size_t phase_cap_ = 0;
  std::size_t phase_used_ = 0;
  bool phase_open_ = false;
};

}  // namespace archgraph
