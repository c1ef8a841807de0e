#include "archgraph/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "archgraph/rng.hpp"

namespace archgraph {

namespace {

using nlohmann::json;

std::string source_name(TaskEmbedding::Source s) {
  switch (s) {
    case TaskEmbedding::Source::ExternalFile: return "external";
    case TaskEmbedding::Source::DiagFim: return "diag_fim";
    default: return "zeros";
  }
}

TaskEmbedding::Source source_from_name(const std::string& s, std::size_t line) {
  if (s == "external") return TaskEmbedding::Source::ExternalFile;
  if (s == "diag_fim") return TaskEmbedding::Source::DiagFim;
  if (s == "zeros") return TaskEmbedding::Source::Zeros;
  throw ParseError("unknown embedding source '" + s + "'", line);
}

std::vector<std::vector<std::uint8_t>> adjacency_from_json(const json& j, std::size_t line) {
  if (!j.is_array()) throw ParseError("adjacency must be an array of rows", line);
  std::vector<std::vector<std::uint8_t>> adj;
  for (const json& row : j) {
    if (!row.is_array()) throw ParseError("adjacency row must be an array", line);
    std::vector<std::uint8_t> r;
    for (const json& cell : row) {
      int v = cell.get<int>();
      if (v != 0 && v != 1) throw ParseError("adjacency cells must be 0 or 1", line);
      r.push_back(static_cast<std::uint8_t>(v));
    }
    adj.push_back(std::move(r));
  }
  return adj;
}

json adjacency_to_json(const std::vector<std::vector<std::uint8_t>>& adj) {
  json rows = json::array();
  for (const auto& r : adj) {
    json row = json::array();
    for (std::uint8_t v : r) row.push_back(static_cast<int>(v));
    rows.push_back(std::move(row));
  }
  return rows;
}

// average ranks, ties get the mean of their positions
std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

// merge sort counting strict inversions
std::uint64_t count_inversions(std::vector<double>& v, std::vector<double>& tmp, std::size_t lo,
                               std::size_t hi) {
  if (hi - lo < 2) return 0;
  std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = count_inversions(v, tmp, lo, mid) + count_inversions(v, tmp, mid, hi);
  std::size_t a = lo, b = mid, out = lo;
  while (a < mid && b < hi) {
    if (v[b] < v[a]) {
      inv += mid - a;
      tmp[out++] = v[b++];
    } else {
      tmp[out++] = v[a++];
    }
  }
  while (a < mid) tmp[out++] = v[a++];
  while (b < hi) tmp[out++] = v[b++];
  std::copy(tmp.begin() + lo, tmp.begin() + hi, v.begin() + lo);
  return inv;
}

void check_lengths(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionMismatch("correlation inputs differ in length");
  if (a.size() < 2) throw DegenerateInput("correlation needs at least two observations");
}

}  // namespace

void TabularBenchmark::add_task(TaskSpec spec) {
  if (!archs_.empty()) throw Error("tasks must be declared before architectures");
  if (spec.name.empty()) throw Error("task name must be non-empty");
  if (!task_lookup_.emplace(spec.name, tasks_.size()).second)
    throw Error("duplicate task name '" + spec.name + "'");
  tasks_.push_back(std::move(spec));
}

void TabularBenchmark::add_arch(std::string id, ArchEncoding arch, std::vector<double> metrics) {
  if (tasks_.empty()) throw Error("declare tasks before architectures");
  if (id.empty()) throw Error("architecture id must be non-empty");
  if (metrics.size() != tasks_.size())
    throw DimensionMismatch("metric count differs from task count");
  for (std::size_t t = 0; t < metrics.size(); ++t)
    if (!std::isfinite(metrics[t]))
      throw MissingMetric("architecture '" + id + "' lacks a finite value for task '" +
                          tasks_[t].name + "'");
  validate_arch(arch);
  if (!id_lookup_.emplace(id, archs_.size()).second)
    throw Error("duplicate architecture id '" + id + "'");
  ids_.push_back(std::move(id));
  archs_.push_back(std::move(arch));
  metrics_.push_back(std::move(metrics));
}

std::size_t TabularBenchmark::task_index(const std::string& name) const {
  auto it = task_lookup_.find(name);
  if (it == task_lookup_.end()) throw Error("unknown task '" + name + "'");
  return it->second;
}

std::size_t TabularBenchmark::arch_index(const std::string& id) const {
  auto it = id_lookup_.find(id);
  if (it == id_lookup_.end()) throw Error("unknown architecture id '" + id + "'");
  return it->second;
}

double TabularBenchmark::metric(std::size_t arch, std::size_t task) const {
  return metrics_.at(arch).at(task);
}

double TabularBenchmark::oriented(std::size_t arch, std::size_t task) const {
  double m = metric(arch, task);
  return tasks_.at(task).lower_better ? -m : m;
}

void TabularBenchmark::set_task_embedding(std::size_t task, TaskEmbedding emb) {
  tasks_.at(task).embedding = std::move(emb);
}

Ordering better(const TabularBenchmark& bench, std::size_t task, std::size_t i, std::size_t j) {
  double a = bench.oriented(i, task);
  double b = bench.oriented(j, task);
  if (a > b) return Ordering::IBetter;
  if (b > a) return Ordering::JBetter;
  return Ordering::Tie;
}

std::size_t true_rank(const TabularBenchmark& bench, std::size_t task, std::size_t arch) {
  double mine = bench.oriented(arch, task);
  std::size_t strictly_better = 0;
  for (std::size_t i = 0; i < bench.arch_count(); ++i)
    if (bench.oriented(i, task) > mine) ++strictly_better;
  return strictly_better + 1;
}

TabularBenchmark load_benchmark(std::istream& in) {
  TabularBenchmark bench;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<std::vector<std::uint8_t>> default_adj;
  int op_vocab = 0;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    try {
      if (!have_header) {
        if (!j.contains("tasks") || !j.contains("op_vocab"))
          throw ParseError("first line must be a header with 'tasks' and 'op_vocab'", line_no);
        op_vocab = j["op_vocab"].get<int>();
        if (op_vocab < 1) throw ParseError("op_vocab must be positive", line_no);
        for (const json& t : j["tasks"]) {
          TaskSpec spec;
          spec.name = t.at("name").get<std::string>();
          std::string dir = t.at("direction").get<std::string>();
          if (dir != "higher" && dir != "lower")
            throw ParseError("task direction must be 'higher' or 'lower'", line_no);
          spec.lower_better = dir == "lower";
          if (t.contains("embedding")) {
            spec.embedding.vec = t["embedding"].get<std::vector<double>>();
            spec.embedding.source =
                t.contains("embedding_source")
                    ? source_from_name(t["embedding_source"].get<std::string>(), line_no)
                    : TaskEmbedding::Source::ExternalFile;
          }
          bench.add_task(std::move(spec));
        }
        if (j.contains("adjacency")) default_adj = adjacency_from_json(j["adjacency"], line_no);
        have_header = true;
        continue;
      }

      ArchEncoding arch;
      arch.op_vocab = op_vocab;
      std::string id = j.at("id").get<std::string>();
      arch.node_ops = j.at("ops").get<std::vector<int>>();
      if (j.contains("adjacency"))
        arch.adjacency = adjacency_from_json(j["adjacency"], line_no);
      else if (!default_adj.empty())
        arch.adjacency = default_adj;
      else
        throw ParseError("record has no adjacency and the header set no default", line_no);

      std::vector<double> metrics(bench.task_count());
      const json& cells = j.at("metrics");
      for (std::size_t t = 0; t < bench.task_count(); ++t) {
        const std::string& name = bench.task(t).name;
        if (!cells.contains(name) || cells[name].is_null())
          throw MissingMetric("architecture '" + id + "' has no value for task '" + name +
                              "' (line " + std::to_string(line_no) + ")");
        metrics[t] = cells[name].get<double>();
        if (!std::isfinite(metrics[t]))
          throw MissingMetric("architecture '" + id + "' has a non-finite value for task '" +
                              name + "' (line " + std::to_string(line_no) + ")");
      }
      bench.add_arch(std::move(id), std::move(arch), std::move(metrics));
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed record: ") + e.what(), line_no);
    } catch (const ParseError&) {
      throw;
    } catch (const MissingMetric&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (!have_header) throw ParseError("empty benchmark file", 1);
  if (bench.arch_count() == 0) throw ParseError("benchmark has no architecture records", line_no);
  return bench;
}

TabularBenchmark load_benchmark(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return load_benchmark(in);
}

void save_benchmark(const TabularBenchmark& bench, std::ostream& out) {
  json header;
  json tasks = json::array();
  for (std::size_t t = 0; t < bench.task_count(); ++t) {
    const TaskSpec& spec = bench.task(t);
    json jt;
    jt["name"] = spec.name;
    jt["direction"] = spec.lower_better ? "lower" : "higher";
    if (!spec.embedding.vec.empty()) {
      jt["embedding"] = spec.embedding.vec;
      jt["embedding_source"] = source_name(spec.embedding.source);
    }
    tasks.push_back(std::move(jt));
  }
  header["tasks"] = std::move(tasks);
  header["op_vocab"] = bench.arch_count() ? bench.arch(0).op_vocab : 0;
  // all shipped spaces share one topology; use the first arch's as the default
  if (bench.arch_count()) header["adjacency"] = adjacency_to_json(bench.arch(0).adjacency);
  out << header.dump() << '\n';

  for (std::size_t i = 0; i < bench.arch_count(); ++i) {
    const ArchEncoding& a = bench.arch(i);
    json rec;
    rec["id"] = bench.id(i);
    rec["ops"] = a.node_ops;
    if (a.adjacency != bench.arch(0).adjacency) rec["adjacency"] = adjacency_to_json(a.adjacency);
    json cells;
    for (std::size_t t = 0; t < bench.task_count(); ++t)
      cells[bench.task(t).name] = bench.metric(i, t);
    rec["metrics"] = std::move(cells);
    out << rec.dump() << '\n';
  }
}

void save_benchmark(const TabularBenchmark& bench, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  save_benchmark(bench, out);
}

TabularBenchmark gen_synthetic(int n_archs, int node_count, int op_vocab,
                               const std::vector<SyntheticTask>& tasks, double noise_sd,
                               std::uint64_t seed) {
  if (n_archs < 2 || node_count < 2 || op_vocab < 1) throw Error("space too small to generate");
  if (tasks.empty()) throw Error("need at least one task");
  for (const auto& t : tasks)
    if (t.corr < -1.0 || t.corr > 1.0) throw Error("task correlation must lie in [-1, 1]");
  if (noise_sd < 0.0) throw Error("noise_sd must be non-negative");

  const std::size_t n = static_cast<std::size_t>(node_count);
  std::vector<std::vector<std::uint8_t>> adj(n, std::vector<std::uint8_t>(n, 0));
  for (std::size_t i = 0; i + 1 < n; ++i) adj[i][i + 1] = 1;
  for (std::size_t i = 0; i + 2 < n; ++i) adj[i][i + 2] = 1;

  // op assignments: exhaustive when the space size matches, sampled otherwise
  double space = std::pow(static_cast<double>(op_vocab), node_count);
  std::vector<std::vector<int>> assignments;
  if (space <= 1e9 && static_cast<double>(n_archs) == space) {
    std::vector<int> ops(n, 0);
    for (int count = 0; count < n_archs; ++count) {
      assignments.push_back(ops);
      for (std::size_t i = n; i-- > 0;) {
        if (++ops[i] < op_vocab) break;
        ops[i] = 0;
      }
    }
  } else {
    if (static_cast<double>(n_archs) > space)
      throw Error("n_archs exceeds the number of distinct op assignments");
    Rng rng(derive_seed(seed, "assignments"));
    std::map<std::vector<int>, bool> seen;
    while (assignments.size() < static_cast<std::size_t>(n_archs)) {
      std::vector<int> ops(n);
      for (std::size_t i = 0; i < n; ++i) ops[i] = static_cast<int>(rng.below(op_vocab));
      if (seen.emplace(ops, true).second) assignments.push_back(std::move(ops));
    }
  }

  // per-task smooth latent: base value per op plus a positional modifier
  auto latent_tables = [&](std::size_t task_idx, std::vector<double>& base, Mat& pos) {
    Rng rng(derive_seed(seed, "latent/" + std::to_string(task_idx)));
    base.resize(op_vocab);
    for (double& v : base) v = rng.uniform(-1.0, 1.0);
    pos = Mat(n, op_vocab);
    for (std::size_t i = 0; i < n; ++i)
      for (int o = 0; o < op_vocab; ++o) pos[i][o] = rng.uniform(-0.3, 0.3);
  };
  auto latent_scores = [&](std::size_t task_idx) {
    std::vector<double> base;
    Mat pos;
    latent_tables(task_idx, base, pos);
    std::vector<double> u(assignments.size());
    for (std::size_t a = 0; a < assignments.size(); ++a) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += base[assignments[a][i]] + pos[i][assignments[a][i]];
      u[a] = s;
    }
    return u;
  };
  auto standardize = [](std::vector<double>& u) {
    double mean = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(u.size());
    double var = 0.0;
    for (double v : u) var += (v - mean) * (v - mean);
    var /= static_cast<double>(u.size());
    double sd = var > 0.0 ? std::sqrt(var) : 1.0;
    for (double& v : u) v = (v - mean) / sd;
  };

  std::vector<double> z0 = latent_scores(0);
  standardize(z0);

  TabularBenchmark bench;
  std::vector<std::vector<double>> metric_cols(tasks.size());
  // shared probe inputs so task embeddings are comparable across tasks
  const int probe_dim = 16;
  const int probe_inputs = 64;
  std::vector<std::vector<double>> inputs(probe_inputs, std::vector<double>(probe_dim));
  {
    Rng rng(derive_seed(seed, "probe-inputs"));
    for (auto& x : inputs)
      for (double& v : x) v = rng.normal();
  }

  for (std::size_t t = 0; t < tasks.size(); ++t) {
    std::vector<double> z;
    if (t == 0) {
      z = z0;
    } else {
      // per-arch independent component, so the realized correlation with
      // task 0 concentrates around corr as the space grows
      Rng rng(derive_seed(seed, "latent/" + std::to_string(t)));
      z.resize(assignments.size());
      for (double& v : z) v = rng.normal();
      standardize(z);
      double c = tasks[t].corr;
      double mix = std::sqrt(std::max(0.0, 1.0 - c * c));
      for (std::size_t a = 0; a < z.size(); ++a) z[a] = c * z0[a] + mix * z[a];
    }
    if (noise_sd > 0.0) {
      Rng rng(derive_seed(seed, "noise/" + std::to_string(t)));
      for (double& v : z) v += noise_sd * rng.normal();
    }
    if (tasks[t].lower_better)
      for (double& v : z) v = -v;
    metric_cols[t] = std::move(z);

    std::vector<double> w(probe_dim);
    Rng rng(derive_seed(seed, "probe/" + std::to_string(t)));
    for (double& v : w) v = rng.normal() * 0.5;
    TaskSpec spec;
    spec.name = tasks[t].name;
    spec.lower_better = tasks[t].lower_better;
    spec.embedding = diag_fim(LinearSigmoidProbe(w), inputs);
    bench.add_task(std::move(spec));
  }

  for (std::size_t a = 0; a < assignments.size(); ++a) {
    ArchEncoding arch;
    arch.node_ops = assignments[a];
    arch.adjacency = adj;
    arch.op_vocab = op_vocab;
    std::vector<double> metrics(tasks.size());
    for (std::size_t t = 0; t < tasks.size(); ++t) metrics[t] = metric_cols[t][a];
    bench.add_arch("a" + std::to_string(a), std::move(arch), std::move(metrics));
  }
  return bench;
}

TabularBenchmark default_benchmark(std::uint64_t seed) {
  return gen_synthetic(4096, 6, 4,
                       {{"src", false, 1.0},
                        {"t1", false, 0.8},
                        {"t2", true, 0.6},
                        {"t3", false, 0.4}},
                       0.0, seed);
}

double kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
  check_lengths(a, b);
  const std::size_t n = a.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    if (a[x] != a[y]) return a[x] < a[y];
    return b[x] < b[y];
  });

  auto pair_count = [](std::uint64_t t) { return t * (t - 1) / 2; };
  std::uint64_t n0 = pair_count(n);
  std::uint64_t ties_a = 0, ties_both = 0;
  {
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && a[idx[j + 1]] == a[idx[i]]) ++j;
      ties_a += pair_count(j - i + 1);
      std::size_t k = i;
      while (k <= j) {
        std::size_t l = k;
        while (l + 1 <= j && b[idx[l + 1]] == b[idx[k]]) ++l;
        ties_both += pair_count(l - k + 1);
        k = l + 1;
      }
      i = j + 1;
    }
  }

  std::vector<double> bs(n);
  for (std::size_t i = 0; i < n; ++i) bs[i] = b[idx[i]];
  std::vector<double> tmp(n);
  std::uint64_t swaps = count_inversions(bs, tmp, 0, n);

  std::uint64_t ties_b = 0;
  {
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && bs[j + 1] == bs[i]) ++j;
      ties_b += pair_count(j - i + 1);
      i = j + 1;
    }
  }

  if (n0 == ties_a || n0 == ties_b)
    throw DegenerateInput("kendall tau undefined when one side is constant");

  double num = static_cast<double>(n0) - static_cast<double>(ties_a) -
               static_cast<double>(ties_b) + static_cast<double>(ties_both) -
               2.0 * static_cast<double>(swaps);
  double den = std::sqrt(static_cast<double>(n0 - ties_a)) *
               std::sqrt(static_cast<double>(n0 - ties_b));
  return num / den;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  check_lengths(a, b);
  return pearson(average_ranks(a), average_ranks(b));
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  check_lengths(a, b);
  const double n = static_cast<double>(a.size());
  double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double da = a[i] - ma, db = b[i] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0)
    throw DegenerateInput("correlation undefined for a constant sequence");
  return sab / std::sqrt(saa * sbb);
}

void BudgetLedger::begin_phase(std::string name, std::size_t cap) {
  if (name.empty()) throw Error("phase name must be non-empty");
  if (cap == 0) throw Error("phase cap must be positive");
  phase_ = std::move(name);
  phase_cap_ = cap;
  phase_used_ = 0;
  phase_open_ = true;
}

double BudgetLedger::record(const TabularBenchmark& bench, std::size_t arch, std::size_t task) {
  if (!phase_open_) throw BudgetExceeded("no evaluation phase is open");
  if (phase_used_ >= phase_cap_)
    throw BudgetExceeded("phase '" + phase_ + "' exhausted its cap of " +
                         std::to_string(phase_cap_));
  const std::string& id = bench.id(arch);
  const std::string& tname = bench.task(task).name;
  if (!seen_.emplace(std::make_pair(id, tname), true).second)
    throw BudgetExceeded("architecture '" + id + "' already evaluated on task '" + tname + "'");
  double m = bench.metric(arch, task);
  entries_.push_back({id, tname, m, phase_});
  ++phase_used_;
  return m;
}

bool BudgetLedger::contains(const std::string& arch_id, const std::string& task) const {
  return seen_.count(std::make_pair(arch_id, task)) != 0;
}

}  // namespace archgraph
