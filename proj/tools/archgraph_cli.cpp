#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "archgraph/benchmark.hpp"
#include "archgraph/graph.hpp"
#include "archgraph/mwas.hpp"
#include "archgraph/predictor.hpp"
#include "archgraph/rng.hpp"
#include "archgraph/search.hpp"
#include "archgraph/trust.hpp"

namespace {

using nlohmann::json;
namespace ag = archgraph;

constexpr const char* kVersion = "0.1.0";
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

// config mistakes (bad flags, invalid budgets) exit 2; data problems exit 3
struct ConfigFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ag::Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string iso_timestamp() {
  std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

std::string hex_digest(const std::string& bytes) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx",
                static_cast<unsigned long long>(ag::fnv1a64(bytes)));
  return buf;
}

// every output gets a sibling manifest; rerunning with an identical manifest
// must reproduce the output byte-for-byte (timestamp aside)
void write_manifest(const std::string& out_path, const std::string& command, const json& config,
                    const std::vector<std::string>& input_files) {
  json m;
  m["version"] = kVersion;
  m["command"] = command;
  m["config"] = config;
  json inputs = json::object();
  for (const std::string& f : input_files) inputs[f] = hex_digest(read_file(f));
  m["inputs"] = std::move(inputs);
  m["timestamp"] = iso_timestamp();
  std::ofstream out(out_path + ".manifest.json");
  if (!out) throw ag::Error("cannot open " + out_path + ".manifest.json");
  out << m.dump(2) << '\n';
}

void get_to(const json& j, const char* key, double& v) { if (j.contains(key)) j.at(key).get_to(v); }
void get_to(const json& j, const char* key, int& v) { if (j.contains(key)) j.at(key).get_to(v); }
void get_to(const json& j, const char* key, unsigned& v) { if (j.contains(key)) j.at(key).get_to(v); }
void get_to(const json& j, const char* key, std::string& v) { if (j.contains(key)) j.at(key).get_to(v); }
void get_to(const json& j, const char* key, std::uint64_t& v) { if (j.contains(key)) j.at(key).get_to(v); }

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw ConfigFailure("unknown config key '" + it.key() + "' in " + where);
  }
}

void train_from_json(const json& j, ag::TrainConfig& tc, const std::string& where) {
  check_keys(j, {"learning_rate", "momentum", "weight_decay", "epochs", "batch_size"}, where);
  get_to(j, "learning_rate", tc.learning_rate);
  get_to(j, "momentum", tc.momentum);
  get_to(j, "weight_decay", tc.weight_decay);
  get_to(j, "epochs", tc.epochs);
  get_to(j, "batch_size", tc.batch_size);
}

// --config JSON mirrors SearchConfig; unknown keys fail fast
void apply_config_file(const std::string& path, ag::SearchConfig& cfg) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigFailure("config file " + path + ": " + e.what());
  }
  try {
    check_keys(j,
               {"m", "b_f", "b_v", "p", "top_k", "source_task", "target_task", "seed", "mwas",
                "trust_alpha", "trust_k", "trust_cap", "predictor", "pretrain", "finetune",
                "refine", "jobs"},
               path);
    get_to(j, "m", cfg.m);
    get_to(j, "b_f", cfg.b_f);
    get_to(j, "b_v", cfg.b_v);
    get_to(j, "p", cfg.p);
    get_to(j, "top_k", cfg.top_k);
    get_to(j, "source_task", cfg.source_task);
    get_to(j, "target_task", cfg.target_task);
    get_to(j, "seed", cfg.seed);
    get_to(j, "trust_alpha", cfg.trust_alpha);
    get_to(j, "trust_k", cfg.trust_k);
    get_to(j, "trust_cap", cfg.trust_cap);
    get_to(j, "jobs", cfg.jobs);
    if (j.contains("refine")) j.at("refine").get_to(cfg.refine);
    if (j.contains("mwas")) {
      const json& w = j["mwas"];
      check_keys(w, {"eps", "max_iterations", "power_iter_tol", "power_iter_max"}, "mwas");
      get_to(w, "eps", cfg.mwas.eps);
      get_to(w, "max_iterations", cfg.mwas.max_iterations);
      get_to(w, "power_iter_tol", cfg.mwas.power_iter_tol);
      get_to(w, "power_iter_max", cfg.mwas.power_iter_max);
    }
    if (j.contains("predictor")) {
      const json& p = j["predictor"];
      check_keys(p, {"op_vocab", "node_count", "hidden_dim", "emb_dim", "task_dim",
                     "task_proj_dim", "head_hidden_dim"},
                 "predictor");
      get_to(p, "op_vocab", cfg.predictor.op_vocab);
      get_to(p, "node_count", cfg.predictor.node_count);
      get_to(p, "hidden_dim", cfg.predictor.hidden_dim);
      get_to(p, "emb_dim", cfg.predictor.emb_dim);
      get_to(p, "task_dim", cfg.predictor.task_dim);
      get_to(p, "task_proj_dim", cfg.predictor.task_proj_dim);
      get_to(p, "head_hidden_dim", cfg.predictor.head_hidden_dim);
    }
    if (j.contains("pretrain")) train_from_json(j["pretrain"], cfg.pretrain, "pretrain");
    if (j.contains("finetune")) train_from_json(j["finetune"], cfg.finetune, "finetune");
  } catch (const json::exception& e) {
    throw ConfigFailure("config file " + path + ": " + e.what());
  }
}

json config_snapshot(const ag::SearchConfig& c) {
  json j;
  j["m"] = c.m;
  j["b_f"] = c.b_f;
  j["b_v"] = c.b_v;
  j["p"] = c.p;
  j["top_k"] = c.top_k;
  j["source_task"] = c.source_task;
  j["target_task"] = c.target_task;
  j["seed"] = c.seed;
  j["mwas"] = {{"eps", c.mwas.eps},
               {"max_iterations", c.mwas.max_iterations},
               {"power_iter_tol", c.mwas.power_iter_tol},
               {"power_iter_max", c.mwas.power_iter_max}};
  j["trust_alpha"] = c.trust_alpha;
  j["trust_k"] = c.trust_k;
  j["trust_cap"] = c.trust_cap;
  j["predictor"] = {{"op_vocab", c.predictor.op_vocab},
                    {"node_count", c.predictor.node_count},
                    {"hidden_dim", c.predictor.hidden_dim},
                    {"emb_dim", c.predictor.emb_dim},
                    {"task_dim", c.predictor.task_dim},
                    {"task_proj_dim", c.predictor.task_proj_dim},
                    {"head_hidden_dim", c.predictor.head_hidden_dim}};
  auto train = [](const ag::TrainConfig& t) {
    return json{{"learning_rate", t.learning_rate},
                {"momentum", t.momentum},
                {"weight_decay", t.weight_decay},
                {"epochs", t.epochs},
                {"batch_size", t.batch_size}};
  };
  j["pretrain"] = train(c.pretrain);
  j["finetune"] = train(c.finetune);
  j["refine"] = c.refine;
  j["jobs"] = c.jobs;
  return j;
}

std::vector<ag::SyntheticTask> parse_task_specs(const std::string& text) {
  std::vector<ag::SyntheticTask> tasks;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::stringstream fs(item);
    std::string name, corr, dir;
    if (!std::getline(fs, name, ':') || !std::getline(fs, corr, ':') || !std::getline(fs, dir))
      throw ConfigFailure("task spec must look like name:corr:higher|lower, got '" + item + "'");
    ag::SyntheticTask t;
    t.name = name;
    try {
      t.corr = std::stod(corr);
    } catch (const std::exception&) {
      throw ConfigFailure("bad correlation in task spec '" + item + "'");
    }
    if (dir == "higher")
      t.lower_better = false;
    else if (dir == "lower")
      t.lower_better = true;
    else
      throw ConfigFailure("task direction must be higher or lower, got '" + dir + "'");
    tasks.push_back(std::move(t));
  }
  if (tasks.empty()) throw ConfigFailure("no tasks given");
  return tasks;
}

// "1..20" (inclusive range) or "3,7,11"
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  auto range_pos = text.find("..");
  try {
    if (range_pos != std::string::npos) {
      std::uint64_t lo = std::stoull(text.substr(0, range_pos));
      std::uint64_t hi = std::stoull(text.substr(range_pos + 2));
      if (hi < lo) throw ConfigFailure("seed range is empty: " + text);
      for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) seeds.push_back(std::stoull(item));
    }
  } catch (const ConfigFailure&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigFailure("cannot parse seeds '" + text + "'");
  }
  if (seeds.empty()) throw ConfigFailure("no seeds given");
  return seeds;
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

json search_result_json(const ag::SearchResult& r) {
  json j;
  j["best_arch"] = r.best_arch;
  j["best_metric"] = r.best_metric;
  j["best_true_rank"] = r.best_true_rank;
  j["coarse_tau"] = r.coarse_tau;
  j["final_tau"] = r.final_tau;
  j["val_acc"] = r.val_acc;
  j["eps"] = r.eps;
  j["evaluations"] = r.ledger.total();
  j["mwas"] = {{"score", r.mwas_score},
               {"drop_ratio", r.mwas_drop_ratio},
               {"met_threshold", r.mwas_met_threshold},
               {"r_used", r.mwas_r_used},
               {"iterations", r.mwas_iterations}};
  return j;
}

struct CliOptions {
  std::uint64_t seed = 0;
  std::string config_file;
  std::string out;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
};

int run(int argc, char** argv) {
  CLI::App app{"arch-graph: pairwise-relation architecture search over tabular benchmarks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CliOptions opt;
  app.add_option("--seed", opt.seed, "root seed; every random stream derives from it");
  app.add_option("--config", opt.config_file, "JSON config file mirroring the search settings");
  app.add_option("--jobs", opt.jobs, "worker threads for pair scoring");

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "generate a synthetic tabular benchmark");
  int gen_n = 4096, gen_nodes = 6, gen_vocab = 4;
  double gen_noise = 0.0;
  std::string gen_tasks = "src:1.0:higher,t1:0.8:higher,t2:0.6:lower,t3:0.4:higher";
  std::string gen_out;
  gen->add_option("--n", gen_n, "architecture count");
  gen->add_option("--nodes", gen_nodes, "nodes per cell");
  gen->add_option("--vocab", gen_vocab, "operation vocabulary size");
  gen->add_option("--tasks", gen_tasks, "comma list of name:corr:higher|lower");
  gen->add_option("--noise", gen_noise, "metric noise standard deviation");
  gen->add_option("--out", gen_out, "output JSONL path")->required();

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "train the relation predictor on a source task");
  std::string pre_bench, pre_source, pre_out;
  pre->add_option("--bench", pre_bench, "benchmark JSONL")->required();
  pre->add_option("--source", pre_source, "source task name")->required();
  pre->add_option("--out", pre_out, "checkpoint output path")->required();

  // search
  auto* sea = app.add_subcommand("search", "run one search on a target task");
  std::string sea_bench, sea_source, sea_target, sea_checkpoint, sea_method = "arch-graph";
  std::string sea_out;
  sea->add_option("--bench", sea_bench, "benchmark JSONL")->required();
  sea->add_option("--source", sea_source, "source task (omit for single-task mode)");
  sea->add_option("--target", sea_target, "target task name")->required();
  sea->add_option("--checkpoint", sea_checkpoint, "pretrained predictor checkpoint");
  sea->add_option("--method", sea_method, "arch-graph | arch-graph-zero | arch-graph-single")
      ->check(CLI::IsMember({"arch-graph", "arch-graph-zero", "arch-graph-single"}));
  sea->add_option("--out", sea_out, "write the JSON summary here as well");

  // experiment
  auto* exp = app.add_subcommand("experiment", "batch runs over methods x targets x seeds");
  std::string exp_bench, exp_methods = "arch-graph,random-search", exp_seeds = "1..5";
  std::string exp_source = "src", exp_out;
  exp->add_option("--bench", exp_bench, "benchmark JSONL")->required();
  exp->add_option("--methods", exp_methods, "comma list of methods");
  exp->add_option("--seeds", exp_seeds, "comma list or lo..hi range");
  exp->add_option("--source", exp_source, "source (pretrain) task");
  exp->add_option("--out", exp_out, "CSV output path")->required();

  // mwas
  auto* mw = app.add_subcommand("mwas", "extract a max acyclic subgraph from an edge list");
  std::string mw_graph;
  double mw_eps = 0.5;
  bool mw_brute = false;
  mw->add_option("graph", mw_graph, "edge-list file (src dst weight per line)")->required();
  mw->add_option("--eps", mw_eps, "drop-ratio threshold");
  mw->add_flag("--brute-force", mw_brute, "exhaustive oracle (small graphs only)");

  // metrics
  auto* met = app.add_subcommand("metrics", "rank correlations between two value files");
  std::string met_a, met_b;
  met->add_option("a", met_a, "first file, one float per line")->required();
  met->add_option("b", met_b, "second file, one float per line")->required();

  // build-graph
  auto* bg = app.add_subcommand("build-graph", "emit the trust-weighted relation graph");
  std::string bg_bench, bg_checkpoint, bg_task, bg_out;
  int bg_count = 50, bg_ref = 30;
  double bg_alpha = 0.1, bg_cap = 1e6;
  int bg_k = 5;
  bg->add_option("--bench", bg_bench, "benchmark JSONL")->required();
  bg->add_option("--checkpoint", bg_checkpoint, "predictor checkpoint")->required();
  bg->add_option("--task", bg_task, "task name")->required();
  bg->add_option("--count", bg_count, "how many architectures (first N of the benchmark)");
  bg->add_option("--ref-count", bg_ref, "labeled architectures for the trust reference");
  bg->add_option("--trust-alpha", bg_alpha, "density filter fraction");
  bg->add_option("--trust-k", bg_k, "k-th neighbor for the density filter");
  bg->add_option("--trust-cap", bg_cap, "trust score upper clamp");
  bg->add_option("--out", bg_out, "edge-list output (stdout when omitted)");

  // let global flags (--seed, --config, --jobs) appear after the subcommand
  for (CLI::App* sub : app.get_subcommands([](CLI::App*) { return true; })) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  ag::SearchConfig cfg;
  cfg.seed = opt.seed;
  cfg.jobs = opt.jobs;
  if (!opt.config_file.empty()) apply_config_file(opt.config_file, cfg);
  if (app.count("--seed")) cfg.seed = opt.seed;  // explicit flag beats the file

  if (gen->parsed()) {
    ag::TabularBenchmark bench =
        ag::gen_synthetic(gen_n, gen_nodes, gen_vocab, parse_task_specs(gen_tasks), gen_noise,
                          cfg.seed);
    ag::save_benchmark(bench, gen_out);
    json snapshot = config_snapshot(cfg);
    snapshot["gen"] = {{"n", gen_n},      {"nodes", gen_nodes},   {"vocab", gen_vocab},
                       {"tasks", gen_tasks}, {"noise", gen_noise}};
    write_manifest(gen_out, "gen-synth", snapshot, {});
    std::cout << "wrote " << bench.arch_count() << " records to " << gen_out << '\n';
    return 0;
  }

  if (pre->parsed()) {
    ag::TabularBenchmark bench = ag::load_benchmark(pre_bench);
    cfg.source_task = pre_source;
    cfg.target_task = pre_source;
    try {
      ag::validate_config(cfg, bench);
    } catch (const ag::Error& e) {
      throw ConfigFailure(e.what());
    }
    ag::BudgetLedger ledger;
    ag::PredictorState state =
        ag::pretrain_on_task(bench, pre_source, cfg, ag::derive_seed(cfg.seed, "pretrain"),
                             &ledger);
    ag::save_checkpoint(state, pre_out);
    write_manifest(pre_out, "pretrain", config_snapshot(cfg), {pre_bench});
    std::cout << "pretrained on " << ledger.total() << " evaluations of task " << pre_source
              << '\n';
    return 0;
  }

  if (sea->parsed()) {
    ag::TabularBenchmark bench = ag::load_benchmark(sea_bench);
    cfg.target_task = sea_target;
    cfg.source_task = sea_method == "arch-graph-single" ? sea_target : sea_source;
    cfg.refine = sea_method != "arch-graph-zero";
    try {
      ag::validate_config(cfg, bench);
      if (sea_method != "arch-graph-single" && sea_checkpoint.empty() && sea_source.empty())
        throw ConfigFailure("transfer methods need --source or --checkpoint");
    } catch (const ag::Error& e) {
      throw ConfigFailure(e.what());
    }
    std::optional<ag::PredictorState> pretrained;
    if (!sea_checkpoint.empty()) pretrained = ag::load_checkpoint(sea_checkpoint);
    ag::SearchResult res = ag::arch_graph_search(bench, cfg, pretrained);
    std::string summary = search_result_json(res).dump();
    std::cout << summary << '\n';
    if (!sea_out.empty()) {
      std::ofstream out(sea_out);
      if (!out) throw ag::Error("cannot open " + sea_out);
      out << summary << '\n';
      std::vector<std::string> inputs{sea_bench};
      if (!sea_checkpoint.empty()) inputs.push_back(sea_checkpoint);
      json snapshot = config_snapshot(cfg);
      snapshot["method"] = sea_method;
      write_manifest(sea_out, "search", snapshot, inputs);
    }
    return 0;
  }

  if (exp->parsed()) {
    ag::TabularBenchmark bench = ag::load_benchmark(exp_bench);
    ag::ExperimentConfig ecfg;
    ecfg.methods = split_commas(exp_methods);
    ecfg.seeds = parse_seeds(exp_seeds);
    ecfg.base = cfg;
    ecfg.base.source_task = exp_source;
    std::string csv;
    try {
      csv = ag::run_experiment(bench, ecfg);
    } catch (const ag::Error& e) {
      // config-shaped problems (unknown method/task) surface before any run
      std::string msg = e.what();
      if (msg.find("unknown") != std::string::npos || msg.find("no methods") != std::string::npos ||
          msg.find("no seeds") != std::string::npos || msg.find("source task") != std::string::npos)
        throw ConfigFailure(msg);
      throw;
    }
    std::ofstream out(exp_out, std::ios::binary);
    if (!out) throw ag::Error("cannot open " + exp_out);
    out << csv;
    json snapshot = config_snapshot(ecfg.base);
    snapshot["methods"] = ecfg.methods;
    snapshot["seeds"] = ecfg.seeds;
    write_manifest(exp_out, "experiment", snapshot, {exp_bench});
    std::cout << "wrote " << exp_out << '\n';
    return 0;
  }

  if (mw->parsed()) {
    ag::DirectedGraph g = ag::read_edge_list(mw_graph);
    ag::MwasParams params = cfg.mwas;
    params.eps = mw_eps;
    ag::MwasResult res =
        mw_brute ? ag::mwas_bruteforce(g, mw_eps) : ag::mwas_approx(g, params, cfg.seed);
    ag::write_edge_list(res.subgraph, std::cout);
    json j = {{"score", res.score},
              {"drop_ratio", res.drop_ratio},
              {"met_threshold", res.met_threshold},
              {"r_used", res.r_used}};
    std::cout << j.dump() << '\n';
    return 0;
  }

  if (met->parsed()) {
    auto read_values = [](const std::string& path) {
      std::ifstream in(path);
      if (!in) throw ag::Error("cannot open " + path);
      std::vector<double> v;
      double x;
      while (in >> x) v.push_back(x);
      return v;
    };
    std::vector<double> a = read_values(met_a);
    std::vector<double> b = read_values(met_b);
    json j = {{"kendall_tau", ag::kendall_tau(a, b)},
              {"spearman", ag::spearman(a, b)},
              {"pearson", ag::pearson(a, b)}};
    std::cout << j.dump() << '\n';
    return 0;
  }

  if (bg->parsed()) {
    ag::TabularBenchmark bench = ag::load_benchmark(bg_bench);
    ag::PredictorState state = ag::load_checkpoint(bg_checkpoint);
    std::size_t task = bench.task_index(bg_task);
    if (bg_count < 2 || static_cast<std::size_t>(bg_count) > bench.arch_count())
      throw ConfigFailure("--count must lie in [2, arch count]");
    if (bg_ref < 2 || static_cast<std::size_t>(bg_ref) > bench.arch_count())
      throw ConfigFailure("--ref-count must lie in [2, arch count]");

    ag::TaskEmbedding emb = bench.task(task).embedding;
    if (emb.vec.empty()) emb.vec.assign(state.config.task_dim, 0.0);

    std::vector<ag::ArchEncoding> cands;
    for (int i = 0; i < bg_count; ++i) cands.push_back(bench.arch(i));
    ag::RelationGraph rg = ag::build_relation_graph(state, cands, emb, cfg.jobs);

    // labeled reference pairs drawn from the benchmark itself (diagnostic tool)
    ag::Rng rng(ag::derive_seed(cfg.seed, "build-graph"));
    std::vector<std::size_t> ref_ids =
        rng.sample_without_replacement(bench.arch_count(), bg_ref);
    std::vector<ag::ArchEncoding> ref_archs;
    for (std::size_t a : ref_ids) ref_archs.push_back(bench.arch(a));
    ag::PairScorer scorer(state, ref_archs, emb);
    std::vector<std::vector<double>> points;
    std::vector<int> labels;
    for (std::size_t i = 0; i < ref_ids.size(); ++i)
      for (std::size_t j = 0; j < ref_ids.size(); ++j) {
        if (i == j) continue;
        double a = bench.oriented(ref_ids[i], task), b = bench.oriented(ref_ids[j], task);
        if (a == b) continue;
        points.push_back(scorer.query(i, j).penultimate);
        labels.push_back(a > b ? 0 : 1);
      }
    ag::ReferenceSet ref = ag::build_reference_set(points, labels, bg_alpha, bg_k);
    ag::EdgeWeightMatrix s = ag::edge_weights(rg.graph, rg.edge_data, ref, bg_cap, cfg.jobs);
    ag::DirectedGraph weighted = ag::apply_edge_weights(rg.graph, s);
    if (bg_out.empty()) {
      ag::write_edge_list(weighted, std::cout);
    } else {
      ag::write_edge_list(weighted, bg_out);
      write_manifest(bg_out, "build-graph", config_snapshot(cfg), {bg_bench, bg_checkpoint});
    }
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigFailure& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ag::ParseError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ag::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
}
