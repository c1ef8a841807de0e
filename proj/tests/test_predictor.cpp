#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "archgraph/predictor.hpp"
#include "archgraph/rng.hpp"

using namespace archgraph;

namespace {

PredictorConfig small_config(int nodes = 4) {
  PredictorConfig cfg;
  cfg.op_vocab = 3;
  cfg.node_count = nodes;
  cfg.hidden_dim = 6;
  cfg.emb_dim = 4;
  cfg.task_dim = 3;
  cfg.task_proj_dim = 3;
  cfg.head_hidden_dim = 5;
  return cfg;
}

// chain plus one-hop skips, the cell layout used across the test suite
ArchEncoding make_arch(std::vector<int> ops, int vocab) {
  ArchEncoding a;
  std::size_t n = ops.size();
  a.node_ops = std::move(ops);
  a.op_vocab = vocab;
  a.adjacency.assign(n, std::vector<std::uint8_t>(n, 0));
  for (std::size_t i = 0; i + 1 < n; ++i) a.adjacency[i][i + 1] = 1;
  for (std::size_t i = 0; i + 2 < n; ++i) a.adjacency[i][i + 2] = 1;
  return a;
}

TaskEmbedding make_task(std::vector<double> v) {
  TaskEmbedding t;
  t.vec = std::move(v);
  t.source = TaskEmbedding::Source::ExternalFile;
  return t;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_CASE("arch validation rejects malformed encodings") {
  auto good = make_arch({0, 1, 2}, 3);
  CHECK_NOTHROW(validate_arch(good));

  auto bad = good;
  bad.node_ops[1] = 3;
  CHECK_THROWS_AS(validate_arch(bad), Error);
  bad = good;
  bad.node_ops[0] = -1;
  CHECK_THROWS_AS(validate_arch(bad), Error);

  bad = good;
  bad.adjacency.pop_back();
  CHECK_THROWS_AS(validate_arch(bad), DimensionMismatch);
  bad = good;
  bad.adjacency[0].push_back(0);
  CHECK_THROWS_AS(validate_arch(bad), DimensionMismatch);

  bad = good;
  bad.adjacency[1][1] = 1;  // self-loop
  CHECK_THROWS_AS(validate_arch(bad), Error);
  bad = good;
  bad.adjacency[2][0] = 1;  // closes a cycle
  CHECK_THROWS_AS(validate_arch(bad), CyclicInput);
}

TEST_CASE("initialization is seeded, bounded, and bias-free") {
  auto cfg = small_config();
  auto s1 = init_predictor(cfg, 99);
  auto s2 = init_predictor(cfg, 99);
  auto s3 = init_predictor(cfg, 100);
  CHECK(s1 == s2);
  CHECK(s1 != s3);
  CHECK(s1.rng_seed == 99);

  for (double b : s1.enc_b0) CHECK(b == 0.0);
  for (double b : s1.out_b) CHECK(b == 0.0);

  auto bound_ok = [](const Mat& w) {
    double limit = std::sqrt(6.0 / static_cast<double>(w.rows + w.cols));
    double peak = 0.0;
    for (double x : w.a) {
      if (std::abs(x) > limit) return false;
      peak = std::max(peak, std::abs(x));
    }
    return peak > 0.25 * limit;  // actually spread out, not collapsed at zero
  };
  CHECK(s1.enc_w0.rows == 12);  // one row per (node slot, op) pair
  CHECK(s1.head_w.rows == 11);  // 2 * emb_dim + task_proj_dim
  CHECK(bound_ok(s1.enc_w0));
  CHECK(bound_ok(s1.enc_w1));
  CHECK(bound_ok(s1.task_w));
  CHECK(bound_ok(s1.head_w));
  CHECK(bound_ok(s1.out_w));
}

TEST_CASE("named tensors expose every parameter in a fixed order") {
  auto s = init_predictor(small_config(), 1);
  auto named = named_tensors(s);
  std::vector<std::string> names;
  for (auto& [n, span] : named) names.push_back(n);
  CHECK(names == std::vector<std::string>{"enc_w0", "enc_b0", "enc_w1", "enc_b1", "task_w",
                                          "task_b", "head_w", "head_b", "out_w", "out_b"});
  // spans alias the state
  named[0].second[0] = 42.0;
  CHECK(s.enc_w0.a[0] == 42.0);
}

TEST_CASE("pair forward yields a proper two-class distribution") {
  auto cfg = small_config();
  auto s = init_predictor(cfg, 3);
  auto a = make_arch({0, 1, 2, 1}, 3);
  auto b = make_arch({2, 2, 0, 1}, 3);
  auto task = make_task({0.3, -0.7, 1.1});

  auto p = forward_pair(s, a, b, task);
  CHECK(p.p_first > 0.0);
  CHECK(p.p_first < 1.0);
  CHECK(p.p_first + p.p_second == doctest::Approx(1.0).epsilon(1e-12));

  // loss collapses onto the winning class probability
  CHECK(pair_loss(s, a, b, task, 0) == doctest::Approx(-2.0 * std::log(p.p_first)).epsilon(1e-10));
  CHECK(pair_loss(s, a, b, task, 1) == doctest::Approx(-2.0 * std::log(p.p_second)).epsilon(1e-10));

  auto emb = encode_arch(s, a);
  CHECK(emb.size() == 4);
  CHECK(encode_arch(s, a) == emb);

  TaskEmbedding wrong = make_task({0.1, 0.2});
  CHECK_THROWS_AS(forward_pair(s, a, b, wrong), ShapeMismatch);
  CHECK_THROWS_AS(encode_arch(s, make_arch({0, 1, 2}, 3)), ShapeMismatch);  // node count
}

TEST_CASE("embeddings depend only on structure, not on vocabulary ids") {
  auto cfg = small_config();
  auto s = init_predictor(cfg, 7);
  auto a = make_arch({0, 1, 2, 1}, 3);

  // relabel ops by the permutation 0->2, 1->0, 2->1 and move the matching
  // per-slot rows of enc_w0 with it
  std::vector<int> perm{2, 0, 1};
  auto s2 = s;
  for (int slot = 0; slot < cfg.node_count; ++slot)
    for (int op = 0; op < cfg.op_vocab; ++op) {
      const double* src = s.enc_w0[static_cast<std::size_t>(slot * cfg.op_vocab + op)];
      double* dst = s2.enc_w0[static_cast<std::size_t>(slot * cfg.op_vocab + perm[op])];
      std::copy(src, src + s.enc_w0.cols, dst);
    }
  auto a2 = a;
  for (int& op : a2.node_ops) op = perm[op];

  CHECK(encode_arch(s2, a2) == encode_arch(s, a));
}

TEST_CASE("analytic gradients match central finite differences per tensor") {
  auto cfg = small_config();
  auto task = make_task({0.4, -0.2, 0.9});
  auto a = make_arch({0, 1, 2, 0}, 3);
  auto b = make_arch({2, 0, 1, 1}, 3);

  for (std::uint64_t seed : {11u, 12u, 13u}) {
    for (int label : {0, 1}) {
      auto s = init_predictor(cfg, seed);
      auto grads = pair_loss_gradients(s, a, b, task, label);
      auto gnamed = named_tensors(grads);
      auto snamed = named_tensors(s);

      for (std::size_t t = 0; t < snamed.size(); ++t) {
        double num = 0.0, da = 0.0, df = 0.0;
        auto span = snamed[t].second;
        auto gspan = gnamed[t].second;
        REQUIRE(span.size() == gspan.size());
        for (std::size_t c = 0; c < span.size(); ++c) {
          double w = span[c];
          double h = 1e-5 * std::max(1.0, std::abs(w));
          span[c] = w + h;
          double lp = pair_loss(s, a, b, task, label);
          span[c] = w - h;
          double lm = pair_loss(s, a, b, task, label);
          span[c] = w;
          double fd = (lp - lm) / (2.0 * h);
          double diff = fd - gspan[c];
          num += diff * diff;
          da += gspan[c] * gspan[c];
          df += fd * fd;
        }
        double denom = std::max({std::sqrt(da), std::sqrt(df), 1e-12});
        INFO("tensor " << snamed[t].first << " seed " << seed << " label " << label);
        CHECK(std::sqrt(num) / denom <= 1e-4);
      }
    }
  }
}

TEST_CASE("training learns a linear op preference and is reproducible") {
  auto cfg = small_config(3);
  std::vector<LabeledArch> data;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int z = 0; z < 2; ++z)
        data.push_back({make_arch({x, y, z}, 3), 4.0 * x + 2.0 * y + z});
  auto task = make_task({1.0, 0.0, -1.0});

  TrainConfig tc;
  tc.m = 8;
  tc.epochs = 200;
  tc.batch_size = 16;
  auto init = init_predictor(cfg, 5);
  auto r1 = train_source(init, data, task, tc, 21);
  auto r2 = train_source(init, data, task, tc, 21);
  CHECK(r1.state == r2.state);
  CHECK(r1.pair_count == 56);  // 8 * 7 ordered non-tied pairs
  CHECK(r1.epoch_loss.size() == 200);
  CHECK(r1.epoch_loss.back() < r1.epoch_loss.front());
  CHECK(ordered_pair_accuracy(r1.state, data, task) >= 0.85);

  TrainConfig wrong = tc;
  wrong.m = 7;
  CHECK_THROWS_AS(train_source(init, data, task, wrong, 21), Error);

  auto tied = data;
  for (auto& la : tied) la.score = 1.0;
  CHECK_THROWS_AS(train_source(init, tied, task, tc, 21), DegenerateLabels);
}

TEST_CASE("accuracy flips with the labels and contradictions match the forward pass") {
  auto cfg = small_config();
  auto s = init_predictor(cfg, 17);
  auto task = make_task({0.2, 0.8, -0.5});
  std::vector<LabeledArch> data;
  Rng rng(2);
  for (int i = 0; i < 7; ++i)
    data.push_back({make_arch({static_cast<int>(rng.below(3)), static_cast<int>(rng.below(3)),
                               static_cast<int>(rng.below(3)), static_cast<int>(rng.below(3))},
                              3),
                    static_cast<double>(i)});

  auto flipped = data;
  for (auto& la : flipped) la.score = -la.score;
  double acc = ordered_pair_accuracy(s, data, task);
  CHECK(acc + ordered_pair_accuracy(s, flipped, task) == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<ArchEncoding> archs;
  for (auto& la : data) archs.push_back(la.arch);
  double expected = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < archs.size(); ++i)
    for (std::size_t j = i + 1; j < archs.size(); ++j) {
      int cij = forward_pair(s, archs[i], archs[j], task).p_first > 0.5 ? 0 : 1;
      int cji = forward_pair(s, archs[j], archs[i], task).p_first > 0.5 ? 0 : 1;
      expected += cij == cji ? 1.0 : 0.0;
      pairs += 1.0;
    }
  CHECK(contradiction_rate(s, archs, task) == doctest::Approx(expected / pairs).epsilon(1e-12));
}

TEST_CASE("finetune snapshots the best validation epoch") {
  auto cfg = small_config(3);
  std::vector<LabeledArch> data;
  for (int x = 0; x < 3; ++x)
    for (int y = 0; y < 3; ++y)
      data.push_back({make_arch({x, y, (x + y) % 3}, 3), 3.0 * x + y});
  auto task = make_task({0.5, 0.5, 0.5});
  auto init = init_predictor(cfg, 29);

  TrainConfig tc;
  tc.b_f = 5;
  tc.b_v = 4;
  tc.epochs = 0;
  auto base = finetune_target(init, data, task, tc, 77);
  CHECK(base.state == init);
  CHECK(base.best_epoch == 0);
  CHECK(base.train_indices.size() == 5);
  CHECK(base.val_indices.size() == 4);
  std::vector<bool> seen(9, false);
  for (std::size_t i : base.train_indices) seen[i] = true;
  for (std::size_t i : base.val_indices) seen[i] = true;
  CHECK(std::count(seen.begin(), seen.end(), true) == 9);

  tc.epochs = 12;
  auto tuned = finetune_target(init, data, task, tc, 77);
  CHECK(tuned.train_indices == base.train_indices);  // split depends only on the seed
  CHECK(tuned.val_acc >= base.val_acc);
  CHECK(tuned.val_pairs == base.val_pairs);

  tc.b_f = 6;  // 6 + 4 != 9
  CHECK_THROWS_AS(finetune_target(init, data, task, tc, 77), Error);
}

TEST_CASE("linear sigmoid probe and its Fisher diagonal") {
  LinearSigmoidProbe probe({1.0, -1.0});
  CHECK(probe.param_dim() == 2);
  CHECK(probe.prob_positive({2.0, 1.0}) == doctest::Approx(sigmoid(1.0)).epsilon(1e-12));

  // gradient of log p(y|x) against finite differences in w
  for (int y : {0, 1}) {
    std::vector<double> x{0.7, -1.3};
    auto g = probe.grad_log_likelihood(x, y);
    for (std::size_t c = 0; c < 2; ++c) {
      double h = 1e-6;
      std::vector<double> wp{1.0, -1.0}, wm{1.0, -1.0};
      wp[c] += h;
      wm[c] -= h;
      auto lp = [&](const std::vector<double>& w) {
        LinearSigmoidProbe p(w);
        double prob = p.prob_positive(x);
        return std::log(y == 1 ? prob : 1.0 - prob);
      };
      CHECK(g[c] == doctest::Approx((lp(wp) - lp(wm)) / (2.0 * h)).epsilon(1e-6));
    }
  }

  // w = 0 makes p = 1/2 everywhere; the Fisher diagonal is x^2 / 4
  LinearSigmoidProbe flat({0.0});
  auto fim = diag_fim(flat, {{1.0}});
  CHECK(fim.source == TaskEmbedding::Source::DiagFim);
  REQUIRE(fim.vec.size() == 1);
  CHECK(fim.vec[0] == doctest::Approx(0.25).epsilon(1e-12));

  // general identity: mean over inputs of p(1-p) x_j^2
  Rng rng(3);
  std::vector<double> w{0.3, -0.8, 0.5};
  LinearSigmoidProbe gen(w);
  std::vector<std::vector<double>> inputs;
  for (int i = 0; i < 9; ++i) inputs.push_back({rng.normal(), rng.normal(), rng.normal()});
  auto f = diag_fim(gen, inputs);
  for (std::size_t j = 0; j < 3; ++j) {
    double expect = 0.0;
    for (const auto& x : inputs) {
      double p = gen.prob_positive(x);
      expect += p * (1.0 - p) * x[j] * x[j];
    }
    expect /= static_cast<double>(inputs.size());
    CHECK(f.vec[j] == doctest::Approx(expect).epsilon(1e-10));
  }
}

TEST_CASE("pair scorer reproduces the forward pass") {
  auto cfg = small_config(3);
  auto s = init_predictor(cfg, 41);
  auto task = make_task({-0.3, 0.6, 0.1});
  std::vector<ArchEncoding> archs;
  Rng rng(4);
  for (int i = 0; i < 6; ++i)
    archs.push_back(make_arch({static_cast<int>(rng.below(3)), static_cast<int>(rng.below(3)),
                               static_cast<int>(rng.below(3))},
                              3));

  PairScorer scorer(s, archs, task);
  CHECK(scorer.count() == 6);
  std::vector<double> wdiff(s.out_w.rows);
  for (std::size_t h = 0; h < s.out_w.rows; ++h) wdiff[h] = s.out_w[h][0] - s.out_w[h][1];
  double bdiff = s.out_b[0] - s.out_b[1];

  for (std::size_t i = 0; i < archs.size(); ++i)
    for (std::size_t j = 0; j < archs.size(); ++j) {
      if (i == j) continue;
      double direct = forward_pair(s, archs[i], archs[j], task).p_first;
      CHECK(scorer.p_first(i, j) == doctest::Approx(direct).epsilon(1e-10));
      auto q = scorer.query(i, j);
      CHECK(q.p_first == scorer.p_first(i, j));
      REQUIRE(q.penultimate.size() == static_cast<std::size_t>(cfg.head_hidden_dim));
      for (double v : q.penultimate) CHECK(v >= 0.0);  // relu output
      double z = bdiff;
      for (std::size_t h = 0; h < q.penultimate.size(); ++h) z += q.penultimate[h] * wdiff[h];
      CHECK(q.p_first == doctest::Approx(sigmoid(z)).epsilon(1e-10));
    }
}

TEST_CASE("relation graph keeps only agreements, in either job mode") {
  auto cfg = small_config();
  auto s = init_predictor(cfg, 53);
  auto task = make_task({0.9, -0.9, 0.4});
  std::vector<ArchEncoding> archs;
  Rng rng(6);
  for (int i = 0; i < 8; ++i)
    archs.push_back(make_arch({static_cast<int>(rng.below(3)), static_cast<int>(rng.below(3)),
                               static_cast<int>(rng.below(3)), static_cast<int>(rng.below(3))},
                              3));

  auto rg = build_relation_graph(s, archs, task);
  auto rg4 = build_relation_graph(s, archs, task, 4);
  CHECK(rg.graph == rg4.graph);
  CHECK(rg.edge_data == rg4.edge_data);

  std::size_t edges = 0;
  for (std::size_t i = 0; i < archs.size(); ++i)
    for (std::size_t j = i + 1; j < archs.size(); ++j) {
      int cij = forward_pair(s, archs[i], archs[j], task).p_first > 0.5 ? 0 : 1;
      int cji = forward_pair(s, archs[j], archs[i], task).p_first > 0.5 ? 0 : 1;
      bool fwd = rg.graph.has_edge(i, j), bwd = rg.graph.has_edge(j, i);
      CHECK_FALSE((fwd && bwd));
      if (cij == 0 && cji == 1) {
        CHECK(fwd);
        ++edges;
      } else if (cij == 1 && cji == 0) {
        CHECK(bwd);
        ++edges;
      } else {
        CHECK_FALSE(fwd);
        CHECK_FALSE(bwd);
      }
    }
  CHECK(rg.graph.edge_count() == edges);
  for (const auto& [key, ed] : rg.edge_data) {
    CHECK(rg.graph.has_edge(key.first, key.second));
    CHECK(ed.embedding.size() == static_cast<std::size_t>(cfg.head_hidden_dim));
    CHECK(ed.predicted_class == 0);
  }
  CHECK(rg.edge_data.size() == rg.graph.edge_count());

  CHECK_THROWS_AS(build_relation_graph(s, {archs[0]}, task), Error);
}

TEST_CASE("checkpoints round trip and reject tampering") {
  auto s = init_predictor(small_config(), 61);
  auto text = checkpoint_to_string(s);
  CHECK(checkpoint_from_string(text) == s);

  CHECK_THROWS_AS(checkpoint_from_string("not json at all"), Error);

  auto v2 = text;
  auto pos = v2.find("\"version\":1");
  REQUIRE(pos != std::string::npos);
  v2.replace(pos, 11, "\"version\":2");
  CHECK_THROWS_AS(checkpoint_from_string(v2), Error);

  std::string path = "predictor_roundtrip.json";
  save_checkpoint(s, path);
  CHECK(load_checkpoint(path) == s);
  std::remove(path.c_str());
}
