#include "archgraph/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "archgraph/graph.hpp"
#include "archgraph/parallel.hpp"
#include "archgraph/rng.hpp"

namespace archgraph {

namespace {

using nlohmann::json;

constexpr double kProbFloor = 1e-15;

double clamp_prob(double p) { return std::min(std::max(p, kProbFloor), 1.0 - kProbFloor); }

double sigmoid_clamped(double d) {
  double p = 1.0 / (1.0 + std::exp(-d));
  return clamp_prob(p);
}

// row-normalized (adjacency + identity)
Mat normalized_adjacency(const ArchEncoding& arch) {
  const std::size_t n = arch.node_ops.size();
  Mat ahat(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 1.0;
    for (std::size_t j = 0; j < n; ++j) degree += arch.adjacency[i][j] ? 1.0 : 0.0;
    double inv = 1.0 / degree;
    for (std::size_t j = 0; j < n; ++j)
      ahat[i][j] = (i == j ? inv : (arch.adjacency[i][j] ? inv : 0.0));
  }
  return ahat;
}

// out = x * w  (x: n x k, w: k x m)
void matmul(const Mat& x, const Mat& w, Mat& out) {
  out = Mat(x.rows, w.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* xi = x[i];
    double* oi = out[i];
    for (std::size_t k = 0; k < x.cols; ++k) {
      double v = xi[k];
      if (v == 0.0) continue;
      const double* wk = w[k];
      for (std::size_t j = 0; j < w.cols; ++j) oi[j] += v * wk[j];
    }
  }
}

struct ArchForward {
  Mat ahat;
  Mat gathered;  // rows of enc_w0 selected by op id
  Mat z1, h1;
  Mat t1;  // h1 * enc_w1
  Mat z2, h2;
  std::vector<double> emb;
};

void encoder_forward(const PredictorState& s, const ArchEncoding& arch, ArchForward& f) {
  const std::size_t n = arch.node_ops.size();
  const std::size_t hid = static_cast<std::size_t>(s.config.hidden_dim);
  const std::size_t emb = static_cast<std::size_t>(s.config.emb_dim);

  f.ahat = normalized_adjacency(arch);

  const std::size_t vocab = static_cast<std::size_t>(s.config.op_vocab);
  f.gathered = Mat(n, hid);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = s.enc_w0[i * vocab + static_cast<std::size_t>(arch.node_ops[i])];
    std::copy(row, row + hid, f.gathered[i]);
  }

  matmul(f.ahat, f.gathered, f.z1);
  f.h1 = Mat(n, hid);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < hid; ++j) {
      double z = f.z1[i][j] + s.enc_b0[j];
      f.z1[i][j] = z;
      f.h1[i][j] = z > 0.0 ? z : 0.0;
    }

  matmul(f.h1, s.enc_w1, f.t1);
  matmul(f.ahat, f.t1, f.z2);
  f.h2 = Mat(n, emb);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < emb; ++j) {
      double z = f.z2[i][j] + s.enc_b1[j];
      f.z2[i][j] = z;
      f.h2[i][j] = z > 0.0 ? z : 0.0;
    }

  f.emb.assign(emb, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < emb; ++j) f.emb[j] += f.h2[i][j];
  for (std::size_t j = 0; j < emb; ++j) f.emb[j] /= static_cast<double>(n);
}

// accumulates tensor gradients into g given dL/d(embedding)
void encoder_backward(const PredictorState& s, const ArchEncoding& arch, const ArchForward& f,
                      const std::vector<double>& demb, PredictorState& g) {
  const std::size_t n = arch.node_ops.size();
  const std::size_t hid = static_cast<std::size_t>(s.config.hidden_dim);
  const std::size_t emb = static_cast<std::size_t>(s.config.emb_dim);
  const double inv_n = 1.0 / static_cast<double>(n);

  // readout and second relu
  Mat dz2(n, emb);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < emb; ++j)
      dz2[i][j] = f.z2[i][j] > 0.0 ? demb[j] * inv_n : 0.0;

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < emb; ++j) g.enc_b1[j] += dz2[i][j];

  // z2 = ahat * t1 + b1  =>  dt1 = ahat^T * dz2
  Mat dt1(n, emb);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      double a = f.ahat[k][i];
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < emb; ++j) dt1[i][j] += a * dz2[k][j];
    }

  // t1 = h1 * enc_w1
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < hid; ++k) {
      double h = f.h1[i][k];
      if (h == 0.0) continue;
      for (std::size_t j = 0; j < emb; ++j) g.enc_w1[k][j] += h * dt1[i][j];
    }
  Mat dh1(n, hid);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < hid; ++k) {
      double acc = 0.0;
      const double* w = s.enc_w1[k];
      for (std::size_t j = 0; j < emb; ++j) acc += w[j] * dt1[i][j];
      dh1[i][k] = acc;
    }

  // first relu, then z1 = ahat * gathered + b0
  Mat dz1(n, hid);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < hid; ++j)
      dz1[i][j] = f.z1[i][j] > 0.0 ? dh1[i][j] : 0.0;

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < hid; ++j) g.enc_b0[j] += dz1[i][j];

  Mat dgather(n, hid);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      double a = f.ahat[k][i];
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < hid; ++j) dgather[i][j] += a * dz1[k][j];
    }
  const std::size_t vocab = static_cast<std::size_t>(s.config.op_vocab);
  for (std::size_t i = 0; i < n; ++i) {
    double* grow = g.enc_w0[i * vocab + static_cast<std::size_t>(arch.node_ops[i])];
    for (std::size_t j = 0; j < hid; ++j) grow[j] += dgather[i][j];
  }
}

struct HeadForward {
  std::vector<double> tproj;
  std::vector<double> concat;
  std::vector<double> zpre;  // hidden pre-activation
  std::vector<double> z;     // relu(zpre), the pair representation
  double logits[2] = {0.0, 0.0};
  double p0 = 0.0, p1 = 0.0;
};

void task_projection(const PredictorState& s, const TaskEmbedding& task, std::vector<double>& tproj) {
  const std::size_t tdim = static_cast<std::size_t>(s.config.task_dim);
  const std::size_t pdim = static_cast<std::size_t>(s.config.task_proj_dim);
  if (task.vec.size() != tdim) throw ShapeMismatch("task embedding dimension mismatch");
  tproj.assign(pdim, 0.0);
  for (std::size_t i = 0; i < tdim; ++i) {
    double v = task.vec[i];
    if (v == 0.0) continue;
    const double* w = s.task_w[i];
    for (std::size_t j = 0; j < pdim; ++j) tproj[j] += v * w[j];
  }
  for (std::size_t j = 0; j < pdim; ++j) tproj[j] += s.task_b[j];
}

void head_forward(const PredictorState& s, const std::vector<double>& ea,
                  const std::vector<double>& eb, const TaskEmbedding& task, HeadForward& hf) {
  const std::size_t emb = static_cast<std::size_t>(s.config.emb_dim);

  task_projection(s, task, hf.tproj);
  hf.concat.clear();
  hf.concat.reserve(2 * emb + hf.tproj.size());
  hf.concat.insert(hf.concat.end(), ea.begin(), ea.end());
  hf.concat.insert(hf.concat.end(), eb.begin(), eb.end());
  hf.concat.insert(hf.concat.end(), hf.tproj.begin(), hf.tproj.end());

  const std::size_t hid = static_cast<std::size_t>(s.config.head_hidden_dim);
  hf.zpre.assign(s.head_b.begin(), s.head_b.end());
  for (std::size_t i = 0; i < hf.concat.size(); ++i) {
    double v = hf.concat[i];
    if (v == 0.0) continue;
    const double* w = s.head_w[i];
    for (std::size_t j = 0; j < hid; ++j) hf.zpre[j] += v * w[j];
  }
  hf.z.resize(hid);
  for (std::size_t j = 0; j < hid; ++j) hf.z[j] = hf.zpre[j] > 0.0 ? hf.zpre[j] : 0.0;

  hf.logits[0] = s.out_b[0];
  hf.logits[1] = s.out_b[1];
  for (std::size_t j = 0; j < hid; ++j) {
    double v = hf.z[j];
    if (v == 0.0) continue;
    hf.logits[0] += v * s.out_w[j][0];
    hf.logits[1] += v * s.out_w[j][1];
  }
  hf.p0 = sigmoid_clamped(hf.logits[0] - hf.logits[1]);
  hf.p1 = 1.0 - hf.p0;
}

// accumulates head/task gradients into g and embedding gradients into dea/deb
void head_backward(const PredictorState& s, const TaskEmbedding& task, const HeadForward& hf,
                   const double dlogits[2], PredictorState& g, std::vector<double>& dea,
                   std::vector<double>& deb) {
  const std::size_t emb = static_cast<std::size_t>(s.config.emb_dim);
  const std::size_t pdim = static_cast<std::size_t>(s.config.task_proj_dim);
  const std::size_t hid = static_cast<std::size_t>(s.config.head_hidden_dim);

  std::vector<double> dzpre(hid, 0.0);
  for (std::size_t j = 0; j < hid; ++j) {
    g.out_w[j][0] += hf.z[j] * dlogits[0];
    g.out_w[j][1] += hf.z[j] * dlogits[1];
    if (hf.zpre[j] > 0.0)
      dzpre[j] = s.out_w[j][0] * dlogits[0] + s.out_w[j][1] * dlogits[1];
  }
  g.out_b[0] += dlogits[0];
  g.out_b[1] += dlogits[1];

  std::vector<double> dconcat(hf.concat.size(), 0.0);
  for (std::size_t i = 0; i < hf.concat.size(); ++i) {
    double v = hf.concat[i];
    const double* w = s.head_w[i];
    double* gw = g.head_w[i];
    double acc = 0.0;
    for (std::size_t j = 0; j < hid; ++j) {
      gw[j] += v * dzpre[j];
      acc += w[j] * dzpre[j];
    }
    dconcat[i] = acc;
  }
  for (std::size_t j = 0; j < hid; ++j) g.head_b[j] += dzpre[j];

  for (std::size_t j = 0; j < emb; ++j) {
    dea[j] += dconcat[j];
    deb[j] += dconcat[emb + j];
  }
  const double* dtp = dconcat.data() + 2 * emb;
  for (std::size_t i = 0; i < task.vec.size(); ++i) {
    double v = task.vec[i];
    if (v == 0.0) continue;
    double* gw = g.task_w[i];
    for (std::size_t j = 0; j < pdim; ++j) gw[j] += v * dtp[j];
  }
  for (std::size_t j = 0; j < pdim; ++j) g.task_b[j] += dtp[j];
}

PredictorState zeros_like(const PredictorState& s) {
  PredictorState z = s;
  auto tensors = named_tensors(z);
  for (auto& [name, span] : tensors) std::fill(span.begin(), span.end(), 0.0);
  return z;
}

void check_config_dims(const PredictorConfig& c) {
  if (c.op_vocab < 1 || c.node_count < 1 || c.hidden_dim < 1 || c.emb_dim < 1 ||
      c.task_dim < 1 || c.task_proj_dim < 1 || c.head_hidden_dim < 1)
    throw ShapeMismatch("configuration dimensions must be positive");
}

void check_state_shapes(const PredictorState& s) {
  const auto& c = s.config;
  check_config_dims(c);
  std::size_t concat = 2 * static_cast<std::size_t>(c.emb_dim) + c.task_proj_dim;
  auto expect = [](bool ok) {
    if (!ok) throw ShapeMismatch("parameter tensor shape disagrees with the configuration");
  };
  expect(s.enc_w0.rows == static_cast<std::size_t>(c.node_count) * c.op_vocab &&
         s.enc_w0.cols == static_cast<std::size_t>(c.hidden_dim));
  expect(s.enc_b0.size() == static_cast<std::size_t>(c.hidden_dim));
  expect(s.enc_w1.rows == static_cast<std::size_t>(c.hidden_dim) &&
         s.enc_w1.cols == static_cast<std::size_t>(c.emb_dim));
  expect(s.enc_b1.size() == static_cast<std::size_t>(c.emb_dim));
  expect(s.task_w.rows == static_cast<std::size_t>(c.task_dim) &&
         s.task_w.cols == static_cast<std::size_t>(c.task_proj_dim));
  expect(s.task_b.size() == static_cast<std::size_t>(c.task_proj_dim));
  expect(s.head_w.rows == concat && s.head_w.cols == static_cast<std::size_t>(c.head_hidden_dim));
  expect(s.head_b.size() == static_cast<std::size_t>(c.head_hidden_dim));
  expect(s.out_w.rows == static_cast<std::size_t>(c.head_hidden_dim) && s.out_w.cols == 2);
  expect(s.out_b.size() == 2);
}

void check_arch(const PredictorState& s, const ArchEncoding& arch) {
  validate_arch(arch);
  if (arch.op_vocab != s.config.op_vocab)
    throw ShapeMismatch("architecture op vocabulary differs from the predictor's");
  if (arch.node_ops.size() != static_cast<std::size_t>(s.config.node_count))
    throw ShapeMismatch("architecture node count differs from the predictor's");
}

struct TrainPair {
  int a, b;
  int label;  // 0: first better
};

std::vector<TrainPair> build_pairs(const std::vector<LabeledArch>& archs) {
  std::vector<TrainPair> pairs;
  const int m = static_cast<int>(archs.size());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (i == j || archs[i].score == archs[j].score) continue;
      pairs.push_back({i, j, archs[i].score > archs[j].score ? 0 : 1});
    }
  if (pairs.empty()) throw DegenerateLabels("all labels compare equal; no ordered pair has a winner");
  return pairs;
}

struct SgdBuffers {
  PredictorState grads;
  PredictorState velocity;
};

void sgd_step(PredictorState& s, SgdBuffers& buf, const TrainConfig& cfg, double inv_batch) {
  auto params = named_tensors(s);
  auto grads = named_tensors(buf.grads);
  auto vel = named_tensors(buf.velocity);
  for (std::size_t t = 0; t < params.size(); ++t) {
    bool decay = params[t].first.find("_w") != std::string::npos;  // weight matrices only, not biases
    auto p = params[t].second;
    auto g = grads[t].second;
    auto v = vel[t].second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      double grad = g[i] * inv_batch + (decay ? cfg.weight_decay * p[i] : 0.0);
      v[i] = cfg.momentum * v[i] - cfg.learning_rate * grad;
      p[i] += v[i];
    }
  }
}

// shared trainer; after_epoch may snapshot (1-based epoch index)
std::vector<double> run_training(PredictorState& s, const std::vector<LabeledArch>& archs,
                                 const TaskEmbedding& task, const TrainConfig& cfg,
                                 const std::vector<TrainPair>& all_pairs, std::uint64_t seed,
                                 int epochs,
                                 const std::function<void(int, const PredictorState&)>& after_epoch) {
  const std::size_t m = archs.size();
  Rng rng(seed);
  std::vector<TrainPair> pairs = all_pairs;
  SgdBuffers buf{zeros_like(s), zeros_like(s)};
  std::vector<ArchForward> cache(m);
  std::vector<std::vector<double>> demb(m);
  std::vector<char> used(m, 0);
  std::vector<double> epoch_loss;
  const std::size_t batch = static_cast<std::size_t>(std::max(1, cfg.batch_size));
  const std::size_t emb = static_cast<std::size_t>(s.config.emb_dim);

  for (int epoch = 1; epoch <= epochs; ++epoch) {
    rng.shuffle(pairs);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < pairs.size(); start += batch) {
      std::size_t stop = std::min(start + batch, pairs.size());

      std::fill(used.begin(), used.end(), 0);
      for (std::size_t p = start; p < stop; ++p) used[pairs[p].a] = used[pairs[p].b] = 1;
      for (std::size_t i = 0; i < m; ++i)
        if (used[i]) {
          encoder_forward(s, archs[i].arch, cache[i]);
          demb[i].assign(emb, 0.0);
        }

      auto gt = named_tensors(buf.grads);
      for (auto& [name, span] : gt) std::fill(span.begin(), span.end(), 0.0);

      HeadForward hf;
      for (std::size_t p = start; p < stop; ++p) {
        const TrainPair& pr = pairs[p];
        head_forward(s, cache[pr.a].emb, cache[pr.b].emb, task, hf);
        double py = pr.label == 0 ? hf.p0 : hf.p1;
        // both binary cross-entropy terms collapse onto the winning class
        // because the two probabilities sum to one
        loss_sum += -2.0 * std::log(py);
        double dlogits[2] = {2.0 * (hf.p0 - (pr.label == 0 ? 1.0 : 0.0)),
                             2.0 * (hf.p1 - (pr.label == 1 ? 1.0 : 0.0))};
        head_backward(s, task, hf, dlogits, buf.grads, demb[pr.a], demb[pr.b]);
      }
      for (std::size_t i = 0; i < m; ++i)
        if (used[i]) encoder_backward(s, archs[i].arch, cache[i], demb[i], buf.grads);

      sgd_step(s, buf, cfg, 1.0 / static_cast<double>(stop - start));
    }
    epoch_loss.push_back(loss_sum / static_cast<double>(pairs.size()));
    if (after_epoch) after_epoch(epoch, s);
  }
  return epoch_loss;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows; ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m[i][j]);
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const json& j, std::size_t rows, std::size_t cols) {
  if (!j.is_array() || j.size() != rows) throw ShapeMismatch("checkpoint tensor row count");
  Mat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const json& row = j[i];
    if (!row.is_array() || row.size() != cols) throw ShapeMismatch("checkpoint tensor column count");
    for (std::size_t k = 0; k < cols; ++k) m[i][k] = row[k].get<double>();
  }
  return m;
}

std::vector<double> vec_from_json(const json& j, std::size_t n) {
  if (!j.is_array() || j.size() != n) throw ShapeMismatch("checkpoint vector length");
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

void validate_arch(const ArchEncoding& arch) {
  const std::size_t n = arch.node_ops.size();
  if (n == 0) throw Error("architecture needs at least one node");
  if (arch.op_vocab < 1) throw Error("op vocabulary must be positive");
  for (int op : arch.node_ops)
    if (op < 0 || op >= arch.op_vocab) throw Error("node op id out of vocabulary range");
  if (arch.adjacency.size() != n) throw DimensionMismatch("adjacency row count differs from node count");
  DirectedGraph g(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (arch.adjacency[i].size() != n)
      throw DimensionMismatch("adjacency must be square");
    for (std::size_t j = 0; j < n; ++j)
      if (arch.adjacency[i][j]) g.add_edge(i, j);  // rejects self-loops
  }
  if (!is_acyclic(g)) throw CyclicInput("architecture cell must be acyclic");
}

PredictorState init_predictor(const PredictorConfig& cfg, std::uint64_t seed) {
  check_config_dims(cfg);
  PredictorState s;
  s.config = cfg;
  s.rng_seed = seed;
  const std::size_t concat = 2 * static_cast<std::size_t>(cfg.emb_dim) + cfg.task_proj_dim;
  s.enc_w0 = Mat(static_cast<std::size_t>(cfg.node_count) * cfg.op_vocab, cfg.hidden_dim);
  s.enc_b0.assign(cfg.hidden_dim, 0.0);
  s.enc_w1 = Mat(cfg.hidden_dim, cfg.emb_dim);
  s.enc_b1.assign(cfg.emb_dim, 0.0);
  s.task_w = Mat(cfg.task_dim, cfg.task_proj_dim);
  s.task_b.assign(cfg.task_proj_dim, 0.0);
  s.head_w = Mat(concat, cfg.head_hidden_dim);
  s.head_b.assign(cfg.head_hidden_dim, 0.0);
  s.out_w = Mat(cfg.head_hidden_dim, 2);
  s.out_b.assign(2, 0.0);

  Rng rng(seed);
  for (Mat* m : {&s.enc_w0, &s.enc_w1, &s.task_w, &s.head_w, &s.out_w}) {
    double limit = std::sqrt(6.0 / static_cast<double>(m->rows + m->cols));
    for (double& v : m->a) v = rng.uniform(-limit, limit);
  }
  return s;
}

std::vector<std::pair<std::string, std::span<double>>> named_tensors(PredictorState& s) {
  return {{"enc_w0", {s.enc_w0.a}}, {"enc_b0", {s.enc_b0}},   {"enc_w1", {s.enc_w1.a}},
          {"enc_b1", {s.enc_b1}},   {"task_w", {s.task_w.a}}, {"task_b", {s.task_b}},
          {"head_w", {s.head_w.a}}, {"head_b", {s.head_b}},   {"out_w", {s.out_w.a}},
          {"out_b", {s.out_b}}};
}

std::vector<std::pair<std::string, std::span<const double>>> named_tensors(const PredictorState& s) {
  return {{"enc_w0", {s.enc_w0.a}}, {"enc_b0", {s.enc_b0}},   {"enc_w1", {s.enc_w1.a}},
          {"enc_b1", {s.enc_b1}},   {"task_w", {s.task_w.a}}, {"task_b", {s.task_b}},
          {"head_w", {s.head_w.a}}, {"head_b", {s.head_b}},   {"out_w", {s.out_w.a}},
          {"out_b", {s.out_b}}};
}

std::vector<double> encode_arch(const PredictorState& s, const ArchEncoding& arch) {
  check_state_shapes(s);
  check_arch(s, arch);
  ArchForward f;
  encoder_forward(s, arch, f);
  return f.emb;
}

PairProbabilities forward_pair(const PredictorState& s, const ArchEncoding& first,
                               const ArchEncoding& second, const TaskEmbedding& task) {
  check_state_shapes(s);
  check_arch(s, first);
  check_arch(s, second);
  ArchForward fa, fb;
  encoder_forward(s, first, fa);
  encoder_forward(s, second, fb);
  HeadForward hf;
  head_forward(s, fa.emb, fb.emb, task, hf);
  return {hf.p0, hf.p1};
}

double pair_loss(const PredictorState& s, const ArchEncoding& first, const ArchEncoding& second,
                 const TaskEmbedding& task, int label) {
  if (label != 0 && label != 1) throw Error("label must be 0 or 1");
  PairProbabilities p = forward_pair(s, first, second, task);
  return -2.0 * std::log(label == 0 ? p.p_first : p.p_second);
}

PredictorState pair_loss_gradients(const PredictorState& s, const ArchEncoding& first,
                                   const ArchEncoding& second, const TaskEmbedding& task,
                                   int label) {
  if (label != 0 && label != 1) throw Error("label must be 0 or 1");
  check_state_shapes(s);
  check_arch(s, first);
  check_arch(s, second);
  PredictorState g = zeros_like(s);
  ArchForward fa, fb;
  encoder_forward(s, first, fa);
  encoder_forward(s, second, fb);
  HeadForward hf;
  head_forward(s, fa.emb, fb.emb, task, hf);
  double dlogits[2] = {2.0 * (hf.p0 - (label == 0 ? 1.0 : 0.0)),
                       2.0 * (hf.p1 - (label == 1 ? 1.0 : 0.0))};
  std::vector<double> dea(s.config.emb_dim, 0.0), deb(s.config.emb_dim, 0.0);
  head_backward(s, task, hf, dlogits, g, dea, deb);
  encoder_backward(s, first, fa, dea, g);
  encoder_backward(s, second, fb, deb, g);
  return g;
}

TrainResult train_source(const PredictorState& init, const std::vector<LabeledArch>& archs,
                         const TaskEmbedding& task, const TrainConfig& cfg, std::uint64_t seed) {
  check_state_shapes(init);
  if (static_cast<int>(archs.size()) != cfg.m)
    throw Error("train_source expects exactly cfg.m labeled architectures");
  if (cfg.m < 2) throw Error("training needs at least two architectures");
  for (const auto& la : archs) check_arch(init, la.arch);

  std::vector<TrainPair> pairs = build_pairs(archs);
  TrainResult res;
  res.state = init;
  res.pair_count = pairs.size();
  res.epoch_loss = run_training(res.state, archs, task, cfg, pairs, seed, cfg.epochs, nullptr);
  return res;
}

FinetuneResult finetune_target(const PredictorState& pretrained,
                               const std::vector<LabeledArch>& archs, const TaskEmbedding& task,
                               const TrainConfig& cfg, std::uint64_t seed) {
  check_state_shapes(pretrained);
  if (cfg.b_f < 2 || cfg.b_v < 2) throw Error("finetuning needs b_f >= 2 and b_v >= 2");
  if (static_cast<int>(archs.size()) != cfg.b_f + cfg.b_v)
    throw Error("finetune_target expects exactly b_f + b_v labeled architectures");
  for (const auto& la : archs) check_arch(pretrained, la.arch);

  std::vector<std::size_t> perm(archs.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng split_rng(mix_seed(seed, 0x51e17ULL));
  split_rng.shuffle(perm);

  std::vector<LabeledArch> train_archs, val_archs;
  FinetuneResult res;
  for (int i = 0; i < cfg.b_f; ++i) {
    train_archs.push_back(archs[perm[i]]);
    res.train_indices.push_back(perm[i]);
  }
  for (std::size_t i = cfg.b_f; i < perm.size(); ++i) {
    val_archs.push_back(archs[perm[i]]);
    res.val_indices.push_back(perm[i]);
  }

  std::vector<TrainPair> train_pairs = build_pairs(train_archs);

  res.train_pairs = train_pairs.size();
  res.state = pretrained;
  res.best_epoch = 0;
  // count usable validation pairs once; accuracy evaluation skips ties the same way
  std::size_t vp = 0;
  for (std::size_t i = 0; i < val_archs.size(); ++i)
    for (std::size_t j = 0; j < val_archs.size(); ++j)
      if (i != j && val_archs[i].score != val_archs[j].score) ++vp;
  res.val_pairs = vp;
  if (vp == 0) throw DegenerateLabels("validation labels all compare equal");

  res.val_acc = ordered_pair_accuracy(pretrained, val_archs, task);

  PredictorState working = pretrained;
  auto snapshot = [&](int epoch, const PredictorState& st) {
    double acc = ordered_pair_accuracy(st, val_archs, task);
    if (acc > res.val_acc) {
      res.val_acc = acc;
      res.state = st;
      res.best_epoch = epoch;
    }
  };
  run_training(working, train_archs, task, cfg, train_pairs, mix_seed(seed, 0xf17eULL), cfg.epochs,
               snapshot);
  return res;
}

double ordered_pair_accuracy(const PredictorState& s, const std::vector<LabeledArch>& archs,
                             const TaskEmbedding& task) {
  std::vector<ArchEncoding> encs;
  encs.reserve(archs.size());
  for (const auto& la : archs) encs.push_back(la.arch);
  PairScorer scorer(s, encs, task);
  std::size_t total = 0, correct = 0;
  for (std::size_t i = 0; i < archs.size(); ++i)
    for (std::size_t j = 0; j < archs.size(); ++j) {
      if (i == j || archs[i].score == archs[j].score) continue;
      int label = archs[i].score > archs[j].score ? 0 : 1;
      int pred = scorer.p_first(i, j) > 0.5 ? 0 : 1;
      ++total;
      if (pred == label) ++correct;
    }
  if (total == 0) throw DegenerateLabels("no ordered pair has a winner");
  return static_cast<double>(correct) / static_cast<double>(total);
}

double contradiction_rate(const PredictorState& s, const std::vector<ArchEncoding>& archs,
                          const TaskEmbedding& task) {
  if (archs.size() < 2) throw Error("need at least two architectures");
  PairScorer scorer(s, archs, task);
  std::size_t total = 0, contra = 0;
  for (std::size_t i = 0; i < archs.size(); ++i)
    for (std::size_t j = i + 1; j < archs.size(); ++j) {
      int cij = scorer.p_first(i, j) > 0.5 ? 0 : 1;
      int cji = scorer.p_first(j, i) > 0.5 ? 0 : 1;
      ++total;
      if (cij == cji) ++contra;
    }
  return static_cast<double>(contra) / static_cast<double>(total);
}

double LinearSigmoidProbe::prob_positive(const std::vector<double>& x) const {
  if (x.size() != w_.size()) throw DimensionMismatch("probe input dimension mismatch");
  double d = std::inner_product(w_.begin(), w_.end(), x.begin(), 0.0);
  return 1.0 / (1.0 + std::exp(-d));
}

std::vector<double> LinearSigmoidProbe::grad_log_likelihood(const std::vector<double>& x,
                                                            int y) const {
  double p = prob_positive(x);
  std::vector<double> g(x.size());
  double scale = static_cast<double>(y) - p;
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = scale * x[i];
  return g;
}

TaskEmbedding diag_fim(const BinaryProbe& probe, const std::vector<std::vector<double>>& inputs) {
  if (inputs.empty()) throw Error("diag_fim needs at least one input");
  TaskEmbedding t;
  t.source = TaskEmbedding::Source::DiagFim;
  t.vec.assign(probe.param_dim(), 0.0);
  for (const auto& x : inputs) {
    double p = probe.prob_positive(x);
    std::vector<double> g1 = probe.grad_log_likelihood(x, 1);
    std::vector<double> g0 = probe.grad_log_likelihood(x, 0);
    if (g1.size() != t.vec.size() || g0.size() != t.vec.size())
      throw DimensionMismatch("probe gradient dimension mismatch");
    for (std::size_t i = 0; i < t.vec.size(); ++i)
      t.vec[i] += p * g1[i] * g1[i] + (1.0 - p) * g0[i] * g0[i];
  }
  for (double& v : t.vec) v /= static_cast<double>(inputs.size());
  return t;
}

// The head is linear up to the relu, so its pre-activation splits into a
// per-query sum of three precomputed pieces: a first-slot partial, a
// second-slot partial (both per architecture), and a bias-plus-task partial.
PairScorer::PairScorer(const PredictorState& s, const std::vector<ArchEncoding>& archs,
                       const TaskEmbedding& task)
    : state_(&s) {
  check_state_shapes(s);
  n_ = archs.size();
  hid_ = static_cast<std::size_t>(s.config.head_hidden_dim);
  const std::size_t emb = static_cast<std::size_t>(s.config.emb_dim);
  const std::size_t pdim = static_cast<std::size_t>(s.config.task_proj_dim);

  std::vector<double> tproj;
  task_projection(s, task, tproj);
  base_.assign(s.head_b.begin(), s.head_b.end());
  for (std::size_t i = 0; i < pdim; ++i) {
    double v = tproj[i];
    if (v == 0.0) continue;
    const double* w = s.head_w[2 * emb + i];
    for (std::size_t j = 0; j < hid_; ++j) base_[j] += v * w[j];
  }

  first_.assign(n_ * hid_, 0.0);
  second_.assign(n_ * hid_, 0.0);
  ArchForward f;
  for (std::size_t a = 0; a < n_; ++a) {
    check_arch(s, archs[a]);
    encoder_forward(s, archs[a], f);
    double* fa = first_.data() + a * hid_;
    double* sa = second_.data() + a * hid_;
    for (std::size_t d = 0; d < emb; ++d) {
      double v = f.emb[d];
      if (v == 0.0) continue;
      const double* wf = s.head_w[d];
      const double* ws = s.head_w[emb + d];
      for (std::size_t j = 0; j < hid_; ++j) {
        fa[j] += v * wf[j];
        sa[j] += v * ws[j];
      }
    }
  }
}

double PairScorer::p_first(std::size_t i, std::size_t j) const {
  const double* fi = first_.data() + i * hid_;
  const double* sj = second_.data() + j * hid_;
  double l0 = state_->out_b[0], l1 = state_->out_b[1];
  for (std::size_t h = 0; h < hid_; ++h) {
    double z = base_[h] + fi[h] + sj[h];
    if (z <= 0.0) continue;
    l0 += z * state_->out_w[h][0];
    l1 += z * state_->out_w[h][1];
  }
  return sigmoid_clamped(l0 - l1);
}

PairScorer::Query PairScorer::query(std::size_t i, std::size_t j) const {
  Query q;
  const double* fi = first_.data() + i * hid_;
  const double* sj = second_.data() + j * hid_;
  q.penultimate.resize(hid_);
  double l0 = state_->out_b[0], l1 = state_->out_b[1];
  for (std::size_t h = 0; h < hid_; ++h) {
    double z = base_[h] + fi[h] + sj[h];
    z = z > 0.0 ? z : 0.0;
    q.penultimate[h] = z;
    l0 += z * state_->out_w[h][0];
    l1 += z * state_->out_w[h][1];
  }
  q.p_first = sigmoid_clamped(l0 - l1);
  return q;
}

RelationGraph build_relation_graph(const PredictorState& s,
                                   const std::vector<ArchEncoding>& candidates,
                                   const TaskEmbedding& task, unsigned jobs) {
  const std::size_t n = candidates.size();
  if (n < 2) throw Error("relation graph needs at least two candidates");
  PairScorer scorer(s, candidates, task);

  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

  // -1 incomparable, otherwise the winning candidate's index position
  std::vector<std::int8_t> outcome(pairs.size());
  parallel_for(pairs.size(), jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      auto [i, j] = pairs[p];
      int cij = scorer.p_first(i, j) > 0.5 ? 0 : 1;
      int cji = scorer.p_first(j, i) > 0.5 ? 0 : 1;
      if (cij == 0 && cji == 1)
        outcome[p] = 0;  // i wins both orders
      else if (cij == 1 && cji == 0)
        outcome[p] = 1;  // j wins both orders
      else
        outcome[p] = -1;
    }
  });

  RelationGraph rg{DirectedGraph(n), {}};
  std::vector<std::size_t> edge_pair;  // pair index per created edge
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    if (outcome[p] < 0) continue;
    auto [i, j] = pairs[p];
    if (outcome[p] == 0)
      rg.graph.add_edge(i, j);
    else
      rg.graph.add_edge(j, i);
    edge_pair.push_back(p);
  }

  std::vector<EdgeData> datas(edge_pair.size());
  parallel_for(edge_pair.size(), jobs, [&](std::size_t begin, std::size_t end) {
    for (std::size_t e = begin; e < end; ++e) {
      auto [i, j] = pairs[edge_pair[e]];
      std::size_t u = outcome[edge_pair[e]] == 0 ? i : j;
      std::size_t v = outcome[edge_pair[e]] == 0 ? j : i;
      auto q = scorer.query(u, v);
      datas[e].embedding = std::move(q.penultimate);
      datas[e].predicted_class = 0;  // the query in edge direction said "first better"
    }
  });
  for (std::size_t e = 0; e < edge_pair.size(); ++e) {
    auto [i, j] = pairs[edge_pair[e]];
    std::size_t u = outcome[edge_pair[e]] == 0 ? i : j;
    std::size_t v = outcome[edge_pair[e]] == 0 ? j : i;
    rg.edge_data.emplace(std::make_pair(u, v), std::move(datas[e]));
  }
  return rg;
}

std::string checkpoint_to_string(const PredictorState& s) {
  check_state_shapes(s);
  json j;
  j["version"] = 1;
  j["config"] = {{"op_vocab", s.config.op_vocab},
                 {"node_count", s.config.node_count},
                 {"hidden_dim", s.config.hidden_dim},
                 {"emb_dim", s.config.emb_dim},
                 {"task_dim", s.config.task_dim},
                 {"task_proj_dim", s.config.task_proj_dim},
                 {"head_hidden_dim", s.config.head_hidden_dim}};
  j["seed"] = s.rng_seed;
  json params;
  params["enc_w0"] = mat_to_json(s.enc_w0);
  params["enc_b0"] = s.enc_b0;
  params["enc_w1"] = mat_to_json(s.enc_w1);
  params["enc_b1"] = s.enc_b1;
  params["task_w"] = mat_to_json(s.task_w);
  params["task_b"] = s.task_b;
  params["head_w"] = mat_to_json(s.head_w);
  params["head_b"] = s.head_b;
  params["out_w"] = mat_to_json(s.out_w);
  params["out_b"] = s.out_b;
  j["params"] = std::move(params);
  return j.dump();
}

PredictorState checkpoint_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("invalid checkpoint JSON: ") + e.what());
  }
  if (!j.contains("version")) throw Error("checkpoint is missing the version field");
  if (j["version"].get<int>() != 1) throw Error("unsupported checkpoint version");
  try {
    const json& c = j.at("config");
    PredictorConfig cfg;
    cfg.op_vocab = c.at("op_vocab").get<int>();
    cfg.node_count = c.at("node_count").get<int>();
    cfg.hidden_dim = c.at("hidden_dim").get<int>();
    cfg.emb_dim = c.at("emb_dim").get<int>();
    cfg.task_dim = c.at("task_dim").get<int>();
    cfg.task_proj_dim = c.at("task_proj_dim").get<int>();
    cfg.head_hidden_dim = c.at("head_hidden_dim").get<int>();

    PredictorState s = init_predictor(cfg, j.at("seed").get<std::uint64_t>());
    const json& p = j.at("params");
    const std::size_t concat = 2 * static_cast<std::size_t>(cfg.emb_dim) + cfg.task_proj_dim;
    s.enc_w0 = mat_from_json(p.at("enc_w0"),
                             static_cast<std::size_t>(cfg.node_count) * cfg.op_vocab,
                             cfg.hidden_dim);
    s.enc_b0 = vec_from_json(p.at("enc_b0"), cfg.hidden_dim);
    s.enc_w1 = mat_from_json(p.at("enc_w1"), cfg.hidden_dim, cfg.emb_dim);
    s.enc_b1 = vec_from_json(p.at("enc_b1"), cfg.emb_dim);
    s.task_w = mat_from_json(p.at("task_w"), cfg.task_dim, cfg.task_proj_dim);
    s.task_b = vec_from_json(p.at("task_b"), cfg.task_proj_dim);
    s.head_w = mat_from_json(p.at("head_w"), concat, cfg.head_hidden_dim);
    s.head_b = vec_from_json(p.at("head_b"), cfg.head_hidden_dim);
    s.out_w = mat_from_json(p.at("out_w"), cfg.head_hidden_dim, 2);
    s.out_b = vec_from_json(p.at("out_b"), 2);
    return s;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const PredictorState& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path);
  out << checkpoint_to_string(s) << '\n';
}

PredictorState load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_string(ss.str());
}

}  // namespace archgraph
