#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "archgraph/errors.hpp"
#include "archgraph/trust.hpp"

namespace archgraph {

// Minimal row-major matrix; operator[] yields a row pointer.
struct Mat {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}
  double* operator[](std::size_t r) { return a.data() + r * cols; }
  const double* operator[](std::size_t r) const { return a.data() + r * cols; }
  bool operator==(const Mat&) const = default;
};

/// One architecture: an operation id per node of a fixed cell DAG shared by
/// the whole search space.
struct ArchEncoding {
  std::vector<int> node_ops;
  std::vector<std::vector<std::uint8_t>> adjacency;
  int op_vocab = 0;

  bool operator==(const ArchEncoding&) const = default;
};

/// Ops in range, adjacency square/acyclic/self-loop-free. Throws on violation.
void validate_arch(const ArchEncoding& arch);

struct TaskEmbedding {
  enum class Source { ExternalFile, DiagFim, Zeros };
  std::vector<double> vec;
  Source source = Source::Zeros;

  bool operator==(const TaskEmbedding&) const = default;
};

struct PredictorConfig {
  int op_vocab = 4;
  int node_count = 6;
  int hidden_dim = 64;
  int emb_dim = 32;
  int task_dim = 16;
  int task_proj_dim = 16;
  int head_hidden_dim = 64;

  bool operator==(const PredictorConfig&) const = default;
};

/// All learned tensors. The search space shares one cell topology, so node
/// features are indicators over (node slot, op) pairs: slot i with op o
/// selects row i*op_vocab+o of enc_w0. The encoder runs two message-passing
/// rounds H' = relu(A_hat * H * W + b) with A_hat the row-normalized
/// (adjacency + identity), followed by a mean readout over nodes. The head
/// projects the raw task vector to task_proj_dim, concatenates
/// [emb_first, emb_second, task_proj], pushes that through one relu layer
/// (whose activation is the pair representation used for trust scoring) and
/// maps it to two softmax logits.
struct PredictorState {
  PredictorConfig config;
  std::uint64_t rng_seed = 0;
  Mat enc_w0;                  // (node_count*op_vocab) x hidden_dim
  std::vector<double> enc_b0;  // hidden_dim
  Mat enc_w1;                  // hidden_dim x emb_dim
  std::vector<double> enc_b1;  // emb_dim
  Mat task_w;                  // task_dim x task_proj_dim
  std::vector<double> task_b;  // task_proj_dim
  Mat head_w;                  // (2*emb_dim + task_proj_dim) x head_hidden_dim
  std::vector<double> head_b;  // head_hidden_dim
  Mat out_w;                   // head_hidden_dim x 2
  std::vector<double> out_b;   // 2

  bool operator==(const PredictorState&) const = default;
};

/// Glorot-uniform weights, zero biases; bitwise reproducible per seed.
PredictorState init_predictor(const PredictorConfig& cfg, std::uint64_t seed);

/// Every tensor by name, in a fixed order (used by the optimizer, the
/// checkpoint writer and the finite-difference tests).
std::vector<std::pair<std::string, std::span<double>>> named_tensors(PredictorState& s);
std::vector<std::pair<std::string, std::span<const double>>> named_tensors(const PredictorState& s);

/// Architecture embedding after mean readout (emb_dim values).
std::vector<double> encode_arch(const PredictorState& s, const ArchEncoding& arch);

struct PairProbabilities {
  double p_first = 0.0;
  double p_second = 0.0;
};

/// Softmax probabilities that the first/second architecture is better on the
/// task; they sum to one and both lie strictly inside (0, 1).
PairProbabilities forward_pair(const PredictorState& s, const ArchEncoding& first,
                               const ArchEncoding& second, const TaskEmbedding& task);

/// Sum of per-coordinate binary cross-entropies between the softmax output
/// and the one-hot target (label 0: first better, 1: second better).
double pair_loss(const PredictorState& s, const ArchEncoding& first, const ArchEncoding& second,
                 const TaskEmbedding& task, int label);

/// Analytic gradients of pair_loss, in a state-shaped container.
PredictorState pair_loss_gradients(const PredictorState& s, const ArchEncoding& first,
                                   const ArchEncoding& second, const TaskEmbedding& task, int label);

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int epochs = 100;
  int batch_size = 8;
  int m = 50;
  int b_f = 20;
  int b_v = 10;
};

/// Higher score means better; callers negate lower-is-better metrics.
struct LabeledArch {
  ArchEncoding arch;
  double score = 0.0;
};

struct TrainResult {
  PredictorState state;
  std::vector<double> epoch_loss;
  std::size_t pair_count = 0;
};

/// SGD with momentum over all ordered pairs of the m labeled architectures
/// (ties carry no label and are skipped; DegenerateLabels when nothing is
/// left). Pair order is reshuffled every epoch from the given seed.
TrainResult train_source(const PredictorState& init, const std::vector<LabeledArch>& archs,
                         const TaskEmbedding& task, const TrainConfig& cfg, std::uint64_t seed);

struct FinetuneResult {
  PredictorState state;
  double val_acc = 0.0;
  std::size_t train_pairs = 0;
  std::size_t val_pairs = 0;
  int best_epoch = 0;  // 0 means the incoming state won
  // positions into the input list after the seeded shuffle split
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> val_indices;
};

/// Shuffles the b_f + b_v labeled architectures with the seed, takes the
/// first b_f for training pairs and the last b_v for validation pairs, then
/// trains like train_source while snapshotting after every epoch. Returns
/// the snapshot with the highest validation accuracy (the incoming state
/// counts as the epoch-0 snapshot; earlier epochs win ties).
FinetuneResult finetune_target(const PredictorState& pretrained,
                               const std::vector<LabeledArch>& archs, const TaskEmbedding& task,
                               const TrainConfig& cfg, std::uint64_t seed);

/// Fraction of non-tied ordered pairs whose argmax class matches the label.
double ordered_pair_accuracy(const PredictorState& s, const std::vector<LabeledArch>& archs,
                             const TaskEmbedding& task);

/// Fraction of unordered pairs where querying both orders names the same
/// argument position as the winner, i.e. the two answers contradict.
double contradiction_rate(const PredictorState& s, const std::vector<ArchEncoding>& archs,
                          const TaskEmbedding& task);

/// Binary-outcome probability model exposing log-likelihood gradients.
class BinaryProbe {
 public:
  virtual ~BinaryProbe() = default;
  virtual std::size_t param_dim() const = 0;
  virtual double prob_positive(const std::vector<double>& x) const = 0;
  virtual std::vector<double> grad_log_likelihood(const std::vector<double>& x, int y) const = 0;
};

/// p(y=1|x) = sigmoid(w . x)
class LinearSigmoidProbe : public BinaryProbe {
 public:
  explicit LinearSigmoidProbe(std::vector<double> w) : w_(std::move(w)) {}
  std::size_t param_dim() const override { return w_.size(); }
  double prob_positive(const std::vector<double>& x) const override;
  std::vector<double> grad_log_likelihood(const std::vector<double>& x, int y) const override;

 private:
  std::vector<double> w_;
};

/// Diagonal of the empirical Fisher information, with the label expectation
/// taken exactly under the probe's own predictive distribution:
/// mean over inputs of sum_y p(y|x) * grad log p(y|x) squared elementwise.
TaskEmbedding diag_fim(const BinaryProbe& probe, const std::vector<std::vector<double>>& inputs);

/// Precomputed per-architecture encoder outputs and their head partial
/// products so that repeated pair queries cost O(head_hidden_dim) flops.
/// Keeps a pointer to the state, which must outlive the scorer.
/// Read-only over the state; safe to share across threads.
class PairScorer {
 public:
  PairScorer(const PredictorState& s, const std::vector<ArchEncoding>& archs,
             const TaskEmbedding& task);

  std::size_t count() const { return n_; }

  /// Probability that architecture i beats architecture j.
  double p_first(std::size_t i, std::size_t j) const;

  struct Query {
    double p_first = 0.0;
    std::vector<double> penultimate;
  };
  Query query(std::size_t i, std::size_t j) const;

 private:
  std::size_t n_ = 0;
  std::size_t hid_ = 0;
  const PredictorState* state_ = nullptr;
  std::vector<double> first_;   // n x head_hidden, first-slot head partials
  std::vector<double> second_;  // n x head_hidden, second-slot head partials
  std::vector<double> base_;    // head_hidden, head bias plus task partial
};

struct RelationGraph {
  DirectedGraph graph;
  EdgeDataMap edge_data;
};

/// Queries every unordered candidate pair in both orders; an edge i -> j is
/// created only when both orders agree that i is better. Disagreements leave
/// the pair incomparable. Each edge stores the pair representation of the
/// query in edge direction together with its predicted class.
RelationGraph build_relation_graph(const PredictorState& s,
                                   const std::vector<ArchEncoding>& candidates,
                                   const TaskEmbedding& task, unsigned jobs = 1);

/// Checkpoint files: {"version": 1, "config": {...}, "seed": ...,
/// "params": {name: nested arrays}}. Loading validates version and shapes.
void save_checkpoint(const PredictorState& s, const std::string& path);
PredictorState load_checkpoint(const std::string& path);
std::string checkpoint_to_string(const PredictorState& s);
PredictorState checkpoint_from_string(const std::string& text);

}  // namespace archgraph
