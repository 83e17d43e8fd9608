#pragma once

#include <vector>

#include "tglrn/layers.hpp"
#include "tglrn/roadnet.hpp"

// Dynamic graph construction: recurrent node embeddings run backwards over
// the input window, produce per-step edge weights, and are pruned to each
// node's selected hop neighbourhood.
namespace tglrn::dyngraph {

enum class Mode { kTrain, kEval };

// How the per-node hop choice passes gradients in train mode. kRelaxed uses
// the soft Gumbel-softmax mask in the forward pass as well; it exists so the
// whole path can be checked against finite differences.
enum class HopEstimator { kStraightThrough, kRelaxed };

struct DynGraphConfig {
  int nodes = 0;
  int features = 1;
  int window = 12;        // T'
  int embed_dim = 16;     // d
  int hop_embed_dim = 16; // m
  int proj_dim = 16;      // width of the projected readings fed to the GRU cells
  int levels = 5;         // L
  double alpha = 1.0;
  double tau = 1.0;
  double gamma = 0.3;     // edge keep probability while training
};

inline constexpr double kEdgeMeanEps = 1e-6;

// E(t-1) = GRU(E(t), X(t-1)):
//   z = sigmoid(f_z([E ; P X])), r = sigmoid(f_r([E ; P X])),
//   h = tanh(g([r * E ; P X])), E' = (1 - z) * h + z * E.
struct GruCell {
  Linear input_proj;
  Linear update;
  Linear reset;
  Linear candidate;
  int dim = 0;

  static GruCell create(ParameterStore& store, const std::string& name, int dim, int features, int proj_dim,
                        Rng& rng);
  Var step(Tape& tape, Var state, Var x_prev) const;
};

struct EmbeddingChain {
  ParamId init = -1;  // N x dim
  GruCell cell;

  static EmbeddingChain create(ParameterStore& store, const std::string& name, int nodes, int dim, int features,
                               int proj_dim, Rng& rng);
  // window[s] is the N x F reading at window position s (last = current step).
  // Returns one embedding per position; the last one is the initial embedding.
  std::vector<Var> run(Tape& tape, const std::vector<Var>& window) const;
};

// Two linear layers with tanh in between, softmax over L hop levels.
struct HopSelector {
  Linear hidden;
  Linear output;

  static HopSelector create(ParameterStore& store, const std::string& name, int dim, int levels, Rng& rng);
  Var probs(Tape& tape, Var embedding) const;  // N x L, rows sum to 1
};

Var gate(Tape& tape, Var embedding, Var base, const Linear& projection);
// omega(i, j) = head(tanh([st_i ; ed_j])).
Var edge_logits(Tape& tape, Var st_gate, Var ed_gate, const Linear& head);
// Mean 0, std alpha over all N^2 entries (pre-sigmoid).
Var normalize_logits(Var logits, double alpha);
// sigmoid, clamped into [eps, 1 - eps].
Var edge_means(Var normalized);
// p = sigmoid((logit(delta) + logit(edge_mean)) / tau).
Var gumbel_relax(Var edge_mean, double tau, const Matrix& delta);
// 1 where the edge is kept (rho <= gamma), else 0.
Matrix sample_edge_mask(Eigen::Index rows, Eigen::Index cols, double gamma, Rng& rng);
Var edge_sample(Var p, double gamma, Rng& rng);

struct HopSelection {
  std::vector<int> hops;  // 1-based
  Var weights;            // N x L; one-hot in the forward pass unless relaxed
};

// Eval: argmax with ties to the smaller level, no gradient.
// Train: Gumbel-max draw; straight-through one-hot (or the relaxed softmax).
HopSelection select_hops(Var probs, double tau, Mode mode, HopEstimator estimator, Rng* rng);

// Zero every entry (i, j) with j outside node i's selected hop ball.
Var prune(Var raw, Var hop_weights, const roadnet::StructureInfoGroup& group);

// Plain-value view of a constructed window of graphs.
struct GraphSequence {
  std::vector<Matrix> adjacencies;             // T' matrices in [0, 1]
  std::vector<std::vector<int>> hop_choices;   // T' x N, 1-based
};

struct StepTrace {
  Var adjacency;
  Matrix normalized_logits;  // pre-sigmoid
  Matrix edge_mean;          // omega-bar
  Matrix hop_probs;
  std::vector<int> hops;
};

struct GraphTrace {
  std::vector<StepTrace> steps;
  GraphSequence sequence() const;
};

struct BuildOptions {
  Mode mode = Mode::kEval;
  HopEstimator hop_estimator = HopEstimator::kStraightThrough;
  bool eval_sampling = false;  // apply edge sampling outside training too
  Rng* rng = nullptr;          // required in train mode or with eval_sampling
};

class GraphConstructor {
 public:
  GraphConstructor(ParameterStore& store, const DynGraphConfig& config, roadnet::StructureInfoGroup group, Rng& rng);

  // window[s]: N x F readings, s = 0 .. T'-1 (last is the current step).
  GraphTrace build(Tape& tape, const std::vector<Var>& window, const BuildOptions& options) const;

  const DynGraphConfig& config() const { return config_; }
  const roadnet::StructureInfoGroup& group() const { return group_; }
  const EmbeddingChain& st_chain() const { return st_; }
  const EmbeddingChain& ed_chain() const { return ed_; }
  const EmbeddingChain& hop_chain() const { return hop_; }
  const Linear& st_gate() const { return st_gate_; }
  const Linear& ed_gate() const { return ed_gate_; }
  const Linear& edge_head() const { return edge_head_; }
  const HopSelector& hop_selector() const { return selector_; }
  ParamId st_base(int step) const { return st_base_.at(static_cast<std::size_t>(step)); }
  ParamId ed_base(int step) const { return ed_base_.at(static_cast<std::size_t>(step)); }

 private:
  DynGraphConfig config_;
  roadnet::StructureInfoGroup group_;
  EmbeddingChain st_;
  EmbeddingChain ed_;
  EmbeddingChain hop_;
  std::vector<ParamId> st_base_;
  std::vector<ParamId> ed_base_;
  Linear st_gate_;
  Linear ed_gate_;
  Linear edge_head_;
  HopSelector selector_;
};

}  // namespace tglrn::dyngraph
