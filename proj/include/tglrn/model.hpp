#pragma once

#include <cstdint>
#include <vector>

#include "tglrn/data.hpp"
#include "tglrn/dyngraph.hpp"
#include "tglrn/roadnet.hpp"
#include "tglrn/stnet.hpp"

namespace tglrn {

struct ModelConfig {
  int nodes = 0;
  int features = 1;
  int window = 12;   // T'
  int horizon = 12;  // T
  int embed_dim = 16;
  int hop_embed_dim = 16;
  int hidden = 64;
  int levels = 5;
  int diffusion_steps = 2;
  int kernel = 2;
  int blocks = 3;
  double dropout = 0.1;
  double alpha = 1.0;
  double tau = 1.0;
  double gamma = 0.3;
  bool symmetrize_hops = false;
  std::uint64_t seed = 1;  // parameter initialization

  dyngraph::DynGraphConfig graph_config() const;
  stnet::StConfig st_config() const;
};

struct ForwardOptions {
  dyngraph::Mode mode = dyngraph::Mode::kEval;
  dyngraph::HopEstimator hop_estimator = dyngraph::HopEstimator::kStraightThrough;
  bool eval_sampling = false;
  bool dropout = true;  // honoured in train mode only
  Rng* rng = nullptr;
};

struct ForwardResult {
  Var prediction;  // N x T, z-scored units
  dyngraph::GraphTrace graphs;
};

// [O_1, ..., O_n] W_p + b_p: W_p [(n D), T, F], b_p [T, F] added per node.
struct PredictionHead {
  ParamId weight = -1;
  ParamId bias = -1;
  int horizon = 0;

  static PredictionHead create(ParameterStore& store, int inputs, int horizon, int features, Rng& rng);
  Var forward(Tape& tape, const std::vector<Var>& taps) const;
};

class Model {
 public:
  // Validates the time schedule; throws ConfigError on underflow.
  Model(const ModelConfig& config, const roadnet::RoadNetwork& network);

  // window: T' x N readings already z-scored.
  ForwardResult forward(Tape& tape, const Matrix& window, const ForwardOptions& options) const;

  const ModelConfig& config() const { return config_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }
  const dyngraph::GraphConstructor& graphs() const { return graphs_; }
  const stnet::InputLayer& input_layer() const { return input_; }
  const std::vector<stnet::StBlock>& blocks() const { return blocks_; }
  const PredictionHead& head() const { return head_; }
  const stnet::Schedule& schedule() const { return schedule_; }

 private:
  ModelConfig config_;
  stnet::Schedule schedule_;
  ParameterStore params_;
  dyngraph::GraphConstructor graphs_;
  stnet::InputLayer input_;
  std::vector<stnet::StBlock> blocks_;
  PredictionHead head_;
};

// mean |pred - target| over every entry.
Var mae_loss(Var prediction, const Matrix& target);

// Per-node affine map back to original units: pred (N x T) * std + mean.
Var denormalize(Var prediction, const data::Scaler& scaler);

}  // namespace tglrn
