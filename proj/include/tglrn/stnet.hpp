#pragma once

#include <vector>

#include "tglrn/layers.hpp"

// Spatio-temporal processing: diffusion convolution over the per-step learned
// graphs, gated temporal convolution, and the per-block output taps.
namespace tglrn::stnet {

struct StConfig {
  int nodes = 0;
  int features = 1;
  int hidden = 64;         // D = D'
  int diffusion_steps = 2; // K
  int kernel = 2;          // Ks
  int blocks = 3;
  int window = 12;         // T'
  double dropout = 0.1;
};

// Slices of a [N x T x D] activation, one N x D matrix per time step.
// Slice j corresponds to original window position `offset + j`.
struct Stream {
  std::vector<Var> slices;
  int offset = 0;

  int length() const { return static_cast<int>(slices.size()); }
};

// Forward (D_O^-1 A) and reverse (D_I^-1 A^T) transition matrices of one graph.
struct Transitions {
  Var forward;
  Var reverse;
};
Transitions transitions(Var adjacency);

// Time lengths entering each TPL and each block's output layer.
struct Schedule {
  std::vector<int> tpl_inputs;    // 2 per block
  std::vector<int> block_outputs; // stream length fed to each output layer
};
// Throws ConfigError when a TPL input is shorter than Ks.
Schedule validate_schedule(const StConfig& config);

struct InputLayer {
  Linear linear;  // F -> D, no activation

  static InputLayer create(ParameterStore& store, const std::string& name, int features, int hidden, Rng& rng);
  Var forward(Tape& tape, Var x) const { return linear.forward(tape, x); }
};

// H = sum_k (P^k X) W_{k,fwd} + (Q^k X) W_{k,rev}, with W_{k,dir}(p, q) = theta(q, p, k, dir).
class DiffusionConv {
 public:
  static DiffusionConv create(ParameterStore& store, const std::string& name, int in, int out, int steps, Rng& rng);

  // W matrices in (k, dir) order; extract once per tape and reuse across slices.
  std::vector<Var> filters(Tape& tape) const;
  Var forward(Tape& tape, Var x, const Transitions& graph) const;
  Var forward(Var x, const Transitions& graph, const std::vector<Var>& filters) const;
  ParamId theta() const { return theta_; }
  int steps() const { return steps_; }

 private:

  ParamId theta_ = -1;  // [D', D, K, 2]
  int in_ = 0;
  int out_ = 0;
  int steps_ = 0;
};

// ReLU(diffusion_conv(X, A) + X).
class Spl {
 public:
  static Spl create(ParameterStore& store, const std::string& name, int hidden, int steps, Rng& rng);
  Var forward(Tape& tape, Var x, const Transitions& graph) const;
  Var forward(Var x, const Transitions& graph, const std::vector<Var>& filters) const;
  const DiffusionConv& conv() const { return conv_; }

 private:
  DiffusionConv conv_;
};

// Valid 1-D convolution over time into 2D channels [U, V]; out = tanh(U) * sigmoid(V).
class GtuConv {
 public:
  static GtuConv create(ParameterStore& store, const std::string& name, int hidden, int kernel, Rng& rng);
  std::vector<Var> forward(Tape& tape, const std::vector<Var>& slices) const;
  int kernel() const { return kernel_; }
  ParamId weight() const { return weight_; }
  ParamId bias() const { return bias_; }

 private:
  ParamId weight_ = -1;  // [Ks, D, 2D]
  ParamId bias_ = -1;    // [2D]
  int hidden_ = 0;
  int kernel_ = 0;
};

// LayerNorm(gtu(X) + last slices of X), normalized over channels.
class Tpl {
 public:
  static Tpl create(ParameterStore& store, const std::string& name, int hidden, int kernel, Rng& rng);
  Stream forward(Tape& tape, const Stream& in) const;
  const GtuConv& gtu() const { return gtu_; }

 private:
  GtuConv gtu_;
  ParamId gamma_ = -1;
  ParamId beta_ = -1;
};

// Temporal convolution whose kernel spans the whole input: N x T_in x D -> N x D.
class OutputLayer {
 public:
  static OutputLayer create(ParameterStore& store, const std::string& name, int length, int hidden, Rng& rng);
  Var forward(Tape& tape, const std::vector<Var>& slices) const;
  int length() const { return length_; }
  ParamId weight() const { return weight_; }
  ParamId bias() const { return bias_; }

 private:
  ParamId weight_ = -1;  // [T_in, D, D]
  ParamId bias_ = -1;    // [D]
  int length_ = 0;
  int hidden_ = 0;
};

// Inverted dropout on every slice; no-op when rng is null or rate is 0.
Stream dropout(Tape& tape, const Stream& in, double rate, Rng* rng);

struct BlockOutput {
  Stream stream;  // passed to the next block
  Var tap;        // N x D
};

// SPL -> TPL -> SPL -> TPL, then the output layer over the reduced stream.
class StBlock {
 public:
  static StBlock create(ParameterStore& store, const std::string& name, const StConfig& config, int input_length,
                        Rng& rng);
  // graphs[s] belongs to window position s; SPL slice j uses graphs[offset + j].
  BlockOutput forward(Tape& tape, const Stream& in, const std::vector<Transitions>& graphs, double dropout_rate,
                      Rng* rng) const;

  const Spl& spl(int i) const { return spl_[static_cast<std::size_t>(i)]; }
  const Tpl& tpl(int i) const { return tpl_[static_cast<std::size_t>(i)]; }
  const OutputLayer& output() const { return output_; }

 private:
  std::vector<Spl> spl_;
  std::vector<Tpl> tpl_;
  OutputLayer output_;
};

}  // namespace tglrn::stnet
