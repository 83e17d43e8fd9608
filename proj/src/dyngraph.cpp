#include "tglrn/dyngraph.hpp"

#include <cmath>

#include "tglrn/error.hpp"

namespace tglrn::dyngraph {

namespace d = tglrn::diff;

GruCell GruCell::create(ParameterStore& store, const std::string& name, int dim, int features, int proj_dim,
                        Rng& rng) {
  GruCell c;
  c.dim = dim;
  c.input_proj = Linear::create(store, name + ".input_proj", features, proj_dim, rng);
  c.update = Linear::create(store, name + ".f_z", dim + proj_dim, dim, rng);
  c.reset = Linear::create(store, name + ".f_r", dim + proj_dim, dim, rng);
  c.candidate = Linear::create(store, name + ".g", dim + proj_dim, dim, rng);
  return c;
}

Var GruCell::step(Tape& tape, Var state, Var x_prev) const {
  Var px = input_proj.forward(tape, x_prev);
  Var joint = d::concat_cols({state, px});
  Var z = d::sigmoid(update.forward(tape, joint));
  Var r = d::sigmoid(reset.forward(tape, joint));
  Var h = d::tanh(candidate.forward(tape, d::concat_cols({d::mul(r, state), px})));
  // (1 - z) * h + z * E  ==  h + z * (E - h)
  return d::add(h, d::mul(z, d::sub(state, h)));
}

EmbeddingChain EmbeddingChain::create(ParameterStore& store, const std::string& name, int nodes, int dim,
                                      int features, int proj_dim, Rng& rng) {
  EmbeddingChain c;
  c.init = store.add(name + ".init", {nodes, dim});
  init_uniform(store, c.init, 1.0, rng);
  c.cell = GruCell::create(store, name + ".gru", dim, features, proj_dim, rng);
  return c;
}

std::vector<Var> EmbeddingChain::run(Tape& tape, const std::vector<Var>& window) const {
  const auto len = window.size();
  if (len == 0) throw ConfigError("run_chain: empty window");
  std::vector<Var> out(len);
  out[len - 1] = tape.param(init);
  for (std::size_t s = len - 1; s > 0; --s) out[s - 1] = cell.step(tape, out[s], window[s - 1]);
  return out;
}

HopSelector HopSelector::create(ParameterStore& store, const std::string& name, int dim, int levels, Rng& rng) {
  HopSelector h;
  h.hidden = Linear::create(store, name + ".hidden", dim, dim, rng);
  h.output = Linear::create(store, name + ".output", dim, levels, rng);
  return h;
}

Var HopSelector::probs(Tape& tape, Var embedding) const {
  return d::softmax_rows(output.forward(tape, d::tanh(hidden.forward(tape, embedding))));
}

Var gate(Tape& tape, Var embedding, Var base, const Linear& projection) {
  return d::mul(embedding, d::sigmoid(projection.forward(tape, base)));
}

Var edge_logits(Tape& tape, Var st_gate, Var ed_gate, const Linear& head) {
  const auto dim = st_gate.cols();
  if (ed_gate.cols() != dim || head.in != 2 * dim || head.out != 1)
    throw ConfigError("edge_logits: embedding widths do not match the edge head");
  // head(tanh([a ; b])) = tanh(a) w_st + tanh(b) w_ed + bias
  Var w = tape.param(head.weight);
  Var from = d::matmul(d::tanh(st_gate), d::slice_rows(w, 0, dim));
  Var to = d::matmul(d::tanh(ed_gate), d::slice_rows(w, dim, dim));
  return d::pairwise_sum(d::add_row(from, tape.param(head.bias)), to);
}

Var normalize_logits(Var logits, double alpha) { return d::standardize_all(logits, alpha); }

Var edge_means(Var normalized) { return d::clamp(d::sigmoid(normalized), kEdgeMeanEps, 1.0 - kEdgeMeanEps); }

Var gumbel_relax(Var edge_mean, double tau, const Matrix& delta) {
  Matrix noise = (delta.array().log() - (1.0 - delta.array()).log()).matrix();
  return d::sigmoid(d::scale(d::add_const(d::logit(edge_mean), noise), 1.0 / tau));
}

Matrix sample_edge_mask(Eigen::Index rows, Eigen::Index cols, double gamma, Rng& rng) {
  if (gamma < 0.0 || gamma > 1.0) throw ConfigError("edge_sample: gamma must lie in [0, 1]");
  Matrix mask(rows, cols);
  for (Eigen::Index k = 0; k < mask.size(); ++k) mask.data()[k] = gamma < uniform_open(rng) ? 0.0 : 1.0;
  return mask;
}

Var edge_sample(Var p, double gamma, Rng& rng) {
  return d::mul_const(p, sample_edge_mask(p.rows(), p.cols(), gamma, rng));
}

namespace {

int argmax_row(const Matrix& m, Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index l = 1; l < m.cols(); ++l)
    if (m(row, l) > m(row, best)) best = l;
  return static_cast<int>(best);
}

}  // namespace

HopSelection select_hops(Var probs, double tau, Mode mode, HopEstimator estimator, Rng* rng) {
  const Matrix& p = probs.value();
  const auto n = p.rows(), levels = p.cols();
  HopSelection sel;
  sel.hops.resize(static_cast<std::size_t>(n));
  Tape& tape = *probs.tape();
  if (mode == Mode::kEval) {
    Matrix onehot = Matrix::Zero(n, levels);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int l = argmax_row(p, i);
      sel.hops[static_cast<std::size_t>(i)] = l + 1;
      onehot(i, l) = 1.0;
    }
    sel.weights = tape.constant(std::move(onehot));
    return sel;
  }
  if (!rng) throw StateError("select_hops: train mode requires a random generator");
  Matrix gumbel(n, levels);
  for (Eigen::Index k = 0; k < gumbel.size(); ++k) gumbel.data()[k] = -std::log(-std::log(uniform_open(*rng)));
  Var soft = d::softmax_rows(d::scale(d::add_const(d::log(probs), gumbel), 1.0 / tau));
  Matrix perturbed = (p.array().log() + gumbel.array()).matrix();
  Matrix onehot = Matrix::Zero(n, levels);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int l = argmax_row(perturbed, i);
    sel.hops[static_cast<std::size_t>(i)] = l + 1;
    onehot(i, l) = 1.0;
  }
  sel.weights = estimator == HopEstimator::kRelaxed ? soft : d::straight_through(onehot, soft);
  return sel;
}

Var prune(Var raw, Var hop_weights, const roadnet::StructureInfoGroup& group) {
  if (hop_weights.cols() != group.levels())
    throw ConfigError("prune: hop weights have " + std::to_string(hop_weights.cols()) + " levels, group has " +
                      std::to_string(group.levels()));
  return d::mul(raw, d::row_mix(hop_weights, group.masks()));
}

GraphSequence GraphTrace::sequence() const {
  GraphSequence seq;
  for (const auto& s : steps) {
    seq.adjacencies.push_back(s.adjacency.value());
    seq.hop_choices.push_back(s.hops);
  }
  return seq;
}

GraphConstructor::GraphConstructor(ParameterStore& store, const DynGraphConfig& config,
                                   roadnet::StructureInfoGroup group, Rng& rng)
    : config_(config), group_(std::move(group)) {
  if (config.nodes < 1 || config.window < 1 || config.embed_dim < 1 || config.hop_embed_dim < 1 ||
      config.levels < 1)
    throw ConfigError("graph constructor: dimensions must be positive");
  if (group_.levels() != config.levels)
    throw ConfigError("graph constructor: structure group has " + std::to_string(group_.levels()) +
                      " levels, config asks for " + std::to_string(config.levels));
  if (config.tau <= 0.0) throw ConfigError("graph constructor: tau must be positive");
  if (config.gamma < 0.0 || config.gamma > 1.0) throw ConfigError("graph constructor: gamma must lie in [0, 1]");
  const int n = config.nodes, dim = config.embed_dim;
  st_ = EmbeddingChain::create(store, "graph.st", n, dim, config.features, config.proj_dim, rng);
  ed_ = EmbeddingChain::create(store, "graph.ed", n, dim, config.features, config.proj_dim, rng);
  hop_ = EmbeddingChain::create(store, "graph.hop", n, config.hop_embed_dim, config.features, config.proj_dim, rng);
  for (int s = 0; s < config.window; ++s) {
    st_base_.push_back(store.add("graph.st_base." + std::to_string(s), {n, dim}));
    init_uniform(store, st_base_.back(), 1.0, rng);
    ed_base_.push_back(store.add("graph.ed_base." + std::to_string(s), {n, dim}));
    init_uniform(store, ed_base_.back(), 1.0, rng);
  }
  st_gate_ = Linear::create(store, "graph.st_gate", dim, dim, rng);
  ed_gate_ = Linear::create(store, "graph.ed_gate", dim, dim, rng);
  edge_head_ = Linear::create(store, "graph.edge_head", 2 * dim, 1, rng);
  selector_ = HopSelector::create(store, "graph.hop_selector", config.hop_embed_dim, config.levels, rng);
}

GraphTrace GraphConstructor::build(Tape& tape, const std::vector<Var>& window, const BuildOptions& options) const {
  if (static_cast<int>(window.size()) != config_.window)
    throw ConfigError("build_graph_sequence: window has " + std::to_string(window.size()) + " steps, expected " +
                      std::to_string(config_.window));
  const bool train = options.mode == Mode::kTrain;
  const bool sampling = train || options.eval_sampling;
  if ((train || sampling) && !options.rng) throw StateError("build_graph_sequence: stochastic mode without generator");

  const auto st = st_.run(tape, window);
  const auto ed = ed_.run(tape, window);
  const auto hop = hop_.run(tape, window);
  const int n = config_.nodes;

  GraphTrace trace;
  trace.steps.reserve(window.size());
  for (int s = 0; s < config_.window; ++s) {
    const auto idx = static_cast<std::size_t>(s);
    Var st_g = gate(tape, st[idx], tape.param(st_base_[idx]), st_gate_);
    Var ed_g = gate(tape, ed[idx], tape.param(ed_base_[idx]), ed_gate_);
    Var normalized = normalize_logits(edge_logits(tape, st_g, ed_g, edge_head_), config_.alpha);
    Var mean = edge_means(normalized);

    Var p = mean;
    if (train) {
      Matrix delta(n, n);
      for (Eigen::Index k = 0; k < delta.size(); ++k) delta.data()[k] = uniform_open(*options.rng);
      p = gumbel_relax(mean, config_.tau, delta);
    }
    Var raw = sampling ? edge_sample(p, config_.gamma, *options.rng) : p;

    Var probs = selector_.probs(tape, hop[idx]);
    auto sel = select_hops(probs, config_.tau, options.mode, options.hop_estimator, options.rng);

    StepTrace step;
    step.adjacency = prune(raw, sel.weights, group_);
    step.normalized_logits = normalized.value();
    step.edge_mean = mean.value();
    step.hop_probs = probs.value();
    step.hops = std::move(sel.hops);
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

}  // namespace tglrn::dyngraph
