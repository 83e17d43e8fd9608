#include "tglrn/model.hpp"

#include <cmath>

#include "tglrn/error.hpp"

namespace tglrn {

namespace d = tglrn::diff;

dyngraph::DynGraphConfig ModelConfig::graph_config() const {
  dyngraph::DynGraphConfig g;
  g.nodes = nodes;
  g.features = features;
  g.window = window;
  g.embed_dim = embed_dim;
  g.hop_embed_dim = hop_embed_dim;
  g.proj_dim = hidden;
  g.levels = levels;
  g.alpha = alpha;
  g.tau = tau;
  g.gamma = gamma;
  return g;
}

stnet::StConfig ModelConfig::st_config() const {
  stnet::StConfig s;
  s.nodes = nodes;
  s.features = features;
  s.hidden = hidden;
  s.diffusion_steps = diffusion_steps;
  s.kernel = kernel;
  s.blocks = blocks;
  s.window = window;
  s.dropout = dropout;
  return s;
}

PredictionHead PredictionHead::create(ParameterStore& store, int inputs, int horizon, int features, Rng& rng) {
  if (features != 1) throw ConfigError("prediction head: only single-feature targets are supported");
  PredictionHead h;
  h.horizon = horizon;
  h.weight = store.add("head.weight", {inputs, horizon, features});
  h.bias = store.add("head.bias", {horizon, features});
  init_uniform(store, h.weight, 1.0 / std::sqrt(static_cast<double>(inputs)), rng);
  return h;
}

Var PredictionHead::forward(Tape& tape, const std::vector<Var>& taps) const {
  Var joined = taps.size() == 1 ? taps.front() : d::concat_cols(taps);
  return d::add_row(d::matmul(joined, tape.param(weight)), d::reshape(tape.param(bias), 1, horizon));
}

namespace {

roadnet::StructureInfoGroup make_group(const ModelConfig& c, const roadnet::RoadNetwork& net) {
  if (net.num_nodes != c.nodes)
    throw ConfigError("model: network has " + std::to_string(net.num_nodes) + " nodes, config expects " +
                      std::to_string(c.nodes));
  return roadnet::structure_group(roadnet::hop_distances(net, c.symmetrize_hops), c.levels);
}

}  // namespace

Model::Model(const ModelConfig& config, const roadnet::RoadNetwork& network)
    : config_(config),
      schedule_(stnet::validate_schedule(config.st_config())),
      graphs_([&] {
        if (config.horizon < 1) throw ConfigError("model: horizon must be >= 1");
        if (config.dropout < 0.0 || config.dropout >= 1.0) throw ConfigError("model: dropout must lie in [0, 1)");
        Rng rng = make_rng(config.seed, 0);
        return dyngraph::GraphConstructor(params_, config.graph_config(), make_group(config, network), rng);
      }()) {
  Rng rng = make_rng(config.seed, 1);
  const auto st = config.st_config();
  input_ = stnet::InputLayer::create(params_, "input", config.features, config.hidden, rng);
  int len = config.window;
  for (int b = 0; b < config.blocks; ++b) {
    blocks_.push_back(stnet::StBlock::create(params_, "block" + std::to_string(b), st, len, rng));
    len = schedule_.block_outputs[static_cast<std::size_t>(b)];
  }
  head_ = PredictionHead::create(params_, config.blocks * config.hidden, config.horizon, config.features, rng);
}

ForwardResult Model::forward(Tape& tape, const Matrix& window, const ForwardOptions& options) const {
  if (window.rows() != config_.window || window.cols() != config_.nodes)
    throw ConfigError("model forward: window is " + std::to_string(window.rows()) + "x" +
                      std::to_string(window.cols()) + ", expected " + std::to_string(config_.window) + "x" +
                      std::to_string(config_.nodes));
  std::vector<Var> readings;
  readings.reserve(static_cast<std::size_t>(config_.window));
  for (int s = 0; s < config_.window; ++s) readings.push_back(tape.constant(window.row(s).transpose()));

  ForwardResult result;
  dyngraph::BuildOptions build;
  build.mode = options.mode;
  build.hop_estimator = options.hop_estimator;
  build.eval_sampling = options.eval_sampling;
  build.rng = options.rng;
  result.graphs = graphs_.build(tape, readings, build);

  std::vector<stnet::Transitions> transitions;
  transitions.reserve(result.graphs.steps.size());
  for (const auto& step : result.graphs.steps) transitions.push_back(stnet::transitions(step.adjacency));

  stnet::Stream stream;
  for (const auto& x : readings) stream.slices.push_back(input_.forward(tape, x));

  const bool train = options.mode == dyngraph::Mode::kTrain;
  Rng* dropout_rng = train && options.dropout ? options.rng : nullptr;
  std::vector<Var> taps;
  for (const auto& block : blocks_) {
    auto out = block.forward(tape, stream, transitions, config_.dropout, dropout_rng);
    taps.push_back(out.tap);
    stream = std::move(out.stream);
  }
  result.prediction = head_.forward(tape, taps);
  return result;
}

Var mae_loss(Var prediction, const Matrix& target) {
  return d::mean_all(d::abs(d::add_const(prediction, -target)));
}

Var denormalize(Var prediction, const data::Scaler& scaler) {
  const auto n = prediction.rows(), t = prediction.cols();
  if (scaler.nodes() != n) throw ConfigError("denormalize: scaler covers a different number of sensors");
  Matrix scale(n, t), shift(n, t);
  for (Eigen::Index i = 0; i < n; ++i) {
    scale.row(i).setConstant(scaler.stddev()(i));
    shift.row(i).setConstant(scaler.mean()(i));
  }
  return d::add_const(d::mul_const(prediction, scale), shift);
}

}  // namespace tglrn
