#include "tglrn/stnet.hpp"

#include <cmath>

#include "tglrn/error.hpp"

namespace tglrn::stnet {

namespace d = tglrn::diff;

Transitions transitions(Var adjacency) {
  return {d::row_normalize(adjacency), d::row_normalize(d::transpose(adjacency))};
}

Schedule validate_schedule(const StConfig& c) {
  if (c.kernel < 1) throw ConfigError("schedule: kernel size Ks must be >= 1");
  if (c.blocks < 1) throw ConfigError("schedule: at least one block required");
  Schedule s;
  int len = c.window;
  for (int b = 0; b < c.blocks; ++b) {
    for (int i = 0; i < 2; ++i) {
      if (len < c.kernel)
        throw ConfigError("schedule: block " + std::to_string(b) + " TPL " + std::to_string(i) + " receives " +
                          std::to_string(len) + " steps, fewer than Ks=" + std::to_string(c.kernel) +
                          " (T'=" + std::to_string(c.window) + ", blocks=" + std::to_string(c.blocks) + ")");
      s.tpl_inputs.push_back(len);
      len -= c.kernel - 1;
    }
    s.block_outputs.push_back(len);
  }
  return s;
}

InputLayer InputLayer::create(ParameterStore& store, const std::string& name, int features, int hidden, Rng& rng) {
  if (features >= hidden) throw ConfigError("input layer: feature count must be below the hidden width");
  return {Linear::create(store, name, features, hidden, rng)};
}

DiffusionConv DiffusionConv::create(ParameterStore& store, const std::string& name, int in, int out, int steps,
                                    Rng& rng) {
  if (steps < 1) throw ConfigError("diffusion_conv: K must be >= 1");
  DiffusionConv c;
  c.in_ = in;
  c.out_ = out;
  c.steps_ = steps;
  c.theta_ = store.add(name + ".theta", {out, in, steps, 2});
  init_uniform(store, c.theta_, 1.0 / std::sqrt(2.0 * steps * in), rng);
  return c;
}

std::vector<Var> DiffusionConv::filters(Tape& tape) const {
  Var theta = tape.param(theta_);
  std::vector<Var> out;
  for (int k = 0; k < steps_; ++k) {
    for (int dir = 0; dir < 2; ++dir) {
      std::vector<Eigen::Index> index;
      index.reserve(static_cast<std::size_t>(in_ * out_));
      for (int p = 0; p < in_; ++p)
        for (int q = 0; q < out_; ++q)
          index.push_back(((static_cast<Eigen::Index>(q) * in_ + p) * steps_ + k) * 2 + dir);
      out.push_back(d::gather(theta, in_, out_, std::move(index)));
    }
  }
  return out;
}

Var DiffusionConv::forward(Tape& tape, Var x, const Transitions& graph) const {
  return forward(x, graph, filters(tape));
}

Var DiffusionConv::forward(Var x, const Transitions& graph, const std::vector<Var>& filters) const {
  if (x.cols() != in_)
    throw ConfigError("diffusion_conv: input width " + std::to_string(x.cols()) + ", expected " + std::to_string(in_));
  Var h;
  for (int dir = 0; dir < 2; ++dir) {
    Var t = dir == 0 ? graph.forward : graph.reverse;
    Var z = x;
    for (int k = 0; k < steps_; ++k) {
      if (k > 0) z = d::matmul(t, z);
      Var term = d::matmul(z, filters[static_cast<std::size_t>(k * 2 + dir)]);
      h = h.valid() ? d::add(h, term) : term;
    }
  }
  return h;
}

Spl Spl::create(ParameterStore& store, const std::string& name, int hidden, int steps, Rng& rng) {
  Spl s;
  s.conv_ = DiffusionConv::create(store, name, hidden, hidden, steps, rng);
  return s;
}

Var Spl::forward(Tape& tape, Var x, const Transitions& graph) const {
  return forward(x, graph, conv_.filters(tape));
}

Var Spl::forward(Var x, const Transitions& graph, const std::vector<Var>& filters) const {
  return d::relu(d::add(conv_.forward(x, graph, filters), x));
}

GtuConv GtuConv::create(ParameterStore& store, const std::string& name, int hidden, int kernel, Rng& rng) {
  GtuConv g;
  g.hidden_ = hidden;
  g.kernel_ = kernel;
  g.weight_ = store.add(name + ".kernel", {kernel, hidden, 2 * hidden});
  g.bias_ = store.add(name + ".bias", {2 * hidden});
  init_uniform(store, g.weight_, 1.0 / std::sqrt(static_cast<double>(kernel * hidden)), rng);
  return g;
}

std::vector<Var> GtuConv::forward(Tape& tape, const std::vector<Var>& slices) const {
  const int len = static_cast<int>(slices.size());
  if (len < kernel_)
    throw ConfigError("gtu_conv: " + std::to_string(len) + " time steps, kernel needs " + std::to_string(kernel_));
  Var w = tape.param(weight_);
  Var b = tape.param(bias_);
  std::vector<Var> taps;
  for (int s = 0; s < kernel_; ++s) taps.push_back(d::reshape(d::slice_rows(w, s, 1), hidden_, 2 * hidden_));
  std::vector<Var> out;
  for (int j = 0; j + kernel_ <= len; ++j) {
    Var acc;
    for (int s = 0; s < kernel_; ++s) {
      Var term = d::matmul(slices[static_cast<std::size_t>(j + s)], taps[static_cast<std::size_t>(s)]);
      acc = acc.valid() ? d::add(acc, term) : term;
    }
    acc = d::add_row(acc, b);
    Var u = d::slice_cols(acc, 0, hidden_);
    Var v = d::slice_cols(acc, hidden_, hidden_);
    out.push_back(d::mul(d::tanh(u), d::sigmoid(v)));
  }
  return out;
}

Tpl Tpl::create(ParameterStore& store, const std::string& name, int hidden, int kernel, Rng& rng) {
  Tpl t;
  t.gtu_ = GtuConv::create(store, name, hidden, kernel, rng);
  t.gamma_ = store.add(name + ".ln_gamma", {hidden});
  t.beta_ = store.add(name + ".ln_beta", {hidden});
  store[t.gamma_].value.matrix().setOnes();
  return t;
}

Stream Tpl::forward(Tape& tape, const Stream& in) const {
  const auto conv = gtu_.forward(tape, in.slices);
  const int shift = gtu_.kernel() - 1;
  Stream out;
  out.offset = in.offset + shift;
  Var gamma = tape.param(gamma_);
  Var beta = tape.param(beta_);
  for (std::size_t j = 0; j < conv.size(); ++j)
    out.slices.push_back(d::layer_norm_rows(d::add(conv[j], in.slices[j + static_cast<std::size_t>(shift)]), gamma, beta));
  return out;
}

OutputLayer OutputLayer::create(ParameterStore& store, const std::string& name, int length, int hidden, Rng& rng) {
  if (length < 1) throw ConfigError("output layer: input length must be >= 1");
  OutputLayer o;
  o.length_ = length;
  o.hidden_ = hidden;
  o.weight_ = store.add(name + ".kernel", {length, hidden, hidden});
  o.bias_ = store.add(name + ".bias", {hidden});
  init_uniform(store, o.weight_, 1.0 / std::sqrt(static_cast<double>(length * hidden)), rng);
  return o;
}

Var OutputLayer::forward(Tape& tape, const std::vector<Var>& slices) const {
  if (static_cast<int>(slices.size()) != length_)
    throw ConfigError("output layer: expected " + std::to_string(length_) + " time steps, got " +
                      std::to_string(slices.size()));
  Var w = tape.param(weight_);
  Var acc;
  for (int s = 0; s < length_; ++s) {
    Var term = d::matmul(slices[static_cast<std::size_t>(s)], d::reshape(d::slice_rows(w, s, 1), hidden_, hidden_));
    acc = acc.valid() ? d::add(acc, term) : term;
  }
  return d::add_row(acc, tape.param(bias_));
}

Stream dropout(Tape&, const Stream& in, double rate, Rng* rng) {
  if (!rng || rate <= 0.0) return in;
  if (rate >= 1.0) throw ConfigError("dropout: rate must be below 1");
  Stream out;
  out.offset = in.offset;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (const auto& s : in.slices) {
    Matrix mask(s.rows(), s.cols());
    for (Eigen::Index k = 0; k < mask.size(); ++k) mask.data()[k] = uniform_open(*rng) < rate ? 0.0 : keep_scale;
    out.slices.push_back(d::mul_const(s, mask));
  }
  return out;
}

StBlock StBlock::create(ParameterStore& store, const std::string& name, const StConfig& config, int input_length,
                        Rng& rng) {
  StBlock b;
  int len = input_length;
  for (int i = 0; i < 2; ++i) {
    if (len < config.kernel)
      throw ConfigError("st_block: stream of " + std::to_string(len) + " steps is shorter than Ks=" +
                        std::to_string(config.kernel));
    b.spl_.push_back(Spl::create(store, name + ".spl" + std::to_string(i), config.hidden, config.diffusion_steps, rng));
    b.tpl_.push_back(Tpl::create(store, name + ".tpl" + std::to_string(i), config.hidden, config.kernel, rng));
    len -= config.kernel - 1;
  }
  b.output_ = OutputLayer::create(store, name + ".output", len, config.hidden, rng);
  return b;
}

BlockOutput StBlock::forward(Tape& tape, const Stream& in, const std::vector<Transitions>& graphs, double dropout_rate,
                             Rng* rng) const {
  Stream stream = in;
  for (std::size_t i = 0; i < spl_.size(); ++i) {
    Stream spatial;
    spatial.offset = stream.offset;
    const auto filters = spl_[i].conv().filters(tape);
    for (int j = 0; j < stream.length(); ++j) {
      const auto& g = graphs.at(static_cast<std::size_t>(stream.offset + j));
      spatial.slices.push_back(spl_[i].forward(stream.slices[static_cast<std::size_t>(j)], g, filters));
    }
    stream = dropout(tape, tpl_[i].forward(tape, spatial), dropout_rate, rng);
  }
  BlockOutput out;
  out.tap = output_.forward(tape, stream.slices);
  out.stream = std::move(stream);
  return out;
}

}  // namespace tglrn::stnet
