#pragma once

#include <memory>

#include "tglrn/data.hpp"
#include "tglrn/model.hpp"
#include "tglrn/trainer.hpp"

// Small synthetic problem shared by trainer, checkpoint and acceptance tests.
using namespace tglrn;

struct Problem {
  data::SynthResult synth;
  std::shared_ptr<const data::FlowSeries> series;
  std::array<data::WindowedDataset, 3> splits;
  data::Scaler scaler;
};

inline Problem make_problem(const data::SynthConfig& sc, int input_len, int horizon) {
  Problem p;
  p.synth = data::synth_generate(sc);
  p.series = std::make_shared<const data::FlowSeries>(p.synth.flows);
  p.splits = data::make_windows(p.series, input_len, horizon);
  const auto bounds = data::split_bounds(p.series->steps(), {});
  p.scaler = data::Scaler::fit(p.series->values.topRows(bounds.train_end));
  return p;
}

inline Problem tiny_problem(std::uint64_t seed = 1) {
  data::SynthConfig sc;
  sc.nodes = 5;
  sc.steps = 70;
  sc.period = 24;
  sc.regime_period = 6;
  sc.seed = seed;
  return make_problem(sc, 4, 2);
}

inline tglrn::ModelConfig tiny_model(int nodes, std::uint64_t seed = 1) {
  tglrn::ModelConfig c;
  c.nodes = nodes;
  c.window = 4;
  c.horizon = 2;
  c.embed_dim = 4;
  c.hop_embed_dim = 4;
  c.hidden = 6;
  c.levels = 2;
  c.kernel = 2;
  c.blocks = 1;
  c.seed = seed;
  return c;
}

inline tglrn::TrainConfig tiny_train(std::uint64_t seed = 1) {
  tglrn::TrainConfig t;
  t.batch_size = 8;
  t.max_epochs = 2;
  t.seed = seed;
  return t;
}
