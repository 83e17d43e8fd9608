#include "tglrn/layers.hpp"

#include <cmath>

namespace tglrn {

void init_uniform(ParameterStore& store, ParamId id, double bound, Rng& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  for (double& v : store[id].value.values()) v = u(rng);
}

Linear Linear::create(ParameterStore& store, const std::string& name, int in, int out, Rng& rng) {
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = store.add(name + ".weight", {in, out});
  l.bias = store.add(name + ".bias", {out});
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  init_uniform(store, l.weight, bound, rng);
  init_uniform(store, l.bias, bound, rng);
  return l;
}

Var Linear::forward(Tape& tape, Var x) const {
  return diff::add_row(diff::matmul(x, tape.param(weight)), tape.param(bias));
}

}  // namespace tglrn
