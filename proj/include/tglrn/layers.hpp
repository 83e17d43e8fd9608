#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "tglrn/diff/ops.hpp"

namespace tglrn {

using diff::Matrix;
using diff::ParameterStore;
using diff::ParamId;
using diff::Tape;
using diff::Var;

using Rng = std::mt19937_64;

// Independent stream for (seed, a, b, ...); identical on every run.
template <typename... Keys>
Rng make_rng(std::uint64_t seed, Keys... keys) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(keys)...};
  return Rng(seq);
}

// Uniform draw on the open interval (0, 1).
inline double uniform_open(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  while (x <= 0.0) x = u(rng);
  return x;
}

// Fills a parameter with U(-bound, bound).
void init_uniform(ParameterStore& store, ParamId id, double bound, Rng& rng);

// y = x W + b, W: in x out, b: [out].
struct Linear {
  ParamId weight = -1;
  ParamId bias = -1;
  int in = 0;
  int out = 0;

  static Linear create(ParameterStore& store, const std::string& name, int in, int out, Rng& rng);
  Var forward(Tape& tape, Var x) const;
};

}  // namespace tglrn
