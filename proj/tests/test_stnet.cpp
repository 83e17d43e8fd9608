#include <doctest.h>

#include "oracles.hpp"
#include "tglrn/error.hpp"
#include "tglrn/stnet.hpp"

using namespace tglrn;
using namespace tglrn::stnet;
namespace d = tglrn::diff;

namespace {

Matrix rand_mat(Eigen::Index r, Eigen::Index c, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

std::vector<double> flat(const ParameterStore& s, ParamId id) {
  const auto v = s[id].value.values();
  return {v.begin(), v.end()};
}

}  // namespace

TEST_CASE("diffusion conv matches the naive oracle on 50 random instances") {
  Rng rng(123);
  std::uniform_int_distribution<int> nd(1, 6), kd(1, 3), wd(1, 4);
  std::bernoulli_distribution sparse(0.3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = nd(rng), k = kd(rng), in = wd(rng), out = wd(rng);
    ParameterStore store;
    const auto conv = DiffusionConv::create(store, "c", in, out, k, rng);
    Matrix a = rand_mat(n, n, 0.0, 2.0, rng);
    for (Eigen::Index i = 0; i < a.size(); ++i)
      if (sparse(rng)) a.data()[i] = 0.0;
    if (n > 1) a.row(0).setZero();  // an isolated row exercises 1/0 = 0
    const Matrix x = rand_mat(n, in, -1, 1, rng);
    Tape t(&store);
    const Matrix h = conv.forward(t, t.constant(x), transitions(t.constant(a))).value();
    const auto expect = oracle::diffusion(oracle::to_grid(x), oracle::to_grid(a), flat(store, conv.theta()), out, k);
    CHECK(h.allFinite());
    CHECK(oracle::max_abs_diff(h, expect) < 1e-12);
  }
}

TEST_CASE("diffusion conv special cases") {
  Rng rng(4);
  ParameterStore store;
  const auto k1 = DiffusionConv::create(store, "k1", 2, 2, 1, rng);
  const Matrix x = rand_mat(3, 2, -1, 1, rng);
  Tape t(&store);
  const Matrix h1 = k1.forward(t, t.constant(x), transitions(t.constant(rand_mat(3, 3, 0, 1, rng)))).value();
  const Matrix h2 = k1.forward(t, t.constant(x), transitions(t.constant(rand_mat(3, 3, 0, 1, rng)))).value();
  CHECK((h1 - h2).cwiseAbs().maxCoeff() < 1e-15);

  ParameterStore s2;
  const auto k2 = DiffusionConv::create(s2, "k2", 1, 1, 2, rng);
  const auto th = s2[k2.theta()].value.values();
  Tape t2(&s2);
  const Matrix y = k2.forward(t2, t2.constant(x.col(0)), transitions(t2.constant(Matrix::Identity(3, 3)))).value();
  const double sum = th[0] + th[1] + th[2] + th[3];
  CHECK((y - sum * x.col(0)).cwiseAbs().maxCoeff() < 1e-14);

  const auto tr = transitions(t.constant(Matrix::Zero(3, 3)));
  CHECK(tr.forward.value().isZero(0.0));
  CHECK(tr.reverse.value().isZero(0.0));
}

TEST_CASE("spl residual and relu") {
  Rng rng(6);
  ParameterStore store;
  const auto spl = Spl::create(store, "s", 3, 2, rng);
  store[spl.conv().theta()].value.matrix().setZero();
  const Matrix x = rand_mat(4, 3, -1, 1, rng);
  Tape t(&store);
  const auto g = transitions(t.constant(rand_mat(4, 4, 0, 1, rng)));
  CHECK(spl.forward(t, t.constant(x), g).value() == x.cwiseMax(0.0));
  CHECK(spl.forward(t, t.constant(-x.cwiseAbs()), g).value().isZero(0.0));
}

TEST_CASE("gtu conv matches the sliding-window oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int ks = 1 + trial % 3, len = ks + trial % 4, dim = 1 + trial % 4, n = 2 + trial % 3;
    ParameterStore store;
    const auto gtu = GtuConv::create(store, "g", dim, ks, rng);
    store[gtu.bias()].value.matrix() = rand_mat(1, 2 * dim, -1, 1, rng);
    Tape t(&store);
    std::vector<Var> slices;
    std::vector<oracle::Grid> grids;
    for (int s = 0; s < len; ++s) {
      const Matrix m = rand_mat(n, dim, -1, 1, rng);
      slices.push_back(t.constant(m));
      grids.push_back(oracle::to_grid(m));
    }
    const auto out = gtu.forward(t, slices);
    const auto expect = oracle::gtu(grids, flat(store, gtu.weight()), flat(store, gtu.bias()), ks);
    REQUIRE(out.size() == static_cast<std::size_t>(len - ks + 1));
    for (std::size_t j = 0; j < out.size(); ++j) CHECK(oracle::max_abs_diff(out[j].value(), expect[j]) < 1e-12);
  }
  ParameterStore store;
  const auto gtu = GtuConv::create(store, "g", 2, 3, rng);
  Tape t(&store);
  std::vector<Var> two{t.constant(Matrix::Zero(2, 2)), t.constant(Matrix::Zero(2, 2))};
  CHECK_THROWS_AS(gtu.forward(t, two), ConfigError);
  store[gtu.weight()].value.matrix().setZero();
  two.push_back(t.constant(rand_mat(2, 2, -1, 1, rng)));
  const auto z = gtu.forward(t, two);
  CHECK(z.size() == 1);
  CHECK(z[0].value().isZero(0.0));
}

TEST_CASE("tpl with zero kernel is LayerNorm of the last slices") {
  Rng rng(8);
  ParameterStore store;
  const auto tpl = Tpl::create(store, "t", 4, 2, rng);
  store[tpl.gtu().weight()].value.matrix().setZero();
  Tape t(&store);
  Stream in;
  in.offset = 3;
  for (int s = 0; s < 4; ++s) in.slices.push_back(t.constant(rand_mat(3, 4, -2, 2, rng)));
  const auto out = tpl.forward(t, in);
  CHECK(out.length() == 3);
  CHECK(out.offset == 4);
  for (int j = 0; j < 3; ++j) {
    const Matrix& x = in.slices[static_cast<std::size_t>(j + 1)].value();
    const Matrix& y = out.slices[static_cast<std::size_t>(j)].value();
    for (int i = 0; i < 3; ++i) {
      const double mu = x.row(i).mean();
      const double var = (x.row(i).array() - mu).square().mean();
      for (int c = 0; c < 4; ++c) CHECK(y(i, c) == doctest::Approx((x(i, c) - mu) / std::sqrt(var + 1e-5)).epsilon(1e-12));
    }
  }
}

TEST_CASE("output layer") {
  Rng rng(9);
  ParameterStore store;
  const auto out = OutputLayer::create(store, "o", 2, 3, rng);
  // Averaging kernel: both taps are 0.5 * I.
  auto w = store[out.weight()].value.matrix();
  w.setZero();
  for (int s = 0; s < 2; ++s)
    for (int c = 0; c < 3; ++c) w(s, c * 3 + c) = 0.5;
  Tape t(&store);
  const Matrix a = rand_mat(4, 3, -1, 1, rng), b = rand_mat(4, 3, -1, 1, rng);
  const Matrix y = out.forward(t, {t.constant(a), t.constant(b)}).value();
  CHECK((y - 0.5 * (a + b)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(y.rows() == 4);
  CHECK(y.cols() == 3);
  CHECK_THROWS_AS(out.forward(t, {t.constant(a)}), ConfigError);
}

TEST_CASE("time schedule") {
  StConfig c;
  c.window = 12;
  c.kernel = 6;
  c.blocks = 1;
  const auto s = validate_schedule(c);
  CHECK(s.tpl_inputs == std::vector<int>{12, 7});
  CHECK(s.block_outputs == std::vector<int>{2});
  c.blocks = 3;
  CHECK_THROWS_AS(validate_schedule(c), ConfigError);
  c.kernel = 2;
  CHECK(validate_schedule(c).block_outputs == std::vector<int>{10, 8, 6});
}

TEST_CASE("st block aligns slices with graphs and taps N x D") {
  Rng rng(10);
  StConfig c;
  c.nodes = 3;
  c.hidden = 4;
  c.kernel = 2;
  c.window = 5;
  ParameterStore store;
  const auto block = StBlock::create(store, "b", c, 5, rng);
  Tape t(&store);
  Stream in;
  for (int s = 0; s < 5; ++s) in.slices.push_back(t.constant(rand_mat(3, 4, -1, 1, rng)));
  std::vector<Transitions> graphs;
  for (int s = 0; s < 5; ++s) graphs.push_back(transitions(t.constant(rand_mat(3, 3, 0, 1, rng))));
  const auto out = block.forward(t, in, graphs, 0.0, nullptr);
  CHECK(out.stream.length() == 3);
  CHECK(out.stream.offset == 2);
  CHECK(out.tap.rows() == 3);
  CHECK(out.tap.cols() == 4);

  // A stream starting at window position 2 must only read graphs 2..4.
  const auto late = StBlock::create(store, "late", c, 3, rng);
  Stream tail;
  tail.offset = 2;
  tail.slices.assign(in.slices.begin() + 2, in.slices.end());
  auto poisoned = graphs;
  const Matrix nan = Matrix::Constant(3, 3, std::nan(""));
  poisoned[0] = transitions(t.constant(nan));
  poisoned[1] = transitions(t.constant(nan));
  CHECK(late.forward(t, tail, poisoned, 0.0, nullptr).tap.value().allFinite());
  poisoned[2] = transitions(t.constant(nan));
  CHECK_FALSE(late.forward(t, tail, poisoned, 0.0, nullptr).tap.value().allFinite());
}

TEST_CASE("dropout is inverted and inactive without a generator") {
  Rng rng(12);
  Tape t;
  Stream in;
  in.slices.push_back(t.constant(Matrix::Ones(200, 50)));
  CHECK(dropout(t, in, 0.2, nullptr).slices[0].value() == in.slices[0].value());
  const Matrix m = dropout(t, in, 0.2, &rng).slices[0].value();
  const double dropped = (m.array() == 0.0).cast<double>().mean();
  CHECK(std::abs(dropped - 0.2) <= oracle::binomial_3sigma(0.2, 10000));
  CHECK(((m.array() == 0.0) || (m.array() == 1.25)).all());
}

TEST_CASE("input layer") {
  Rng rng(13);
  ParameterStore store;
  const auto in = InputLayer::create(store, "i", 1, 4, rng);
  store[in.linear.weight].value.matrix() << 1, 0, 0, 0;
  store[in.linear.bias].value.matrix().setZero();
  Tape t(&store);
  const Matrix x = rand_mat(3, 1, -1, 1, rng);
  const Matrix y = in.forward(t, t.constant(x)).value();
  CHECK(y.col(0) == x);
  CHECK(y.rightCols(3).isZero(0.0));
  ParameterStore s2;
  CHECK_THROWS_AS(InputLayer::create(s2, "i", 4, 4, rng), ConfigError);
}
