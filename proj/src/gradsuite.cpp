#include "tglrn/gradsuite.hpp"

#include <functional>
#include <iomanip>
#include <ostream>

#include "tglrn/dyngraph.hpp"
#include "tglrn/model.hpp"
#include "tglrn/stnet.hpp"
#include "tglrn/trainer.hpp"

namespace tglrn {

namespace d = diff;

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

ParamId add_input(ParameterStore& store, const std::string& name, int rows, int cols, double lo, double hi,
                  Rng& rng) {
  const ParamId id = store.add(name, {rows, cols});
  store[id].value.matrix() = random_matrix(rows, cols, lo, hi, rng);
  return id;
}

// Generic scalar readout so no gradient entry is structurally zero.
Var readout(Var out, const Matrix& weights) { return d::sum_all(d::mul_const(out, weights)); }

roadnet::StructureInfoGroup chain_group(int nodes, int levels) {
  std::vector<roadnet::Edge> edges;
  for (int i = 0; i + 1 < nodes; ++i) edges.push_back({i, i + 1});
  const auto net = roadnet::build_asp(edges, nodes);
  return roadnet::structure_group(roadnet::hop_distances(net), levels);
}

using CaseFn = std::function<d::GradcheckReport(Rng&, const d::GradcheckOptions&)>;

d::GradcheckReport input_layer_case(Rng& rng, const d::GradcheckOptions& opt) {
  ParameterStore store;
  const auto layer = stnet::InputLayer::create(store, "input", 1, 8, rng);
  const ParamId x = add_input(store, "x", 4, 1, -2, 2, rng);
  const Matrix w = random_matrix(4, 8, -1, 1, rng);
  return d::finite_diff_check([&](Tape& t) { return readout(layer.forward(t, t.param(x)), w); }, store, opt);
}

d::GradcheckReport gru_case(Rng& rng, const d::GradcheckOptions& opt) {
  ParameterStore store;
  const auto cell = dyngraph::GruCell::create(store, "gru", 4, 1, 8, rng);
  const ParamId e = add_input(store, "state", 4, 4, -1, 1, rng);
  const ParamId x = add_input(store, "x", 4, 1, -2, 2, rng);
  const Matrix w = random_matrix(4, 4, -1, 1, rng);
  return d::finite_diff_check([&](Tape& t) { return readout(cell.step(t, t.param(e), t.param(x)), w); }, store,
                              opt);
}

d::GradcheckReport gating_case(Rng& rng, const d::GradcheckOptions& opt) {
  ParameterStore store;
  const auto proj = Linear::create(store, "gate", 4, 4, rng);
  const ParamId e = add_input(store, "embedding", 4, 4, -1, 1, rng);
  const ParamId b = add_input(store, "base", 4, 4, -1, 1, rng);
  const Matrix w = random_matrix(4, 4, -1, 1, rng);
  return d::finite_diff_check(
      [&](Tape& t) { return readout(dyngraph::gate(t, t.param(e), t.param(b), proj), w); }, store, opt);
}

d::GradcheckReport edge_logits_case(Rng& rng, const d::GradcheckOptions& opt) {
  ParameterStore store;
  const auto head = Linear::create(store, "head", 8, 1, rng);
  const ParamId st = add_input(store, "st", 4, 4, -1, 1, rng);
  const ParamId ed = add_input(store, "ed", 4, 4, -1, 1, rng);
  const Matrix w = random_matrix(4, 4, -1, 1, rng);
  return d::finite_diff_check(
      [&](Tape& t) { return readout(dyngraph::edge_logits(t, t.param(st), t.param(ed), head), w); }, store, opt);
}

d::GradcheckReport normalize_case(Rng& rng, const d::GradcheckOptions& opt) {
  ParameterStore store;
  const ParamId logits = add_input(store, "logits", 4, 4, -3, 3, rng);
  const Matrix w = random_matrix(4, 4, -1, 1, rng);
  return d::finite_diff_check(
      [&](Tape& t) { return readout(dyngraph::edge_means(dyngraph::normalize_logits(t.param(logits), 1.0)), w); },
      store, opt);
}

d::GradcheckReport gumbel_case(Rng& rng, const d::GradcheckOptions& opt) {
  ParameterStore store;
  const ParamId mean = add_input(store, "edge_mean", 4, 4, 0.1, 0.9, rng);
  const Matrix delta = random_matrix(4, 4, 0.05, 0.95, rng);
  const Matrix w = random_matrix(4, 4, -1, 1, rng);
  const auto sample_seed = rng();
  return d::finite_diff_check(
      [&](Tape& t) {
        Rng local(sample_seed);
        Var p = dyngraph::gumbel_relax(t.param(mean), 0.5, delta);
        return readout(dyngraph::edge_sample(p, 0.5, local), w);
      },
      store, opt);
}

d::GradcheckReport hop_selector_case(Rng& rng, const d::GradcheckOptions& opt) {
  ParameterStore store;
  const auto selector = dyngraph::HopSelector::create(store, "hop", 4, 3, rng);
  const ParamId e = add_input(store, "embedding", 4, 4, -1, 1, rng);
  const ParamId raw = add_input(store, "raw", 4, 4, 0.05, 0.95, rng);
  const auto group = chain_group(4, 3);
  const Matrix wp = random_matrix(4, 3, -1, 1, rng);
  const Matrix wa = random_matrix(4, 4, -1, 1, rng);
  const auto noise_seed = rng();
  return d::finite_diff_check(
      [&](Tape& t) {
        Rng local(noise_seed);
        Var probs = selector.probs(t, t.param(e));
        auto sel = dyngraph::select_hops(probs, 1.0, dyngraph::Mode::kTrain, dyngraph::HopEstimator::kRelaxed, &local);
        Var pruned = dyngraph::prune(t.param(raw), sel.weights, group);
        return d::add(readout(probs, wp), readout(pruned, wa));
      },
      store, opt);
}

d::GradcheckReport diffusion_case(Rng& rng, const d::GradcheckOptions& opt) {
  ParameterStore store;
  const auto conv = stnet::DiffusionConv::create(store, "conv", 3, 3, 3, rng);
  const ParamId x = add_input(store, "x", 5, 3, -1, 1, rng);
  const ParamId a = add_input(store, "adjacency", 5, 5, 0.1, 1.0, rng);
  const Matrix w = random_matrix(5, 3, -1, 1, rng);
  return d::finite_diff_check(
      [&](Tape& t) { return readout(conv.forward(t, t.param(x), stnet::transitions(t.param(a))), w); }, store, opt);
}

d::GradcheckReport spl_case(Rng& rng, const d::GradcheckOptions& opt) {
  ParameterStore store;
  const auto spl = stnet::Spl::create(store, "spl", 3, 2, rng);
  const ParamId x = add_input(store, "x", 5, 3, -1, 1, rng);
  const ParamId a = add_input(store, "adjacency", 5, 5, 0.1, 1.0, rng);
  const Matrix w = random_matrix(5, 3, -1, 1, rng);
  return d::finite_diff_check(
      [&](Tape& t) { return readout(spl.forward(t, t.param(x), stnet::transitions(t.param(a))), w); }, store, opt);
}

std::vector<ParamId> add_slices(ParameterStore& store, int count, Rng& rng) {
  std::vector<ParamId> ids;
  for (int s = 0; s < count; ++s) ids.push_back(add_input(store, "x" + std::to_string(s), 5, 3, -1, 1, rng));
  return ids;
}

std::vector<Var> slice_vars(Tape& t, const std::vector<ParamId>& ids) {
  std::vector<Var> out;
  for (ParamId id : ids) out.push_back(t.param(id));
  return out;
}

Var readout_all(const std::vector<Var>& outs, const std::vector<Matrix>& weights) {
  Var total = readout(outs[0], weights[0]);
  for (std::size_t i = 1; i < outs.size(); ++i) total = d::add(total, readout(outs[i], weights[i]));
  return total;
}

d::GradcheckReport gtu_case(Rng& rng, const d::GradcheckOptions& opt) {
  ParameterStore store;
  const auto gtu = stnet::GtuConv::create(store, "gtu", 3, 2, rng);
  const auto xs = add_slices(store, 4, rng);
  std::vector<Matrix> w;
  for (int s = 0; s < 3; ++s) w.push_back(random_matrix(5, 3, -1, 1, rng));
  return d::finite_diff_check([&](Tape& t) { return readout_all(gtu.forward(t, slice_vars(t, xs)), w); }, store,
                              opt);
}

d::GradcheckReport tpl_case(Rng& rng, const d::GradcheckOptions& opt) {
  ParameterStore store;
  const auto tpl = stnet::Tpl::create(store, "tpl", 3, 2, rng);
  // Move the LayerNorm affine parameters away from their 1 / 0 initial values.
  for (int id = 0; id < store.size(); ++id)
    if (store[id].name.find("ln_") != std::string::npos)
      store[id].value.matrix() += random_matrix(1, store[id].value.size(), -0.5, 0.5, rng);
  const auto xs = add_slices(store, 4, rng);
  std::vector<Matrix> w;
  for (int s = 0; s < 3; ++s) w.push_back(random_matrix(5, 3, -1, 1, rng));
  return d::finite_diff_check(
      [&](Tape& t) {
        stnet::Stream in{slice_vars(t, xs), 0};
        return readout_all(tpl.forward(t, in).slices, w);
      },
      store, opt);
}

d::GradcheckReport output_layer_case(Rng& rng, const d::GradcheckOptions& opt) {
  ParameterStore store;
  const auto out = stnet::OutputLayer::create(store, "output", 3, 3, rng);
  const auto xs = add_slices(store, 3, rng);
  const Matrix w = random_matrix(5, 3, -1, 1, rng);
  return d::finite_diff_check([&](Tape& t) { return readout(out.forward(t, slice_vars(t, xs)), w); }, store, opt);
}

d::GradcheckReport head_case(Rng& rng, const d::GradcheckOptions& opt) {
  ParameterStore store;
  const auto head = PredictionHead::create(store, 6, 2, 1, rng);
  store[head.bias].value.matrix() = random_matrix(2, 1, -1, 1, rng);
  const ParamId o1 = add_input(store, "tap0", 4, 3, -1, 1, rng);
  const ParamId o2 = add_input(store, "tap1", 4, 3, -1, 1, rng);
  const Matrix w = random_matrix(4, 2, -1, 1, rng);
  return d::finite_diff_check([&](Tape& t) { return readout(head.forward(t, {t.param(o1), t.param(o2)}), w); },
                              store, opt);
}

struct Toy {
  ModelConfig config;
  Model model;
  Matrix input;
  Matrix target;
  data::Scaler scaler;
};

Toy make_toy(Rng& rng) {
  ModelConfig c;
  c.nodes = 4;
  c.window = 6;
  c.horizon = 2;
  c.embed_dim = 4;
  c.hop_embed_dim = 4;
  c.hidden = 8;
  c.levels = 2;
  c.diffusion_steps = 2;
  c.kernel = 2;
  c.blocks = 1;
  c.dropout = 0.1;
  c.seed = rng();
  std::vector<roadnet::Edge> edges{{0, 1}, {1, 2}, {2, 3}};
  const auto net = roadnet::build_asp(edges, 4);
  Model model(c, net);
  const Matrix history = random_matrix(20, 4, 2.0, 8.0, rng);
  return Toy{c, std::move(model), random_matrix(6, 4, 2.0, 8.0, rng), random_matrix(2, 4, 2.0, 8.0, rng),
             data::Scaler::fit(history)};
}

d::GradcheckReport end_to_end_case(Rng& rng, const d::GradcheckOptions& opt, dyngraph::Mode mode) {
  Toy toy = make_toy(rng);
  // The head starts at zero bias; perturb every parameter slightly so no
  // tensor sits at a special point.
  auto& store = toy.model.params();
  for (int id = 0; id < store.size(); ++id)
    store[id].value.matrix() += random_matrix(store[id].value.view_rows(), store[id].value.view_cols(), -0.05, 0.05, rng);
  const auto noise_seed = rng();
  return d::finite_diff_check(
      [&](Tape& t) {
        Rng local(noise_seed);
        ForwardOptions fo;
        fo.mode = mode;
        fo.hop_estimator = dyngraph::HopEstimator::kRelaxed;
        fo.rng = &local;
        return sample_loss(t, toy.model, toy.input, toy.target, toy.scaler, fo, false);
      },
      store, opt);
}

}  // namespace

std::vector<SuiteCase> run_gradient_suite(std::uint64_t seed, const d::GradcheckOptions& options) {
  const std::vector<std::pair<std::string, CaseFn>> cases = {
      {"input_layer", input_layer_case},
      {"gru_cell", gru_case},
      {"gating", gating_case},
      {"edge_logits", edge_logits_case},
      {"normalize_sigmoid", normalize_case},
      {"gumbel_path", gumbel_case},
      {"hop_selector", hop_selector_case},
      {"diffusion_conv", diffusion_case},
      {"spl", spl_case},
      {"gtu", gtu_case},
      {"tpl_layernorm", tpl_case},
      {"output_layer", output_layer_case},
      {"prediction_head", head_case},
      {"toy_model_train", [](Rng& r, const d::GradcheckOptions& o) {
         return end_to_end_case(r, o, dyngraph::Mode::kTrain);
       }},
      {"toy_model_eval", [](Rng& r, const d::GradcheckOptions& o) {
         return end_to_end_case(r, o, dyngraph::Mode::kEval);
       }},
  };
  std::vector<SuiteCase> out;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    Rng rng = make_rng(seed, 0x9c, i);
    out.push_back({cases[i].first, cases[i].second(rng, options)});
  }
  return out;
}

bool suite_passed(const std::vector<SuiteCase>& cases) {
  for (const auto& c : cases)
    if (!c.report.passed()) return false;
  return true;
}

void print_suite(std::ostream& os, const std::vector<SuiteCase>& cases) {
  for (const auto& c : cases) {
    os << std::left << std::setw(20) << c.name << (c.report.passed() ? " ok  " : " FAIL") << "  max rel err "
       << std::scientific << std::setprecision(3) << c.report.worst() << std::defaultfloat << '\n';
    if (!c.report.passed()) c.report.print(os);
  }
}

}  // namespace tglrn
