// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any gating criterion fails. `acceptance 3 5` runs a subset.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "test_util.hpp"
#include "tglrn/checkpoint.hpp"
#include "tglrn/cli.hpp"
#include "tglrn/dyngraph.hpp"
#include "tglrn/gradsuite.hpp"
#include "tglrn/metrics.hpp"
#include "tglrn/roadnet.hpp"
#include "tglrn/stnet.hpp"

namespace d = tglrn::diff;
namespace dg = tglrn::dyngraph;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Matrix rand_mat(Eigen::Index r, Eigen::Index c, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

// ---------------------------------------------------------------------------
// Desk-scale experiment shared by criteria 4 to 8: chain of 8 sensors, 372
// steps (200 training windows of 12 in / 12 out). regime_period 0 keeps the
// coupling constant; the recovery criterion uses the switching default.

data::SynthConfig desk_synth(std::uint64_t seed, int regime_period = 0) {
  data::SynthConfig sc;
  sc.nodes = 8;
  sc.steps = 372;
  sc.noise_std = 0.05;
  sc.regime_period = regime_period;
  sc.seed = seed;
  return sc;
}

ModelConfig desk_model(std::uint64_t seed) {
  ModelConfig c;
  c.nodes = 8;
  c.window = 12;
  c.horizon = 12;
  c.embed_dim = 8;
  c.hop_embed_dim = 8;
  c.hidden = 16;
  c.levels = 3;
  c.diffusion_steps = 2;
  c.kernel = 2;
  c.blocks = 2;
  c.gamma = 0.3;
  c.seed = seed;
  return c;
}

TrainConfig desk_train(std::uint64_t seed, int epochs) {
  TrainConfig t;
  t.batch_size = 16;
  t.max_epochs = epochs;
  t.patience = epochs;
  t.seed = seed;
  return t;
}

double pooled_std(const data::WindowedDataset& ds) {
  double sum = 0.0, sq = 0.0;
  long n = 0;
  for (int w = 0; w < ds.size(); ++w) {
    const Matrix y = ds.target(w);
    sum += y.sum();
    sq += y.squaredNorm();
    n += y.size();
  }
  const double mean = sum / static_cast<double>(n);
  return std::sqrt(sq / static_cast<double>(n) - mean * mean);
}

// ---------------------------------------------------------------------------

Verdict criterion_gradients() {
  const auto t0 = Clock::now();
  const auto cases = run_gradient_suite(1);
  std::ostringstream detail;
  bool ok = suite_passed(cases);
  double worst = 0.0;
  for (const auto& c : cases) {
    worst = std::max(worst, c.report.worst());
    if (!c.report.passed()) {
      detail << c.name << " failed; ";
      c.report.print(std::cerr);
    }
  }

  // Independent re-check of the toy model in test code: a plain central
  // difference on every coordinate against the tape gradient.
  auto p = tiny_problem(3);
  ModelConfig mc = tiny_model(5, 5);
  mc.window = 6;
  mc.horizon = 2;
  mc.nodes = 5;
  mc.hidden = 8;
  Model model(mc, p.synth.network);
  const auto windows = data::make_windows(p.series, 6, 2);
  const Matrix input = windows[0].input(0), target = windows[0].target(0);
  auto& store = model.params();
  auto loss_of = [&] {
    Tape t(&store);
    return sample_loss(t, model, input, target, p.scaler, ForwardOptions{}, false).value()(0, 0);
  };
  Tape t(&store);
  Var loss = sample_loss(t, model, input, target, p.scaler, ForwardOptions{}, false);
  t.backward(loss);
  d::GradientSet analytic(store);
  t.accumulate_param_grads(analytic);
  double own_worst = 0.0;
  const double h = 1e-5;
  for (int id = 0; id < store.size(); ++id) {
    auto vals = store[id].value.values();
    for (std::size_t k = 0; k < vals.size(); ++k) {
      const double keep = vals[k];
      vals[k] = keep + h;
      const double up = loss_of();
      vals[k] = keep - h;
      const double down = loss_of();
      vals[k] = keep;
      const double numeric = (up - down) / (2 * h);
      const double a = analytic[id].data()[k];
      own_worst = std::max(own_worst, std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6}));
    }
  }
  const bool own_ok = own_worst < 1e-4;
  const double secs = seconds_since(t0);
  detail << cases.size() << " cases, worst rel err " << worst << "; independent toy check " << own_worst << "; "
         << secs << " s (limit 120)";
  return {ok && own_ok && secs < 120.0, detail.str()};
}

Verdict criterion_oracles() {
  Rng rng(20240601);
  double diff_worst = 0.0, gtu_worst = 0.0;
  long fw_mismatch = 0;
  std::uniform_int_distribution<int> nd(1, 6), kd(1, 3), wd(1, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = nd(rng), k = kd(rng), in = wd(rng), out = wd(rng);
    ParameterStore store;
    const auto conv = stnet::DiffusionConv::create(store, "c", in, out, k, rng);
    Matrix a = rand_mat(n, n, 0.0, 1.0, rng);
    if (trial % 5 == 0) a.row(0).setZero();
    const Matrix x = rand_mat(n, in, -1, 1, rng);
    Tape t(&store);
    const Matrix hval = conv.forward(t, t.constant(x), stnet::transitions(t.constant(a))).value();
    const auto th = store[conv.theta()].value.values();
    const auto expect = oracle::diffusion(oracle::to_grid(x), oracle::to_grid(a), {th.begin(), th.end()}, out, k);
    diff_worst = std::max(diff_worst, oracle::max_abs_diff(hval, expect));
  }
  for (int trial = 0; trial < 50; ++trial) {
    const int ks = 1 + trial % 3, len = ks + trial % 5, dim = 1 + trial % 4, n = 1 + trial % 6;
    ParameterStore store;
    const auto gtu = stnet::GtuConv::create(store, "g", dim, ks, rng);
    store[gtu.bias()].value.matrix() = rand_mat(1, 2 * dim, -1, 1, rng);
    Tape t(&store);
    std::vector<Var> slices;
    std::vector<oracle::Grid> grids;
    for (int s = 0; s < len; ++s) {
      const Matrix m = rand_mat(n, dim, -2, 2, rng);
      slices.push_back(t.constant(m));
      grids.push_back(oracle::to_grid(m));
    }
    const auto outv = gtu.forward(t, slices);
    const auto w = store[gtu.weight()].value.values();
    const auto b = store[gtu.bias()].value.values();
    const auto expect = oracle::gtu(grids, {w.begin(), w.end()}, {b.begin(), b.end()}, ks);
    for (std::size_t j = 0; j < outv.size(); ++j)
      gtu_worst = std::max(gtu_worst, oracle::max_abs_diff(outv[j].value(), expect[j]));
  }
  std::uniform_int_distribution<int> gd(1, 15);
  std::uniform_real_distribution<double> dens(0.03, 0.35);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = gd(rng);
    const auto pairs = oracle::random_digraph(n, dens(rng), rng);
    std::vector<roadnet::Edge> edges;
    for (auto [a, b] : pairs) edges.push_back({a, b});
    const auto net = roadnet::build_asp(edges, n);
    const auto fw = oracle::floyd_warshall(n, pairs, false);
    const auto dist = roadnet::hop_distances(net);
    for (int k = 1; k <= 5; ++k) {
      const Matrix s = roadnet::structure_info(dist, k);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) fw_mismatch += s(i, j) != (fw[i][j] <= k ? 1.0 : 0.0);
    }
  }
  std::ostringstream os;
  os << "diffusion max err " << diff_worst << ", gtu max err " << gtu_worst << ", structure_info mismatches "
     << fw_mismatch;
  return {diff_worst < 1e-12 && gtu_worst < 1e-12 && fw_mismatch == 0, os.str()};
}

Verdict criterion_stochastic() {
  std::ostringstream os;
  bool ok = true;
  const long edges = 100000;
  const std::vector<double> gammas{0.05, 0.1, 0.2, 0.3};
  for (std::size_t g = 0; g < gammas.size(); ++g) {
    Rng rng = make_rng(7, 1, g);
    const double rate = dg::sample_edge_mask(1, edges, gammas[g], rng).sum() / static_cast<double>(edges);
    const double band = oracle::binomial_3sigma(gammas[g], edges);
    ok = ok && std::abs(rate - gammas[g]) <= band;
    os << "keep(" << gammas[g] << ")=" << rate << " ";
  }
  // Median property: P(p > 0.5) equals the edge mean.
  Rng rng = make_rng(7, 2);
  const long draws = 100000;
  for (double w : {0.15, 0.5, 0.7}) {
    Tape t;
    Matrix delta(1, draws);
    for (long k = 0; k < draws; ++k) delta(0, k) = uniform_open(rng);
    const Matrix p = dg::gumbel_relax(t.constant(Matrix::Constant(1, draws, w)), 1.0, delta).value();
    const double frac = (p.array() > 0.5).cast<double>().mean();
    ok = ok && std::abs(frac - w) <= oracle::binomial_3sigma(w, draws);
    os << "P(p>0.5|" << w << ")=" << frac << " ";
  }
  // Straight-through hop draws follow the selector probabilities.
  Matrix probs(1, 4);
  probs << 0.1, 0.2, 0.3, 0.4;
  std::vector<long> count(4, 0);
  const long hops = 20000;
  Rng hr = make_rng(7, 3);
  for (long k = 0; k < hops; ++k) {
    Tape t;
    const auto sel = dg::select_hops(t.constant(probs), 1.0, dg::Mode::kTrain, dg::HopEstimator::kStraightThrough, &hr);
    ++count[static_cast<std::size_t>(sel.hops[0] - 1)];
  }
  os << "hop freq";
  for (int l = 0; l < 4; ++l) {
    const double f = count[l] / static_cast<double>(hops);
    ok = ok && std::abs(f - probs(0, l)) <= oracle::binomial_3sigma(probs(0, l), hops);
    os << " " << f;
  }
  return {ok, os.str()};
}

Verdict criterion_structure() {
  const auto p = make_problem(desk_synth(1), 12, 12);
  Model model(desk_model(1), p.synth.network);
  long nonzero = 0, outside = 0, out_of_range = 0, steps = 0;
  double worst_mean = 0.0, worst_std = 0.0;
  const auto& group = model.graphs().group();
  GraphObserver obs = [&](int, int, int, const dg::GraphTrace& trace) {
    for (const auto& s : trace.steps) {
      ++steps;
      const Matrix& a = s.adjacency.value();
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
          const double v = a(i, j);
          if (v < 0.0 || v > 1.0) ++out_of_range;
          if (v != 0.0) {
            ++nonzero;
            if (group.mask(s.hops[static_cast<std::size_t>(i)])(i, j) != 1.0) ++outside;
          }
        }
      const Matrix& z = s.normalized_logits;
      const double mu = z.mean();
      worst_mean = std::max(worst_mean, std::abs(mu));
      worst_std = std::max(worst_std, std::abs(std::sqrt((z.array() - mu).square().mean()) - model.config().alpha));
    }
  };
  train(model, p.splits[0], p.splits[1], p.scaler, desk_train(1, 5), obs);
  std::ostringstream os;
  os << steps << " graphs, " << nonzero << " nonzero entries, " << outside << " outside mask, " << out_of_range
     << " outside [0,1], max |mean| " << worst_mean << ", max |std-1| " << worst_std;
  return {steps > 0 && outside == 0 && out_of_range == 0 && worst_mean < 1e-9 && worst_std < 1e-9, os.str()};
}

struct OverfitRun {
  double threshold = 0.0;
  double final_mae = 0.0;
  int epochs = 0;
  bool reached = false;
};

// Trains for up to 100 epochs, stopping once the eval-mode train-set MAE
// (original units) falls below 0.15 x the pooled std of the train targets.
OverfitRun train_overfit(std::uint64_t seed) {
  OverfitRun run;
  const auto p = make_problem(desk_synth(seed), 12, 12);
  Model model(desk_model(seed), p.synth.network);
  run.threshold = 0.15 * pooled_std(p.splits[0]);
  EpochCallback cb = [&](const EpochRecord& rec, const Model& m) {
    run.epochs = rec.epoch;
    run.final_mae = evaluate(m, p.splits[0], p.scaler).overall.mae;
    run.reached = run.final_mae < run.threshold;
    return !run.reached;
  };
  train(model, p.splits[0], p.splits[1], p.scaler, desk_train(seed, 100), {}, cb);
  return run;
}

Verdict criterion_overfit() {
  const auto t0 = Clock::now();
  std::ostringstream os;
  int reached = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = train_overfit(seed);
    reached += r.reached;
    os << "seed " << seed << ": MAE " << r.final_mae << " vs " << r.threshold << " @" << r.epochs << (r.reached ? " ok" : " miss") << "; ";
  }
  const double secs = seconds_since(t0);
  os << reached << "/5 seeds, " << secs << " s (limit 600)";
  return {reached >= 4 && secs < 600.0, os.str()};
}

Verdict criterion_monotone() {
  std::ostringstream os;
  int monotone = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto p = make_problem(desk_synth(seed), 12, 12);
    Model model(desk_model(seed), p.synth.network);
    const auto h = train(model, p.splits[0], p.splits[1], p.scaler, desk_train(seed, 5));
    bool down = true;
    for (std::size_t e = 1; e < h.epochs.size(); ++e) down = down && h.epochs[e].train_loss < h.epochs[e - 1].train_loss;
    monotone += down;
  }
  os << monotone << "/10 seeds with strictly decreasing train MAE over epochs 1-5";
  return {monotone >= 9, os.str()};
}

constexpr int kRecoveryEpochs = 40;

Verdict criterion_recovery() {
  std::ostringstream os;
  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto p = make_problem(desk_synth(seed, 24), 12, 12);
    Model model(desk_model(seed), p.synth.network);
    auto tc = desk_train(seed, kRecoveryEpochs);
    tc.patience = 15;
    train(model, p.splits[0], p.splits[1], p.scaler, tc);
    const int n = p.synth.flows.nodes();
    std::set<std::pair<int, int>> ever;
    std::set<std::tuple<int, int, int>> active;
    for (const auto& c : p.synth.planted) {
      ever.insert({c.from, c.to});
      active.insert({c.t, c.from, c.to});
    }
    const auto& a_sp = p.synth.network.a_sp;
    auto never_coupled = [&](int i, int j) {
      return a_sp(i, j) == 0.0 && a_sp(j, i) == 0.0 && !ever.count({i, j}) && !ever.count({j, i});
    };
    // Per test window: mean w-bar over planted-active (from, to) entries and
    // over never-coupled non-neighbour entries; then averaged over windows
    // that contain at least one planted-active pair.
    double planted = 0.0, other = 0.0, reverse = 0.0;
    int counted = 0;
    const auto& test = p.splits[2];
    for (int w = 0; w < test.size(); ++w) {
      Tape t(&model.params());
      const auto res = model.forward(t, p.scaler.apply(test.input(w)), ForwardOptions{});
      double ps = 0.0, rs = 0.0, os_ = 0.0;
      long pn = 0, on = 0;
      for (std::size_t s = 0; s < res.graphs.steps.size(); ++s) {
        const int time = test.start(w) + static_cast<int>(s);
        const Matrix& mean = res.graphs.steps[s].edge_mean;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            if (active.count({time, i, j})) {
              ps += mean(i, j);
              rs += mean(j, i);
              ++pn;
            } else if (never_coupled(i, j)) {
              os_ += mean(i, j);
              ++on;
            }
          }
      }
      if (pn == 0 || on == 0) continue;
      planted += ps / static_cast<double>(pn);
      reverse += rs / static_cast<double>(pn);
      other += os_ / static_cast<double>(on);
      ++counted;
    }
    if (counted > 0) {
      planted /= counted;
      reverse /= counted;
      other /= counted;
    }
    wins += counted > 0 && planted > other;
    os << "seed " << seed << ": planted " << planted << " vs non-neighbour " << other << " (reverse orientation "
       << reverse << ", " << counted << " windows); ";
  }
  os << wins << "/5 seeds";
  return {wins >= 4, os.str()};
}

Verdict criterion_baseline() {
  auto flat = std::make_shared<data::FlowSeries>();
  flat->values = Matrix::Constant(200, 4, 42.0);
  const auto fs = data::make_windows(flat, 12, 12);
  double flat_mae = 0.0;
  for (const auto& s : fs) flat_mae = std::max(flat_mae, baseline_ha(s, 1.0).overall.mae);

  auto ramp = std::make_shared<data::FlowSeries>();
  ramp->values.resize(300, 3);
  const double slopes[3] = {1.0, 0.25, -3.0};
  for (int t = 0; t < 300; ++t)
    for (int i = 0; i < 3; ++i) ramp->values(t, i) = 1000.0 + slopes[i] * t;
  const auto rs = data::make_windows(ramp, 12, 12);
  double worst = 0.0;
  for (const auto& s : rs) {
    const auto rep = baseline_ha(s, 1.0);
    for (int h = 1; h <= 12; ++h) {
      double expect = 0.0;
      for (double sl : slopes) expect += oracle::ha_ramp_mae(12, h, sl) / 3.0;
      worst = std::max(worst, std::abs(rep.per_horizon[static_cast<std::size_t>(h - 1)].mae - expect));
    }
  }
  std::ostringstream os;
  os << "constant-series MAE " << flat_mae << ", ramp per-horizon max deviation " << worst;
  return {flat_mae == 0.0 && worst < 1e-9, os.str()};
}

Verdict criterion_determinism() {
  TempDir a, b;
  auto args = [](const TempDir& dir, const TempDir& data) {
    return std::vector<std::string>{"--out_dir", dir.path().string(), "--edges", (data / "edges.csv").string(),
                                    "--flows", (data / "flow.csv").string(), "--input_len", "12", "--horizon", "12",
                                    "--D", "16", "--d", "8", "--m", "8", "--L", "3", "--n_blocks", "2",
                                    "--batch_size", "16", "--max_epochs", "3", "--seed", "11", "--threads", "2"};
  };
  std::ostringstream sink;
  auto run = [&](const std::string& cmd, std::vector<std::string> rest) {
    rest.insert(rest.begin(), cmd);
    return cli::run(rest, sink, sink);
  };
  bool ok = run("synth", {"--out_dir", a.path().string()}) == 0;
  ok = ok && run("train", args(a, a)) == 0 && run("eval", args(a, a)) == 0;
  ok = ok && run("train", args(b, a)) == 0 && run("eval", args(b, a)) == 0;
  const bool same_history = ok && read_file(a / "history.csv") == read_file(b / "history.csv");
  // The checkpoints embed their own out_dir, so compare the stored tensors.
  bool same_ckpt = ok;
  if (ok) {
    const auto ca = checkpoint::load(a / "model.ckpt");
    const auto cb = checkpoint::load(b / "model.ckpt");
    same_ckpt = ca.params.size() == cb.params.size();
    for (std::size_t k = 0; same_ckpt && k < ca.params.size(); ++k) {
      const auto va = ca.params[k].value.values();
      const auto vb = cb.params[k].value.values();
      same_ckpt = ca.params[k].name == cb.params[k].name && ca.params[k].value.shape() == cb.params[k].value.shape() &&
                  std::equal(va.begin(), va.end(), vb.begin(), vb.end());
    }
  }

  // Library-level round trip: restore into a freshly initialised model.
  const auto p = make_problem(desk_synth(4), 12, 12);
  Model trained(desk_model(4), p.synth.network);
  train(trained, p.splits[0], p.splits[1], p.scaler, desk_train(4, 2));
  checkpoint::save(a / "rt.ckpt", trained, "", p.scaler);
  Model fresh(desk_model(99), p.synth.network);
  const auto ck = checkpoint::load(a / "rt.ckpt");
  checkpoint::restore(fresh, ck);
  const bool same_metrics = evaluate(fresh, p.splits[2], ck.scaler) == evaluate(trained, p.splits[2], p.scaler);
  std::ostringstream os;
  os << "history.csv identical: " << same_history << ", checkpoint tensors bitwise equal: " << same_ckpt
     << ", round-trip test metrics bitwise equal: " << same_metrics
     << ", metrics.csv identical: " << (ok && read_file(a / "metrics.csv") == read_file(b / "metrics.csv"));
  return {ok && same_history && same_ckpt && same_metrics &&
              read_file(a / "metrics.csv") == read_file(b / "metrics.csv"),
          os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> all = {
      {1, "gradient suite", criterion_gradients},
      {2, "oracle equivalence", criterion_oracles},
      {3, "stochastic contracts", criterion_stochastic},
      {4, "structural invariants", criterion_structure},
      {5, "synthetic overfit", criterion_overfit},
      {51, "train MAE decreases over the first 5 epochs", criterion_monotone},
      {6, "planted-dependency recovery", criterion_recovery},
      {7, "baseline sanity", criterion_baseline},
      {8, "determinism and persistence", criterion_determinism},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const std::string label = c.id == 51 ? "5b" : std::to_string(c.id);
    std::printf("[%s] criterion %s %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", label.c_str(), c.name,
                v.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    failed += !v.pass;
  }
  if (only.empty() || only.count(9))
    std::printf("[SKIP] criterion 9 full-scale PeMS08 run: optional extended experiment, not gating; needs the "
                "PeMS08 dataset and hours of CPU time\n");
  return failed == 0 ? 0 : 1;
}
