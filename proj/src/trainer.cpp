#include "tglrn/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <thread>

#include "tglrn/error.hpp"

namespace tglrn {

namespace d = tglrn::diff;

namespace {

// Gradients are summed per fixed-size chunk of a batch, then chunks are summed
// in order, so the result does not depend on the worker count.
constexpr int kChunk = 8;

// Stream tags for make_rng.
constexpr std::uint32_t kShuffleStream = 0x5eed;
constexpr std::uint32_t kSampleStream = 0x7a1e;
constexpr std::uint32_t kEvalStream = 0xe7a1;

}  // namespace

void save_history_csv(const std::filesystem::path& path, const TrainHistory& history) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "epoch,train_loss,val_mae,val_rmse,val_mape\n" << std::setprecision(17);
  for (const auto& e : history.epochs)
    out << e.epoch << ',' << e.train_loss << ',' << e.val.mae << ',' << e.val.rmse << ',' << e.val.mape << '\n';
}

Adam::Adam(const d::ParameterStore& store, double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon), m_(store), v_(store) {}

void Adam::step(d::ParameterStore& store, const d::GradientSet& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (d::ParamId id = 0; id < store.size(); ++id) {
    const auto& g = grads[id];
    auto& m = m_[id];
    auto& v = v_[id];
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    auto w = store[id].value.matrix();
    w.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  }
}

Var sample_loss(Tape& tape, const Model& model, const Matrix& input, const Matrix& target, const data::Scaler& scaler,
                const ForwardOptions& options, bool normalized, dyngraph::GraphTrace* trace) {
  auto result = model.forward(tape, scaler.apply(input), options);
  Var loss = normalized ? mae_loss(result.prediction, scaler.apply(target).transpose())
                        : mae_loss(denormalize(result.prediction, scaler), target.transpose());
  if (trace) *trace = std::move(result.graphs);
  return loss;
}

Matrix predict(const Model& model, const Matrix& input, const data::Scaler& scaler, const EvalOptions& options,
               int window_key) {
  Tape tape(&model.params());
  ForwardOptions fwd;
  fwd.mode = dyngraph::Mode::kEval;
  Rng rng = make_rng(options.seed, kEvalStream, window_key);
  if (options.eval_sampling) {
    fwd.eval_sampling = true;
    fwd.rng = &rng;
  }
  auto result = model.forward(tape, scaler.apply(input), fwd);
  return scaler.invert(result.prediction.value().transpose());
}

MetricsReport evaluate(const Model& model, const data::WindowedDataset& split, const data::Scaler& scaler,
                       const EvalOptions& options) {
  if (split.empty()) throw InputError(std::string("evaluate: empty ") + data::split_name(split.split()) + " split");
  MetricsAccumulator acc(split.horizon(), options.mape_threshold);
  for (int w = 0; w < split.size(); ++w) acc.add(predict(model, split.input(w), scaler, options, split.start(w)), split.target(w));
  return acc.report();
}

namespace {

struct ChunkResult {
  d::GradientSet grads;
  double loss = 0.0;
};

std::string first_nonfinite(const d::ParameterStore& store, const d::GradientSet& grads) {
  for (d::ParamId id = 0; id < store.size(); ++id)
    if (!grads[id].allFinite()) return store[id].name;
  return "<none>";
}

}  // namespace

TrainHistory train(Model& model, const data::WindowedDataset& train_split, const data::WindowedDataset& val_split,
                   const data::Scaler& scaler, const TrainConfig& config, const GraphObserver& observer,
                   const EpochCallback& on_epoch) {
  if (train_split.empty()) throw InputError("train: empty training split");
  if (val_split.empty()) throw InputError("train: empty validation split");
  if (config.batch_size < 1 || config.max_epochs < 0 || config.patience < 1 || config.threads < 1)
    throw ConfigError("train: batch_size, patience and threads must be positive");

  auto& store = model.params();
  Adam adam(store, config.learning_rate, config.beta1, config.beta2, config.epsilon);
  EvalOptions eval_opts{config.mape_threshold, config.eval_sampling, config.seed};

  TrainHistory history;
  history.best_val_mae = std::numeric_limits<double>::infinity();
  std::vector<d::Tensor> best(static_cast<std::size_t>(store.size()));
  for (d::ParamId id = 0; id < store.size(); ++id) best[static_cast<std::size_t>(id)] = store[id].value;

  std::vector<int> order(static_cast<std::size_t>(train_split.size()));
  const int threads = observer ? 1 : config.threads;
  int since_best = 0;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng = make_rng(config.seed, kShuffleStream, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss = 0.0;
    const int n = static_cast<int>(order.size());
    for (int batch_start = 0, batch = 0; batch_start < n; batch_start += config.batch_size, ++batch) {
      const int batch_end = std::min(n, batch_start + config.batch_size);
      const int chunks = (batch_end - batch_start + kChunk - 1) / kChunk;
      std::vector<ChunkResult> results(static_cast<std::size_t>(chunks));

      auto run_chunk = [&](int c) {
        auto& res = results[static_cast<std::size_t>(c)];
        res.grads = d::GradientSet(store);
        const int lo = batch_start + c * kChunk;
        const int hi = std::min(batch_end, lo + kChunk);
        for (int pos = lo; pos < hi; ++pos) {
          const int w = order[static_cast<std::size_t>(pos)];
          Rng rng = make_rng(config.seed, kSampleStream, epoch, pos);
          ForwardOptions fwd;
          fwd.mode = dyngraph::Mode::kTrain;
          fwd.rng = &rng;
          Tape tape(&store);
          dyngraph::GraphTrace trace;
          Var loss = sample_loss(tape, model, train_split.input(w), train_split.target(w), scaler, fwd,
                                 config.normalized_loss, observer ? &trace : nullptr);
          if (observer) observer(epoch, batch, w, trace);
          tape.backward(loss);
          tape.accumulate_param_grads(res.grads);
          res.loss += loss.value()(0, 0);
        }
      };

      if (threads == 1 || chunks == 1) {
        for (int c = 0; c < chunks; ++c) run_chunk(c);
      } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < std::min(threads, chunks); ++t)
          pool.emplace_back([&] {
            for (int c = next++; c < chunks; c = next++) run_chunk(c);
          });
        for (auto& th : pool) th.join();
      }

      d::GradientSet total(store);
      double batch_loss = 0.0;
      for (const auto& r : results) {
        total += r.grads;
        batch_loss += r.loss;
      }
      const double count = static_cast<double>(batch_end - batch_start);
      for (d::ParamId id = 0; id < store.size(); ++id) total[id] /= count;
      if (!std::isfinite(batch_loss)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " batch " + std::to_string(batch) +
                           "; first non-finite gradient: " + first_nonfinite(store, total));
      }
      for (d::ParamId id = 0; id < store.size(); ++id)
        if (!total[id].allFinite())
          throw NumericError("non-finite gradient at epoch " + std::to_string(epoch) + " batch " +
                             std::to_string(batch) + " in parameter " + store[id].name);
      total.store_into(store);
      adam.step(store, total);
      epoch_loss += batch_loss;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = epoch_loss / static_cast<double>(n);
    rec.val = evaluate(model, val_split, scaler, eval_opts).overall;
    history.epochs.push_back(rec);

    if (rec.val.mae < history.best_val_mae) {
      history.best_val_mae = rec.val.mae;
      history.best_epoch = epoch;
      since_best = 0;
      for (d::ParamId id = 0; id < store.size(); ++id) best[static_cast<std::size_t>(id)] = store[id].value;
    } else if (++since_best >= config.patience) {
      history.early_stopped = true;
    }
    if (on_epoch && !on_epoch(rec, model)) break;
    if (history.early_stopped) break;
  }
  for (d::ParamId id = 0; id < store.size(); ++id) store[id].value = best[static_cast<std::size_t>(id)];
  return history;
}

}  // namespace tglrn
