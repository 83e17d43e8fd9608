#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "tglrn/data.hpp"
#include "tglrn/metrics.hpp"
#include "tglrn/model.hpp"

namespace tglrn {

struct TrainConfig {
  double learning_rate = 0.005;
  int batch_size = 64;
  int max_epochs = 200;
  int patience = 15;
  std::uint64_t seed = 1;
  int threads = 1;
  bool normalized_loss = false;  // MAE on z-scored values instead of original units
  bool eval_sampling = false;
  double mape_threshold = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  ErrorMetrics val;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_mae = 0.0;
  bool early_stopped = false;
};

// Header `epoch,train_loss,val_mae,val_rmse,val_mape`, full double precision.
void save_history_csv(const std::filesystem::path& path, const TrainHistory& history);

// Called once per training sample, in batch order, while its tape is alive.
// Setting an observer forces single-threaded batches.
using GraphObserver = std::function<void(int epoch, int batch, int window, const dyngraph::GraphTrace& graphs)>;

// Called after every epoch with the model as trained so far (before the
// best-on-validation restore). Returning false ends training.
using EpochCallback = std::function<bool(const EpochRecord& record, const Model& model)>;

class Adam {
 public:
  Adam(const diff::ParameterStore& store, double learning_rate, double beta1, double beta2, double epsilon);
  void step(diff::ParameterStore& store, const diff::GradientSet& grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  diff::GradientSet m_;
  diff::GradientSet v_;
};

// Loss of one window: MAE in original units unless `normalized` is set.
Var sample_loss(Tape& tape, const Model& model, const Matrix& input, const Matrix& target, const data::Scaler& scaler,
                const ForwardOptions& options, bool normalized, dyngraph::GraphTrace* trace = nullptr);

struct EvalOptions {
  double mape_threshold = 1.0;
  bool eval_sampling = false;
  std::uint64_t seed = 1;  // only used with eval_sampling
};

// T x N forecast in original units for one raw input window.
Matrix predict(const Model& model, const Matrix& input, const data::Scaler& scaler, const EvalOptions& options = {},
               int window_key = 0);

// Eval mode, original units. Throws InputError on an empty split.
MetricsReport evaluate(const Model& model, const data::WindowedDataset& split, const data::Scaler& scaler,
                       const EvalOptions& options = {});

// Mini-batch Adam with early stopping on validation MAE. On return the
// model holds the best-on-validation parameters.
TrainHistory train(Model& model, const data::WindowedDataset& train_split, const data::WindowedDataset& val_split,
                   const data::Scaler& scaler, const TrainConfig& config, const GraphObserver& observer = {},
                   const EpochCallback& on_epoch = {});

}  // namespace tglrn
