#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tglrn/diff/tensor.hpp"
#include "tglrn/roadnet.hpp"

namespace tglrn::data {

using diff::Matrix;

// Single-feature flow readings: one row per 5-minute step, one column per sensor.
struct FlowSeries {
  Matrix values;  // T_total x N
  int interval_minutes = 5;

  int steps() const { return static_cast<int>(values.rows()); }
  int nodes() const { return static_cast<int>(values.cols()); }
};

struct LoadOptions {
  // Treat exact zeros as missing readings (interpolated like empty cells).
  bool zero_is_missing = true;
};

// CSV with header `t,s0,...,s{N-1}` (the index column is optional). Empty,
// `nan` or `NA` cells are missing and linearly interpolated per sensor.
// Pass expected_nodes < 0 to accept any sensor count.
FlowSeries load_flows(const std::filesystem::path& path, int expected_nodes, const LoadOptions& options = {});
void save_flows(const std::filesystem::path& path, const FlowSeries& series);

// Fills NaN entries of each column by linear interpolation; leading and
// trailing gaps copy the nearest observed value. Returns the fill count.
std::int64_t interpolate_missing(Matrix& values);

enum class ScalerMode { kPerSensor, kGlobal };

// Z-score with population standard deviation.
class Scaler {
 public:
  Scaler() = default;
  Scaler(Eigen::RowVectorXd mean, Eigen::RowVectorXd stddev);

  // Column statistics of `train` (rows are time). std is floored at 1e-8.
  static Scaler fit(const Matrix& train, ScalerMode mode = ScalerMode::kPerSensor);

  Matrix apply(const Matrix& x) const;   // x: rows x N
  Matrix invert(const Matrix& x) const;  // x: rows x N

  const Eigen::RowVectorXd& mean() const { return mean_; }
  const Eigen::RowVectorXd& stddev() const { return std_; }
  int nodes() const { return static_cast<int>(mean_.size()); }

 private:
  Eigen::RowVectorXd mean_;
  Eigen::RowVectorXd std_;
};

enum class Split { kTrain, kVal, kTest };
const char* split_name(Split s);

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

// Time index where each split ends (exclusive): [0, train_end), [train_end, val_end), [val_end, total).
struct SplitBounds {
  int train_end = 0;
  int val_end = 0;
  int total = 0;
};
SplitBounds split_bounds(int total_steps, const SplitRatios& ratios);

// Stride-1 windows over a shared series. Window w reads inputs at rows
// [start, start+T') and targets at [start+T', start+T'+T).
class WindowedDataset {
 public:
  WindowedDataset() = default;
  WindowedDataset(std::shared_ptr<const FlowSeries> series, Split split, int input_len, int horizon,
                  std::vector<int> starts);

  Split split() const { return split_; }
  int input_len() const { return input_len_; }
  int horizon() const { return horizon_; }
  int size() const { return static_cast<int>(starts_.size()); }
  bool empty() const { return starts_.empty(); }
  int start(int w) const { return starts_.at(static_cast<std::size_t>(w)); }
  const std::vector<int>& starts() const { return starts_; }
  const FlowSeries& series() const { return *series_; }

  Matrix input(int w) const;   // T' x N, raw units
  Matrix target(int w) const;  // T x N, raw units

 private:
  std::shared_ptr<const FlowSeries> series_;
  Split split_ = Split::kTrain;
  int input_len_ = 0;
  int horizon_ = 0;
  std::vector<int> starts_;
};

// Windows are assigned to the split containing their last target step, so a
// window never reads targets from a later split. Throws InputError when the
// series is too short or the ratios do not sum to 1.
std::array<WindowedDataset, 3> make_windows(std::shared_ptr<const FlowSeries> series, int input_len, int horizon,
                                            const SplitRatios& ratios = {});

inline int window_count(int total_steps, int input_len, int horizon) {
  return std::max(0, total_steps - (input_len + horizon) + 1);
}

// --- synthetic generator ------------------------------------------------

enum class Topology { kChain, kRing, kGrid };
Topology parse_topology(const std::string& name);
const char* topology_name(Topology t);

struct SynthConfig {
  int nodes = 8;
  int steps = 372;
  Topology topology = Topology::kChain;
  int period = 288;          // one day of 5-minute steps
  int regime_period = 24;    // coupling alternates every this many steps
  double coupling_a = 0.8;   // regime A (even segments)
  double coupling_b = 0.0;   // regime B (odd segments)
  double noise_std = 0.05;
  double level = 5.0;
  double amplitude = 1.0;
  std::uint64_t seed = 1;
};

struct PlantedCoupling {
  int t = 0;
  int from = 0;  // upstream sensor
  int to = 0;    // sensor whose value at t depends on from at t-1
  double coeff = 0.0;
};

struct SynthResult {
  std::vector<roadnet::Edge> edges;
  roadnet::RoadNetwork network;
  FlowSeries flows;
  std::vector<PlantedCoupling> planted;  // only nonzero couplings
  std::vector<int> upstream;             // per sensor, -1 when none
};

// x_i(t) = level + s_i(t),
// s_i(t) = amplitude * sin(2 pi t / period + i pi / 2) + c(t) s_up(i)(t-1) + noise.
SynthResult synth_generate(const SynthConfig& config);
double synth_coupling(const SynthConfig& config, int t);
void save_planted(const std::filesystem::path& path, const std::vector<PlantedCoupling>& planted);

}  // namespace tglrn::data
