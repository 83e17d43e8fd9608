#include "tglrn/data.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>

#include "csv.hpp"
#include "tglrn/error.hpp"

namespace tglrn::data {

namespace {

bool is_missing_token(const std::string& s) {
  return s.empty() || s == "nan" || s == "NaN" || s == "NAN" || s == "NA" || s == "null";
}

}  // namespace

FlowSeries load_flows(const std::filesystem::path& path, int expected_nodes, const LoadOptions& options) {
  const auto table = csv::read(path);
  const int cols = static_cast<int>(table.header.size());
  bool has_index = table.header.front() == "t";
  if (expected_nodes >= 0 && !has_index && cols == expected_nodes + 1) has_index = true;
  const int nodes = cols - (has_index ? 1 : 0);
  if (nodes <= 0) throw InputError(path.string() + ": no sensor columns");
  if (expected_nodes >= 0 && nodes != expected_nodes)
    throw InputError(path.string() + ": expected " + std::to_string(expected_nodes) + " sensors, found " +
                     std::to_string(nodes));
  FlowSeries series;
  series.values.resize(static_cast<Eigen::Index>(table.rows.size()), nodes);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    for (int j = 0; j < nodes; ++j) {
      const auto& cell = row[static_cast<std::size_t>(j + (has_index ? 1 : 0))];
      double v = std::numeric_limits<double>::quiet_NaN();
      if (!is_missing_token(cell)) {
        v = csv::parse_double(cell, path, table.line_of(r));
        if (options.zero_is_missing && v == 0.0) v = std::numeric_limits<double>::quiet_NaN();
      }
      series.values(static_cast<Eigen::Index>(r), j) = v;
    }
  }
  if (series.values.rows() == 0) throw InputError(path.string() + ": no data rows");
  interpolate_missing(series.values);
  return series;
}

void save_flows(const std::filesystem::path& path, const FlowSeries& series) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << 't';
  for (int j = 0; j < series.nodes(); ++j) out << ",s" << j;
  out << '\n' << std::setprecision(17);
  for (int t = 0; t < series.steps(); ++t) {
    out << t;
    for (int j = 0; j < series.nodes(); ++j) out << ',' << series.values(t, j);
    out << '\n';
  }
}

std::int64_t interpolate_missing(Matrix& values) {
  std::int64_t filled = 0;
  const auto rows = values.rows();
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    Eigen::Index prev = -1;
    for (Eigen::Index t = 0; t <= rows; ++t) {
      if (t < rows && std::isnan(values(t, j))) continue;
      // Gap is (prev, t).
      const Eigen::Index gap = t - prev - 1;
      if (gap > 0) {
        if (prev < 0 && t == rows) throw InputError("sensor column " + std::to_string(j) + " has no valid readings");
        for (Eigen::Index k = prev + 1; k < t; ++k) {
          if (prev < 0)
            values(k, j) = values(t, j);
          else if (t == rows)
            values(k, j) = values(prev, j);
          else {
            const double w = static_cast<double>(k - prev) / static_cast<double>(t - prev);
            values(k, j) = (1.0 - w) * values(prev, j) + w * values(t, j);
          }
        }
        filled += gap;
      }
      prev = t;
    }
  }
  return filled;
}

Scaler::Scaler(Eigen::RowVectorXd mean, Eigen::RowVectorXd stddev) : mean_(std::move(mean)), std_(std::move(stddev)) {
  if (mean_.size() != std_.size()) throw ConfigError("scaler: mean/std size mismatch");
}

Scaler Scaler::fit(const Matrix& train, ScalerMode mode) {
  if (train.rows() == 0) throw InputError("scaler: empty training portion");
  const auto n = train.cols();
  Eigen::RowVectorXd mean(n), sd(n);
  if (mode == ScalerMode::kGlobal) {
    const double mu = train.mean();
    const double var = (train.array() - mu).square().mean();
    mean.setConstant(mu);
    sd.setConstant(std::sqrt(var));
  } else {
    mean = train.colwise().mean();
    for (Eigen::Index j = 0; j < n; ++j) sd(j) = std::sqrt((train.col(j).array() - mean(j)).square().mean());
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (sd(j) < 1e-8) {
      std::cerr << "warning: sensor " << j << " has zero variance in the training split; std floored at 1e-8\n";
      sd(j) = 1e-8;
    }
  }
  return Scaler(std::move(mean), std::move(sd));
}

Matrix Scaler::apply(const Matrix& x) const {
  if (x.cols() != mean_.size()) throw ConfigError("scaler: column count mismatch");
  Matrix out = x;
  out.rowwise() -= mean_;
  out.array().rowwise() /= std_.array();
  return out;
}

Matrix Scaler::invert(const Matrix& x) const {
  if (x.cols() != mean_.size()) throw ConfigError("scaler: column count mismatch");
  Matrix out = x;
  out.array().rowwise() *= std_.array();
  out.rowwise() += mean_;
  return out;
}

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

SplitBounds split_bounds(int total_steps, const SplitRatios& r) {
  if (r.train < 0 || r.val < 0 || r.test < 0 || std::abs(r.train + r.val + r.test - 1.0) > 1e-9)
    throw InputError("split ratios must be non-negative and sum to 1");
  SplitBounds b;
  b.total = total_steps;
  b.train_end = static_cast<int>(std::floor(r.train * total_steps + 1e-9));
  b.val_end = static_cast<int>(std::floor((r.train + r.val) * total_steps + 1e-9));
  return b;
}

WindowedDataset::WindowedDataset(std::shared_ptr<const FlowSeries> series, Split split, int input_len, int horizon,
                                 std::vector<int> starts)
    : series_(std::move(series)), split_(split), input_len_(input_len), horizon_(horizon), starts_(std::move(starts)) {}

Matrix WindowedDataset::input(int w) const { return series_->values.middleRows(start(w), input_len_); }

Matrix WindowedDataset::target(int w) const { return series_->values.middleRows(start(w) + input_len_, horizon_); }

std::array<WindowedDataset, 3> make_windows(std::shared_ptr<const FlowSeries> series, int input_len, int horizon,
                                            const SplitRatios& ratios) {
  if (input_len < 1 || horizon < 1) throw InputError("make_windows: window lengths must be positive");
  const int total = series->steps();
  if (total < input_len + horizon)
    throw InputError("make_windows: series of " + std::to_string(total) + " steps is shorter than " +
                     std::to_string(input_len + horizon));
  const auto bounds = split_bounds(total, ratios);
  std::array<std::vector<int>, 3> starts;
  for (int w = 0; w < window_count(total, input_len, horizon); ++w) {
    const int target_end = w + input_len + horizon - 1;
    const int split = target_end < bounds.train_end ? 0 : (target_end < bounds.val_end ? 1 : 2);
    starts[static_cast<std::size_t>(split)].push_back(w);
  }
  return {WindowedDataset(series, Split::kTrain, input_len, horizon, std::move(starts[0])),
          WindowedDataset(series, Split::kVal, input_len, horizon, std::move(starts[1])),
          WindowedDataset(series, Split::kTest, input_len, horizon, std::move(starts[2]))};
}

Topology parse_topology(const std::string& name) {
  if (name == "chain") return Topology::kChain;
  if (name == "ring") return Topology::kRing;
  if (name == "grid") return Topology::kGrid;
  throw ConfigError("unknown topology '" + name + "' (expected chain, ring or grid)");
}

const char* topology_name(Topology t) {
  switch (t) {
    case Topology::kChain: return "chain";
    case Topology::kRing: return "ring";
    case Topology::kGrid: return "grid";
  }
  return "?";
}

double synth_coupling(const SynthConfig& config, int t) {
  if (config.regime_period <= 0) return config.coupling_a;
  return (t / config.regime_period) % 2 == 0 ? config.coupling_a : config.coupling_b;
}

SynthResult synth_generate(const SynthConfig& config) {
  const int n = config.nodes;
  if (n < 4) throw InputError("synth: at least 4 sensors required, got " + std::to_string(n));
  if (config.steps < 2) throw InputError("synth: at least 2 steps required");
  if (config.period <= 0) throw InputError("synth: period must be positive");

  SynthResult out;
  out.upstream.assign(static_cast<std::size_t>(n), -1);
  switch (config.topology) {
    case Topology::kChain:
      for (int i = 0; i + 1 < n; ++i) out.edges.push_back({i, i + 1});
      for (int i = 1; i < n; ++i) out.upstream[static_cast<std::size_t>(i)] = i - 1;
      break;
    case Topology::kRing:
      for (int i = 0; i < n; ++i) out.edges.push_back({i, (i + 1) % n});
      for (int i = 0; i < n; ++i) out.upstream[static_cast<std::size_t>(i)] = (i + n - 1) % n;
      break;
    case Topology::kGrid: {
      const int width = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
      for (int i = 0; i < n; ++i) {
        const int c = i % width;
        if (c + 1 < width && i + 1 < n) out.edges.push_back({i, i + 1});
        if (i + width < n) out.edges.push_back({i, i + width});
        if (c > 0)
          out.upstream[static_cast<std::size_t>(i)] = i - 1;
        else if (i >= width)
          out.upstream[static_cast<std::size_t>(i)] = i - width;
      }
      break;
    }
  }
  out.network = roadnet::build_asp(out.edges, n);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix dev(config.steps, n);
  const double omega = 2.0 * std::numbers::pi / static_cast<double>(config.period);
  for (int t = 0; t < config.steps; ++t) {
    const double c = synth_coupling(config, t);
    for (int i = 0; i < n; ++i) {
      double s = config.amplitude * std::sin(omega * t + 0.5 * std::numbers::pi * i);
      const int up = out.upstream[static_cast<std::size_t>(i)];
      if (t > 0 && up >= 0 && c != 0.0) {
        s += c * dev(t - 1, up);
        out.planted.push_back({t, up, i, c});
      }
      // Draw unconditionally so the stream does not depend on noise_std.
      const double z = noise(rng);
      s += config.noise_std * z;
      dev(t, i) = s;
    }
  }
  out.flows.values = (dev.array() + config.level).matrix();
  return out;
}

void save_planted(const std::filesystem::path& path, const std::vector<PlantedCoupling>& planted) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "t,from,to,coeff\n" << std::setprecision(17);
  for (const auto& p : planted) out << p.t << ',' << p.from << ',' << p.to << ',' << p.coeff << '\n';
}

}  // namespace tglrn::data
