#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tglrn/data.hpp"

namespace tglrn {

using diff::Matrix;

struct ErrorMetrics {
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;  // percent, over |y| >= threshold only
};

struct MetricsReport {
  ErrorMetrics overall;
  std::vector<ErrorMetrics> per_horizon;  // index h-1
  long samples = 0;

  friend bool operator==(const MetricsReport& a, const MetricsReport& b);
};

bool operator==(const ErrorMetrics& a, const ErrorMetrics& b);

// Streams (prediction, target) pairs of shape T x N in original units.
class MetricsAccumulator {
 public:
  MetricsAccumulator(int horizon, double mape_threshold);

  void add(const Matrix& prediction, const Matrix& target);
  MetricsReport report() const;

 private:
  struct Sums {
    double abs = 0.0;
    double sq = 0.0;
    double pct = 0.0;
    long count = 0;
    long pct_count = 0;
  };
  static ErrorMetrics finish(const Sums& s);

  double threshold_;
  std::vector<Sums> per_horizon_;
  long samples_ = 0;
};

// Historical Average: every horizon predicts the per-sensor mean of the input window.
MetricsReport baseline_ha(const data::WindowedDataset& windows, double mape_threshold);

// Header `model,horizon,mae,rmse,mape`; horizon is `all` or 1..T.
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, MetricsReport>>& reports);

}  // namespace tglrn
