#include "tglrn/metrics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "tglrn/error.hpp"

namespace tglrn {

bool operator==(const ErrorMetrics& a, const ErrorMetrics& b) {
  return a.mae == b.mae && a.rmse == b.rmse && a.mape == b.mape;
}

bool operator==(const MetricsReport& a, const MetricsReport& b) {
  return a.overall == b.overall && a.per_horizon == b.per_horizon && a.samples == b.samples;
}

MetricsAccumulator::MetricsAccumulator(int horizon, double mape_threshold)
    : threshold_(mape_threshold), per_horizon_(static_cast<std::size_t>(horizon)) {}

void MetricsAccumulator::add(const Matrix& prediction, const Matrix& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols() ||
      prediction.rows() != static_cast<Eigen::Index>(per_horizon_.size()))
    throw ConfigError("metrics: prediction/target shape mismatch");
  for (Eigen::Index h = 0; h < prediction.rows(); ++h) {
    auto& s = per_horizon_[static_cast<std::size_t>(h)];
    for (Eigen::Index i = 0; i < prediction.cols(); ++i) {
      const double y = target(h, i);
      const double e = prediction(h, i) - y;
      s.abs += std::abs(e);
      s.sq += e * e;
      ++s.count;
      if (std::abs(y) >= threshold_) {
        s.pct += std::abs(e) / std::abs(y);
        ++s.pct_count;
      }
    }
  }
  ++samples_;
}

ErrorMetrics MetricsAccumulator::finish(const Sums& s) {
  ErrorMetrics m;
  if (s.count > 0) {
    m.mae = s.abs / static_cast<double>(s.count);
    m.rmse = std::sqrt(s.sq / static_cast<double>(s.count));
  }
  if (s.pct_count > 0) m.mape = 100.0 * s.pct / static_cast<double>(s.pct_count);
  return m;
}

MetricsReport MetricsAccumulator::report() const {
  MetricsReport r;
  r.samples = samples_;
  Sums total;
  for (const auto& s : per_horizon_) {
    r.per_horizon.push_back(finish(s));
    total.abs += s.abs;
    total.sq += s.sq;
    total.pct += s.pct;
    total.count += s.count;
    total.pct_count += s.pct_count;
  }
  r.overall = finish(total);
  return r;
}

MetricsReport baseline_ha(const data::WindowedDataset& windows, double mape_threshold) {
  if (windows.empty()) throw InputError("baseline_ha: empty split");
  MetricsAccumulator acc(windows.horizon(), mape_threshold);
  for (int w = 0; w < windows.size(); ++w) {
    const Matrix input = windows.input(w);
    const Eigen::RowVectorXd mean = input.colwise().mean();
    Matrix pred = mean.replicate(windows.horizon(), 1);
    acc.add(pred, windows.target(w));
  }
  return acc.report();
}

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<std::pair<std::string, MetricsReport>>& reports) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "model,horizon,mae,rmse,mape\n" << std::setprecision(17);
  for (const auto& [name, r] : reports) {
    out << name << ",all," << r.overall.mae << ',' << r.overall.rmse << ',' << r.overall.mape << '\n';
    for (std::size_t h = 0; h < r.per_horizon.size(); ++h) {
      const auto& m = r.per_horizon[h];
      out << name << ',' << h + 1 << ',' << m.mae << ',' << m.rmse << ',' << m.mape << '\n';
    }
  }
}

}  // namespace tglrn
