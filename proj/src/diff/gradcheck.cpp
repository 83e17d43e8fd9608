#include "tglrn/diff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "tglrn/error.hpp"

namespace tglrn::diff {

bool GradcheckReport::passed() const {
  return std::all_of(params.begin(), params.end(), [](const ParamCheck& p) { return p.passed; });
}

double GradcheckReport::worst() const {
  double w = 0.0;
  for (const auto& p : params) w = std::max(w, p.max_rel_error);
  return w;
}

void GradcheckReport::print(std::ostream& os) const {
  for (const auto& p : params)
    os << (p.passed ? "  ok   " : "  FAIL ") << std::left << std::setw(36) << p.name << std::scientific
       << std::setprecision(3) << p.max_rel_error << '\n';
  os << std::defaultfloat;
}

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

double eval_loss(const LossFn& loss, const ParameterStore& store) {
  Tape tape(&store);
  Var l = loss(tape);
  if (l.rows() != 1 || l.cols() != 1) throw StateError("gradcheck: loss must be scalar");
  return l.value()(0, 0);
}

}  // namespace

GradientSet analytic_gradients(const LossFn& loss, ParameterStore& store) {
  Tape tape(&store);
  Var l = loss(tape);
  tape.backward(l);
  GradientSet grads(store);
  tape.accumulate_param_grads(grads);
  return grads;
}

GradientSet numeric_gradients(const LossFn& loss, ParameterStore& store, double epsilon) {
  GradientSet grads(store);
  for (ParamId id = 0; id < store.size(); ++id) {
    auto values = store[id].value.values();
    auto& g = grads[id];
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + epsilon;
      const double up = eval_loss(loss, store);
      values[k] = saved - epsilon;
      const double down = eval_loss(loss, store);
      values[k] = saved;
      g.data()[k] = (up - down) / (2.0 * epsilon);
    }
  }
  return grads;
}

GradcheckReport compare_gradients(const ParameterStore& store, const GradientSet& analytic,
                                  const GradientSet& numeric, const GradcheckOptions& options) {
  GradcheckReport report;
  for (ParamId id = 0; id < store.size(); ++id) {
    ParamCheck check{store[id].name, 0.0, true};
    const auto& a = analytic[id];
    const auto& n = numeric[id];
    for (Eigen::Index k = 0; k < a.size(); ++k) {
      const double err = relative_error(a.data()[k], n.data()[k], options.floor);
      if (!std::isfinite(err)) check.max_rel_error = INFINITY;
      check.max_rel_error = std::max(check.max_rel_error, err);
    }
    check.passed = check.max_rel_error < options.tolerance;
    report.params.push_back(std::move(check));
  }
  return report;
}

GradcheckReport finite_diff_check(const LossFn& loss, ParameterStore& store, const GradcheckOptions& options) {
  if (!(options.epsilon > 0.0)) throw ConfigError("gradcheck: epsilon must be positive");
  GradientSet analytic = analytic_gradients(loss, store);
  GradientSet numeric = numeric_gradients(loss, store, options.epsilon);
  return compare_gradients(store, analytic, numeric, options);
}

}  // namespace tglrn::diff
