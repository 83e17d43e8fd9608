#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "tglrn/diff/tape.hpp"

namespace tglrn::diff {

// Builds a scalar loss on the given tape from parameters of the store the
// tape was created with. Must be deterministic: the checker calls it 2n+1 times.
using LossFn = std::function<Var(Tape&)>;

struct GradcheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  // Denominator floor of the relative error, so entries whose true gradient
  // is ~0 are judged on absolute error instead of amplified roundoff.
  double floor = 1e-6;
};

struct ParamCheck {
  std::string name;
  double max_rel_error = 0.0;
  bool passed = true;
};

struct GradcheckReport {
  std::vector<ParamCheck> params;

  bool passed() const;
  double worst() const;
  void print(std::ostream& os) const;
};

// |a - n| / max(|a|, |n|, floor)
double relative_error(double analytic, double numeric, double floor);

GradientSet analytic_gradients(const LossFn& loss, ParameterStore& store);
// Central differences, one coordinate at a time. Restores every parameter.
GradientSet numeric_gradients(const LossFn& loss, ParameterStore& store, double epsilon);

GradcheckReport compare_gradients(const ParameterStore& store, const GradientSet& analytic,
                                  const GradientSet& numeric, const GradcheckOptions& options);

GradcheckReport finite_diff_check(const LossFn& loss, ParameterStore& store, const GradcheckOptions& options = {});

}  // namespace tglrn::diff
