#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tglrn/diff/gradcheck.hpp"

namespace tglrn {

struct SuiteCase {
  std::string name;
  diff::GradcheckReport report;
};

// Finite-difference checks of every layer in isolation plus the toy model
// (N=4, T'=6, T=2, d=m=4, D=8, one block) in train and eval mode.
// Inputs of each layer are registered as parameters so they are checked too.
std::vector<SuiteCase> run_gradient_suite(std::uint64_t seed, const diff::GradcheckOptions& options = {});

bool suite_passed(const std::vector<SuiteCase>& cases);
void print_suite(std::ostream& os, const std::vector<SuiteCase>& cases);

}  // namespace tglrn
