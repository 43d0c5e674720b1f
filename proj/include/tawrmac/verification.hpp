#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace tawrmac {

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t scalars = 0;  // parameters perturbed
};

// Central-difference checks of every differentiable building block and of
// the assembled model on a tiny stream, in float64.
std::vector<GradCheckResult> gradcheck_suite(std::uint64_t seed = 0);

}  // namespace tawrmac
