#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mtaffect/ad/adam.hpp"
#include "mtaffect/ad/tensor.hpp"

namespace mtaffect::ad {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  // Coordinates whose +/- eps perturbation crossed a relu or max-pool kink.
  std::size_t skipped = 0;
};

// Relative error |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-7);

// Compares tape gradients of a deterministic scalar loss against central
// differences (L(t+eps) - L(t-eps)) / 2eps. With max_coords_per_param > 0 a
// seeded random subset of each parameter is checked.
GradCheckResult gradient_check(const std::function<Var(Tape&)>& loss_fn, const std::vector<NamedParam>& params,
                               double eps = 1e-4, std::size_t max_coords_per_param = 0,
                               std::uint64_t seed = 0);

}  // namespace mtaffect::ad
