#pragma once

#include <string>
#include <vector>

#include "mtaffect/ad/tensor.hpp"

namespace mtaffect::ad {

struct NamedParam {
  std::string name;
  Var tensor;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t t = 0;
};

AdamState make_adam_state(const std::vector<NamedParam>& params, AdamConfig config = {});

// One bias-corrected Adam update from each parameter's accumulated gradient.
// Parameters without requires_grad are skipped. Throws, naming the parameter,
// if any gradient is non-finite; no parameter is touched in that case.
void adam_step(const std::vector<NamedParam>& params, AdamState& state);

}  // namespace mtaffect::ad
