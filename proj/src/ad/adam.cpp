#include "mtaffect/ad/adam.hpp"

#include <cmath>

#include "mtaffect/error.hpp"

namespace mtaffect::ad {

AdamState make_adam_state(const std::vector<NamedParam>& params, AdamConfig config) {
  if (!(config.lr > 0.0)) throw Error("adam: learning rate must be positive");
  AdamState s;
  s.config = config;
  for (const auto& p : params) {
    s.m.emplace_back(p.tensor->size(), 0.0);
    s.v.emplace_back(p.tensor->size(), 0.0);
  }
  return s;
}

void adam_step(const std::vector<NamedParam>& params, AdamState& state) {
  if (state.m.size() != params.size()) throw Error("adam: state was built for a different parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (state.m[i].size() != p.tensor->size()) throw Error("adam: state shape mismatch for '" + p.name + "'");
    if (!p.tensor->requires_grad() || !p.tensor->has_grad()) continue;
    for (double g : p.tensor->grad())
      if (!std::isfinite(g)) throw Error("adam: non-finite gradient in parameter '" + p.name + "'");
  }

  ++state.t;
  const auto& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& t = *params[i].tensor;
    if (!t.requires_grad() || !t.has_grad()) continue;
    auto theta = t.data();
    auto g = t.grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      theta[j] -= c.lr * m_hat / (std::sqrt(v_hat) + c.eps);
    }
  }
}

}  // namespace mtaffect::ad
