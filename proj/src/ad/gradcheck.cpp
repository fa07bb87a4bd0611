#include "mtaffect/ad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace mtaffect::ad {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult gradient_check(const std::function<Var(Tape&)>& loss_fn, const std::vector<NamedParam>& params,
                               double eps, std::size_t max_coords_per_param, std::uint64_t seed) {
  for (const auto& p : params) p.tensor->zero_grad();
  Tape base;
  const Var loss = loss_fn(base);
  base.backward(loss);
  const std::uint64_t pattern = base.pattern();

  GradCheckResult result;
  std::mt19937_64 rng(seed);
  for (const auto& p : params) {
    if (!p.tensor->requires_grad()) continue;
    const std::vector<double> analytic(p.tensor->grad().begin(), p.tensor->grad().end());

    std::vector<std::size_t> coords(p.tensor->size());
    std::iota(coords.begin(), coords.end(), 0);
    if (max_coords_per_param > 0 && coords.size() > max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(max_coords_per_param);
    }

    auto data = p.tensor->data();
    for (std::size_t i : coords) {
      const double saved = data[i];
      data[i] = saved + eps;
      Tape plus;
      const double lp = loss_fn(plus)->item();
      data[i] = saved - eps;
      Tape minus;
      const double lm = loss_fn(minus)->item();
      data[i] = saved;
      if (plus.pattern() != pattern || minus.pattern() != pattern) {
        ++result.skipped;
        continue;
      }
      const double numeric = (lp - lm) / (2.0 * eps);
      const double err = relative_error(analytic[i], numeric);
      ++result.checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_param = p.name;
        result.worst_index = i;
      }
    }
  }
  return result;
}

}  // namespace mtaffect::ad
