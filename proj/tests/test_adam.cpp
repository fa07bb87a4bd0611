#include <doctest.h>

#include <cmath>
#include <limits>

#include "mtaffect/ad/adam.hpp"
#include "mtaffect/error.hpp"

using namespace mtaffect;
using namespace mtaffect::ad;

namespace {

void set_grad(const Var& v, std::vector<double> g) {
  auto dst = v->grad();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] = g[i];
}

}  // namespace

TEST_CASE("a zero gradient leaves parameters unchanged") {
  const auto p = parameter({3}, {1.0, -2.0, 0.5});
  std::vector<NamedParam> params = {{"p", p}};
  auto state = make_adam_state(params);
  set_grad(p, {0, 0, 0});
  adam_step(params, state);
  CHECK(p->values() == std::vector<double>{1.0, -2.0, 0.5});
}

TEST_CASE("the first step moves each coordinate by about lr against the gradient sign") {
  const auto p = parameter({3}, {0.0, 0.0, 0.0});
  std::vector<NamedParam> params = {{"p", p}};
  auto state = make_adam_state(params);
  set_grad(p, {0.3, -5.0, 1e-3});
  adam_step(params, state);
  CHECK(p->values()[0] == doctest::Approx(-1e-3).epsilon(1e-6));
  CHECK(p->values()[1] == doctest::Approx(1e-3).epsilon(1e-6));
  CHECK(p->values()[2] == doctest::Approx(-1e-3).epsilon(1e-4));
}

TEST_CASE("two steps match a scalar reference") {
  const double lr = 0.01, b1 = 0.8, b2 = 0.95, eps = 1e-6;
  const std::vector<double> grads = {0.4, -1.3};
  double theta = 0.25, m = 0, v = 0;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1];
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t));
    const double vh = v / (1 - std::pow(b2, t));
    theta -= lr * mh / (std::sqrt(vh) + eps);
  }

  const auto p = parameter({1}, {0.25});
  std::vector<NamedParam> params = {{"p", p}};
  auto state = make_adam_state(params, {lr, b1, b2, eps});
  for (double g : grads) {
    p->zero_grad();
    set_grad(p, {g});
    adam_step(params, state);
  }
  CHECK(std::abs(p->item() - theta) < 1e-12);
  CHECK(state.t == 2);
}

TEST_CASE("non-finite gradients abort the step without touching any parameter") {
  const auto a = parameter({2}, {1.0, 2.0});
  const auto b = parameter({2}, {3.0, 4.0});
  std::vector<NamedParam> params = {{"encoder/a", a}, {"heads/b", b}};
  auto state = make_adam_state(params);
  set_grad(a, {0.5, 0.5});
  set_grad(b, {std::numeric_limits<double>::quiet_NaN(), 1.0});
  try {
    adam_step(params, state);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("heads/b") != std::string::npos);
  }
  CHECK(a->values() == std::vector<double>{1.0, 2.0});
  CHECK(b->values() == std::vector<double>{3.0, 4.0});
  CHECK(state.t == 0);

  set_grad(b, {std::numeric_limits<double>::infinity(), 0.0});
  CHECK_THROWS_AS(adam_step(params, state), Error);
}

TEST_CASE("frozen tensors are skipped") {
  const auto frozen = constant({2}, {1.0, 1.0});
  const auto p = parameter({2}, {1.0, 1.0});
  std::vector<NamedParam> params = {{"frozen", frozen}, {"p", p}};
  auto state = make_adam_state(params);
  set_grad(p, {1.0, 1.0});
  adam_step(params, state);
  CHECK(frozen->values() == std::vector<double>{1.0, 1.0});
  CHECK(p->values()[0] < 1.0);
  CHECK_THROWS_AS(make_adam_state(params, {0.0}), Error);
}
