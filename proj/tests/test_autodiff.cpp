#include <doctest.h>

#include <cmath>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "mtaffect/ad/gradcheck.hpp"
#include "mtaffect/ad/ops.hpp"
#include "mtaffect/error.hpp"
#include "support.hpp"

using namespace mtaffect;
using namespace mtaffect::ad;

namespace {

Var rand_param(std::mt19937_64& rng, std::vector<std::size_t> shape, double scale = 1.0) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return parameter(std::move(shape), testing::random_vector(rng, n, -scale, scale));
}

Var rand_const(std::mt19937_64& rng, std::vector<std::size_t> shape, double scale = 1.0) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return constant(std::move(shape), testing::random_vector(rng, n, -scale, scale));
}

GruParams rand_gru(std::mt19937_64& rng, std::size_t in, std::size_t h, double scale = 0.5) {
  GruParams p;
  p.w_z = rand_param(rng, {in, h}, scale);
  p.w_r = rand_param(rng, {in, h}, scale);
  p.w_h = rand_param(rng, {in, h}, scale);
  p.u_z = rand_param(rng, {h, h}, scale);
  p.u_r = rand_param(rng, {h, h}, scale);
  p.u_h = rand_param(rng, {h, h}, scale);
  p.b_z = rand_param(rng, {h}, scale);
  p.b_r = rand_param(rng, {h}, scale);
  p.b_h = rand_param(rng, {h}, scale);
  return p;
}

std::vector<NamedParam> named(const std::vector<Var>& vs, const std::string& prefix = "p") {
  std::vector<NamedParam> out;
  for (std::size_t i = 0; i < vs.size(); ++i) out.push_back({prefix + std::to_string(i), vs[i]});
  return out;
}

// Projects any tensor to a scalar with fixed random weights so every output
// coordinate carries a distinct gradient.
Var project(Tape& tape, const Var& x, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  const auto w = constant({x->cols(), 1}, testing::random_vector(rng, x->cols()));
  const auto y = affine(tape, x, w, nullptr);
  std::vector<double> zeros(y->size(), 0.0);
  return mse(tape, y, zeros);
}

void expect_gradients(const std::function<Var(Tape&)>& loss, const std::vector<NamedParam>& params) {
  const auto r = gradient_check(loss, params, 1e-5);
  INFO("worst " << r.worst_param << "[" << r.worst_index << "] err " << r.max_rel_error);
  CHECK(r.checked > 0);
  CHECK(r.max_rel_error < 1e-4);
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("elementwise primitive values") {
  Tape tape;
  const auto x = parameter({3}, {-1, 0, 2});
  const auto y = relu(tape, x);
  CHECK(y->values() == std::vector<double>{0, 0, 2});
  tape.backward(mse(tape, y, {-0.5, -0.5, 1.5}));
  // d/dy mean((y-g)^2) = 2(y-g)/3 = [1/3, 1/3, 1/3]
  CHECK(x->grad()[0] == 0.0);
  CHECK(x->grad()[1] == 0.0);
  CHECK(x->grad()[2] == doctest::Approx(1.0 / 3.0));

  Tape t2;
  CHECK(sigmoid(t2, constant({1}, {0.0}))->item() == 0.5);
  CHECK(sigmoid(t2, constant({1}, {-800.0}))->item() >= 0.0);
  CHECK(sigmoid(t2, constant({1}, {800.0}))->item() == 1.0);
  CHECK(tanh(t2, constant({1}, {0.0}))->item() == 0.0);
}

TEST_CASE("dropout contracts") {
  std::mt19937_64 data_rng(1);
  const auto x = rand_const(data_rng, {4, 5});
  Tape tape;
  Rng rng(3);
  CHECK(dropout(tape, x, 0.5, false, rng)->values() == x->values());

  const auto ones = constant({100000}, std::vector<double>(100000, 1.0));
  const auto dropped = dropout(tape, ones, 0.5, true, rng);
  double mean = 0;
  std::size_t zeros = 0;
  for (double v : dropped->values()) {
    mean += v;
    zeros += v == 0.0;
    CHECK((v == 0.0 || v == 2.0));
  }
  mean /= 100000.0;
  CHECK(std::abs(mean - 1.0) < 0.02);
  CHECK(zeros > 45000);
  CHECK_THROWS_AS(dropout(tape, x, 1.0, true, rng), Error);
}

TEST_CASE("softmax and cross-entropy") {
  Tape tape;
  const auto uniform = parameter({1, 7}, std::vector<double>(7, 0.3));
  CHECK(softmax_cross_entropy(tape, uniform, {4})->item() == doctest::Approx(std::log(7.0)).epsilon(1e-14));

  std::mt19937_64 rng(8);
  const auto logits = rand_const(rng, {20, 7}, 30.0);
  const auto probs = softmax_rows(*logits);
  for (std::size_t r = 0; r < 20; ++r) {
    double s = 0;
    for (std::size_t k = 0; k < 7; ++k) s += probs[r * 7 + k];
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
  for (std::size_t g = 0; g < 7; ++g) CHECK(softmax_cross_entropy(tape, logits, std::vector<std::size_t>(20, g))->item() >= 0.0);
}

TEST_CASE("cross-entropy on extreme logits matches a 50-digit evaluation") {
  using Big = boost::multiprecision::cpp_dec_float_50;
  std::vector<double> raw(7, 0.0);
  raw[0] = 1000.0;
  for (std::size_t gold = 0; gold < 7; ++gold) {
    Tape tape;
    const double ce = softmax_cross_entropy(tape, constant({1, 7}, raw), {gold})->item();
    Big sum = 0;
    for (double v : raw) sum += boost::multiprecision::exp(Big(v) - Big(1000));
    const Big oracle = Big(1000) + boost::multiprecision::log(sum) - Big(raw[gold]);
    CHECK(std::isfinite(ce));
    CHECK(std::abs(ce - oracle.convert_to<double>()) <= 1e-12 * std::max(1.0, oracle.convert_to<double>()));
  }
}

TEST_CASE("mse of exact predictions is zero") {
  Tape tape;
  CHECK(mse(tape, constant({3, 1}, {0.1, 0.2, 0.3}), {0.1, 0.2, 0.3})->item() == 0.0);
}

TEST_CASE("shape mismatches name the operation") {
  Tape tape;
  const auto a = constant({2, 3}, std::vector<double>(6, 1.0));
  const auto w = constant({4, 2}, std::vector<double>(8, 1.0));
  try {
    affine(tape, a, w, nullptr);
    FAIL("expected a shape error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("affine") != std::string::npos);
  }
  CHECK_THROWS_AS(add(tape, a, w), Error);
  CHECK_THROWS_AS(concat(tape, {a, w}, 1), Error);
  CHECK_THROWS_AS(softmax_cross_entropy(tape, a, {0}), Error);
  CHECK_THROWS_AS(softmax_cross_entropy(tape, a, {0, 3}), Error);
}

TEST_CASE("gradients of dense primitives match finite differences") {
  std::mt19937_64 rng(21);
  const auto x = rand_param(rng, {3, 4});
  const auto w = rand_param(rng, {4, 5});
  const auto b = rand_param(rng, {5});
  const auto y = rand_param(rng, {3, 5});

  SUBCASE("affine") {
    expect_gradients([&](Tape& t) { return project(t, affine(t, x, w, b)); }, named({x, w, b}));
  }
  SUBCASE("add sub mul scale") {
    expect_gradients(
        [&](Tape& t) {
          const auto a = affine(t, x, w, b);
          return project(t, scale(t, mul(t, sub(t, add(t, a, y), mul(t, y, y)), a), -1.7));
        },
        named({x, w, b, y}));
  }
  SUBCASE("relu sigmoid tanh") {
    expect_gradients(
        [&](Tape& t) {
          const auto a = affine(t, x, w, b);
          return project(t, add(t, relu(t, a), mul(t, sigmoid(t, a), tanh(t, y))));
        },
        named({x, w, b, y}));
  }
  SUBCASE("concat on both axes") {
    expect_gradients(
        [&](Tape& t) {
          const auto a = affine(t, x, w, b);
          const auto cols = concat(t, {a, y, x}, 1);
          const auto rows = concat(t, {a, y}, 0);
          return add(t, project(t, cols), project(t, rows));
        },
        named({x, w, b, y}));
  }
  SUBCASE("scale_rows and dropout with a fixed mask") {
    expect_gradients(
        [&](Tape& t) {
          Rng r(5);
          const auto a = dropout(t, affine(t, x, w, b), 0.4, true, r);
          return project(t, scale_rows(t, a, {0.5, -2.0, 3.0}));
        },
        named({x, w, b}));
  }
  SUBCASE("cross-entropy and mse") {
    const auto head = rand_param(rng, {5, 1});
    expect_gradients(
        [&](Tape& t) {
          const auto a = affine(t, x, w, b);
          const auto ce = softmax_cross_entropy(t, a, {0, 4, 2});
          const auto s = sigmoid(t, affine(t, a, head, nullptr));
          return add(t, ce, scale(t, mse(t, s, {0.2, 0.9, 0.5}), 0.7));
        },
        named({x, w, b, head}));
  }
}

TEST_CASE("frozen tensors receive no gradient") {
  std::mt19937_64 rng(2);
  const auto x = rand_const(rng, {2, 3});
  const auto w = rand_param(rng, {3, 2});
  Tape tape;
  tape.backward(project(tape, affine(tape, x, w, nullptr)));
  CHECK_FALSE(x->has_grad());
  CHECK(w->has_grad());

  Tape constants_only;
  const auto c = affine(constants_only, x, constant({3, 2}, std::vector<double>(6, 1.0)), nullptr);
  CHECK(constants_only.size() == 0);
  CHECK_FALSE(c->requires_grad());
}

TEST_CASE("GRU cell with zero parameters") {
  GruParams p;
  for (auto* v : {&p.w_z, &p.w_r, &p.w_h}) *v = zeros({2, 3}, true);
  for (auto* v : {&p.u_z, &p.u_r, &p.u_h}) *v = zeros({3, 3}, true);
  for (auto* v : {&p.b_z, &p.b_r, &p.b_h}) *v = zeros({3}, true);
  Tape tape;
  const auto h = gru_step(tape, constant({1, 2}, {0.7, -0.2}), zeros({1, 3}), p);
  CHECK(h->values() == std::vector<double>{0, 0, 0});
  // z = 0.5 and c = 0, so h' = 0.5 * h_prev.
  const auto h2 = gru_step(tape, constant({1, 2}, {0.7, -0.2}), constant({1, 3}, {1, -2, 4}), p);
  CHECK(h2->values() == std::vector<double>{0.5, -1, 2});
}

TEST_CASE("GRU cell matches a scalar evaluation with H=1") {
  const double x = 0.8, hp = -0.3;
  const double wz = 0.4, wr = -0.6, wh = 1.1, uz = 0.25, ur = 0.9, uh = -0.7, bz = 0.05, br = -0.1, bh = 0.2;
  GruParams p;
  p.w_z = parameter({1, 1}, {wz});
  p.w_r = parameter({1, 1}, {wr});
  p.w_h = parameter({1, 1}, {wh});
  p.u_z = parameter({1, 1}, {uz});
  p.u_r = parameter({1, 1}, {ur});
  p.u_h = parameter({1, 1}, {uh});
  p.b_z = parameter({1}, {bz});
  p.b_r = parameter({1}, {br});
  p.b_h = parameter({1}, {bh});
  Tape tape;
  const double got = gru_step(tape, constant({1, 1}, {x}), constant({1, 1}, {hp}), p)->item();

  const double z = sig(wz * x + uz * hp + bz);
  const double r = sig(wr * x + ur * hp + br);
  const double c = std::tanh(wh * x + uh * (r * hp) + bh);
  const double expected = (1 - z) * hp + z * c;
  CHECK(got == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("GRU gradients match finite differences, including inactive rows") {
  std::mt19937_64 rng(31);
  const auto p = rand_gru(rng, 3, 4);
  const auto x = rand_param(rng, {3, 3});
  const auto h0 = rand_param(rng, {3, 4});
  auto params = named(p.all(), "gru");
  params.push_back({"x", x});
  params.push_back({"h0", h0});
  expect_gradients(
      [&](Tape& t) {
        const auto h1 = gru_step(t, x, h0, p, {true, false, true});
        const auto h2 = gru_step(t, x, h1, p);
        return project(t, h2);
      },
      params);

  Tape tape;
  const auto h = gru_step(tape, x, h0, p, {true, false, true});
  for (std::size_t j = 0; j < 4; ++j) CHECK(h->values()[4 + j] == h0->values()[4 + j]);
}

TEST_CASE("bigru on a single step is the two cells side by side") {
  std::mt19937_64 rng(41);
  const auto f = rand_gru(rng, 3, 2), b = rand_gru(rng, 3, 2);
  const auto x = rand_const(rng, {2, 3});
  Tape tape;
  const auto out = bigru(tape, {x}, {1, 1}, f, b);
  REQUIRE(out.size() == 1);
  const auto hf = gru_step(tape, x, zeros({2, 2}), f);
  const auto hb = gru_step(tape, x, zeros({2, 2}), b);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t j = 0; j < 2; ++j) {
      CHECK(out[0]->values()[r * 4 + j] == hf->values()[r * 2 + j]);
      CHECK(out[0]->values()[r * 4 + 2 + j] == hb->values()[r * 2 + j]);
    }
}

TEST_CASE("bigru with zero parameters outputs zeros") {
  GruParams p;
  for (auto* v : {&p.w_z, &p.w_r, &p.w_h}) *v = zeros({3, 2}, true);
  for (auto* v : {&p.u_z, &p.u_r, &p.u_h}) *v = zeros({2, 2}, true);
  for (auto* v : {&p.b_z, &p.b_r, &p.b_h}) *v = zeros({2}, true);
  std::mt19937_64 rng(1);
  std::vector<Var> steps;
  for (int t = 0; t < 4; ++t) steps.push_back(rand_const(rng, {2, 3}));
  Tape tape;
  for (const auto& o : bigru(tape, steps, {4, 2}, p, p))
    for (double v : o->values()) CHECK(v == 0.0);
}

TEST_CASE("bigru gradients match finite differences") {
  std::mt19937_64 rng(43);
  const auto f = rand_gru(rng, 2, 3), b = rand_gru(rng, 2, 3);
  std::vector<Var> steps;
  for (int t = 0; t < 4; ++t) steps.push_back(rand_param(rng, {2, 2}));
  auto params = named(f.all(), "fwd");
  for (auto& p : named(b.all(), "bwd")) params.push_back(p);
  for (auto& p : named(steps, "x")) params.push_back(p);
  expect_gradients(
      [&](Tape& t) {
        const auto out = bigru(t, steps, {4, 2}, f, b);
        return project(t, concat(t, out, 1));
      },
      params);
}

TEST_CASE("convolution matches brute-force dot products") {
  // T=4, D=1, width 2, one filter.
  const std::vector<double> seq = {0.5, -1.0, 2.0, 0.25};
  std::vector<Var> steps;
  for (double v : seq) steps.push_back(constant({1, 1}, {v}));
  const auto w = parameter({2, 1}, {0.7, -0.4});
  const auto b = parameter({1}, {0.1});
  Tape tape;
  const double pooled = conv1d_maxpool(tape, steps, {4}, 2, w, b)->item();
  double best = -INFINITY;
  for (std::size_t t = 0; t + 2 <= 4; ++t) best = std::max(best, std::max(0.0, 0.7 * seq[t] - 0.4 * seq[t + 1] + 0.1));
  CHECK(pooled == doctest::Approx(best).epsilon(1e-15));
}

TEST_CASE("multi-channel convolution with short rows matches brute force") {
  std::mt19937_64 rng(51);
  const std::size_t T = 7, C = 3, F = 4;
  for (std::size_t width : {1u, 2u, 3u, 5u}) {
    std::vector<Var> steps;
    for (std::size_t t = 0; t < T; ++t) steps.push_back(rand_const(rng, {3, C}));
    const auto w = rand_param(rng, {width * C, F});
    const auto b = rand_param(rng, {F}, 0.1);
    const std::vector<std::size_t> lengths = {7, 4, 2};
    Tape tape;
    const auto out = conv1d_maxpool(tape, steps, lengths, width, w, b);
    for (std::size_t row = 0; row < 3; ++row) {
      std::vector<std::size_t> starts;
      if (lengths[row] >= width) {
        for (std::size_t s = 0; s + width <= lengths[row]; ++s) starts.push_back(s);
      } else {
        for (std::size_t s = 0; s < lengths[row]; ++s) starts.push_back(std::min(s, T - width));
      }
      for (std::size_t f = 0; f < F; ++f) {
        double best = -INFINITY;
        for (auto s : starts) {
          double acc = b->values()[f];
          for (std::size_t k = 0; k < width; ++k)
            for (std::size_t c = 0; c < C; ++c)
              acc += steps[s + k]->values()[row * C + c] * w->values()[(k * C + c) * F + f];
          best = std::max(best, std::max(0.0, acc));
        }
        INFO("width " << width << " row " << row << " filter " << f);
        CHECK(out->values()[row * F + f] == doctest::Approx(best).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("valid convolution over fifty steps has 49 width-2 windows") {
  // A filter that reads the step index reveals every window it pooled over.
  std::vector<Var> steps;
  for (std::size_t t = 0; t < 50; ++t) steps.push_back(constant({1, 1}, {static_cast<double>(t)}));
  const auto w = parameter({2, 1}, {0.0, 1.0});
  Tape tape;
  CHECK(conv1d_maxpool(tape, steps, {50}, 2, w, zeros({1}, true))->item() == 49.0);

  std::vector<Var> z;
  for (std::size_t t = 0; t < 50; ++t) z.push_back(constant({1, 3}, {0, 0, 0}));
  std::mt19937_64 rng(3);
  CHECK(conv1d_maxpool(tape, z, {50}, 2, rand_param(rng, {6, 2}), zeros({2}, true))->values() ==
        std::vector<double>{0, 0});
}

TEST_CASE("max-pool gradient routes to the earliest argmax") {
  std::vector<Var> steps;
  for (double v : {1.0, 3.0, 3.0, 2.0}) steps.push_back(constant({1, 1}, {v}));
  const auto w = parameter({1, 1}, {1.0});
  const auto b = parameter({1}, {0.0});
  Tape tape;
  const auto pooled = conv1d_maxpool(tape, steps, {4}, 1, w, b);
  CHECK(pooled->item() == 3.0);
  tape.backward(mse(tape, pooled, {0.0}));
  // d/dw (w*x_t*)^2 = 2 * 3 * x_t* with x_t* = 3 from one window only.
  CHECK(w->grad()[0] == 18.0);
  CHECK(b->grad()[0] == 6.0);

  std::vector<Var> inputs;
  for (double v : {1.0, 3.0, 3.0, 2.0}) inputs.push_back(parameter({1, 1}, {v}));
  Tape t2;
  t2.backward(mse(t2, conv1d_maxpool(t2, inputs, {4}, 1, w, b), {0.0}));
  CHECK(inputs[0]->grad()[0] == 0.0);
  CHECK(inputs[1]->grad()[0] == 6.0);
  CHECK(inputs[2]->grad()[0] == 0.0);
  CHECK(inputs[3]->grad()[0] == 0.0);
}

TEST_CASE("padding never changes the pooled encoder output") {
  std::mt19937_64 rng(61);
  const std::size_t D = 3, H = 2;
  const auto f = rand_gru(rng, D, H), b = rand_gru(rng, D, H);
  std::vector<ConvFilter> filters;
  for (std::size_t w : {2u, 3u}) filters.push_back({w, rand_param(rng, {w * 2 * H, 3}), rand_param(rng, {3}, 0.1)});
  for (std::size_t len : {1u, 2u, 4u, 5u}) {
    std::vector<Var> real;
    for (std::size_t t = 0; t < len; ++t) real.push_back(rand_const(rng, {1, D}));
    auto padded = real;
    for (std::size_t t = len; t < len + 6; ++t) {
      padded.push_back(rand_const(rng, {1, D}, 5.0));
    }
    // Short rows pool over windows starting at each real position, so the
    // baseline needs room for len + 2 steps with the widest filter.
    auto exact = real;
    while (exact.size() < len + 2) exact.push_back(rand_const(rng, {1, D}, 5.0));
    Tape t1, t2;
    const auto short_out = conv_bank(t1, bigru(t1, exact, {len}, f, b), {len}, filters);
    const auto long_out = conv_bank(t2, bigru(t2, padded, {len}, f, b), {len}, filters);
    INFO("length " << len);
    CHECK(short_out->values() == long_out->values());
  }
}

TEST_CASE("conv bank gradients match finite differences") {
  std::mt19937_64 rng(71);
  std::vector<Var> steps;
  for (int t = 0; t < 5; ++t) steps.push_back(rand_param(rng, {3, 2}));
  std::vector<ConvFilter> filters;
  std::vector<NamedParam> params;
  for (std::size_t w : {2u, 3u}) {
    filters.push_back({w, rand_param(rng, {w * 2, 2}), rand_param(rng, {2}, 0.1)});
    params.push_back({"w" + std::to_string(w), filters.back().w});
    params.push_back({"b" + std::to_string(w), filters.back().b});
  }
  for (auto& p : named(steps, "x")) params.push_back(p);
  expect_gradients([&](Tape& t) { return project(t, conv_bank(t, steps, {5, 3, 1}, filters)); }, params);
}

TEST_CASE("gradient check skips coordinates sitting on a kink") {
  const auto x = parameter({2}, {0.0, 1.0});
  const auto r = gradient_check([&](Tape& t) { return mse(t, relu(t, x), {0.0, 0.0}); }, {{"x", x}}, 1e-4);
  CHECK(r.skipped == 1);
  CHECK(r.checked == 1);
  CHECK(r.max_rel_error < 1e-8);
  CHECK(relative_error(1.0, 1.0 + 1e-9) < 1e-8);
  CHECK(relative_error(0.0, 1e-12) < 1e-4);
}
