#include "mtaffect/ad/ops.hpp"

#include <algorithm>
#include <cmath>

#include "mtaffect/error.hpp"

namespace mtaffect::ad {

namespace {

[[noreturn]] void shape_error(const char* op, const std::string& detail) {
  throw Error(std::string(op) + ": shape mismatch: " + detail);
}

// C[n x m] += A[n x k] * B[k x m]
void gemm_nn(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = c + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      const double* bp = b + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

// C[k x m] += A[n x k]^T * G[n x m]
void gemm_tn(const double* a, const double* g, double* c, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* gi = g + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      double* cp = c + p * m;
      for (std::size_t j = 0; j < m; ++j) cp[j] += av * gi[j];
    }
  }
}

// C[n x k] += G[n x m] * B[k x m]^T
void gemm_nt(const double* g, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* gi = g + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = b + p * m;
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += gi[j] * bp[j];
      c[i * k + p] += s;
    }
  }
}

double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void add_bias_rows(double* out, const double* bias, std::size_t n, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = bias[j];
}

void column_sums(const double* g, double* out, std::size_t n, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out[j] += g[i * m + j];
}

Var make_like(const Var& x) { return std::make_shared<Tensor>(x->shape()); }

template <typename Fwd, typename Deriv>
Var unary(Tape& tape, const Var& x, Fwd fwd, Deriv deriv) {
  auto out = make_like(x);
  auto xs = x->data();
  auto os = out->data();
  for (std::size_t i = 0; i < xs.size(); ++i) os[i] = fwd(xs[i]);
  Tensor* o = out.get();
  return tape.record(out, {x}, [x, o, deriv] {
    if (!x->requires_grad()) return;
    auto gx = x->grad();
    auto go = o->grad();
    auto xv = x->data();
    auto ov = o->data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * deriv(xv[i], ov[i]);
  });
}

std::uint64_t sign_pattern(std::span<const double> xs) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (double v : xs) h = (h ^ static_cast<std::uint64_t>(v > 0.0)) * 1099511628211ull;
  return h;
}

// Uniform in [0,1) from the top 53 bits; identical on every platform.
double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

Var affine(Tape& tape, const Var& x, const Var& w, const Var& b) {
  if (w->shape().size() != 2) shape_error("affine", "weight must be 2-D, got " + w->shape_string());
  const std::size_t n = x->rows(), in = x->cols(), out_dim = w->shape()[1];
  if (w->shape()[0] != in)
    shape_error("affine", "input " + x->shape_string() + " vs weight " + w->shape_string());
  if (b && b->size() != out_dim)
    shape_error("affine", "bias " + b->shape_string() + " vs weight " + w->shape_string());

  auto out = std::make_shared<Tensor>(std::vector<std::size_t>{n, out_dim});
  if (b) add_bias_rows(out->data().data(), b->data().data(), n, out_dim);
  gemm_nn(x->data().data(), w->data().data(), out->data().data(), n, in, out_dim);

  Tensor* o = out.get();
  std::vector<Var> inputs{x, w};
  if (b) inputs.push_back(b);
  return tape.record(out, inputs, [x, w, b, o, n, in, out_dim] {
    const double* g = o->grad().data();
    if (x->requires_grad()) gemm_nt(g, w->data().data(), x->grad().data(), n, in, out_dim);
    if (w->requires_grad()) gemm_tn(x->data().data(), g, w->grad().data(), n, in, out_dim);
    if (b && b->requires_grad()) column_sums(g, b->grad().data(), n, out_dim);
  });
}

Var add(Tape& tape, const Var& a, const Var& b) {
  if (a->size() != b->size()) shape_error("add", a->shape_string() + " vs " + b->shape_string());
  auto out = make_like(a);
  for (std::size_t i = 0; i < a->size(); ++i) out->data()[i] = a->data()[i] + b->data()[i];
  Tensor* o = out.get();
  return tape.record(out, {a, b}, [a, b, o] {
    auto go = o->grad();
    if (a->requires_grad()) {
      auto ga = a->grad();
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    }
    if (b->requires_grad()) {
      auto gb = b->grad();
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i];
    }
  });
}

Var sub(Tape& tape, const Var& a, const Var& b) {
  if (a->size() != b->size()) shape_error("sub", a->shape_string() + " vs " + b->shape_string());
  auto out = make_like(a);
  for (std::size_t i = 0; i < a->size(); ++i) out->data()[i] = a->data()[i] - b->data()[i];
  Tensor* o = out.get();
  return tape.record(out, {a, b}, [a, b, o] {
    auto go = o->grad();
    if (a->requires_grad()) {
      auto ga = a->grad();
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
    }
    if (b->requires_grad()) {
      auto gb = b->grad();
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
    }
  });
}

Var mul(Tape& tape, const Var& a, const Var& b) {
  if (a->size() != b->size()) shape_error("mul", a->shape_string() + " vs " + b->shape_string());
  auto out = make_like(a);
  for (std::size_t i = 0; i < a->size(); ++i) out->data()[i] = a->data()[i] * b->data()[i];
  Tensor* o = out.get();
  return tape.record(out, {a, b}, [a, b, o] {
    auto go = o->grad();
    if (a->requires_grad()) {
      auto ga = a->grad();
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * b->data()[i];
    }
    if (b->requires_grad()) {
      auto gb = b->grad();
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * a->data()[i];
    }
  });
}

Var scale(Tape& tape, const Var& a, double s) {
  auto out = make_like(a);
  for (std::size_t i = 0; i < a->size(); ++i) out->data()[i] = a->data()[i] * s;
  Tensor* o = out.get();
  return tape.record(out, {a}, [a, o, s] {
    auto ga = a->grad();
    auto go = o->grad();
    for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * s;
  });
}

Var relu(Tape& tape, const Var& x) {
  tape.mix_pattern(sign_pattern(x->data()));
  return unary(
      tape, x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Tape& tape, const Var& x) {
  return unary(tape, x, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Tape& tape, const Var& x) {
  return unary(
      tape, x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var concat(Tape& tape, const std::vector<Var>& xs, int axis) {
  if (xs.empty()) throw Error("concat: no inputs");
  if (axis != 0 && axis != 1) throw Error("concat: axis must be 0 or 1");
  const std::size_t rows0 = xs[0]->rows(), cols0 = xs[0]->cols();
  std::size_t total = 0;
  for (const auto& x : xs) {
    if (axis == 0 && x->cols() != cols0)
      shape_error("concat", "column count " + x->shape_string() + " vs " + xs[0]->shape_string());
    if (axis == 1 && x->rows() != rows0)
      shape_error("concat", "row count " + x->shape_string() + " vs " + xs[0]->shape_string());
    total += axis == 0 ? x->rows() : x->cols();
  }
  const std::size_t out_rows = axis == 0 ? total : rows0;
  const std::size_t out_cols = axis == 0 ? cols0 : total;
  auto out = std::make_shared<Tensor>(std::vector<std::size_t>{out_rows, out_cols});
  auto od = out->data();
  std::size_t offset = 0;
  for (const auto& x : xs) {
    auto xd = x->data();
    if (axis == 0) {
      std::copy(xd.begin(), xd.end(), od.begin() + static_cast<std::ptrdiff_t>(offset * out_cols));
      offset += x->rows();
    } else {
      const std::size_t c = x->cols();
      for (std::size_t r = 0; r < out_rows; ++r)
        std::copy_n(xd.begin() + static_cast<std::ptrdiff_t>(r * c), c,
                    od.begin() + static_cast<std::ptrdiff_t>(r * out_cols + offset));
      offset += c;
    }
  }
  Tensor* o = out.get();
  return tape.record(out, xs, [xs, o, axis, out_rows, out_cols] {
    auto go = o->grad();
    std::size_t offset = 0;
    for (const auto& x : xs) {
      const std::size_t c = x->cols();
      if (x->requires_grad()) {
        auto gx = x->grad();
        if (axis == 0) {
          for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[offset * out_cols + i];
        } else {
          for (std::size_t r = 0; r < out_rows; ++r)
            for (std::size_t j = 0; j < c; ++j) gx[r * c + j] += go[r * out_cols + offset + j];
        }
      }
      offset += axis == 0 ? x->rows() : c;
    }
  });
}

Var dropout(Tape& tape, const Var& x, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw Error("dropout: p must lie in [0,1)");
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::vector<double> mask(x->size());
  for (auto& m : mask) m = uniform01(rng) < p ? 0.0 : keep_scale;
  auto out = make_like(x);
  for (std::size_t i = 0; i < mask.size(); ++i) out->data()[i] = x->data()[i] * mask[i];
  Tensor* o = out.get();
  return tape.record(out, {x}, [x, o, mask = std::move(mask)] {
    auto gx = x->grad();
    auto go = o->grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * mask[i];
  });
}

Var scale_rows(Tape& tape, const Var& x, const std::vector<double>& row_scale) {
  const std::size_t n = x->rows(), c = x->cols();
  if (row_scale.size() != n)
    shape_error("scale_rows", x->shape_string() + " vs " + std::to_string(row_scale.size()) + " row factors");
  auto out = make_like(x);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < c; ++j) out->data()[r * c + j] = x->data()[r * c + j] * row_scale[r];
  Tensor* o = out.get();
  return tape.record(out, {x}, [x, o, row_scale, n, c] {
    auto gx = x->grad();
    auto go = o->grad();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < c; ++j) gx[r * c + j] += go[r * c + j] * row_scale[r];
  });
}

std::vector<double> softmax_rows(const Tensor& logits) {
  const std::size_t n = logits.rows(), k = logits.cols();
  std::vector<double> out(n * k);
  auto d = logits.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double m = *std::max_element(d.begin() + static_cast<std::ptrdiff_t>(i * k),
                                       d.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += (out[i * k + j] = std::exp(d[i * k + j] - m));
    for (std::size_t j = 0; j < k; ++j) out[i * k + j] /= s;
  }
  return out;
}

Var softmax_cross_entropy(Tape& tape, const Var& logits, const std::vector<std::size_t>& gold) {
  const std::size_t n = logits->rows(), k = logits->cols();
  if (gold.size() != n)
    shape_error("softmax_cross_entropy", logits->shape_string() + " vs " + std::to_string(gold.size()) + " labels");
  for (auto g : gold)
    if (g >= k) throw Error("softmax_cross_entropy: gold class " + std::to_string(g) + " out of range");
  auto probs = softmax_rows(*logits);
  auto d = logits->data();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = *std::max_element(d.begin() + static_cast<std::ptrdiff_t>(i * k),
                                       d.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += std::exp(d[i * k + j] - m);
    total += m + std::log(s) - d[i * k + gold[i]];
  }
  auto out = std::make_shared<Tensor>(std::vector<std::size_t>{1}, std::vector<double>{total / static_cast<double>(n)});
  Tensor* o = out.get();
  return tape.record(out, {logits}, [logits, o, probs = std::move(probs), gold, n, k] {
    const double g = o->grad()[0] / static_cast<double>(n);
    auto gl = logits->grad();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j)
        gl[i * k + j] += g * (probs[i * k + j] - (j == gold[i] ? 1.0 : 0.0));
  });
}

Var mse(Tape& tape, const Var& pred, const std::vector<double>& gold) {
  const std::size_t n = pred->size();
  if (gold.size() != n) shape_error("mse", pred->shape_string() + " vs " + std::to_string(gold.size()) + " targets");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pred->data()[i] - gold[i];
    total += d * d;
  }
  auto out = std::make_shared<Tensor>(std::vector<std::size_t>{1}, std::vector<double>{total / static_cast<double>(n)});
  Tensor* o = out.get();
  return tape.record(out, {pred}, [pred, o, gold, n] {
    const double g = o->grad()[0] * 2.0 / static_cast<double>(n);
    auto gp = pred->grad();
    for (std::size_t i = 0; i < n; ++i) gp[i] += g * (pred->data()[i] - gold[i]);
  });
}

std::size_t GruParams::input_dim() const { return w_z->shape()[0]; }
std::size_t GruParams::hidden_dim() const { return u_z->shape()[0]; }

std::vector<Var> GruParams::all() const { return {w_z, w_r, w_h, u_z, u_r, u_h, b_z, b_r, b_h}; }

void GruParams::validate() const {
  for (const auto& v : all())
    if (!v) throw Error("gru: missing parameter array");
  const std::size_t in = w_z->shape().at(0), h = u_z->shape().at(0);
  for (const auto& w : {w_z, w_r, w_h})
    if (w->shape() != std::vector<std::size_t>{in, h}) shape_error("gru", "input weight " + w->shape_string());
  for (const auto& u : {u_z, u_r, u_h})
    if (u->shape() != std::vector<std::size_t>{h, h}) shape_error("gru", "recurrent weight " + u->shape_string());
  for (const auto& b : {b_z, b_r, b_h})
    if (b->size() != h) shape_error("gru", "bias " + b->shape_string());
}

Var gru_step(Tape& tape, const Var& x, const Var& h_prev, const GruParams& p, const std::vector<bool>& active) {
  p.validate();
  const std::size_t in = p.input_dim(), hd = p.hidden_dim(), n = x->rows();
  if (x->cols() != in) shape_error("gru_step", "input " + x->shape_string() + " vs W " + p.w_z->shape_string());
  if (h_prev->rows() != n || h_prev->cols() != hd)
    shape_error("gru_step", "state " + h_prev->shape_string() + " vs input " + x->shape_string());
  if (!active.empty() && active.size() != n) shape_error("gru_step", "mask length differs from batch size");

  const std::size_t nh = n * hd;
  std::vector<double> z(nh), r(nh), c(nh), rh(nh);
  const double* xd = x->data().data();
  const double* hd_ = h_prev->data().data();

  add_bias_rows(z.data(), p.b_z->data().data(), n, hd);
  gemm_nn(xd, p.w_z->data().data(), z.data(), n, in, hd);
  gemm_nn(hd_, p.u_z->data().data(), z.data(), n, hd, hd);
  add_bias_rows(r.data(), p.b_r->data().data(), n, hd);
  gemm_nn(xd, p.w_r->data().data(), r.data(), n, in, hd);
  gemm_nn(hd_, p.u_r->data().data(), r.data(), n, hd, hd);
  for (std::size_t i = 0; i < nh; ++i) {
    z[i] = sigmoid_value(z[i]);
    r[i] = sigmoid_value(r[i]);
    rh[i] = r[i] * hd_[i];
  }
  add_bias_rows(c.data(), p.b_h->data().data(), n, hd);
  gemm_nn(xd, p.w_h->data().data(), c.data(), n, in, hd);
  gemm_nn(rh.data(), p.u_h->data().data(), c.data(), n, hd, hd);
  for (auto& v : c) v = std::tanh(v);

  auto out = std::make_shared<Tensor>(std::vector<std::size_t>{n, hd});
  auto od = out->data();
  for (std::size_t row = 0; row < n; ++row) {
    const bool on = active.empty() || active[row];
    for (std::size_t j = 0; j < hd; ++j) {
      const std::size_t i = row * hd + j;
      od[i] = on ? (1.0 - z[i]) * hd_[i] + z[i] * c[i] : hd_[i];
    }
  }

  Tensor* o = out.get();
  std::vector<Var> inputs{x, h_prev};
  for (const auto& v : p.all()) inputs.push_back(v);
  return tape.record(out, inputs,
                     [x, h_prev, p, o, active, z = std::move(z), r = std::move(r), c = std::move(c),
                      rh = std::move(rh), n, in, hd] {
    const std::size_t nh = n * hd;
    auto g = o->grad();
    const double* h = h_prev->data().data();
    std::vector<double> daz(nh, 0.0), dar(nh, 0.0), dac(nh, 0.0), dh(nh, 0.0);
    for (std::size_t row = 0; row < n; ++row) {
      const bool on = active.empty() || active[row];
      for (std::size_t j = 0; j < hd; ++j) {
        const std::size_t i = row * hd + j;
        if (!on) {
          dh[i] = g[i];
          continue;
        }
        dh[i] = g[i] * (1.0 - z[i]);
        daz[i] = g[i] * (c[i] - h[i]) * z[i] * (1.0 - z[i]);
        dac[i] = g[i] * z[i] * (1.0 - c[i] * c[i]);
      }
    }
    // Reset gate: d(rh) = dac . U_h^T
    std::vector<double> drh(nh, 0.0);
    gemm_nt(dac.data(), p.u_h->data().data(), drh.data(), n, hd, hd);
    for (std::size_t i = 0; i < nh; ++i) {
      dar[i] = drh[i] * h[i] * r[i] * (1.0 - r[i]);
      dh[i] += drh[i] * r[i];
    }
    gemm_nt(daz.data(), p.u_z->data().data(), dh.data(), n, hd, hd);
    gemm_nt(dar.data(), p.u_r->data().data(), dh.data(), n, hd, hd);

    const double* xd = x->data().data();
    if (x->requires_grad()) {
      double* gx = x->grad().data();
      gemm_nt(daz.data(), p.w_z->data().data(), gx, n, in, hd);
      gemm_nt(dar.data(), p.w_r->data().data(), gx, n, in, hd);
      gemm_nt(dac.data(), p.w_h->data().data(), gx, n, in, hd);
    }
    if (h_prev->requires_grad()) {
      auto gh = h_prev->grad();
      for (std::size_t i = 0; i < nh; ++i) gh[i] += dh[i];
    }
    auto acc_w = [&](const Var& w, const double* lhs, const std::vector<double>& d, std::size_t k) {
      if (w->requires_grad()) gemm_tn(lhs, d.data(), w->grad().data(), n, k, hd);
    };
    acc_w(p.w_z, xd, daz, in);
    acc_w(p.w_r, xd, dar, in);
    acc_w(p.w_h, xd, dac, in);
    acc_w(p.u_z, h, daz, hd);
    acc_w(p.u_r, h, dar, hd);
    acc_w(p.u_h, rh.data(), dac, hd);
    if (p.b_z->requires_grad()) column_sums(daz.data(), p.b_z->grad().data(), n, hd);
    if (p.b_r->requires_grad()) column_sums(dar.data(), p.b_r->grad().data(), n, hd);
    if (p.b_h->requires_grad()) column_sums(dac.data(), p.b_h->grad().data(), n, hd);
  });
}

std::vector<Var> bigru(Tape& tape, const std::vector<Var>& steps, const std::vector<std::size_t>& lengths,
                       const GruParams& fwd, const GruParams& bwd) {
  fwd.validate();
  bwd.validate();
  const std::size_t t_len = steps.size();
  if (t_len == 0) return {};
  const std::size_t n = steps[0]->rows();
  if (lengths.size() != n) shape_error("bigru", "lengths size differs from batch size");
  for (const auto& s : steps)
    if (s->rows() != n) shape_error("bigru", "step " + s->shape_string() + " batch differs");

  std::vector<std::vector<bool>> active(t_len, std::vector<bool>(n));
  std::vector<std::vector<double>> keep(t_len, std::vector<double>(n));
  for (std::size_t t = 0; t < t_len; ++t)
    for (std::size_t b = 0; b < n; ++b) {
      active[t][b] = t < lengths[b];
      keep[t][b] = active[t][b] ? 1.0 : 0.0;
    }

  std::vector<Var> fwd_out(t_len), bwd_out(t_len);
  Var h = zeros({n, fwd.hidden_dim()});
  for (std::size_t t = 0; t < t_len; ++t) fwd_out[t] = h = gru_step(tape, steps[t], h, fwd, active[t]);
  h = zeros({n, bwd.hidden_dim()});
  for (std::size_t t = t_len; t-- > 0;) bwd_out[t] = h = gru_step(tape, steps[t], h, bwd, active[t]);

  std::vector<Var> out(t_len);
  for (std::size_t t = 0; t < t_len; ++t)
    out[t] = scale_rows(tape, concat(tape, {fwd_out[t], bwd_out[t]}, 1), keep[t]);
  return out;
}

Var conv1d_maxpool(Tape& tape, const std::vector<Var>& steps, const std::vector<std::size_t>& lengths,
                   std::size_t width, const Var& w, const Var& b) {
  const std::size_t t_len = steps.size();
  if (width == 0) throw Error("conv1d_maxpool: filter width must be positive");
  if (t_len < width)
    shape_error("conv1d_maxpool", "sequence of " + std::to_string(t_len) + " steps shorter than width " +
                                      std::to_string(width));
  const std::size_t n = steps[0]->rows(), ch = steps[0]->cols();
  if (w->shape().size() != 2 || w->shape()[0] != width * ch)
    shape_error("conv1d_maxpool", "filter " + w->shape_string() + " vs width " + std::to_string(width) +
                                      " x channels " + std::to_string(ch));
  const std::size_t nf = w->shape()[1];
  if (b->size() != nf) shape_error("conv1d_maxpool", "bias " + b->shape_string());
  if (lengths.size() != n) shape_error("conv1d_maxpool", "lengths size differs from batch size");
  for (const auto& s : steps)
    if (s->rows() != n || s->cols() != ch) shape_error("conv1d_maxpool", "step " + s->shape_string());

  const double* wd = w->data().data();
  const double* bd = b->data().data();
  auto out = std::make_shared<Tensor>(std::vector<std::size_t>{n, nf});
  std::vector<std::size_t> argmax(n * nf, 0);
  std::vector<double> best(n * nf, 0.0);
  std::vector<double> acc(nf);
  std::uint64_t pattern = 0x84222325cbf29ce4ull;

  for (std::size_t row = 0; row < n; ++row) {
    const std::size_t len = std::min(lengths[row], t_len);
    std::size_t last;
    if (len >= width) last = len - width;
    else last = std::min(len == 0 ? 0 : len - 1, t_len - width);
    for (std::size_t pos = 0; pos <= last; ++pos) {
      std::copy(bd, bd + nf, acc.begin());
      for (std::size_t k = 0; k < width; ++k) {
        const double* xr = steps[pos + k]->data().data() + row * ch;
        for (std::size_t c = 0; c < ch; ++c) {
          const double xv = xr[c];
          const double* wr = wd + (k * ch + c) * nf;
          for (std::size_t f = 0; f < nf; ++f) acc[f] += xv * wr[f];
        }
      }
      for (std::size_t f = 0; f < nf; ++f) {
        const std::size_t i = row * nf + f;
        if (pos == 0 || acc[f] > best[i]) {
          best[i] = acc[f];
          argmax[i] = pos;
        }
      }
    }
    for (std::size_t f = 0; f < nf; ++f) {
      const std::size_t i = row * nf + f;
      out->data()[i] = best[i] > 0.0 ? best[i] : 0.0;
      pattern = (pattern ^ (argmax[i] * 2 + (best[i] > 0.0))) * 1099511628211ull;
    }
  }
  tape.mix_pattern(pattern);

  Tensor* o = out.get();
  std::vector<Var> inputs(steps);
  inputs.push_back(w);
  inputs.push_back(b);
  return tape.record(out, inputs, [steps, w, b, o, argmax = std::move(argmax), best = std::move(best), n, nf, ch, width] {
    auto g = o->grad();
    const double* wd = w->data().data();
    for (std::size_t row = 0; row < n; ++row) {
      for (std::size_t f = 0; f < nf; ++f) {
        const std::size_t i = row * nf + f;
        if (!(best[i] > 0.0) || g[i] == 0.0) continue;
        const double gi = g[i];
        const std::size_t pos = argmax[i];
        if (b->requires_grad()) b->grad()[f] += gi;
        for (std::size_t k = 0; k < width; ++k) {
          const auto& step = steps[pos + k];
          const double* xr = step->data().data() + row * ch;
          double* gx = step->requires_grad() ? step->grad().data() + row * ch : nullptr;
          double* gw = w->requires_grad() ? w->grad().data() : nullptr;
          for (std::size_t c = 0; c < ch; ++c) {
            const std::size_t wi = (k * ch + c) * nf + f;
            if (gw) gw[wi] += xr[c] * gi;
            if (gx) gx[c] += wd[wi] * gi;
          }
        }
      }
    }
  });
}

Var conv_bank(Tape& tape, const std::vector<Var>& steps, const std::vector<std::size_t>& lengths,
              const std::vector<ConvFilter>& filters) {
  if (filters.empty()) throw Error("conv_bank: no filters");
  std::vector<Var> pooled;
  pooled.reserve(filters.size());
  for (const auto& f : filters) pooled.push_back(conv1d_maxpool(tape, steps, lengths, f.width, f.w, f.b));
  return pooled.size() == 1 ? pooled[0] : concat(tape, pooled, 1);
}

}  // namespace mtaffect::ad
