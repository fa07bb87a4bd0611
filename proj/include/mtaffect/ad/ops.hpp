#pragma once

// Differentiable primitives. Every op validates shapes, computes its forward
// value eagerly and registers a backward rule on the tape that accumulates
// into inputs with requires_grad.

#include <cstdint>
#include <random>
#include <vector>

#include "mtaffect/ad/tensor.hpp"

namespace mtaffect::ad {

using Rng = std::mt19937_64;

// x [N x in] . W [in x out] + b [out]; pass nullptr for no bias.
Var affine(Tape& tape, const Var& x, const Var& w, const Var& b);

Var add(Tape& tape, const Var& a, const Var& b);
Var sub(Tape& tape, const Var& a, const Var& b);
Var mul(Tape& tape, const Var& a, const Var& b);
Var scale(Tape& tape, const Var& a, double s);

Var relu(Tape& tape, const Var& x);
Var sigmoid(Tape& tape, const Var& x);
Var tanh(Tape& tape, const Var& x);

// Concatenates 2-D tensors along axis 0 (rows) or 1 (columns).
Var concat(Tape& tape, const std::vector<Var>& xs, int axis);

// Inverted dropout: in training mode each entry is zeroed with probability p
// and survivors are scaled by 1/(1-p). Identity in eval mode.
Var dropout(Tape& tape, const Var& x, double p, bool training, Rng& rng);

// Multiplies row i of x [N x C] by row_scale[i].
Var scale_rows(Tape& tape, const Var& x, const std::vector<double>& row_scale);

// Mean over the batch of -log softmax(logits)[gold]; logits [B x K].
Var softmax_cross_entropy(Tape& tape, const Var& logits, const std::vector<std::size_t>& gold);

// Mean over the batch of (pred - gold)^2; pred has B entries.
Var mse(Tape& tape, const Var& pred, const std::vector<double>& gold);

// Row-wise softmax of values (no tape).
std::vector<double> softmax_rows(const Tensor& logits);

struct GruParams {
  Var w_z, w_r, w_h;  // [in x H]
  Var u_z, u_r, u_h;  // [H x H]
  Var b_z, b_r, b_h;  // [H]

  std::size_t input_dim() const;
  std::size_t hidden_dim() const;
  std::vector<Var> all() const;
  void validate() const;
};

// One GRU step over a batch:
//   z = sigmoid(x W_z + h U_z + b_z)
//   r = sigmoid(x W_r + h U_r + b_r)
//   c = tanh(x W_h + (r * h) U_h + b_h)
//   h' = (1 - z) * h + z * c
// Rows with active[i] == false carry h through unchanged. An empty `active`
// means every row is active.
Var gru_step(Tape& tape, const Var& x, const Var& h_prev, const GruParams& p,
             const std::vector<bool>& active = {});

// Bidirectional GRU over time-major steps (each [B x D]). Position t of row b
// is real iff t < lengths[b]; padded positions carry the state unchanged and
// their outputs are zeroed. Returns per-step [h_fwd ; h_bwd] of width 2H.
std::vector<Var> bigru(Tape& tape, const std::vector<Var>& steps, const std::vector<std::size_t>& lengths,
                       const GruParams& fwd, const GruParams& bwd);

// Valid 1-D convolution of `width` consecutive steps with filters
// W [width*C x F] and bias b [F], ReLU, then max over time. Windows are those
// lying entirely inside the row's length; rows shorter than `width` pool over
// the windows that start at a real position (always including position 0).
// Ties go to the earliest window. Returns [B x F].
Var conv1d_maxpool(Tape& tape, const std::vector<Var>& steps, const std::vector<std::size_t>& lengths,
                   std::size_t width, const Var& w, const Var& b);

struct ConvFilter {
  std::size_t width = 0;
  Var w;  // [width*C x F]
  Var b;  // [F]
};

// Runs every filter bank and concatenates the pooled outputs.
Var conv_bank(Tape& tape, const std::vector<Var>& steps, const std::vector<std::size_t>& lengths,
              const std::vector<ConvFilter>& filters);

}  // namespace mtaffect::ad
