#include "mtaffect/ad/tensor.hpp"

#include <algorithm>

#include "mtaffect/error.hpp"

namespace mtaffect::ad {

namespace {
std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, bool requires_grad)
    : shape_(std::move(shape)), data_(product(shape_), 0.0), requires_grad_(requires_grad) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data, bool requires_grad)
    : shape_(std::move(shape)), data_(std::move(data)), requires_grad_(requires_grad) {
  if (data_.size() != product(shape_))
    throw Error("tensor: data length " + std::to_string(data_.size()) + " does not match shape " + shape_string());
}

std::size_t Tensor::rows() const { return shape_.size() <= 1 ? 1 : shape_[0]; }

std::size_t Tensor::cols() const {
  if (shape_.empty()) return 1;
  if (shape_.size() == 1) return shape_[0];
  return data_.size() / std::max<std::size_t>(shape_[0], 1);
}

void Tensor::set_requires_grad(bool on) {
  requires_grad_ = on;
  if (!on) grad_.clear();
}

std::span<double> Tensor::grad() {
  if (grad_.size() != data_.size()) grad_.assign(data_.size(), 0.0);
  return grad_;
}

void Tensor::zero_grad() {
  if (!grad_.empty()) std::fill(grad_.begin(), grad_.end(), 0.0);
}

double Tensor::item() const {
  if (data_.size() != 1) throw Error("tensor: item() on tensor of shape " + shape_string());
  return data_[0];
}

std::string Tensor::shape_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape_.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape_[i]);
  }
  return s + "]";
}

Var constant(std::vector<std::size_t> shape, std::vector<double> data) {
  return std::make_shared<Tensor>(std::move(shape), std::move(data), false);
}

Var zeros(std::vector<std::size_t> shape, bool requires_grad) {
  return std::make_shared<Tensor>(std::move(shape), requires_grad);
}

Var parameter(std::vector<std::size_t> shape, std::vector<double> data) {
  return std::make_shared<Tensor>(std::move(shape), std::move(data), true);
}

Var Tape::record(Var out, const std::vector<Var>& inputs, Backward backward) {
  const bool needs = std::any_of(inputs.begin(), inputs.end(), [](const Var& v) { return v->requires_grad(); });
  if (!needs) return out;
  out->set_requires_grad(true);
  entries_.push_back({out, std::move(backward)});
  return out;
}

void Tape::backward(const Var& loss) {
  if (loss->size() != 1) throw Error("backward: loss must be a scalar, got " + loss->shape_string());
  if (!loss->requires_grad()) return;
  loss->grad()[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (!it->out->has_grad()) continue;
    it->backward();
  }
}

void Tape::mix_pattern(std::uint64_t v) {
  pattern_ ^= v + 0x9e3779b97f4a7c15ull + (pattern_ << 6) + (pattern_ >> 2);
}

}  // namespace mtaffect::ad
