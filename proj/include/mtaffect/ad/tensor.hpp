#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mtaffect::ad {

// Dense row-major array of doubles. Two-dimensional ops read shape[0] as rows
// and the product of the remaining extents as columns; a 1-D tensor is one row.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, bool requires_grad = false);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data, bool requires_grad = false);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool on);

  bool has_grad() const { return !grad_.empty(); }
  // Allocates a zero gradient on first use.
  std::span<double> grad();
  std::span<const double> grad() const { return grad_; }
  void zero_grad();

  double item() const;
  std::string shape_string() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
  std::vector<double> grad_;
  bool requires_grad_ = false;
};

using Var = std::shared_ptr<Tensor>;

Var constant(std::vector<std::size_t> shape, std::vector<double> data);
Var zeros(std::vector<std::size_t> shape, bool requires_grad = false);
Var parameter(std::vector<std::size_t> shape, std::vector<double> data);

// Records operations in execution order, so inputs always precede the ops
// that consume them; backward() replays them in reverse.
class Tape {
 public:
  using Backward = std::function<void()>;

  // Marks `out` as requiring grad when any input does and stores the rule.
  // Operations over constants only are not recorded.
  Var record(Var out, const std::vector<Var>& inputs, Backward backward);

  // Seeds d(loss)/d(loss) = 1 and propagates into every tensor with requires_grad.
  void backward(const Var& loss);

  std::size_t size() const { return entries_.size(); }

  // Hash of every non-smooth branch taken (relu signs, max-pool winners);
  // equal fingerprints mean the loss is evaluated on the same smooth piece.
  void mix_pattern(std::uint64_t v);
  std::uint64_t pattern() const { return pattern_; }

 private:
  struct Entry {
    Var out;
    Backward backward;
  };
  std::vector<Entry> entries_;
  std::uint64_t pattern_ = 1469598103934665603ull;
};

}  // namespace mtaffect::ad
