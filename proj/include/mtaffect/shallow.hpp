#pragma once

// Linear SVM (one-vs-rest) and epsilon-insensitive SVR trained on shared
// representations. Weights follow epoch-shuffled subgradient steps of size
// 1/(lambda t); the unregularized biases are set to their exact minimizer
// before the first epoch and after every epoch.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mtaffect/container.hpp"
#include "mtaffect/corpus.hpp"

namespace mtaffect::shallow {

using Matrix = std::vector<std::vector<double>>;

// Per-dimension z-score from training statistics; identity when disabled.
struct Standardizer {
  bool enabled = false;
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix& x, bool enabled);
  std::vector<double> apply(const std::vector<double>& row) const;
};

struct ShallowOptions {
  double C = 1.0;
  double epsilon = 0.1;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  bool standardize = true;

  void validate() const;
};

struct LinearSvmModel {
  std::size_t dim = 0;
  std::vector<double> weights;  // [7 x dim]
  std::array<double, corpus::kNumClasses> biases{};
  double C = 1.0;
  bool trained = false;
  Standardizer standardizer;
  // Objective of the kept iterate after each epoch.
  std::vector<double> objective_history;
};

struct SvrModel {
  std::size_t dim = 0;
  std::vector<double> weights;
  double bias = 0.0;
  double epsilon = 0.1;
  double C = 1.0;
  bool trained = false;
  Standardizer standardizer;
  std::vector<double> objective_history;
};

LinearSvmModel train_svm(const Matrix& x, const std::vector<corpus::ValenceClass>& y, const ShallowOptions& options);
SvrModel train_svr(const Matrix& x, const std::vector<double>& y, const ShallowOptions& options);

std::array<double, corpus::kNumClasses> svm_decision(const LinearSvmModel& model, const std::vector<double>& row);
std::vector<corpus::ValenceClass> predict_svm(const LinearSvmModel& model, const Matrix& x);

// Unclipped regression output.
double svr_raw(const SvrModel& model, const std::vector<double>& row);
double clip_unit(double v);
std::vector<double> predict_svr(const SvrModel& model, const Matrix& x);

// Regularized training objectives in standardized space, lambda = 1/(C*N).
double svm_objective(const LinearSvmModel& model, const Matrix& x, const std::vector<corpus::ValenceClass>& y);
double svr_objective(const SvrModel& model, const Matrix& x, const std::vector<double>& y);

Container svm_to_container(const LinearSvmModel& model);
LinearSvmModel svm_from_container(const Container& c);
Container svr_to_container(const SvrModel& model);
SvrModel svr_from_container(const Container& c);

void save_svm(const std::filesystem::path& path, const LinearSvmModel& model);
LinearSvmModel load_svm(const std::filesystem::path& path);
void save_svr(const std::filesystem::path& path, const SvrModel& model);
SvrModel load_svr(const std::filesystem::path& path);

}  // namespace mtaffect::shallow
