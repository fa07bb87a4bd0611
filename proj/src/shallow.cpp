#include "mtaffect/shallow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mtaffect/error.hpp"

namespace mtaffect::shallow {

namespace {

using corpus::kNumClasses;

std::size_t check_matrix(const Matrix& x, std::size_t n_labels) {
  if (x.empty()) throw Error("shallow training needs at least one row");
  if (x.size() != n_labels)
    throw Error("shallow training: " + std::to_string(x.size()) + " rows but " + std::to_string(n_labels) + " labels");
  const std::size_t d = x[0].size();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i].size() != d)
      throw Error("row " + std::to_string(i) + " has width " + std::to_string(x[i].size()) + ", expected " +
                  std::to_string(d));
  return d;
}

void check_width(std::size_t expected, const std::vector<double>& row) {
  if (row.size() != expected)
    throw Error("input width " + std::to_string(row.size()) + " does not match model width " + std::to_string(expected));
}

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
}

Matrix standardize_all(const Standardizer& s, const Matrix& x) {
  Matrix out;
  out.reserve(x.size());
  for (const auto& row : x) out.push_back(s.apply(row));
  return out;
}

double svm_objective_std(const LinearSvmModel& m, const Matrix& z, const std::vector<corpus::ValenceClass>& y,
                         const std::array<bool, kNumClasses>& present) {
  const double lambda = 1.0 / (m.C * static_cast<double>(z.size()));
  double total = 0.0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    if (!present[k]) continue;
    const double* w = m.weights.data() + k * m.dim;
    double loss = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double sign = corpus::class_index(y[i]) == k ? 1.0 : -1.0;
      loss += std::max(0.0, 1.0 - sign * (dot(w, z[i].data(), m.dim) + m.biases[k]));
    }
    total += 0.5 * lambda * dot(w, w, m.dim) + loss / static_cast<double>(z.size());
  }
  return total;
}

double svr_objective_std(const SvrModel& m, const Matrix& z, const std::vector<double>& y) {
  const double lambda = 1.0 / (m.C * static_cast<double>(z.size()));
  double loss = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double r = y[i] - (dot(m.weights.data(), z[i].data(), m.dim) + m.bias);
    loss += std::max(0.0, std::abs(r) - m.epsilon);
  }
  return 0.5 * lambda * dot(m.weights.data(), m.weights.data(), m.dim) + loss / static_cast<double>(z.size());
}

// Minimizer of a convex piecewise-linear function whose slope starts at -k
// and rises by one at each breakpoint: the midpoint of its flat stretch.
double optimal_bias(std::vector<double> breakpoints, std::size_t k) {
  if (breakpoints.empty()) return 0.0;
  std::sort(breakpoints.begin(), breakpoints.end());
  if (k == 0) return breakpoints.front();
  if (k >= breakpoints.size()) return breakpoints.back();
  return 0.5 * (breakpoints[k - 1] + breakpoints[k]);
}

void refit_svm_biases(LinearSvmModel& m, const Matrix& z, const std::vector<corpus::ValenceClass>& y,
                      const std::array<bool, kNumClasses>& present) {
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    if (!present[k]) continue;
    const double* w = m.weights.data() + k * m.dim;
    std::vector<double> bp(z.size());
    std::size_t positives = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const bool pos = corpus::class_index(y[i]) == k;
      positives += pos;
      bp[i] = (pos ? 1.0 : -1.0) - dot(w, z[i].data(), m.dim);
    }
    m.biases[k] = optimal_bias(std::move(bp), positives);
  }
}

void refit_svr_bias(SvrModel& m, const Matrix& z, const std::vector<double>& y) {
  std::vector<double> bp;
  bp.reserve(2 * z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double r = y[i] - dot(m.weights.data(), z[i].data(), m.dim);
    bp.push_back(r - m.epsilon);
    bp.push_back(r + m.epsilon);
  }
  m.bias = optimal_bias(std::move(bp), z.size());
}

nlohmann::json standardizer_meta(const Standardizer& s) { return {{"enabled", s.enabled}}; }

void push_standardizer(Container& c, const Standardizer& s, std::size_t dim) {
  c.arrays.push_back({"standardize/mean", {dim}, s.enabled ? s.mean : std::vector<double>(dim, 0.0)});
  c.arrays.push_back({"standardize/scale", {dim}, s.enabled ? s.scale : std::vector<double>(dim, 1.0)});
}

Standardizer read_standardizer(const Container& c) {
  Standardizer s;
  s.enabled = c.meta.at("standardize").at("enabled").get<bool>();
  if (s.enabled) {
    s.mean = c.array("standardize/mean").data;
    s.scale = c.array("standardize/scale").data;
  }
  return s;
}

void expect_format(const Container& c, const char* format) {
  if (c.meta.value("format", std::string()) != format)
    throw Error(std::string("container is not a ") + format + " model");
  if (c.meta.value("version", 0) != 1) throw Error("unsupported shallow model version");
}

}  // namespace

Standardizer Standardizer::fit(const Matrix& x, bool enabled) {
  Standardizer s;
  s.enabled = enabled;
  if (!enabled || x.empty()) return s;
  const std::size_t d = x[0].size();
  const double n = static_cast<double>(x.size());
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (const auto& row : x) mean += row[j];
    mean /= n;
    double var = 0.0;
    for (const auto& row : x) var += (row[j] - mean) * (row[j] - mean);
    const double sd = std::sqrt(var / n);
    s.mean[j] = mean;
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

std::vector<double> Standardizer::apply(const std::vector<double>& row) const {
  if (!enabled) return row;
  check_width(mean.size(), row);
  std::vector<double> out(row.size());
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = (row[j] - mean[j]) / scale[j];
  return out;
}

void ShallowOptions::validate() const {
  std::vector<std::string> problems;
  if (!(C > 0.0)) problems.push_back("C must be positive");
  if (!(epsilon >= 0.0)) problems.push_back("epsilon must be non-negative");
  if (epochs == 0) problems.push_back("epochs must be positive");
  if (!problems.empty()) {
    std::string msg = "invalid shallow options:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw Error(msg);
  }
}

LinearSvmModel train_svm(const Matrix& x, const std::vector<corpus::ValenceClass>& y, const ShallowOptions& options) {
  options.validate();
  const std::size_t d = check_matrix(x, y.size());
  LinearSvmModel m;
  m.dim = d;
  m.C = options.C;
  m.weights.assign(kNumClasses * d, 0.0);
  m.standardizer = Standardizer::fit(x, options.standardize);
  const Matrix z = standardize_all(m.standardizer, x);

  std::array<bool, kNumClasses> present{};
  for (auto c : y) present[corpus::class_index(c)] = true;

  const std::size_t n = z.size();
  const double lambda = 1.0 / (options.C * static_cast<double>(n));
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  refit_svm_biases(m, z, y, present);
  LinearSvmModel best = m;
  double best_obj = svm_objective_std(m, z, y, present);
  std::size_t t = 0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    shuffle(order, rng);
    for (const auto i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double shrink = 1.0 - eta * lambda;
      const std::size_t gold = corpus::class_index(y[i]);
      for (std::size_t k = 0; k < kNumClasses; ++k) {
        if (!present[k]) continue;
        double* w = m.weights.data() + k * d;
        const double sign = k == gold ? 1.0 : -1.0;
        const double margin = sign * (dot(w, z[i].data(), d) + m.biases[k]);
        for (std::size_t j = 0; j < d; ++j) w[j] *= shrink;
        if (margin < 1.0)
          for (std::size_t j = 0; j < d; ++j) w[j] += eta * sign * z[i][j];
      }
    }
    refit_svm_biases(m, z, y, present);
    const double obj = svm_objective_std(m, z, y, present);
    if (obj <= best_obj) {
      best_obj = obj;
      best.weights = m.weights;
      best.biases = m.biases;
    }
    best.objective_history.push_back(best_obj);
  }
  best.trained = true;
  return best;
}

SvrModel train_svr(const Matrix& x, const std::vector<double>& y, const ShallowOptions& options) {
  options.validate();
  const std::size_t d = check_matrix(x, y.size());
  if (x.size() < 2) throw Error("SVR training needs at least two rows");
  SvrModel m;
  m.dim = d;
  m.C = options.C;
  m.epsilon = options.epsilon;
  m.weights.assign(d, 0.0);
  m.standardizer = Standardizer::fit(x, options.standardize);
  const Matrix z = standardize_all(m.standardizer, x);

  const std::size_t n = z.size();
  const double lambda = 1.0 / (options.C * static_cast<double>(n));
  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  refit_svr_bias(m, z, y);
  SvrModel best = m;
  double best_obj = svr_objective_std(m, z, y);
  std::size_t t = 0;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    shuffle(order, rng);
    for (const auto i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const double shrink = 1.0 - eta * lambda;
      const double r = y[i] - (dot(m.weights.data(), z[i].data(), d) + m.bias);
      for (std::size_t j = 0; j < d; ++j) m.weights[j] *= shrink;
      if (std::abs(r) > m.epsilon) {
        const double sign = r > 0.0 ? 1.0 : -1.0;
        for (std::size_t j = 0; j < d; ++j) m.weights[j] += eta * sign * z[i][j];
      }
    }
    refit_svr_bias(m, z, y);
    const double obj = svr_objective_std(m, z, y);
    if (obj <= best_obj) {
      best_obj = obj;
      best.weights = m.weights;
      best.bias = m.bias;
    }
    best.objective_history.push_back(best_obj);
  }
  best.trained = true;
  return best;
}

std::array<double, corpus::kNumClasses> svm_decision(const LinearSvmModel& model, const std::vector<double>& row) {
  if (!model.trained) throw Error("SVM model is not trained");
  check_width(model.dim, row);
  const auto z = model.standardizer.apply(row);
  std::array<double, kNumClasses> out{};
  for (std::size_t k = 0; k < kNumClasses; ++k)
    out[k] = dot(model.weights.data() + k * model.dim, z.data(), model.dim) + model.biases[k];
  return out;
}

std::vector<corpus::ValenceClass> predict_svm(const LinearSvmModel& model, const Matrix& x) {
  std::vector<corpus::ValenceClass> out;
  out.reserve(x.size());
  for (const auto& row : x) {
    const auto dv = svm_decision(model, row);
    std::size_t best = 0;
    for (std::size_t k = 1; k < kNumClasses; ++k)
      if (dv[k] > dv[best]) best = k;
    out.push_back(corpus::class_from_index(best));
  }
  return out;
}

double svr_raw(const SvrModel& model, const std::vector<double>& row) {
  if (!model.trained) throw Error("SVR model is not trained");
  check_width(model.dim, row);
  const auto z = model.standardizer.apply(row);
  return dot(model.weights.data(), z.data(), model.dim) + model.bias;
}

double clip_unit(double v) { return std::clamp(v, 0.0, 1.0); }

std::vector<double> predict_svr(const SvrModel& model, const Matrix& x) {
  std::vector<double> out;
  out.reserve(x.size());
  for (const auto& row : x) out.push_back(clip_unit(svr_raw(model, row)));
  return out;
}

double svm_objective(const LinearSvmModel& model, const Matrix& x, const std::vector<corpus::ValenceClass>& y) {
  check_matrix(x, y.size());
  std::array<bool, kNumClasses> present{};
  for (auto c : y) present[corpus::class_index(c)] = true;
  return svm_objective_std(model, standardize_all(model.standardizer, x), y, present);
}

double svr_objective(const SvrModel& model, const Matrix& x, const std::vector<double>& y) {
  check_matrix(x, y.size());
  return svr_objective_std(model, standardize_all(model.standardizer, x), y);
}

Container svm_to_container(const LinearSvmModel& model) {
  Container c;
  c.meta = {{"format", "mtaffect-svm"},
            {"version", 1},
            {"dim", model.dim},
            {"C", model.C},
            {"trained", model.trained},
            {"standardize", standardizer_meta(model.standardizer)},
            {"objective_history", model.objective_history}};
  c.arrays.push_back({"weights", {kNumClasses, model.dim}, model.weights});
  c.arrays.push_back({"biases", {kNumClasses}, std::vector<double>(model.biases.begin(), model.biases.end())});
  push_standardizer(c, model.standardizer, model.dim);
  return c;
}

LinearSvmModel svm_from_container(const Container& c) {
  expect_format(c, "mtaffect-svm");
  LinearSvmModel m;
  m.dim = c.meta.at("dim").get<std::size_t>();
  m.C = c.meta.at("C").get<double>();
  m.trained = c.meta.at("trained").get<bool>();
  m.objective_history = c.meta.at("objective_history").get<std::vector<double>>();
  m.weights = c.array("weights").data;
  const auto& b = c.array("biases").data;
  if (m.weights.size() != kNumClasses * m.dim || b.size() != kNumClasses) throw Error("SVM arrays have wrong sizes");
  std::copy(b.begin(), b.end(), m.biases.begin());
  m.standardizer = read_standardizer(c);
  return m;
}

Container svr_to_container(const SvrModel& model) {
  Container c;
  c.meta = {{"format", "mtaffect-svr"},
            {"version", 1},
            {"dim", model.dim},
            {"C", model.C},
            {"epsilon", model.epsilon},
            {"trained", model.trained},
            {"standardize", standardizer_meta(model.standardizer)},
            {"objective_history", model.objective_history}};
  c.arrays.push_back({"weights", {model.dim}, model.weights});
  c.arrays.push_back({"bias", {1}, {model.bias}});
  push_standardizer(c, model.standardizer, model.dim);
  return c;
}

SvrModel svr_from_container(const Container& c) {
  expect_format(c, "mtaffect-svr");
  SvrModel m;
  m.dim = c.meta.at("dim").get<std::size_t>();
  m.C = c.meta.at("C").get<double>();
  m.epsilon = c.meta.at("epsilon").get<double>();
  m.trained = c.meta.at("trained").get<bool>();
  m.objective_history = c.meta.at("objective_history").get<std::vector<double>>();
  m.weights = c.array("weights").data;
  if (m.weights.size() != m.dim) throw Error("SVR weights have wrong size");
  m.bias = c.array("bias").data.at(0);
  m.standardizer = read_standardizer(c);
  return m;
}

void save_svm(const std::filesystem::path& path, const LinearSvmModel& model) {
  save_container(path, svm_to_container(model));
}
LinearSvmModel load_svm(const std::filesystem::path& path) { return svm_from_container(load_container(path)); }
void save_svr(const std::filesystem::path& path, const SvrModel& model) {
  save_container(path, svr_to_container(model));
}
SvrModel load_svr(const std::filesystem::path& path) { return svr_from_container(load_container(path)); }

}  // namespace mtaffect::shallow
