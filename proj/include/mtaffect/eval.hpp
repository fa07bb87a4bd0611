#pragma once

// Official metric (Pearson), confusion matrices, paired t-tests and
// per-run evaluation reports.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtaffect/corpus.hpp"

namespace mtaffect::eval {

struct PearsonResult {
  double r = 0.0;
  // False when either input has zero variance; r is then reported as 0.
  bool defined = true;
};

PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y);

using ConfusionMatrix = std::array<std::array<std::size_t, corpus::kNumClasses>, corpus::kNumClasses>;

// Rows are gold classes, columns predictions, both in Neg-V..Pos-V order.
ConfusionMatrix confusion(const std::vector<corpus::ValenceClass>& gold,
                          const std::vector<corpus::ValenceClass>& pred);

// Gold negative predicted positive or the reverse; Neu rows and columns excluded.
std::size_t polarity_flips(const ConfusionMatrix& m);

std::string confusion_csv(const ConfusionMatrix& m);
std::string confusion_svg(const ConfusionMatrix& m, const std::string& title = "");

// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);
// P(T <= t) for Student's t with `dof` degrees of freedom.
double student_t_cdf(double t, double dof);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t dof = 0;
  double mean_diff = 0.0;
  // False when the differences have zero variance.
  bool defined = true;
};

// Two-sided paired t-test on a[i] - b[i].
TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b);

enum class Task { Classification, Intensity };

std::string task_name(Task t);
Task task_from_name(const std::string& name);

struct ExamplePrediction {
  std::string id;
  double gold = 0.0;
  double pred = 0.0;

  bool operator==(const ExamplePrediction&) const = default;
};

struct EvalReport {
  Task task = Task::Classification;
  double pearson = 0.0;
  bool pearson_defined = true;
  std::size_t n = 0;
  std::optional<ConfusionMatrix> confusion;
  std::vector<ExamplePrediction> per_example;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
  bool operator==(const EvalReport&) const = default;
};

// Per-tweet predictions keyed by id; only the field matching the task is read.
struct RunPrediction {
  std::string id;
  std::optional<corpus::ValenceClass> valence;
  std::optional<double> intensity;
};

// Classification Pearson runs over ordinals -3..3; intensity over raw scores.
// Examples appear in gold order.
EvalReport evaluate_run(const std::vector<RunPrediction>& predictions, const corpus::DatasetSplit& gold, Task task);

}  // namespace mtaffect::eval
