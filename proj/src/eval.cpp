#include "mtaffect/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "mtaffect/error.hpp"

namespace mtaffect::eval {

using corpus::ValenceClass;

PearsonResult pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size())
    throw Error("pearson: length mismatch " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  if (x.size() < 2) throw Error("pearson: need at least 2 observations");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return {0.0, false};
  const double r = sxy / std::sqrt(sxx * syy);
  return {std::clamp(r, -1.0, 1.0), true};
}

ConfusionMatrix confusion(const std::vector<ValenceClass>& gold, const std::vector<ValenceClass>& pred) {
  if (gold.size() != pred.size())
    throw Error("confusion: " + std::to_string(gold.size()) + " gold labels vs " + std::to_string(pred.size()) +
                " predictions");
  ConfusionMatrix m{};
  for (std::size_t i = 0; i < gold.size(); ++i) ++m[corpus::class_index(gold[i])][corpus::class_index(pred[i])];
  return m;
}

std::size_t polarity_flips(const ConfusionMatrix& m) {
  std::size_t flips = 0;
  for (std::size_t g = 0; g < corpus::kNumClasses; ++g)
    for (std::size_t p = 0; p < corpus::kNumClasses; ++p) {
      const int go = static_cast<int>(g) - 3, po = static_cast<int>(p) - 3;
      if ((go < 0 && po > 0) || (go > 0 && po < 0)) flips += m[g][p];
    }
  return flips;
}

std::string confusion_csv(const ConfusionMatrix& m) {
  std::ostringstream out;
  out << "gold\\pred";
  for (auto c : corpus::kAllClasses) out << ',' << corpus::class_name(c);
  out << '\n';
  for (std::size_t g = 0; g < corpus::kNumClasses; ++g) {
    out << corpus::class_name(corpus::class_from_index(g));
    for (std::size_t p = 0; p < corpus::kNumClasses; ++p) out << ',' << m[g][p];
    out << '\n';
  }
  return out.str();
}

std::string confusion_svg(const ConfusionMatrix& m, const std::string& title) {
  constexpr int cell = 60, left = 80, top = 70;
  const int size = static_cast<int>(corpus::kNumClasses) * cell;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + size + 20 << "\" height=\"" << top + size + 40
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) out << "<text x=\"" << left << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
  out << "<text x=\"" << left + size / 2 << "\" y=\"40\" text-anchor=\"middle\">predicted</text>\n";
  out << "<text x=\"15\" y=\"" << top + size / 2 << "\" transform=\"rotate(-90 15 " << top + size / 2
      << ")\" text-anchor=\"middle\">gold</text>\n";
  for (std::size_t g = 0; g < corpus::kNumClasses; ++g) {
    std::size_t row_total = 0;
    for (auto v : m[g]) row_total += v;
    const auto name = corpus::class_name(corpus::class_from_index(g));
    out << "<text x=\"" << left - 6 << "\" y=\"" << top + static_cast<int>(g) * cell + cell / 2 + 4
        << "\" text-anchor=\"end\">" << name << "</text>\n";
    out << "<text x=\"" << left + static_cast<int>(g) * cell + cell / 2 << "\" y=\"" << top - 8
        << "\" text-anchor=\"middle\">" << name << "</text>\n";
    for (std::size_t p = 0; p < corpus::kNumClasses; ++p) {
      const double frac = row_total == 0 ? 0.0 : static_cast<double>(m[g][p]) / static_cast<double>(row_total);
      const int shade = 255 - static_cast<int>(std::lround(frac * 200.0));
      const int x = left + static_cast<int>(p) * cell, y = top + static_cast<int>(g) * cell;
      out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell << "\" fill=\"rgb("
          << shade << ',' << shade << ",255)\" stroke=\"#888\"/>\n";
      out << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\">" << m[g][p]
          << "</text>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

namespace {

// Modified Lentz evaluation of the incomplete-beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) return h;
  }
  throw Error("incomplete_beta: continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw Error("incomplete_beta: shape parameters must be positive");
  if (x < 0.0 || x > 1.0) throw Error("incomplete_beta: x outside [0,1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw Error("student_t_cdf: degrees of freedom must be positive");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double x = dof / (dof + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, x);
  return t > 0 ? 1.0 - tail : tail;
}

TTestResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw Error("paired_ttest: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " samples");
  if (a.size() < 2) throw Error("paired_ttest: need at least 2 pairs");
  const std::size_t k = a.size();
  std::vector<double> d(k);
  double mean = 0.0;
  for (std::size_t i = 0; i < k; ++i) mean += (d[i] = a[i] - b[i]);
  mean /= static_cast<double>(k);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);

  TTestResult res;
  res.dof = k - 1;
  res.mean_diff = mean;
  if (ss == 0.0) {
    res.defined = false;
    res.t = mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), mean);
    res.p = mean == 0.0 ? 1.0 : 0.0;
    return res;
  }
  const double sd = std::sqrt(ss / static_cast<double>(k - 1));
  res.t = mean / (sd / std::sqrt(static_cast<double>(k)));
  const double dof = static_cast<double>(res.dof);
  // Two-sided tail mass: I_{dof/(dof+t^2)}(dof/2, 1/2).
  res.p = incomplete_beta(0.5 * dof, 0.5, dof / (dof + res.t * res.t));
  return res;
}

std::string task_name(Task t) { return t == Task::Classification ? "classification" : "intensity"; }

Task task_from_name(const std::string& name) {
  if (name == "classification" || name == "class") return Task::Classification;
  if (name == "intensity") return Task::Intensity;
  throw Error("unknown task '" + name + "'");
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["task"] = task_name(task);
  j["pearson"] = pearson;
  j["pearson_defined"] = pearson_defined;
  j["n"] = n;
  if (confusion) {
    j["confusion"] = *confusion;
    j["polarity_flips"] = polarity_flips(*confusion);
  }
  j["per_example"] = nlohmann::json::array();
  for (const auto& e : per_example) j["per_example"].push_back({{"id", e.id}, {"gold", e.gold}, {"pred", e.pred}});
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.task = task_from_name(j.at("task").get<std::string>());
  r.pearson = j.at("pearson").get<double>();
  r.pearson_defined = j.at("pearson_defined").get<bool>();
  r.n = j.at("n").get<std::size_t>();
  if (j.contains("confusion")) r.confusion = j.at("confusion").get<ConfusionMatrix>();
  for (const auto& e : j.at("per_example"))
    r.per_example.push_back({e.at("id").get<std::string>(), e.at("gold").get<double>(), e.at("pred").get<double>()});
  return r;
}

EvalReport evaluate_run(const std::vector<RunPrediction>& predictions, const corpus::DatasetSplit& gold, Task task) {
  std::map<std::string, const RunPrediction*, std::less<>> by_id;
  for (const auto& p : predictions) by_id[p.id] = &p;

  EvalReport report;
  report.task = task;
  std::vector<std::string> missing;
  std::vector<double> xs, ys;
  std::vector<ValenceClass> gold_classes, pred_classes;
  for (const auto& ex : gold.examples) {
    const auto it = by_id.find(ex.id);
    const bool have = it != by_id.end() &&
                      (task == Task::Classification ? it->second->valence.has_value() : it->second->intensity.has_value());
    if (!have) {
      missing.push_back(ex.id);
      continue;
    }
    if (task == Task::Classification) {
      if (!ex.valence) throw Error("evaluate_run: gold tweet '" + ex.id + "' has no valence class");
      const auto g = *ex.valence, p = *it->second->valence;
      gold_classes.push_back(g);
      pred_classes.push_back(p);
      xs.push_back(corpus::class_to_ordinal(g));
      ys.push_back(corpus::class_to_ordinal(p));
    } else {
      if (!ex.intensity) throw Error("evaluate_run: gold tweet '" + ex.id + "' has no intensity");
      xs.push_back(*ex.intensity);
      ys.push_back(*it->second->intensity);
    }
    report.per_example.push_back({ex.id, xs.back(), ys.back()});
  }
  if (!missing.empty()) {
    std::string msg = "evaluate_run: no prediction for:";
    for (const auto& id : missing) msg += " " + id;
    throw Error(msg);
  }
  report.n = report.per_example.size();
  const auto r = pearson(xs, ys);
  report.pearson = r.r;
  report.pearson_defined = r.defined;
  if (task == Task::Classification) report.confusion = confusion(gold_classes, pred_classes);
  return report;
}

}  // namespace mtaffect::eval
