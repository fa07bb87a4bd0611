#include "mtaffect/model.hpp"

#include <algorithm>
#include <cmath>

#include "mtaffect/error.hpp"

namespace mtaffect::model {

namespace {

double uniform01(ad::Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<double> glorot(ad::Rng& rng, std::size_t n, std::size_t fan_in, std::size_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> out(n);
  for (auto& v : out) v = (2.0 * uniform01(rng) - 1.0) * limit;
  return out;
}

// Random square matrix with orthonormal rows (modified Gram-Schmidt).
std::vector<double> orthogonal(ad::Rng& rng, std::size_t h) {
  std::vector<double> m(h * h);
  for (std::size_t attempt = 0;; ++attempt) {
    for (auto& v : m) v = 2.0 * uniform01(rng) - 1.0;
    bool ok = true;
    for (std::size_t i = 0; i < h && ok; ++i) {
      double* ri = m.data() + i * h;
      for (std::size_t j = 0; j < i; ++j) {
        const double* rj = m.data() + j * h;
        double dot = 0.0;
        for (std::size_t k = 0; k < h; ++k) dot += ri[k] * rj[k];
        for (std::size_t k = 0; k < h; ++k) ri[k] -= dot * rj[k];
      }
      double norm = 0.0;
      for (std::size_t k = 0; k < h; ++k) norm += ri[k] * ri[k];
      norm = std::sqrt(norm);
      if (norm < 1e-8) ok = false;
      else
        for (std::size_t k = 0; k < h; ++k) ri[k] /= norm;
    }
    if (ok) return m;
    if (attempt > 16) throw Error("orthogonal init failed");
  }
}

ad::GruParams make_gru(ad::Rng& rng, std::size_t in, std::size_t h) {
  ad::GruParams p;
  p.w_z = ad::parameter({in, h}, glorot(rng, in * h, in, h));
  p.w_r = ad::parameter({in, h}, glorot(rng, in * h, in, h));
  p.w_h = ad::parameter({in, h}, glorot(rng, in * h, in, h));
  p.u_z = ad::parameter({h, h}, orthogonal(rng, h));
  p.u_r = ad::parameter({h, h}, orthogonal(rng, h));
  p.u_h = ad::parameter({h, h}, orthogonal(rng, h));
  p.b_z = ad::parameter({h}, std::vector<double>(h, 0.0));
  p.b_r = ad::parameter({h}, std::vector<double>(h, 0.0));
  p.b_h = ad::parameter({h}, std::vector<double>(h, 0.0));
  return p;
}

void push_gru(std::vector<ad::NamedParam>& out, const std::string& prefix, const ad::GruParams& p) {
  out.push_back({prefix + "/W_z", p.w_z});
  out.push_back({prefix + "/W_r", p.w_r});
  out.push_back({prefix + "/W_h", p.w_h});
  out.push_back({prefix + "/U_z", p.u_z});
  out.push_back({prefix + "/U_r", p.u_r});
  out.push_back({prefix + "/U_h", p.u_h});
  out.push_back({prefix + "/b_z", p.b_z});
  out.push_back({prefix + "/b_r", p.b_r});
  out.push_back({prefix + "/b_h", p.b_h});
}

}  // namespace

std::string task_mode_name(TaskMode m) {
  switch (m) {
    case TaskMode::StlClass: return "stl-class";
    case TaskMode::StlIntensity: return "stl-intensity";
    case TaskMode::Mtl: return "mtl";
  }
  return "mtl";
}

TaskMode task_mode_from_name(const std::string& name) {
  if (name == "stl-class" || name == "stl_class") return TaskMode::StlClass;
  if (name == "stl-intensity" || name == "stl_intensity") return TaskMode::StlIntensity;
  if (name == "mtl") return TaskMode::Mtl;
  throw Error("unknown task mode '" + name + "' (expected stl-class, stl-intensity or mtl)");
}

void ModelConfig::validate() const {
  std::vector<std::string> problems;
  if (max_len == 0) problems.push_back("max_len must be positive");
  if (embed_dim == 0) problems.push_back("embed_dim must be positive");
  if (glove_dim == 0 || glove_dim > embed_dim) problems.push_back("glove_dim must lie in 1..embed_dim");
  if (gru_hidden == 0) problems.push_back("gru_hidden must be positive");
  if (filter_widths.empty()) problems.push_back("filter_widths must not be empty");
  for (auto w : filter_widths) {
    if (w == 0) problems.push_back("filter widths must be positive");
    if (w > max_len) problems.push_back("filter width " + std::to_string(w) + " exceeds max_len");
  }
  if (filters_per_width == 0) problems.push_back("filters_per_width must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) problems.push_back("dropout must lie in [0,1)");
  if (!(lr > 0.0)) problems.push_back("lr must be positive");
  if (batch_size == 0) problems.push_back("batch_size must be positive");
  if (max_epochs == 0) problems.push_back("max_epochs must be positive");
  if (patience > max_epochs) problems.push_back("patience must not exceed max_epochs");
  if (!(loss_weight_lambda >= 0.0)) problems.push_back("loss_weight_lambda must be non-negative");
  if (!problems.empty()) {
    std::string msg = "invalid model config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw Error(msg);
  }
}

nlohmann::json ModelConfig::to_json() const {
  return {{"max_len", max_len},
          {"embed_dim", embed_dim},
          {"glove_dim", glove_dim},
          {"gru_hidden", gru_hidden},
          {"filter_widths", filter_widths},
          {"filters_per_width", filters_per_width},
          {"dropout", dropout},
          {"lr", lr},
          {"batch_size", batch_size},
          {"max_epochs", max_epochs},
          {"patience", patience},
          {"task_mode", task_mode_name(task_mode)},
          {"loss_weight_lambda", loss_weight_lambda},
          {"seed", seed},
          {"feature_config", feature_config},
          {"feature_dim", feature_dim}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("max_len", c.max_len);
  get("embed_dim", c.embed_dim);
  get("glove_dim", c.glove_dim);
  get("gru_hidden", c.gru_hidden);
  get("filter_widths", c.filter_widths);
  get("filters_per_width", c.filters_per_width);
  get("dropout", c.dropout);
  get("lr", c.lr);
  get("batch_size", c.batch_size);
  get("max_epochs", c.max_epochs);
  get("patience", c.patience);
  if (j.contains("task_mode")) c.task_mode = task_mode_from_name(j.at("task_mode").get<std::string>());
  get("loss_weight_lambda", c.loss_weight_lambda);
  get("seed", c.seed);
  get("feature_config", c.feature_config);
  get("feature_dim", c.feature_dim);
  return c;
}

std::size_t expected_parameter_count(const ModelConfig& c) {
  const std::size_t d = c.embed_dim, h = c.gru_hidden, f = c.filters_per_width;
  std::size_t n = 2 * (3 * d * h + 3 * h * h + 3 * h);
  for (auto w : c.filter_widths) n += w * 2 * h * f + f;
  if (c.has_class_head()) n += c.combined_dim() * corpus::kNumClasses + corpus::kNumClasses;
  if (c.has_intensity_head()) n += c.combined_dim() + 1;
  return n;
}

Batch make_batch(const std::vector<const EncodedExample*>& examples) {
  if (examples.empty()) throw Error("make_batch: empty batch");
  const std::size_t n = examples.size();
  const std::size_t t_len = examples[0]->matrix.max_len, dim = examples[0]->matrix.dim;
  const std::size_t f = examples[0]->features.size();
  Batch batch;
  batch.lengths.resize(n);
  std::vector<double> feats(n * f);
  for (std::size_t b = 0; b < n; ++b) {
    const auto& ex = *examples[b];
    if (ex.matrix.max_len != t_len || ex.matrix.dim != dim)
      throw Error("make_batch: tweet '" + ex.id + "' encoded with a different shape");
    if (ex.features.size() != f) throw Error("make_batch: tweet '" + ex.id + "' has a different feature width");
    batch.lengths[b] = ex.matrix.length;
    std::copy(ex.features.begin(), ex.features.end(), feats.begin() + static_cast<std::ptrdiff_t>(b * f));
  }
  batch.steps.reserve(t_len);
  for (std::size_t t = 0; t < t_len; ++t) {
    std::vector<double> step(n * dim);
    for (std::size_t b = 0; b < n; ++b) {
      const double* row = examples[b]->matrix.row(t);
      std::copy(row, row + dim, step.begin() + static_cast<std::ptrdiff_t>(b * dim));
    }
    batch.steps.push_back(ad::constant({n, dim}, std::move(step)));
  }
  batch.features = ad::constant({n, f}, std::move(feats));
  return batch;
}

corpus::ValenceClass argmax_class(const double* probs) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < corpus::kNumClasses; ++k)
    if (probs[k] > probs[best]) best = k;
  return corpus::class_from_index(best);
}

Model::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  ad::Rng rng(config_.seed);
  const std::size_t d = config_.embed_dim, h = config_.gru_hidden, f = config_.filters_per_width;
  gru_fwd_ = make_gru(rng, d, h);
  gru_bwd_ = make_gru(rng, d, h);
  for (auto w : config_.filter_widths) {
    ad::ConvFilter cf;
    cf.width = w;
    cf.w = ad::parameter({w * 2 * h, f}, glorot(rng, w * 2 * h * f, w * 2 * h, w * f));
    cf.b = ad::parameter({f}, std::vector<double>(f, 0.0));
    conv_.push_back(std::move(cf));
  }
  const std::size_t in = config_.combined_dim();
  if (config_.has_class_head()) {
    class_w_ = ad::parameter({in, corpus::kNumClasses}, glorot(rng, in * corpus::kNumClasses, in, corpus::kNumClasses));
    class_b_ = ad::parameter({corpus::kNumClasses}, std::vector<double>(corpus::kNumClasses, 0.0));
  }
  if (config_.has_intensity_head()) {
    intensity_w_ = ad::parameter({in, 1}, glorot(rng, in, in, 1));
    intensity_b_ = ad::parameter({1}, {0.0});
  }
}

Model build_model(const ModelConfig& config) { return Model(config); }

std::vector<ad::NamedParam> Model::parameters() const {
  std::vector<ad::NamedParam> out;
  push_gru(out, "encoder/gru_fwd", gru_fwd_);
  push_gru(out, "encoder/gru_bwd", gru_bwd_);
  for (const auto& cf : conv_) {
    const std::string prefix = "encoder/conv" + std::to_string(cf.width);
    out.push_back({prefix + "/W", cf.w});
    out.push_back({prefix + "/b", cf.b});
  }
  if (class_w_) {
    out.push_back({"heads/class/W", class_w_});
    out.push_back({"heads/class/b", class_b_});
  }
  if (intensity_w_) {
    out.push_back({"heads/intensity/W", intensity_w_});
    out.push_back({"heads/intensity/b", intensity_b_});
  }
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.tensor->size();
  return n;
}

void Model::set_parameter(const std::string& name, const std::vector<double>& data) {
  for (const auto& p : parameters()) {
    if (p.name != name) continue;
    if (p.tensor->size() != data.size())
      throw Error("parameter '" + name + "': expected " + std::to_string(p.tensor->size()) + " values, got " +
                  std::to_string(data.size()));
    std::copy(data.begin(), data.end(), p.tensor->data().begin());
    return;
  }
  throw Error("model has no parameter '" + name + "'");
}

Model::TapeOutput Model::forward(ad::Tape& tape, const Batch& batch, bool training, ad::Rng& rng) const {
  if (batch.steps.empty()) throw Error("forward: batch has no time steps");
  if (batch.steps[0]->cols() != config_.embed_dim)
    throw Error("forward: batch embedding width " + std::to_string(batch.steps[0]->cols()) + " differs from config " +
                std::to_string(config_.embed_dim));
  if (batch.features->cols() != config_.feature_dim && !(config_.feature_dim == 0 && batch.features->size() == 0))
    throw Error("forward: batch feature width " + std::to_string(batch.features->cols()) + " differs from config " +
                std::to_string(config_.feature_dim));

  std::vector<ad::Var> inputs;
  inputs.reserve(batch.steps.size());
  for (const auto& s : batch.steps) inputs.push_back(ad::dropout(tape, s, config_.dropout, training, rng));

  const auto encoded = ad::bigru(tape, inputs, batch.lengths, gru_fwd_, gru_bwd_);
  const auto pooled = ad::conv_bank(tape, encoded, batch.lengths, conv_);

  TapeOutput out;
  out.combined = config_.feature_dim > 0 ? ad::concat(tape, {pooled, batch.features}, 1) : pooled;
  const auto head_in = ad::dropout(tape, out.combined, config_.dropout, training, rng);
  if (class_w_) out.logits = ad::affine(tape, head_in, class_w_, class_b_);
  if (intensity_w_) out.intensity = ad::sigmoid(tape, ad::affine(tape, head_in, intensity_w_, intensity_b_));
  return out;
}

ForwardOutput Model::forward(const Batch& batch) const {
  ad::Tape tape;
  ad::Rng unused(0);
  const auto t = forward(tape, batch, false, unused);
  ForwardOutput out;
  out.combined_dim = t.combined->cols();
  out.combined = t.combined->values();
  if (t.logits) out.class_probs = ad::softmax_rows(*t.logits);
  if (t.intensity) out.intensity = t.intensity->values();
  return out;
}

namespace {

template <typename Fn>
void for_each_chunk(const std::vector<EncodedExample>& examples, std::size_t chunk, Fn&& fn) {
  for (std::size_t start = 0; start < examples.size(); start += chunk) {
    const std::size_t end = std::min(examples.size(), start + chunk);
    std::vector<const EncodedExample*> ptrs;
    for (std::size_t i = start; i < end; ++i) ptrs.push_back(&examples[i]);
    fn(start, make_batch(ptrs));
  }
}

}  // namespace

std::vector<Prediction> Model::predict(const std::vector<EncodedExample>& examples) const {
  std::vector<Prediction> out(examples.size());
  for_each_chunk(examples, config_.batch_size, [&](std::size_t start, const Batch& batch) {
    const auto f = forward(batch);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      auto& p = out[start + b];
      if (!f.class_probs.empty()) p.valence = argmax_class(f.class_probs.data() + b * corpus::kNumClasses);
      if (!f.intensity.empty()) p.intensity = f.intensity[b];
    }
  });
  return out;
}

std::vector<std::vector<double>> Model::extract_representations(const std::vector<EncodedExample>& examples) const {
  std::vector<std::vector<double>> out(examples.size());
  for_each_chunk(examples, config_.batch_size, [&](std::size_t start, const Batch& batch) {
    const auto f = forward(batch);
    for (std::size_t b = 0; b < batch.size(); ++b)
      out[start + b].assign(f.combined.begin() + static_cast<std::ptrdiff_t>(b * f.combined_dim),
                            f.combined.begin() + static_cast<std::ptrdiff_t>((b + 1) * f.combined_dim));
  });
  return out;
}

}  // namespace mtaffect::model
