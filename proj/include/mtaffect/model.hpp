#pragma once

// BiGRU -> CNN encoder with hand-crafted feature fusion and task heads
// (7-way softmax for valence class, sigmoid for intensity), in single-task
// and multi-task variants.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtaffect/ad/adam.hpp"
#include "mtaffect/ad/ops.hpp"
#include "mtaffect/container.hpp"
#include "mtaffect/corpus.hpp"
#include "mtaffect/embed.hpp"

namespace mtaffect::model {

enum class TaskMode { StlClass, StlIntensity, Mtl };

std::string task_mode_name(TaskMode m);
TaskMode task_mode_from_name(const std::string& name);

struct ModelConfig {
  std::size_t max_len = 50;
  std::size_t embed_dim = 300;
  std::size_t glove_dim = 200;
  std::size_t gru_hidden = 256;
  std::vector<std::size_t> filter_widths = {2, 3, 4, 5, 6};
  std::size_t filters_per_width = 100;
  double dropout = 0.5;
  double lr = 1e-3;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 100;
  std::size_t patience = 20;
  TaskMode task_mode = TaskMode::Mtl;
  double loss_weight_lambda = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::string> feature_config;
  // Width F of the hand-crafted vector realized by feature_config.
  std::size_t feature_dim = 0;

  void validate() const;
  bool has_class_head() const { return task_mode != TaskMode::StlIntensity; }
  bool has_intensity_head() const { return task_mode != TaskMode::StlClass; }
  std::size_t pooled_dim() const { return filter_widths.size() * filters_per_width; }
  std::size_t combined_dim() const { return pooled_dim() + feature_dim; }

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Closed-form parameter count for a configuration.
std::size_t expected_parameter_count(const ModelConfig& config);

// One tweet ready for the network.
struct EncodedExample {
  std::string id;
  embed::TweetMatrix matrix;
  std::vector<double> features;
  std::optional<corpus::ValenceClass> valence;
  std::optional<double> intensity;
};

struct Batch {
  std::vector<ad::Var> steps;        // max_len constants, each [B x embed_dim]
  std::vector<std::size_t> lengths;  // [B]
  ad::Var features;                  // [B x F]
  std::size_t size() const { return lengths.size(); }
};

Batch make_batch(const std::vector<const EncodedExample*>& examples);

struct ForwardOutput {
  std::vector<double> class_probs;  // [B x 7], empty without a class head
  std::vector<double> intensity;    // [B], empty without an intensity head
  std::vector<double> combined;     // [B x (pooled + F)]
  std::size_t combined_dim = 0;
};

struct Prediction {
  std::optional<corpus::ValenceClass> valence;
  std::optional<double> intensity;
};

// Highest probability; ties go to the lower ordinal.
corpus::ValenceClass argmax_class(const double* probs);

class Model {
 public:
  // Initializes weights from the config seed (Glorot-uniform weights,
  // orthogonal recurrent matrices, zero biases).
  explicit Model(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  // Ordered by layer path; stable across runs.
  std::vector<ad::NamedParam> parameters() const;
  std::size_t parameter_count() const;

  struct TapeOutput {
    ad::Var logits;     // [B x 7] or null
    ad::Var intensity;  // [B x 1] post-sigmoid, or null
    ad::Var combined;   // [B x (pooled + F)] before head dropout
  };
  TapeOutput forward(ad::Tape& tape, const Batch& batch, bool training, ad::Rng& rng) const;

  // Eval-mode forward.
  ForwardOutput forward(const Batch& batch) const;

  std::vector<Prediction> predict(const std::vector<EncodedExample>& examples) const;
  std::vector<std::vector<double>> extract_representations(const std::vector<EncodedExample>& examples) const;

  void set_parameter(const std::string& name, const std::vector<double>& data);

 private:
  ModelConfig config_;
  ad::GruParams gru_fwd_;
  ad::GruParams gru_bwd_;
  std::vector<ad::ConvFilter> conv_;
  ad::Var class_w_, class_b_;
  ad::Var intensity_w_, intensity_b_;
};

Model build_model(const ModelConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<double> dev_pearson_class;
  std::optional<double> dev_pearson_intensity;

  bool operator==(const EpochRecord&) const = default;
};

nlohmann::json history_to_json(const std::vector<EpochRecord>& history);
std::vector<EpochRecord> history_from_json(const nlohmann::json& j);

struct Checkpoint {
  ModelConfig config;
  std::vector<NamedArray> parameters;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_monitor = 0.0;
};

Checkpoint make_checkpoint(const Model& model, std::vector<EpochRecord> history, std::size_t best_epoch,
                           double best_monitor);
Model model_from_checkpoint(const Checkpoint& ckpt);

Container checkpoint_to_container(const Checkpoint& ckpt);
Checkpoint checkpoint_from_container(const Container& c);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Hash of the full config, and of the config without seed and task mode
// (runs sharing the latter are comparable).
std::string config_hash(const ModelConfig& config);
std::string experiment_hash(const ModelConfig& config);

struct TrainOptions {
  // Called after each epoch; returning false stops training.
  std::function<bool(const EpochRecord&, const Model&)> on_epoch;
  bool verbose = false;
};

// Minimizes CE + lambda * MSE (MTL) or the single task loss (STL) with Adam,
// evaluating dev Pearson after every epoch and early-stopping on the mean over
// active tasks. The model ends up holding the best epoch's parameters.
Checkpoint train(Model& model, const std::vector<EncodedExample>& train_set,
                 const std::vector<EncodedExample>& dev_set, const TrainOptions& options = {});

// Mean Pearson over the active tasks on `examples` (undefined correlations count as 0).
struct DevScores {
  std::optional<double> pearson_class;
  std::optional<double> pearson_intensity;
  double monitor = 0.0;
};
DevScores score(const Model& model, const std::vector<EncodedExample>& examples);

}  // namespace mtaffect::model
