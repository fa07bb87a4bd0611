#pragma once

// Subcommand implementations behind the mtaffect executable.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtaffect/corpus.hpp"
#include "mtaffect/embed.hpp"
#include "mtaffect/eval.hpp"
#include "mtaffect/features.hpp"
#include "mtaffect/model.hpp"
#include "mtaffect/normalize.hpp"
#include "mtaffect/run_config.hpp"

namespace mtaffect::cli {

corpus::LabelKind label_kind_from_name(const std::string& name);

// Everything a config needs loaded before encoding tweets.
struct Resources {
  text::FrequencyLexicon freq;
  text::EmojiLexicon emoji;
  std::optional<embed::EmbeddingTable> glove;
  std::optional<embed::EmbeddingTable> emoji_vectors;
  std::optional<embed::EmbeddingTable> char_vectors;
  std::vector<features::ScoredLexicon> lexicons;
  std::vector<features::ExternalFeatureSet> externals;

  embed::EmbeddingTables tables(std::size_t output_dim) const;
};

Resources load_resources(const RunConfig& config);
corpus::DatasetSplit load_split(const SplitFiles& files, corpus::SplitName name);

struct EncodedSplit {
  std::string split;
  features::Layout layout;
  std::vector<model::EncodedExample> examples;
};

EncodedSplit encode_split(const corpus::DatasetSplit& split, const RunConfig& config, const Resources& resources);

Container encoded_to_container(const EncodedSplit& encoded);
EncodedSplit encoded_from_container(const Container& c);

// Predictions as TSV: id, ordinal valence, intensity; absent fields are empty.
void write_predictions(const std::filesystem::path& path, const std::vector<eval::RunPrediction>& preds);
std::vector<eval::RunPrediction> read_predictions(const std::filesystem::path& path);

struct Representations {
  std::string name;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
};
void write_representations(const std::filesystem::path& path, const Representations& r);
Representations read_representations(const std::filesystem::path& path);

// Writes report.json (and confusion.csv / confusion.svg for classification)
// into `dir` with the given file stem.
void write_report(const std::filesystem::path& dir, const std::string& stem, const eval::EvalReport& report,
                  const std::string& config_hash);

void cmd_normalize(const std::filesystem::path& in, const std::filesystem::path& out,
                   const std::filesystem::path& freq, const std::filesystem::path& emoji, corpus::LabelKind kind,
                   const text::NormalizeOptions& options = {});

void cmd_encode(const RunConfig& config, corpus::SplitName split, const std::filesystem::path& out);

struct TrainRequest {
  std::optional<model::TaskMode> mode;
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;
  bool shallow = true;
  bool verbose = false;
};

// Trains one run and returns its directory.
std::filesystem::path cmd_train(const RunConfig& config, const TrainRequest& request);

void cmd_repr(const RunConfig& config, const std::filesystem::path& checkpoint, corpus::SplitName split,
              const std::filesystem::path& out);

enum class ShallowHead { Svm, Svr };
ShallowHead shallow_head_from_name(const std::string& name);

eval::EvalReport cmd_shallow(const std::filesystem::path& train_repr, const std::filesystem::path& train_labels,
                             const std::filesystem::path& eval_repr, const std::filesystem::path& eval_labels,
                             corpus::LabelKind kind, ShallowHead head, const shallow::ShallowOptions& options,
                             const std::filesystem::path& out_dir);

eval::EvalReport cmd_eval(const std::filesystem::path& predictions, const std::filesystem::path& gold,
                          corpus::LabelKind kind, eval::Task task, const std::filesystem::path& out_dir);

inline constexpr std::array<const char*, 4> kScoreCells = {"dl_class", "dl_intensity", "ml_class", "ml_intensity"};

struct CellComparison {
  std::string cell;
  std::optional<double> stl_mean;
  std::optional<double> mtl_mean;
  std::optional<eval::TTestResult> ttest;
};

struct Comparison {
  std::vector<std::uint64_t> seeds;
  std::array<CellComparison, 4> cells;

  nlohmann::json to_json() const;
  std::string to_markdown() const;
};

Comparison cmd_compare(const std::vector<std::filesystem::path>& mtl_runs,
                       const std::vector<std::filesystem::path>& stl_runs, const std::filesystem::path& out_dir,
                       bool force = false);

}  // namespace mtaffect::cli
