#pragma once

// One JSON file describing a full experiment: data, resources, model,
// shallow heads and seeds. Relative paths resolve against the file's directory.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtaffect/model.hpp"
#include "mtaffect/normalize.hpp"
#include "mtaffect/shallow.hpp"

namespace mtaffect::cli {

namespace fs = std::filesystem;

// Either one five-column file carrying both labels, or a classification
// file and an intensity file merged by id.
struct SplitFiles {
  fs::path both;
  fs::path classification;
  fs::path intensity;

  bool empty() const { return both.empty() && classification.empty() && intensity.empty(); }
};

struct RunConfig {
  SplitFiles train, dev, test;
  fs::path freq;
  fs::path emoji_lexicon;
  fs::path glove;
  fs::path emoji_vectors;
  fs::path char_vectors;
  std::vector<fs::path> lexicons;
  std::map<std::string, fs::path> external_features;
  fs::path output_dir = "runs";

  bool normalize = true;
  text::NormalizeOptions normalize_options;
  model::ModelConfig model;
  shallow::ShallowOptions shallow;
  std::vector<std::uint64_t> seeds = {0};
  bool allow_missing_features = false;

  static RunConfig from_json(const nlohmann::json& j, const fs::path& base_dir = {});
  static RunConfig load(const fs::path& path);
  nlohmann::json to_json() const;

  // Collects every problem (missing files, bad hyperparameters) into one error.
  void validate() const;

  // Hash of everything except seeds, the model seed and the task mode.
  std::string experiment_hash() const;
};

}  // namespace mtaffect::cli
