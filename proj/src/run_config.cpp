#include "mtaffect/run_config.hpp"

#include <fstream>

#include <unistd.h>

#include "mtaffect/container.hpp"
#include "mtaffect/error.hpp"
#include "mtaffect/features.hpp"

namespace mtaffect::cli {

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

SplitFiles split_from_json(const nlohmann::json& j, const fs::path& base) {
  SplitFiles s;
  if (j.is_string()) {
    s.both = resolve(base, j.get<std::string>());
  } else if (j.is_object()) {
    s.both = resolve(base, j.value("both", std::string()));
    s.classification = resolve(base, j.value("classification", std::string()));
    s.intensity = resolve(base, j.value("intensity", std::string()));
  } else if (!j.is_null()) {
    throw Error("split entry must be a path or an object");
  }
  return s;
}

nlohmann::json split_to_json(const SplitFiles& s) {
  if (s.empty()) return nullptr;
  nlohmann::json j = nlohmann::json::object();
  if (!s.both.empty()) j["both"] = s.both.string();
  if (!s.classification.empty()) j["classification"] = s.classification.string();
  if (!s.intensity.empty()) j["intensity"] = s.intensity.string();
  return j;
}

nlohmann::json normalize_to_json(bool enabled, const text::NormalizeOptions& o) {
  return {{"enabled", enabled},
          {"lowercase", o.lowercase},
          {"mask_entities", o.mask_entities},
          {"replace_emoji", o.replace_emoji},
          {"segment_hashtags", o.segment_hashtags},
          {"filter_punctuation", o.filter_punctuation},
          {"correct_spelling", o.correct_spelling},
          {"max_edit", o.max_edit},
          {"keep_emoji", o.keep_emoji}};
}

void check_file(std::vector<std::string>& problems, const std::string& what, const fs::path& p, bool required) {
  if (p.empty()) {
    if (required) problems.push_back(what + " path is not set");
    return;
  }
  if (!fs::is_regular_file(p)) problems.push_back(what + " not found: " + p.string());
}

void check_split(std::vector<std::string>& problems, const std::string& what, const SplitFiles& s, bool required) {
  if (s.empty()) {
    if (required) problems.push_back(what + " split is not set");
    return;
  }
  if (!s.both.empty()) {
    if (!s.classification.empty() || !s.intensity.empty())
      problems.push_back(what + " split sets both a combined file and separate label files");
    check_file(problems, what + " split", s.both, true);
    return;
  }
  check_file(problems, what + " classification file", s.classification, false);
  check_file(problems, what + " intensity file", s.intensity, false);
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j, const fs::path& base) {
  RunConfig c;
  const auto paths = j.value("paths", nlohmann::json::object());
  if (paths.contains("train")) c.train = split_from_json(paths["train"], base);
  if (paths.contains("dev")) c.dev = split_from_json(paths["dev"], base);
  if (paths.contains("test")) c.test = split_from_json(paths["test"], base);
  c.freq = resolve(base, paths.value("freq", std::string()));
  c.emoji_lexicon = resolve(base, paths.value("emoji_lexicon", std::string()));
  c.glove = resolve(base, paths.value("glove", std::string()));
  c.emoji_vectors = resolve(base, paths.value("emoji_vectors", std::string()));
  c.char_vectors = resolve(base, paths.value("char_vectors", std::string()));
  for (const auto& p : paths.value("lexicons", nlohmann::json::array())) c.lexicons.push_back(resolve(base, p));
  for (const auto& [name, p] : paths.value("external_features", nlohmann::json::object()).items())
    c.external_features[name] = resolve(base, p.get<std::string>());
  c.output_dir = resolve(base, paths.value("output_dir", std::string("runs")));

  if (j.contains("normalize")) {
    const auto& n = j["normalize"];
    auto& o = c.normalize_options;
    c.normalize = n.value("enabled", true);
    o.lowercase = n.value("lowercase", o.lowercase);
    o.mask_entities = n.value("mask_entities", o.mask_entities);
    o.replace_emoji = n.value("replace_emoji", o.replace_emoji);
    o.segment_hashtags = n.value("segment_hashtags", o.segment_hashtags);
    o.filter_punctuation = n.value("filter_punctuation", o.filter_punctuation);
    o.correct_spelling = n.value("correct_spelling", o.correct_spelling);
    o.max_edit = n.value("max_edit", o.max_edit);
    o.keep_emoji = n.value("keep_emoji", o.keep_emoji);
  }
  if (j.contains("model")) c.model = model::ModelConfig::from_json(j["model"]);
  if (j.contains("shallow")) {
    const auto& s = j["shallow"];
    c.shallow.C = s.value("C", c.shallow.C);
    c.shallow.epsilon = s.value("epsilon", c.shallow.epsilon);
    c.shallow.epochs = s.value("epochs", c.shallow.epochs);
    c.shallow.standardize = s.value("standardize", c.shallow.standardize);
  }
  if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (!c.seeds.empty() && !(j.contains("model") && j["model"].contains("seed"))) c.model.seed = c.seeds.front();
  c.allow_missing_features = j.value("allow_missing_features", false);
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  try {
    return from_json(j, path.parent_path());
  } catch (const nlohmann::json::exception& e) {
    throw Error("config file " + path.string() + ": " + e.what());
  }
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json paths = {{"train", split_to_json(train)},
                          {"dev", split_to_json(dev)},
                          {"test", split_to_json(test)},
                          {"freq", freq.string()},
                          {"emoji_lexicon", emoji_lexicon.string()},
                          {"glove", glove.string()},
                          {"emoji_vectors", emoji_vectors.string()},
                          {"char_vectors", char_vectors.string()},
                          {"output_dir", output_dir.string()}};
  paths["lexicons"] = nlohmann::json::array();
  for (const auto& p : lexicons) paths["lexicons"].push_back(p.string());
  paths["external_features"] = nlohmann::json::object();
  for (const auto& [name, p] : external_features) paths["external_features"][name] = p.string();
  return {{"paths", paths},
          {"normalize", normalize_to_json(normalize, normalize_options)},
          {"model", model.to_json()},
          {"shallow",
           {{"C", shallow.C}, {"epsilon", shallow.epsilon}, {"epochs", shallow.epochs},
            {"standardize", shallow.standardize}}},
          {"seeds", seeds},
          {"allow_missing_features", allow_missing_features}};
}

void RunConfig::validate() const {
  std::vector<std::string> problems;
  check_split(problems, "train", train, true);
  check_split(problems, "dev", dev, true);
  check_split(problems, "test", test, false);
  check_file(problems, "frequency lexicon", freq, normalize);
  check_file(problems, "emoji lexicon", emoji_lexicon, false);
  check_file(problems, "glove vectors", glove, true);
  check_file(problems, "emoji vectors", emoji_vectors, false);
  check_file(problems, "character vectors", char_vectors, false);
  for (const auto& p : lexicons) check_file(problems, "lexicon", p, true);
  for (const auto& [name, p] : external_features) check_file(problems, "external feature set '" + name + "'", p, true);

  bool wants_lexicons = false;
  for (const auto& source : model.feature_config) {
    if (source == features::kLexiconSource) {
      wants_lexicons = true;
    } else if (!external_features.count(source)) {
      problems.push_back("feature source '" + source + "' has no file under paths.external_features");
    }
  }
  if (wants_lexicons && lexicons.empty()) problems.push_back("feature source 'lexicons' needs paths.lexicons");
  if (normalize && normalize_options.correct_spelling && normalize_options.max_edit != 1 &&
      normalize_options.max_edit != 2)
    problems.push_back("normalize.max_edit must be 1 or 2");
  if (seeds.empty()) problems.push_back("seeds must not be empty");

  try {
    auto m = model;
    m.validate();
  } catch (const Error& e) {
    problems.push_back(e.what());
  }
  try {
    shallow.validate();
  } catch (const Error& e) {
    problems.push_back(e.what());
  }

  std::error_code ec;
  if (!output_dir.empty()) {
    // The nearest existing ancestor must be a directory we can create entries in.
    fs::path probe = fs::absolute(output_dir, ec);
    while (!ec && !fs::exists(probe, ec) && probe.has_parent_path() && probe.parent_path() != probe)
      probe = probe.parent_path();
    if (ec || !fs::is_directory(probe) || ::access(probe.c_str(), W_OK) != 0)
      problems.push_back("output dir is not writable: " + output_dir.string());
  }

  if (!problems.empty()) {
    std::string msg = "invalid run config:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw Error(msg);
  }
}

std::string RunConfig::experiment_hash() const {
  auto j = to_json();
  j.erase("seeds");
  j["paths"].erase("output_dir");
  j["model"].erase("seed");
  j["model"].erase("task_mode");
  return hash_json(j);
}

}  // namespace mtaffect::cli
