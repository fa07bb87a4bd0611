#pragma once

// Hand-crafted per-tweet features: affect-lexicon aggregates computed here,
// plus transfer-model vectors read from precomputed files, concatenated in a
// configured order.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "mtaffect/normalize.hpp"

namespace mtaffect::features {

// Reserved source name for the native lexicon block.
inline constexpr std::string_view kLexiconSource = "lexicons";

class ScoredLexicon {
 public:
  ScoredLexicon(std::string name, std::size_t arity);

  // Header "name<TAB>k", then "word<TAB>s1<TAB>...<TAB>sk".
  static ScoredLexicon load(const std::filesystem::path& path);

  void add(std::string word, std::vector<double> scores);
  const std::vector<double>* find(std::string_view word) const;

  const std::string& name() const { return name_; }
  std::size_t arity() const { return arity_; }
  std::size_t size() const { return entries_.size(); }
  // Block width in the feature vector: k score sums plus the match count.
  std::size_t width() const { return arity_ + 1; }

 private:
  std::string name_;
  std::size_t arity_;
  std::unordered_map<std::string, std::vector<double>> entries_;
};

// Reads a SentiWordNet 3.0 dump and averages (positivity, negativity,
// objectivity) over every synset a word appears in.
ScoredLexicon build_sentiwordnet_lexicon(const std::filesystem::path& path, std::string name = "sentiwordnet");

// Per lexicon: [sum of each score column over matched tokens ; match count].
std::vector<double> lexicon_features(const std::vector<std::string>& tokens,
                                     const std::vector<ScoredLexicon>& lexicons);

class ExternalFeatureSet {
 public:
  ExternalFeatureSet(std::string name, std::size_t dim);

  // Header "name<TAB>dim", then "tweet_id<TAB>f1 f2 ... f_dim".
  static ExternalFeatureSet load(const std::filesystem::path& path, std::size_t expected_dim);

  void add(std::string id, std::vector<double> values);
  // nullptr when the id has no vector.
  const std::vector<double>* find(std::string_view id) const;

  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }

 private:
  std::string name_;
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

// Published widths of the transfer sources this project knows by name.
std::optional<std::size_t> known_external_dim(std::string_view source);

struct LayoutEntry {
  std::string source;
  std::size_t offset = 0;
  std::size_t width = 0;

  bool operator==(const LayoutEntry&) const = default;
};

using Layout = std::vector<LayoutEntry>;

nlohmann::json layout_to_json(const Layout& layout);
Layout layout_from_json(const nlohmann::json& j);

struct HandcraftedVector {
  std::vector<double> values;
  Layout layout;
  std::vector<std::string> missing_sources;  // zero-filled blocks
};

class FeatureAssembler {
 public:
  FeatureAssembler(std::vector<std::string> sources, std::vector<ScoredLexicon> lexicons,
                   std::vector<ExternalFeatureSet> externals, bool allow_missing = false);

  HandcraftedVector assemble(std::string_view tweet_id, const std::vector<std::string>& tokens) const;

  const Layout& layout() const { return layout_; }
  std::size_t width() const;

 private:
  std::vector<std::string> sources_;
  std::vector<ScoredLexicon> lexicons_;
  std::vector<ExternalFeatureSet> externals_;
  bool allow_missing_;
  Layout layout_;
};

}  // namespace mtaffect::features
