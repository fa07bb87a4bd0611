#pragma once

// Word vectors from three tables: GloVe (zero-padded to the output width),
// emoji vectors, and a character-average fallback for everything else.

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mtaffect/normalize.hpp"

namespace mtaffect::embed {

class EmbeddingTable {
 public:
  EmbeddingTable(std::string name, std::size_t dim);

  // "token f1 ... f_dim" per line, space-separated. Duplicate tokens keep
  // the first occurrence.
  static EmbeddingTable load(const std::filesystem::path& path, std::size_t expected_dim,
                             std::string name = {});

  // Returns false (and keeps the existing vector) when the token is already present.
  bool add(std::string token, std::vector<double> vec);
  const std::vector<double>* find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token) != nullptr; }

  const std::string& name() const { return name_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }

 private:
  std::string name_;
  std::size_t dim_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
};

enum class Branch { Glove, Emoji, Characters };

struct EmbeddingTables {
  const EmbeddingTable* glove = nullptr;
  const EmbeddingTable* emoji = nullptr;
  const EmbeddingTable* chars = nullptr;
  std::size_t output_dim = 300;

  // Throws unless glove.dim <= output_dim and emoji/chars dims equal output_dim.
  void validate() const;
};

Branch branch_for(std::string_view word, const EmbeddingTables& tables);

std::vector<double> compose_word_vector(std::string_view word, const EmbeddingTables& tables);

struct TweetMatrix {
  std::size_t max_len = 0;
  std::size_t dim = 0;
  std::size_t length = 0;
  std::vector<double> values;  // [max_len x dim], row-major
  std::vector<bool> mask;      // [max_len]

  const double* row(std::size_t t) const { return values.data() + t * dim; }
};

TweetMatrix encode_tweet(const text::NormalizedTweet& tweet, const EmbeddingTables& tables,
                         std::size_t max_len = 50);

// UTF-8 code points of a word, each as its own string.
std::vector<std::string> utf8_characters(std::string_view word);

}  // namespace mtaffect::embed
