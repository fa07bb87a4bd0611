#pragma once

// Tweet preprocessing: lowercasing, entity masking, emoji replacement,
// hashtag segmentation, tokenization, punctuation filtering and spell
// correction against a unigram frequency lexicon.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mtaffect::text {

class FrequencyLexicon {
 public:
  FrequencyLexicon() = default;
  // Words are lowercased; repeated words have their counts summed.
  explicit FrequencyLexicon(const std::vector<std::pair<std::string, std::uint64_t>>& entries);

  // "word<TAB>count" per line.
  static FrequencyLexicon load(const std::filesystem::path& path);

  std::uint64_t count(std::string_view word) const;
  bool contains(std::string_view word) const { return count(word) > 0; }
  std::uint64_t total() const { return total_; }
  std::size_t size() const { return words_.size(); }

  // Sorted by word.
  const std::vector<std::pair<std::string, std::uint64_t>>& entries() const { return words_; }

 private:
  std::unordered_map<std::string, std::uint64_t> counts_;
  std::vector<std::pair<std::string, std::uint64_t>> words_;
  std::uint64_t total_ = 0;
};

class EmojiLexicon {
 public:
  EmojiLexicon() = default;
  explicit EmojiLexicon(const std::vector<std::pair<std::string, std::vector<std::string>>>& entries);

  // "emoji<TAB>space-separated words" per line.
  static EmojiLexicon load(const std::filesystem::path& path);

  const std::vector<std::string>* find(std::string_view emoji) const;
  std::size_t size() const { return map_.size(); }
  std::size_t max_key_bytes() const { return max_key_; }

 private:
  std::unordered_map<std::string, std::vector<std::string>> map_;
  std::size_t max_key_ = 0;
};

struct NormalizeOptions {
  bool lowercase = true;
  bool mask_entities = true;
  bool replace_emoji = true;
  bool segment_hashtags = true;
  bool filter_punctuation = true;
  bool correct_spelling = true;
  int max_edit = 2;
  // Keep emoji that survive replacement as tokens so the embedding layer can
  // look them up; off by default.
  bool keep_emoji = false;
};

struct NormalizedTweet {
  std::vector<std::string> tokens;
  std::string original_id;

  std::string joined() const;
  bool operator==(const NormalizedTweet&) const = default;
};

NormalizedTweet normalize(std::string_view text, const FrequencyLexicon& freq,
                          const EmojiLexicon& emoji, const NormalizeOptions& opts = {},
                          std::string id = {});

// Most probable segmentation under a unigram model; unknown words score
// 1/(total * 10^len).
std::vector<std::string> segment_hashtag(std::string_view tag, const FrequencyLexicon& freq);

std::string correct_spelling(std::string_view word, const FrequencyLexicon& freq, int max_edit);

// Optimal-string-alignment distance (adjacent transpositions count as one edit).
std::size_t damerau_levenshtein(std::string_view a, std::string_view b);

std::string replace_entities(std::string_view text);

// Splits on whitespace; word runs keep internal apostrophes, every other
// character (one UTF-8 code point) becomes its own token.
std::vector<std::string> tokenize(std::string_view text);

bool is_word_token(std::string_view token);

}  // namespace mtaffect::text
