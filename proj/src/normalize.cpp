#include "mtaffect/normalize.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <regex>
#include <tuple>

#include "mtaffect/container.hpp"
#include "mtaffect/error.hpp"

namespace mtaffect::text {

namespace {

bool is_ascii_alnum(unsigned char c) { return std::isalnum(c) != 0 && c < 0x80; }

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 'A' && c <= 'Z') ch = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xe) return 3;
  if ((lead >> 3) == 0x1e) return 4;
  return 1;
}

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    fn(line, line_no);
  }
}

std::string replace_emoji(std::string_view s, const EmojiLexicon& emoji) {
  if (emoji.size() == 0) return std::string(s);
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    bool matched = false;
    const std::size_t longest = std::min(emoji.max_key_bytes(), s.size() - i);
    for (std::size_t len = longest; len > 0; --len) {
      if (const auto* words = emoji.find(s.substr(i, len))) {
        out += ' ';
        for (const auto& w : *words) out += w + ' ';
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) {
      const std::size_t step = std::min(utf8_length(static_cast<unsigned char>(s[i])), s.size() - i);
      out.append(s.substr(i, step));
      i += step;
    }
  }
  return out;
}

std::string segment_hashtags(std::string_view s, const FrequencyLexicon& freq) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '#' && i + 1 < s.size() && is_ascii_alnum(static_cast<unsigned char>(s[i + 1]))) {
      std::size_t j = i + 1;
      while (j < s.size() && is_ascii_alnum(static_cast<unsigned char>(s[j]))) ++j;
      out += ' ';
      for (const auto& w : segment_hashtag(s.substr(i + 1, j - i - 1), freq)) out += w + ' ';
      i = j;
    } else {
      out += s[i++];
    }
  }
  return out;
}

bool is_alpha_word(std::string_view token) {
  bool letter = false;
  for (unsigned char c : token) {
    if (c >= 'a' && c <= 'z') letter = true;
    else if (c != '\'') return false;
  }
  return letter;
}

}  // namespace

FrequencyLexicon::FrequencyLexicon(const std::vector<std::pair<std::string, std::uint64_t>>& entries) {
  for (const auto& [word, c] : entries) {
    if (c == 0) throw Error("frequency lexicon: count for '" + word + "' must be positive");
    counts_[ascii_lower(word)] += c;
    total_ += c;
  }
  words_.assign(counts_.begin(), counts_.end());
  std::sort(words_.begin(), words_.end());
}

FrequencyLexicon FrequencyLexicon::load(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  for_each_line(read_file(path), [&](std::string_view line, std::size_t line_no) {
    const auto tab = line.find('\t');
    std::uint64_t c = 0;
    const std::string_view num = tab == std::string_view::npos ? std::string_view{} : line.substr(tab + 1);
    const auto res = std::from_chars(num.data(), num.data() + num.size(), c);
    if (tab == std::string_view::npos || tab == 0 || res.ec != std::errc() ||
        res.ptr != num.data() + num.size() || c == 0)
      throw Error(path.string() + " line " + std::to_string(line_no) + ": expected word<TAB>positive count");
    entries.emplace_back(std::string(line.substr(0, tab)), c);
  });
  return FrequencyLexicon(entries);
}

std::uint64_t FrequencyLexicon::count(std::string_view word) const {
  const auto it = counts_.find(std::string(word));
  return it == counts_.end() ? 0 : it->second;
}

EmojiLexicon::EmojiLexicon(const std::vector<std::pair<std::string, std::vector<std::string>>>& entries) {
  for (const auto& [key, words] : entries) {
    if (key.empty()) throw Error("emoji lexicon: empty key");
    if (words.empty()) throw Error("emoji lexicon: empty replacement for '" + key + "'");
    std::vector<std::string> lowered;
    for (const auto& w : words) lowered.push_back(ascii_lower(w));
    map_.emplace(key, std::move(lowered));
    max_key_ = std::max(max_key_, key.size());
  }
}

EmojiLexicon EmojiLexicon::load(const std::filesystem::path& path) {
  std::vector<std::pair<std::string, std::vector<std::string>>> entries;
  for_each_line(read_file(path), [&](std::string_view line, std::size_t line_no) {
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0)
      throw Error(path.string() + " line " + std::to_string(line_no) + ": expected emoji<TAB>words");
    std::vector<std::string> words;
    for (auto& tok : tokenize(line.substr(tab + 1))) words.push_back(std::move(tok));
    if (words.empty())
      throw Error(path.string() + " line " + std::to_string(line_no) + ": empty replacement");
    entries.emplace_back(std::string(line.substr(0, tab)), std::move(words));
  });
  return EmojiLexicon(entries);
}

const std::vector<std::string>* EmojiLexicon::find(std::string_view emoji) const {
  const auto it = map_.find(std::string(emoji));
  return it == map_.end() ? nullptr : &it->second;
}

std::string NormalizedTweet::joined() const {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string replace_entities(std::string_view text) {
  static const std::regex url(R"((?:https?://|www\.)\S+)", std::regex::icase);
  static const std::regex mention(R"(@[A-Za-z0-9_]+)");
  std::string s = std::regex_replace(std::string(text), url, "url");
  return std::regex_replace(s, mention, "username");
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (is_space(c)) {
      ++i;
    } else if (is_ascii_alnum(c)) {
      std::size_t j = i;
      while (j < s.size()) {
        const auto cj = static_cast<unsigned char>(s[j]);
        if (is_ascii_alnum(cj)) {
          ++j;
        } else if (cj == '\'' && j + 1 < s.size() && is_ascii_alnum(static_cast<unsigned char>(s[j + 1]))) {
          ++j;
        } else {
          break;
        }
      }
      out.emplace_back(s.substr(i, j - i));
      i = j;
    } else {
      const std::size_t len = std::min(utf8_length(c), s.size() - i);
      out.emplace_back(s.substr(i, len));
      i += len;
    }
  }
  return out;
}

bool is_word_token(std::string_view token) {
  return !token.empty() && std::all_of(token.begin(), token.end(), [](char ch) {
    const auto c = static_cast<unsigned char>(ch);
    return is_ascii_alnum(c) || c == '\'';
  });
}

std::vector<std::string> segment_hashtag(std::string_view tag, const FrequencyLexicon& freq) {
  const std::size_t n = tag.size();
  if (n == 0) return {};
  if (freq.total() == 0) return {std::string(tag)};

  const std::string lowered = ascii_lower(tag);
  const double log_total = std::log(static_cast<double>(freq.total()));
  const double log_ten = std::log(10.0);
  auto score = [&](std::size_t from, std::size_t to) {
    const auto c = freq.count(std::string_view(lowered).substr(from, to - from));
    if (c > 0) return std::log(static_cast<double>(c)) - log_total;
    return -log_total - static_cast<double>(to - from) * log_ten;
  };

  std::vector<double> best(n + 1, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> back(n + 1, 0);
  best[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double s = best[j] + score(j, i);
      if (s > best[i]) {
        best[i] = s;
        back[i] = j;
      }
    }
  }
  std::vector<std::string> words;
  for (std::size_t i = n; i > 0; i = back[i]) words.emplace_back(tag.substr(back[i], i - back[i]));
  std::reverse(words.begin(), words.end());
  return words;
}

std::size_t damerau_levenshtein(std::string_view a, std::string_view b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + cost});
      if (i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1])
        d[i][j] = std::min(d[i][j], d[i - 2][j - 2] + 1);
    }
  }
  return d[n][m];
}

std::string correct_spelling(std::string_view word, const FrequencyLexicon& freq, int max_edit) {
  if (max_edit < 1 || max_edit > 2) throw Error("correct_spelling: max_edit must be 1 or 2");
  if (freq.contains(word)) return std::string(word);

  const auto limit = static_cast<std::size_t>(max_edit);
  const std::pair<std::string, std::uint64_t>* best = nullptr;
  std::size_t best_dist = 0;
  for (const auto& entry : freq.entries()) {
    const auto& cand = entry.first;
    const std::size_t diff = cand.size() > word.size() ? cand.size() - word.size() : word.size() - cand.size();
    if (diff > limit || !is_word_token(cand)) continue;
    const std::size_t dist = damerau_levenshtein(word, cand);
    if (dist > limit) continue;
    // Highest count, then smaller distance, then lexicographic.
    const bool better = best == nullptr || entry.second > best->second ||
                        (entry.second == best->second &&
                         std::tie(dist, cand) < std::tie(best_dist, best->first));
    if (better) {
      best = &entry;
      best_dist = dist;
    }
  }
  return best == nullptr ? std::string(word) : best->first;
}

NormalizedTweet normalize(std::string_view text, const FrequencyLexicon& freq, const EmojiLexicon& emoji,
                          const NormalizeOptions& opts, std::string id) {
  std::string s(text);
  if (opts.lowercase) s = ascii_lower(s);
  if (opts.mask_entities) s = replace_entities(s);
  if (opts.replace_emoji) s = replace_emoji(s, emoji);
  if (opts.segment_hashtags) s = segment_hashtags(s, freq);

  NormalizedTweet out;
  out.original_id = std::move(id);
  for (auto& tok : tokenize(s)) {
    if (opts.filter_punctuation && !is_word_token(tok) && tok != "!" && tok != "?") {
      const bool emoji_like = static_cast<unsigned char>(tok[0]) >= 0x80;
      if (!(opts.keep_emoji && emoji_like)) continue;
    }
    if (opts.correct_spelling && tok != "username" && tok != "url" && is_alpha_word(tok))
      tok = correct_spelling(tok, freq, opts.max_edit);
    out.tokens.push_back(std::move(tok));
  }
  return out;
}

}  // namespace mtaffect::text
