#include "mtaffect/embed.hpp"

#include <algorithm>
#include <charconv>

#include "mtaffect/container.hpp"
#include "mtaffect/error.hpp"

namespace mtaffect::embed {

EmbeddingTable::EmbeddingTable(std::string name, std::size_t dim) : name_(std::move(name)), dim_(dim) {
  if (dim_ == 0) throw Error("embedding table '" + name_ + "': dim must be positive");
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path, std::size_t expected_dim,
                                    std::string name) {
  EmbeddingTable table(name.empty() ? path.filename().string() : std::move(name), expected_dim);
  const std::string text = read_file(path);
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string_view line(text.data() + pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    const auto sp = line.find(' ');
    if (sp == std::string_view::npos || sp == 0)
      throw Error(path.string() + " line " + std::to_string(line_no) + ": expected token followed by values");
    std::vector<double> vec;
    vec.reserve(expected_dim);
    std::string_view rest = line.substr(sp + 1);
    while (!rest.empty()) {
      while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
      if (rest.empty()) break;
      double v = 0.0;
      const auto res = std::from_chars(rest.data(), rest.data() + rest.size(), v);
      if (res.ec != std::errc() || (res.ptr != rest.data() + rest.size() && *res.ptr != ' '))
        throw Error(path.string() + " line " + std::to_string(line_no) + ": malformed number");
      vec.push_back(v);
      rest.remove_prefix(static_cast<std::size_t>(res.ptr - rest.data()));
    }
    if (vec.size() != expected_dim)
      throw Error(path.string() + " line " + std::to_string(line_no) + ": expected " +
                  std::to_string(expected_dim) + " values, found " + std::to_string(vec.size()));
    table.add(std::string(line.substr(0, sp)), std::move(vec));
  }
  return table;
}

bool EmbeddingTable::add(std::string token, std::vector<double> vec) {
  if (vec.size() != dim_)
    throw Error("embedding table '" + name_ + "': vector for '" + token + "' has wrong length");
  return vectors_.emplace(std::move(token), std::move(vec)).second;
}

const std::vector<double>* EmbeddingTable::find(std::string_view token) const {
  const auto it = vectors_.find(std::string(token));
  return it == vectors_.end() ? nullptr : &it->second;
}

void EmbeddingTables::validate() const {
  if (output_dim == 0) throw Error("embedding output dim must be positive");
  if (glove != nullptr && glove->dim() > output_dim)
    throw Error("glove dim " + std::to_string(glove->dim()) + " exceeds output dim");
  if (emoji != nullptr && emoji->dim() != output_dim)
    throw Error("emoji table dim " + std::to_string(emoji->dim()) + " differs from output dim");
  if (chars != nullptr && chars->dim() != output_dim)
    throw Error("character table dim " + std::to_string(chars->dim()) + " differs from output dim");
}

std::vector<std::string> utf8_characters(std::string_view word) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < word.size()) {
    const auto c = static_cast<unsigned char>(word[i]);
    std::size_t len = 1;
    if ((c >> 5) == 0x6) len = 2;
    else if ((c >> 4) == 0xe) len = 3;
    else if ((c >> 3) == 0x1e) len = 4;
    len = std::min(len, word.size() - i);
    out.emplace_back(word.substr(i, len));
    i += len;
  }
  return out;
}

Branch branch_for(std::string_view word, const EmbeddingTables& tables) {
  if (tables.glove != nullptr && tables.glove->contains(word)) return Branch::Glove;
  if (tables.emoji != nullptr && tables.emoji->contains(word)) return Branch::Emoji;
  return Branch::Characters;
}

std::vector<double> compose_word_vector(std::string_view word, const EmbeddingTables& tables) {
  std::vector<double> out(tables.output_dim, 0.0);
  switch (branch_for(word, tables)) {
    case Branch::Glove: {
      const auto& v = *tables.glove->find(word);
      std::copy(v.begin(), v.end(), out.begin());
      return out;
    }
    case Branch::Emoji: {
      const auto& v = *tables.emoji->find(word);
      std::copy(v.begin(), v.end(), out.begin());
      return out;
    }
    case Branch::Characters: break;
  }
  const auto chars = utf8_characters(word);
  if (chars.empty() || tables.chars == nullptr) return out;
  // Characters missing from the table add zeros but still count toward n.
  for (const auto& ch : chars) {
    if (const auto* v = tables.chars->find(ch))
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += (*v)[i];
  }
  const double n = static_cast<double>(chars.size());
  for (auto& x : out) x /= n;
  return out;
}

TweetMatrix encode_tweet(const text::NormalizedTweet& tweet, const EmbeddingTables& tables,
                         std::size_t max_len) {
  if (max_len == 0) throw Error("encode_tweet: max_len must be at least 1");
  TweetMatrix m;
  m.max_len = max_len;
  m.dim = tables.output_dim;
  m.length = std::min(tweet.tokens.size(), max_len);
  m.values.assign(max_len * m.dim, 0.0);
  m.mask.assign(max_len, false);
  for (std::size_t t = 0; t < m.length; ++t) {
    const auto v = compose_word_vector(tweet.tokens[t], tables);
    std::copy(v.begin(), v.end(), m.values.begin() + static_cast<std::ptrdiff_t>(t * m.dim));
    m.mask[t] = true;
  }
  return m;
}

}  // namespace mtaffect::embed
