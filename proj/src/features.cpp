#include "mtaffect/features.hpp"

#include <charconv>
#include <iostream>
#include <map>

#include "mtaffect/container.hpp"
#include "mtaffect/error.hpp"

namespace mtaffect::features {

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto p = s.find(sep, start);
    if (p == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, p - start));
    start = p + 1;
  }
}

bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<std::string_view> lines_of(const std::string& text) {
  std::vector<std::string_view> out;
  for (auto line : split(text, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
  }
  return out;
}

std::pair<std::string, std::size_t> parse_header(std::string_view line, const std::filesystem::path& path) {
  const auto cols = split(line, '\t');
  std::size_t k = 0;
  if (cols.size() != 2 || cols[0].empty() ||
      std::from_chars(cols[1].data(), cols[1].data() + cols[1].size(), k).ec != std::errc() || k == 0)
    throw Error(path.string() + " line 1: expected header name<TAB>width");
  return {std::string(cols[0]), k};
}

}  // namespace

ScoredLexicon::ScoredLexicon(std::string name, std::size_t arity) : name_(std::move(name)), arity_(arity) {
  if (arity_ == 0) throw Error("scored lexicon '" + name_ + "': arity must be at least 1");
}

void ScoredLexicon::add(std::string word, std::vector<double> scores) {
  if (scores.size() != arity_)
    throw Error("scored lexicon '" + name_ + "': entry '" + word + "' has wrong arity");
  entries_.insert_or_assign(std::move(word), std::move(scores));
}

const std::vector<double>* ScoredLexicon::find(std::string_view word) const {
  const auto it = entries_.find(std::string(word));
  return it == entries_.end() ? nullptr : &it->second;
}

ScoredLexicon ScoredLexicon::load(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0].empty()) throw Error(path.string() + ": missing header");
  auto [name, k] = parse_header(lines[0], path);
  ScoredLexicon lex(std::move(name), k);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto cols = split(lines[i], '\t');
    if (cols.size() != k + 1 || cols[0].empty())
      throw Error(path.string() + " line " + std::to_string(i + 1) + ": expected word and " +
                  std::to_string(k) + " scores");
    std::vector<double> scores(k);
    for (std::size_t c = 0; c < k; ++c)
      if (!parse_double(cols[c + 1], scores[c]))
        throw Error(path.string() + " line " + std::to_string(i + 1) + ": malformed score");
    lex.add(std::string(cols[0]), std::move(scores));
  }
  return lex;
}

ScoredLexicon build_sentiwordnet_lexicon(const std::filesystem::path& path, std::string name) {
  struct Acc {
    double pos = 0, neg = 0, obj = 0;
    std::size_t n = 0;
  };
  std::map<std::string, Acc> acc;
  const std::string text = read_file(path);
  std::size_t line_no = 0;
  for (auto line : lines_of(text)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto cols = split(line, '\t');
    if (cols.size() < 5) throw Error(path.string() + " line " + std::to_string(line_no) + ": too few columns");
    double pos = 0, neg = 0;
    if (!parse_double(cols[2], pos) || !parse_double(cols[3], neg))
      throw Error(path.string() + " line " + std::to_string(line_no) + ": malformed score");
    for (auto term : split(cols[4], ' ')) {
      if (term.empty()) continue;
      const auto hash = term.rfind('#');
      std::string word(term.substr(0, hash));
      for (auto& ch : word) ch = ch == '_' ? ' ' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      if (word.find(' ') != std::string::npos) continue;  // multiword expressions never match a token
      auto& a = acc[word];
      a.pos += pos;
      a.neg += neg;
      a.obj += 1.0 - pos - neg;
      ++a.n;
    }
  }
  ScoredLexicon lex(std::move(name), 3);
  for (const auto& [word, a] : acc) {
    const double n = static_cast<double>(a.n);
    lex.add(word, {a.pos / n, a.neg / n, a.obj / n});
  }
  return lex;
}

std::vector<double> lexicon_features(const std::vector<std::string>& tokens,
                                     const std::vector<ScoredLexicon>& lexicons) {
  if (lexicons.empty()) throw Error("lexicon_features: no lexicons configured");
  std::size_t width = 0;
  for (const auto& lex : lexicons) width += lex.width();
  std::vector<double> out(width, 0.0);
  std::size_t offset = 0;
  for (const auto& lex : lexicons) {
    for (const auto& tok : tokens) {
      if (const auto* scores = lex.find(tok)) {
        for (std::size_t c = 0; c < lex.arity(); ++c) out[offset + c] += (*scores)[c];
        out[offset + lex.arity()] += 1.0;
      }
    }
    offset += lex.width();
  }
  return out;
}

ExternalFeatureSet::ExternalFeatureSet(std::string name, std::size_t dim) : name_(std::move(name)), dim_(dim) {
  if (dim_ == 0) throw Error("external feature set '" + name_ + "': dim must be positive");
}

void ExternalFeatureSet::add(std::string id, std::vector<double> values) {
  if (values.size() != dim_)
    throw Error("external feature set '" + name_ + "': vector for '" + id + "' has " +
                std::to_string(values.size()) + " values, expected " + std::to_string(dim_));
  if (!vectors_.emplace(id, std::move(values)).second)
    throw Error("external feature set '" + name_ + "': duplicate id '" + id + "'");
}

const std::vector<double>* ExternalFeatureSet::find(std::string_view id) const {
  const auto it = vectors_.find(std::string(id));
  return it == vectors_.end() ? nullptr : &it->second;
}

ExternalFeatureSet ExternalFeatureSet::load(const std::filesystem::path& path, std::size_t expected_dim) {
  const std::string text = read_file(path);
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0].empty()) throw Error(path.string() + ": missing header");
  auto [name, dim] = parse_header(lines[0], path);
  if (dim != expected_dim)
    throw Error(path.string() + ": header declares dim " + std::to_string(dim) + ", expected " +
                std::to_string(expected_dim));
  ExternalFeatureSet set(std::move(name), dim);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto tab = lines[i].find('\t');
    if (tab == std::string_view::npos || tab == 0)
      throw Error(path.string() + " line " + std::to_string(i + 1) + ": expected id<TAB>values");
    std::vector<double> values;
    values.reserve(dim);
    for (auto tok : split(lines[i].substr(tab + 1), ' ')) {
      if (tok.empty()) continue;
      double v = 0;
      if (!parse_double(tok, v))
        throw Error(path.string() + " line " + std::to_string(i + 1) + ": malformed value");
      values.push_back(v);
    }
    try {
      set.add(std::string(lines[i].substr(0, tab)), std::move(values));
    } catch (const Error& e) {
      throw Error(path.string() + " line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return set;
}

std::optional<std::size_t> known_external_dim(std::string_view source) {
  static const std::map<std::string, std::size_t, std::less<>> dims = {
      {"deepmoji_softmax", 64},
      {"deepmoji_attention", 2304},
      {"skipthought", 4800},
      {"sentiment_neuron", 4096},
  };
  const auto it = dims.find(source);
  if (it == dims.end()) return std::nullopt;
  return it->second;
}

nlohmann::json layout_to_json(const Layout& layout) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : layout) j.push_back({{"source", e.source}, {"offset", e.offset}, {"width", e.width}});
  return j;
}

Layout layout_from_json(const nlohmann::json& j) {
  Layout layout;
  for (const auto& e : j)
    layout.push_back({e.at("source").get<std::string>(), e.at("offset").get<std::size_t>(),
                      e.at("width").get<std::size_t>()});
  return layout;
}

FeatureAssembler::FeatureAssembler(std::vector<std::string> sources, std::vector<ScoredLexicon> lexicons,
                                   std::vector<ExternalFeatureSet> externals, bool allow_missing)
    : sources_(std::move(sources)),
      lexicons_(std::move(lexicons)),
      externals_(std::move(externals)),
      allow_missing_(allow_missing) {
  if (sources_.empty()) throw Error("feature config: no sources listed");
  std::size_t offset = 0;
  for (const auto& src : sources_) {
    std::size_t width = 0;
    if (src == kLexiconSource) {
      if (lexicons_.empty()) throw Error("feature config: 'lexicons' listed but no lexicon loaded");
      for (const auto& lex : lexicons_) width += lex.width();
    } else {
      const ExternalFeatureSet* set = nullptr;
      for (const auto& e : externals_)
        if (e.name() == src) set = &e;
      if (set == nullptr) throw Error("feature config: source '" + src + "' not loaded");
      width = set->dim();
    }
    layout_.push_back({src, offset, width});
    offset += width;
  }
}

std::size_t FeatureAssembler::width() const {
  return layout_.empty() ? 0 : layout_.back().offset + layout_.back().width;
}

HandcraftedVector FeatureAssembler::assemble(std::string_view tweet_id, const std::vector<std::string>& tokens) const {
  HandcraftedVector out;
  out.layout = layout_;
  out.values.reserve(width());
  for (const auto& entry : layout_) {
    if (entry.source == kLexiconSource) {
      const auto lex = lexicon_features(tokens, lexicons_);
      out.values.insert(out.values.end(), lex.begin(), lex.end());
      continue;
    }
    const ExternalFeatureSet* set = nullptr;
    for (const auto& e : externals_)
      if (e.name() == entry.source) set = &e;
    if (const auto* v = set->find(tweet_id)) {
      out.values.insert(out.values.end(), v->begin(), v->end());
    } else if (allow_missing_) {
      std::clog << "warning: no '" << entry.source << "' features for tweet " << tweet_id << ", zero-filling\n";
      out.values.insert(out.values.end(), entry.width, 0.0);
      out.missing_sources.push_back(entry.source);
    } else {
      throw Error("features: no '" + entry.source + "' vector for tweet '" + std::string(tweet_id) + "'");
    }
  }
  return out;
}

}  // namespace mtaffect::features
