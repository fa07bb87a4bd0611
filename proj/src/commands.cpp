#include "mtaffect/commands.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

#include "mtaffect/container.hpp"
#include "mtaffect/error.hpp"
#include "mtaffect/shallow.hpp"

namespace mtaffect::cli {

namespace {

using corpus::LabelKind;
using corpus::SplitName;

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool parse_num(std::string_view s, double& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return !s.empty() && res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::vector<std::string_view> split_on(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string_view> lines_of(std::string_view text) {
  auto lines = split_on(text, '\n');
  for (auto& l : lines)
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file(path, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::vector<double> labels_or_nan(const std::vector<model::EncodedExample>& xs, bool valence) {
  std::vector<double> out;
  for (const auto& ex : xs) {
    if (valence) out.push_back(ex.valence ? corpus::class_to_ordinal(*ex.valence) : std::nan(""));
    else out.push_back(ex.intensity ? *ex.intensity : std::nan(""));
  }
  return out;
}

std::string split_label(SplitName s) { return std::string(corpus::split_name(s)); }

struct LabeledRows {
  shallow::Matrix x;
  std::vector<const corpus::LabeledTweet*> tweets;
};

LabeledRows align(const Representations& r, const corpus::DatasetSplit& labels, const fs::path& repr_path) {
  std::map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < r.ids.size(); ++i) index[r.ids[i]] = i;
  LabeledRows out;
  std::vector<std::string> missing;
  for (const auto& ex : labels.examples) {
    const auto it = index.find(ex.id);
    if (it == index.end()) {
      missing.push_back(ex.id);
      continue;
    }
    out.x.push_back(r.rows[it->second]);
    out.tweets.push_back(&ex);
  }
  if (!missing.empty()) {
    std::string msg = repr_path.string() + " lacks representations for " + std::to_string(missing.size()) + " tweet(s):";
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i];
    throw Error(msg);
  }
  return out;
}

}  // namespace

LabelKind label_kind_from_name(const std::string& name) {
  if (name == "class" || name == "classification") return LabelKind::Classification;
  if (name == "intensity") return LabelKind::Intensity;
  if (name == "both") return LabelKind::Both;
  throw Error("unknown label kind '" + name + "' (expected class, intensity or both)");
}

embed::EmbeddingTables Resources::tables(std::size_t output_dim) const {
  embed::EmbeddingTables t;
  t.glove = glove ? &*glove : nullptr;
  t.emoji = emoji_vectors ? &*emoji_vectors : nullptr;
  t.chars = char_vectors ? &*char_vectors : nullptr;
  t.output_dim = output_dim;
  t.validate();
  return t;
}

Resources load_resources(const RunConfig& config) {
  Resources r;
  if (!config.freq.empty()) r.freq = text::FrequencyLexicon::load(config.freq);
  if (!config.emoji_lexicon.empty()) r.emoji = text::EmojiLexicon::load(config.emoji_lexicon);
  const auto& m = config.model;
  if (!config.glove.empty()) r.glove = embed::EmbeddingTable::load(config.glove, m.glove_dim, "glove");
  if (!config.emoji_vectors.empty())
    r.emoji_vectors = embed::EmbeddingTable::load(config.emoji_vectors, m.embed_dim, "emoji");
  if (!config.char_vectors.empty())
    r.char_vectors = embed::EmbeddingTable::load(config.char_vectors, m.embed_dim, "characters");
  for (const auto& p : config.lexicons) r.lexicons.push_back(features::ScoredLexicon::load(p));
  for (const auto& source : m.feature_config) {
    if (source == features::kLexiconSource) continue;
    const auto it = config.external_features.find(source);
    if (it == config.external_features.end()) throw Error("feature source '" + source + "' has no file");
    const auto known = features::known_external_dim(source);
    std::size_t dim = 0;
    if (known) {
      dim = *known;
    } else {
      const std::string text = read_file(it->second);
      const auto header = lines_of(text);
      const auto fields = header.empty() ? std::vector<std::string_view>{} : split_on(header[0], '\t');
      double d = 0;
      if (fields.size() != 2 || !parse_num(fields[1], d))
        throw Error(it->second.string() + ": missing 'name<TAB>dim' header");
      dim = static_cast<std::size_t>(d);
    }
    auto set = features::ExternalFeatureSet::load(it->second, dim);
    set.set_name(source);
    r.externals.push_back(std::move(set));
  }
  return r;
}

corpus::DatasetSplit load_split(const SplitFiles& files, SplitName name) {
  if (!files.both.empty()) return corpus::load_dataset(files.both, LabelKind::Both, name);
  if (!files.classification.empty() && !files.intensity.empty()) {
    auto merged = corpus::merge_splits(corpus::load_dataset(files.classification, LabelKind::Classification, name),
                                       corpus::load_dataset(files.intensity, LabelKind::Intensity, name));
    merged.name = name;
    return merged;
  }
  if (!files.classification.empty()) return corpus::load_dataset(files.classification, LabelKind::Classification, name);
  if (!files.intensity.empty()) return corpus::load_dataset(files.intensity, LabelKind::Intensity, name);
  throw Error(split_label(name) + " split has no files configured");
}

EncodedSplit encode_split(const corpus::DatasetSplit& split, const RunConfig& config, const Resources& resources) {
  const auto tables = resources.tables(config.model.embed_dim);
  std::optional<features::FeatureAssembler> assembler;
  if (!config.model.feature_config.empty())
    assembler.emplace(config.model.feature_config, resources.lexicons, resources.externals,
                      config.allow_missing_features);
  EncodedSplit out;
  out.split = split_label(split.name);
  if (assembler) out.layout = assembler->layout();
  out.examples.reserve(split.size());
  for (const auto& tweet : split.examples) {
    text::NormalizedTweet nt;
    if (config.normalize)
      nt = text::normalize(tweet.text, resources.freq, resources.emoji, config.normalize_options, tweet.id);
    else
      nt = {whitespace_tokens(tweet.text), tweet.id};
    model::EncodedExample ex;
    ex.id = tweet.id;
    ex.matrix = embed::encode_tweet(nt, tables, config.model.max_len);
    if (assembler) ex.features = assembler->assemble(tweet.id, nt.tokens).values;
    ex.valence = tweet.valence;
    ex.intensity = tweet.intensity;
    out.examples.push_back(std::move(ex));
  }
  return out;
}

Container encoded_to_container(const EncodedSplit& encoded) {
  Container c;
  const auto& xs = encoded.examples;
  const std::size_t n = xs.size();
  const std::size_t max_len = n ? xs[0].matrix.max_len : 0, dim = n ? xs[0].matrix.dim : 0;
  const std::size_t f = n ? xs[0].features.size() : 0;
  std::vector<std::string> ids;
  std::vector<double> rows, lengths, feats;
  std::size_t total = 0;
  for (const auto& ex : xs) {
    ids.push_back(ex.id);
    lengths.push_back(static_cast<double>(ex.matrix.length));
    rows.insert(rows.end(), ex.matrix.values.begin(),
                ex.matrix.values.begin() + static_cast<std::ptrdiff_t>(ex.matrix.length * dim));
    total += ex.matrix.length;
    feats.insert(feats.end(), ex.features.begin(), ex.features.end());
  }
  c.meta = {{"format", "mtaffect-encoded"}, {"version", 1},  {"split", encoded.split},
            {"ids", ids},                   {"max_len", max_len}, {"dim", dim},
            {"feature_dim", f},             {"layout", features::layout_to_json(encoded.layout)}};
  c.arrays.push_back({"rows", {total, dim}, std::move(rows)});
  c.arrays.push_back({"lengths", {n}, std::move(lengths)});
  c.arrays.push_back({"features", {n, f}, std::move(feats)});
  c.arrays.push_back({"valence", {n}, labels_or_nan(xs, true)});
  c.arrays.push_back({"intensity", {n}, labels_or_nan(xs, false)});
  return c;
}

EncodedSplit encoded_from_container(const Container& c) {
  if (c.meta.value("format", std::string()) != "mtaffect-encoded") throw Error("container is not an encoded split");
  EncodedSplit out;
  out.split = c.meta.at("split").get<std::string>();
  out.layout = features::layout_from_json(c.meta.at("layout"));
  const auto ids = c.meta.at("ids").get<std::vector<std::string>>();
  const auto max_len = c.meta.at("max_len").get<std::size_t>();
  const auto dim = c.meta.at("dim").get<std::size_t>();
  const auto f = c.meta.at("feature_dim").get<std::size_t>();
  const auto& rows = c.array("rows").data;
  const auto& lengths = c.array("lengths").data;
  const auto& feats = c.array("features").data;
  const auto& val = c.array("valence").data;
  const auto& inten = c.array("intensity").data;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    model::EncodedExample ex;
    ex.id = ids[i];
    ex.matrix.max_len = max_len;
    ex.matrix.dim = dim;
    ex.matrix.length = static_cast<std::size_t>(lengths[i]);
    ex.matrix.values.assign(max_len * dim, 0.0);
    ex.matrix.mask.assign(max_len, false);
    const std::size_t len = ex.matrix.length;
    if ((offset + len) * dim > rows.size()) throw Error("encoded split rows are truncated");
    std::copy(rows.begin() + static_cast<std::ptrdiff_t>(offset * dim),
              rows.begin() + static_cast<std::ptrdiff_t>((offset + len) * dim), ex.matrix.values.begin());
    for (std::size_t t = 0; t < len; ++t) ex.matrix.mask[t] = true;
    offset += len;
    ex.features.assign(feats.begin() + static_cast<std::ptrdiff_t>(i * f),
                       feats.begin() + static_cast<std::ptrdiff_t>((i + 1) * f));
    if (!std::isnan(val[i])) ex.valence = corpus::ordinal_to_class(static_cast<int>(val[i]));
    if (!std::isnan(inten[i])) ex.intensity = inten[i];
    out.examples.push_back(std::move(ex));
  }
  return out;
}

void write_predictions(const fs::path& path, const std::vector<eval::RunPrediction>& preds) {
  std::string out = "id\tvalence\tintensity\n";
  for (const auto& p : preds) {
    out += p.id + "\t";
    if (p.valence) out += std::to_string(corpus::class_to_ordinal(*p.valence));
    out += "\t";
    if (p.intensity) out += num(*p.intensity);
    out += "\n";
  }
  write_file(path, out);
}

std::vector<eval::RunPrediction> read_predictions(const fs::path& path) {
  const std::string text = read_file(path);
  const auto lines = lines_of(text);
  if (lines.empty()) throw Error(path.string() + ": missing header");
  std::vector<eval::RunPrediction> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto fields = split_on(lines[i], '\t');
    const std::string where = path.string() + " line " + std::to_string(i + 1);
    if (fields.size() != 3) throw Error(where + ": expected id, valence, intensity");
    eval::RunPrediction p;
    p.id = std::string(fields[0]);
    double v = 0;
    if (!fields[1].empty()) {
      if (!parse_num(fields[1], v) || v != std::floor(v) || v < -3 || v > 3)
        throw Error(where + ": valence must be an integer in -3..3");
      p.valence = corpus::ordinal_to_class(static_cast<int>(v));
    }
    if (!fields[2].empty()) {
      if (!parse_num(fields[2], v)) throw Error(where + ": intensity is not a number");
      p.intensity = v;
    }
    out.push_back(std::move(p));
  }
  return out;
}

void write_representations(const fs::path& path, const Representations& r) {
  const std::size_t width = r.rows.empty() ? 0 : r.rows[0].size();
  std::string out = r.name + "\t" + std::to_string(width) + "\n";
  for (std::size_t i = 0; i < r.ids.size(); ++i) {
    out += r.ids[i] + "\t";
    for (std::size_t j = 0; j < r.rows[i].size(); ++j) {
      if (j) out += ' ';
      out += num(r.rows[i][j]);
    }
    out += "\n";
  }
  write_file(path, out);
}

Representations read_representations(const fs::path& path) {
  const std::string text = read_file(path);
  const auto lines = lines_of(text);
  if (lines.empty()) throw Error(path.string() + ": missing header");
  const auto header = split_on(lines[0], '\t');
  double width = 0;
  if (header.size() != 2 || !parse_num(header[1], width))
    throw Error(path.string() + ": header must be name<TAB>width");
  Representations r;
  r.name = std::string(header[0]);
  const auto w = static_cast<std::size_t>(width);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::string where = path.string() + " line " + std::to_string(i + 1);
    const auto tab = lines[i].find('\t');
    if (tab == std::string_view::npos) throw Error(where + ": expected id<TAB>values");
    std::vector<double> row;
    for (auto tok : split_on(lines[i].substr(tab + 1), ' ')) {
      if (tok.empty()) continue;
      double v = 0;
      if (!parse_num(tok, v)) throw Error(where + ": malformed value");
      row.push_back(v);
    }
    if (row.size() != w)
      throw Error(where + ": width " + std::to_string(row.size()) + " differs from header width " + std::to_string(w));
    r.ids.emplace_back(lines[i].substr(0, tab));
    r.rows.push_back(std::move(row));
  }
  return r;
}

void write_report(const fs::path& dir, const std::string& stem, const eval::EvalReport& report,
                  const std::string& config_hash) {
  auto j = report.to_json();
  j["config_hash"] = config_hash;
  write_json(dir / (stem + ".json"), j);
  if (report.confusion) {
    write_file(dir / (stem + "_confusion.csv"), eval::confusion_csv(*report.confusion));
    write_file(dir / (stem + "_confusion.svg"), eval::confusion_svg(*report.confusion, stem));
  }
}

void cmd_normalize(const fs::path& in, const fs::path& out, const fs::path& freq_path, const fs::path& emoji_path,
                   LabelKind kind, const text::NormalizeOptions& options) {
  if (!fs::is_regular_file(freq_path)) throw Error("frequency lexicon not found: " + freq_path.string());
  if (!emoji_path.empty() && !fs::is_regular_file(emoji_path))
    throw Error("emoji lexicon not found: " + emoji_path.string());
  const auto freq = text::FrequencyLexicon::load(freq_path);
  const auto emoji = emoji_path.empty() ? text::EmojiLexicon() : text::EmojiLexicon::load(emoji_path);
  auto split = corpus::load_dataset(in, kind);
  for (auto& tweet : split.examples) {
    auto normalized = text::normalize(tweet.text, freq, emoji, options, tweet.id).joined();
    // The file format cannot hold an empty tweet, so such rows keep their raw text.
    if (normalized.empty())
      std::clog << "warning: tweet " << tweet.id << " normalizes to nothing; keeping the raw text\n";
    else
      tweet.text = std::move(normalized);
  }
  corpus::save_dataset(out, split, kind);
}

void cmd_encode(const RunConfig& config, SplitName split, const fs::path& out) {
  config.validate();
  const auto resources = load_resources(config);
  const SplitFiles& files = split == SplitName::Train ? config.train : split == SplitName::Dev ? config.dev : config.test;
  auto c = encoded_to_container(encode_split(load_split(files, split), config, resources));
  c.meta["experiment_hash"] = config.experiment_hash();
  save_container(out, c);
}

namespace {

std::vector<eval::RunPrediction> to_run_predictions(const std::vector<model::EncodedExample>& xs,
                                                    const std::vector<model::Prediction>& preds) {
  std::vector<eval::RunPrediction> out;
  for (std::size_t i = 0; i < xs.size(); ++i) out.push_back({xs[i].id, preds[i].valence, preds[i].intensity});
  return out;
}

std::size_t layout_width(const features::Layout& layout) {
  std::size_t w = 0;
  for (const auto& e : layout) w += e.width;
  return w;
}

}  // namespace

fs::path cmd_train(const RunConfig& base, const TrainRequest& request) {
  RunConfig config = base;
  if (request.mode) config.model.task_mode = *request.mode;
  if (request.seed) config.model.seed = *request.seed;
  config.validate();
  const auto mode = config.model.task_mode;
  const auto seed = config.model.seed;

  const auto resources = load_resources(config);
  const auto train_split = load_split(config.train, SplitName::Train);
  const auto dev_split = load_split(config.dev, SplitName::Dev);
  std::optional<corpus::DatasetSplit> test_split;
  if (!config.test.empty()) test_split = load_split(config.test, SplitName::Test);

  const auto train_enc = encode_split(train_split, config, resources);
  const auto dev_enc = encode_split(dev_split, config, resources);
  std::optional<EncodedSplit> test_enc;
  if (test_split) test_enc = encode_split(*test_split, config, resources);

  config.model.feature_dim = layout_width(train_enc.layout);
  const auto hash = model::config_hash(config.model);
  const auto exp_hash = config.experiment_hash();

  const fs::path dir =
      request.out.empty() ? config.output_dir / (model::task_mode_name(mode) + "-seed" + std::to_string(seed))
                          : request.out;
  fs::create_directories(dir);

  model::Model net(config.model);
  model::TrainOptions options;
  options.verbose = request.verbose;
  const auto ckpt = model::train(net, train_enc.examples, dev_enc.examples, options);
  model::save_checkpoint(dir / "checkpoint.bin", ckpt);
  write_json(dir / "history.json", model::history_to_json(ckpt.history));

  const bool has_class = config.model.has_class_head(), has_intensity = config.model.has_intensity_head();
  auto report_split = [&](const EncodedSplit& enc, const corpus::DatasetSplit& gold, const std::string& prefix) {
    const auto preds = to_run_predictions(enc.examples, net.predict(enc.examples));
    write_predictions(dir / (prefix + "_predictions.tsv"), preds);
    std::map<std::string, double> out;
    if (has_class) {
      const auto r = eval::evaluate_run(preds, gold, eval::Task::Classification);
      write_report(dir, prefix + "_class", r, hash);
      out["class"] = r.pearson;
    }
    if (has_intensity) {
      const auto r = eval::evaluate_run(preds, gold, eval::Task::Intensity);
      write_report(dir, prefix + "_intensity", r, hash);
      out["intensity"] = r.pearson;
    }
    return out;
  };
  const auto dev_scores = report_split(dev_enc, dev_split, "dev");
  const auto& eval_enc = test_enc ? *test_enc : dev_enc;
  const auto& eval_gold = test_split ? *test_split : dev_split;
  const std::string eval_name = test_enc ? "test" : "dev";
  const auto dl = test_enc ? report_split(*test_enc, *test_split, "test") : dev_scores;

  nlohmann::json scores = nlohmann::json::object();
  if (dl.count("class")) scores["dl_class"] = dl.at("class");
  if (dl.count("intensity")) scores["dl_intensity"] = dl.at("intensity");

  if (request.shallow) {
    const auto x_train = net.extract_representations(train_enc.examples);
    const auto x_eval = net.extract_representations(eval_enc.examples);
    auto opts = config.shallow;
    opts.seed = seed;
    if (has_class) {
      std::vector<corpus::ValenceClass> y;
      for (const auto& ex : train_enc.examples) y.push_back(*ex.valence);
      const auto svm = shallow::train_svm(x_train, y, opts);
      shallow::save_svm(dir / "svm.bin", svm);
      const auto pred = shallow::predict_svm(svm, x_eval);
      std::vector<eval::RunPrediction> preds;
      for (std::size_t i = 0; i < pred.size(); ++i) preds.push_back({eval_enc.examples[i].id, pred[i], std::nullopt});
      const auto r = eval::evaluate_run(preds, eval_gold, eval::Task::Classification);
      write_report(dir, eval_name + "_svm", r, hash);
      scores["ml_class"] = r.pearson;
    }
    if (has_intensity) {
      std::vector<double> y;
      for (const auto& ex : train_enc.examples) y.push_back(*ex.intensity);
      const auto svr = shallow::train_svr(x_train, y, opts);
      shallow::save_svr(dir / "svr.bin", svr);
      const auto pred = shallow::predict_svr(svr, x_eval);
      std::vector<eval::RunPrediction> preds;
      for (std::size_t i = 0; i < pred.size(); ++i) preds.push_back({eval_enc.examples[i].id, std::nullopt, pred[i]});
      const auto r = eval::evaluate_run(preds, eval_gold, eval::Task::Intensity);
      write_report(dir, eval_name + "_svr", r, hash);
      scores["ml_intensity"] = r.pearson;
    }
  }

  write_json(dir / "scores.json", {{"seed", seed},
                                   {"mode", model::task_mode_name(mode)},
                                   {"config_hash", hash},
                                   {"experiment_hash", exp_hash},
                                   {"eval_split", eval_name},
                                   {"best_epoch", ckpt.best_epoch},
                                   {"scores", scores}});
  write_json(dir / "run.json", {{"config", config.to_json()}, {"config_hash", hash}, {"experiment_hash", exp_hash}});
  return dir;
}

void cmd_repr(const RunConfig& base, const fs::path& checkpoint, SplitName split, const fs::path& out) {
  const auto ckpt = model::load_checkpoint(checkpoint);
  RunConfig config = base;
  config.model = ckpt.config;
  config.validate();
  const auto net = model::model_from_checkpoint(ckpt);
  const auto resources = load_resources(config);
  const SplitFiles& files = split == SplitName::Train ? config.train : split == SplitName::Dev ? config.dev : config.test;
  const auto enc = encode_split(load_split(files, split), config, resources);
  const auto width = layout_width(enc.layout);
  if (width != ckpt.config.feature_dim)
    throw Error("feature width " + std::to_string(width) + " does not match checkpoint feature width " +
                std::to_string(ckpt.config.feature_dim));
  Representations r;
  r.name = "repr-" + model::config_hash(ckpt.config);
  for (const auto& ex : enc.examples) r.ids.push_back(ex.id);
  r.rows = net.extract_representations(enc.examples);
  write_representations(out, r);
}

ShallowHead shallow_head_from_name(const std::string& name) {
  if (name == "svm") return ShallowHead::Svm;
  if (name == "svr") return ShallowHead::Svr;
  throw Error("unknown shallow head '" + name + "' (expected svm or svr)");
}

eval::EvalReport cmd_shallow(const fs::path& train_repr, const fs::path& train_labels, const fs::path& eval_repr,
                             const fs::path& eval_labels, LabelKind kind, ShallowHead head,
                             const shallow::ShallowOptions& options, const fs::path& out_dir) {
  const auto r_train = read_representations(train_repr);
  const auto r_eval = read_representations(eval_repr);
  const std::size_t w_train = r_train.rows.empty() ? 0 : r_train.rows[0].size();
  const std::size_t w_eval = r_eval.rows.empty() ? 0 : r_eval.rows[0].size();
  if (w_train != w_eval)
    throw Error("representation width mismatch: " + train_repr.string() + " has " + std::to_string(w_train) + ", " +
                eval_repr.string() + " has " + std::to_string(w_eval));
  const auto train_gold = corpus::load_dataset(train_labels, kind, SplitName::Train);
  const auto train = align(r_train, train_gold, train_repr);
  const auto gold = corpus::load_dataset(eval_labels, kind, SplitName::Test);
  const auto test = align(r_eval, gold, eval_repr);
  fs::create_directories(out_dir);
  const auto hash = hash_json({{"train", r_train.name},
                               {"eval", r_eval.name},
                               {"C", options.C},
                               {"epsilon", options.epsilon},
                               {"epochs", options.epochs},
                               {"seed", options.seed},
                               {"standardize", options.standardize}});

  std::vector<eval::RunPrediction> preds;
  eval::EvalReport report;
  if (head == ShallowHead::Svm) {
    std::vector<corpus::ValenceClass> y;
    for (const auto* t : train.tweets) {
      if (!t->valence) throw Error("training tweet '" + t->id + "' has no valence class for the svm head");
      y.push_back(*t->valence);
    }
    const auto model = shallow::train_svm(train.x, y, options);
    shallow::save_svm(out_dir / "svm.bin", model);
    const auto pred = shallow::predict_svm(model, test.x);
    for (std::size_t i = 0; i < pred.size(); ++i) preds.push_back({test.tweets[i]->id, pred[i], std::nullopt});
    report = eval::evaluate_run(preds, gold, eval::Task::Classification);
  } else {
    std::vector<double> y;
    for (const auto* t : train.tweets) {
      if (!t->intensity) throw Error("training tweet '" + t->id + "' has no intensity for the svr head");
      y.push_back(*t->intensity);
    }
    const auto model = shallow::train_svr(train.x, y, options);
    shallow::save_svr(out_dir / "svr.bin", model);
    const auto pred = shallow::predict_svr(model, test.x);
    for (std::size_t i = 0; i < pred.size(); ++i) preds.push_back({test.tweets[i]->id, std::nullopt, pred[i]});
    report = eval::evaluate_run(preds, gold, eval::Task::Intensity);
  }
  write_predictions(out_dir / "predictions.tsv", preds);
  write_report(out_dir, "report", report, hash);
  return report;
}

eval::EvalReport cmd_eval(const fs::path& predictions, const fs::path& gold_path, LabelKind kind, eval::Task task,
                          const fs::path& out_dir) {
  const auto preds = read_predictions(predictions);
  const auto gold = corpus::load_dataset(gold_path, kind, SplitName::Test);
  const auto report = eval::evaluate_run(preds, gold, task);
  fs::create_directories(out_dir);
  write_report(out_dir, "report", report, hash_json({{"predictions", read_file(predictions)}}));
  return report;
}

nlohmann::json Comparison::to_json() const {
  nlohmann::json cells_json = nlohmann::json::object();
  for (const auto& c : cells) {
    nlohmann::json j = {{"stl_mean", c.stl_mean ? nlohmann::json(*c.stl_mean) : nlohmann::json(nullptr)},
                        {"mtl_mean", c.mtl_mean ? nlohmann::json(*c.mtl_mean) : nlohmann::json(nullptr)}};
    if (c.ttest) {
      j["t"] = c.ttest->t;
      j["p"] = c.ttest->p;
      j["dof"] = c.ttest->dof;
      j["mean_diff"] = c.ttest->mean_diff;
      j["defined"] = c.ttest->defined;
    } else {
      j["p"] = nullptr;
    }
    cells_json[c.cell] = j;
  }
  return {{"seeds", seeds}, {"cells", cells_json}};
}

std::string Comparison::to_markdown() const {
  auto fmt = [](const std::optional<double>& v, const char* spec) -> std::string {
    if (!v) return "-";
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, *v);
    return buf;
  };
  std::string out = "| Model | DL (Softmax) class | DL (Sigmoid) intensity | ML (SVM) class | ML (SVR) intensity |\n";
  out += "|---|---|---|---|---|\n";
  out += "| STL |";
  for (const auto& c : cells) out += " " + fmt(c.stl_mean, "%.3f") + " |";
  out += "\n| MTL |";
  for (const auto& c : cells) out += " " + fmt(c.mtl_mean, "%.3f") + " |";
  out += "\n| p-value |";
  for (const auto& c : cells) {
    if (!c.ttest) out += " - |";
    else if (!c.ttest->defined) out += " undefined |";
    else out += " " + fmt(c.ttest->p, "%.4g") + " |";
  }
  out += "\n";
  return out;
}

Comparison cmd_compare(const std::vector<fs::path>& mtl_runs, const std::vector<fs::path>& stl_runs,
                       const fs::path& out_dir, bool force) {
  using ArmScores = std::map<std::uint64_t, std::map<std::string, double>>;
  std::set<std::string> exp_hashes;
  auto collect = [&](const std::vector<fs::path>& runs, const std::string& arm) {
    ArmScores out;
    for (const auto& dir : runs) {
      const auto j = read_json(dir / "scores.json");
      exp_hashes.insert(j.at("experiment_hash").get<std::string>());
      const auto seed = j.at("seed").get<std::uint64_t>();
      for (const auto& [cell, value] : j.at("scores").items()) {
        if (out[seed].count(cell))
          throw Error(arm + " arm has two runs reporting " + cell + " for seed " + std::to_string(seed));
        out[seed][cell] = value.get<double>();
      }
      out[seed];
    }
    return out;
  };
  const auto mtl = collect(mtl_runs, "MTL");
  const auto stl = collect(stl_runs, "STL");
  if (exp_hashes.size() > 1 && !force)
    throw Error("runs come from " + std::to_string(exp_hashes.size()) +
                " different experiment configurations; pass --force to compare anyway");

  std::vector<std::uint64_t> mtl_seeds, stl_seeds;
  for (const auto& [s, _] : mtl) mtl_seeds.push_back(s);
  for (const auto& [s, _] : stl) stl_seeds.push_back(s);
  if (mtl_seeds != stl_seeds) throw Error("MTL and STL arms cover different seed sets");
  if (mtl_seeds.size() < 2) throw Error("comparison needs at least two seeds per arm");

  Comparison result;
  result.seeds = mtl_seeds;
  for (std::size_t k = 0; k < kScoreCells.size(); ++k) {
    auto& c = result.cells[k];
    c.cell = kScoreCells[k];
    auto gather = [&](const ArmScores& arm) -> std::optional<std::vector<double>> {
      std::vector<double> v;
      for (const auto& [seed, cells] : arm) {
        const auto it = cells.find(c.cell);
        if (it == cells.end()) return std::nullopt;
        v.push_back(it->second);
      }
      return v;
    };
    const auto a = gather(mtl), b = gather(stl);
    auto mean = [](const std::vector<double>& v) {
      double s = 0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    if (a) c.mtl_mean = mean(*a);
    if (b) c.stl_mean = mean(*b);
    if (a && b) c.ttest = eval::paired_ttest(*a, *b);
  }
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    auto j = result.to_json();
    j["experiment_hashes"] = std::vector<std::string>(exp_hashes.begin(), exp_hashes.end());
    write_json(out_dir / "comparison.json", j);
    write_file(out_dir / "comparison.md", result.to_markdown());
  }
  return result;
}

}  // namespace mtaffect::cli
