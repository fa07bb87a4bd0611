#include "mtaffect/corpus.hpp"

#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "mtaffect/container.hpp"
#include "mtaffect/error.hpp"

namespace mtaffect::corpus {

namespace {

constexpr std::array<std::string_view, kNumClasses> kNames = {"Neg-V", "Neg-M", "Neg-S", "Neu",
                                                              "Pos-S", "Pos-M", "Pos-V"};

constexpr std::array<std::string_view, kNumClasses> kDescriptions = {
    "very negative emotional state can be inferred",
    "moderately negative emotional state can be inferred",
    "slightly negative emotional state can be inferred",
    "neutral or mixed emotional state can be inferred",
    "slightly positive emotional state can be inferred",
    "moderately positive emotional state can be inferred",
    "very positive emotional state can be inferred"};

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw Error("dataset line " + std::to_string(line_no) + ": " + what);
}

ValenceClass parse_class_label(std::string_view field, std::size_t line_no) {
  field = trim(field);
  const auto colon = field.find(':');
  const std::string_view head = trim(colon == std::string_view::npos ? field : field.substr(0, colon));
  int value = 0;
  const auto* end = head.data() + head.size();
  const auto res = std::from_chars(head.data(), end, value);
  if (head.empty() || res.ec != std::errc() || res.ptr != end)
    fail(line_no, "class label '" + std::string(field) + "' does not start with an integer");
  if (value < -3 || value > 3)
    fail(line_no, "class " + std::to_string(value) + " outside -3..3");
  return ordinal_to_class(value);
}

double parse_intensity(std::string_view field, std::size_t line_no) {
  field = trim(field);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto res = std::from_chars(field.data(), end, value);
  if (field.empty() || res.ec != std::errc() || res.ptr != end)
    fail(line_no, "intensity '" + std::string(field) + "' is not a decimal number");
  if (!(value >= 0.0 && value <= 1.0))
    fail(line_no, "intensity " + std::string(field) + " outside [0,1]");
  return value;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

ValenceClass ordinal_to_class(int ordinal) {
  if (ordinal < -3 || ordinal > 3) throw Error("ordinal " + std::to_string(ordinal) + " outside -3..3");
  return static_cast<ValenceClass>(ordinal + 3);
}

ValenceClass class_from_index(std::size_t index) {
  if (index >= kNumClasses) throw Error("class index " + std::to_string(index) + " outside 0..6");
  return static_cast<ValenceClass>(index);
}

std::string_view class_name(ValenceClass c) { return kNames[class_index(c)]; }

ValenceClass class_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kNumClasses; ++i)
    if (kNames[i] == name) return class_from_index(i);
  throw Error("unknown valence class '" + std::string(name) + "'");
}

std::string_view split_name(SplitName s) {
  switch (s) {
    case SplitName::Train: return "train";
    case SplitName::Dev: return "dev";
    case SplitName::Test: return "test";
  }
  return "train";
}

const LabeledTweet* DatasetSplit::find(std::string_view id) const {
  for (const auto& ex : examples)
    if (ex.id == id) return &ex;
  return nullptr;
}

DatasetSplit parse_dataset(std::string_view text, LabelKind kind, SplitName name) {
  DatasetSplit split;
  split.name = name;
  std::set<std::string, std::less<>> seen;

  const std::size_t expected_cols = kind == LabelKind::Both ? 5 : 4;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;

    const auto cols = split_tabs(line);
    if (cols.size() != expected_cols)
      fail(line_no, "expected " + std::to_string(expected_cols) + " tab-separated columns, found " +
                        std::to_string(cols.size()));

    LabeledTweet ex;
    ex.id = std::string(trim(cols[0]));
    ex.text = std::string(cols[1]);
    if (ex.id.empty()) fail(line_no, "empty id");
    if (ex.text.empty() || ex.text == "NONE") fail(line_no, "tweet text missing");
    if (trim(cols[3]).empty()) fail(line_no, "label missing");

    switch (kind) {
      case LabelKind::Classification: ex.valence = parse_class_label(cols[3], line_no); break;
      case LabelKind::Intensity: ex.intensity = parse_intensity(cols[3], line_no); break;
      case LabelKind::Both:
        ex.valence = parse_class_label(cols[3], line_no);
        if (trim(cols[4]).empty()) fail(line_no, "intensity missing");
        ex.intensity = parse_intensity(cols[4], line_no);
        break;
    }
    if (!seen.insert(ex.id).second) fail(line_no, "duplicate id '" + ex.id + "'");
    split.examples.push_back(std::move(ex));
  }
  if (!header_seen) throw Error("dataset: missing header row");
  return split;
}

DatasetSplit load_dataset(const std::filesystem::path& path, LabelKind kind, SplitName name) {
  try {
    return parse_dataset(read_file(path), kind, name);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

DatasetSplit merge_splits(const DatasetSplit& classes, const DatasetSplit& intensities) {
  DatasetSplit out;
  out.name = classes.name;
  std::vector<std::string> missing;
  for (const auto& ex : classes.examples) {
    const LabeledTweet* other = intensities.find(ex.id);
    if (other == nullptr || !other->intensity) {
      missing.push_back(ex.id);
      continue;
    }
    LabeledTweet merged = ex;
    merged.intensity = other->intensity;
    out.examples.push_back(std::move(merged));
  }
  if (classes.size() != intensities.size() && missing.empty())
    throw Error("merge_splits: intensity split has ids absent from the classification split");
  if (!missing.empty()) {
    std::string msg = "merge_splits: ids without intensity:";
    for (const auto& id : missing) msg += " " + id;
    throw Error(msg);
  }
  return out;
}

std::string format_dataset(const DatasetSplit& split, LabelKind kind) {
  std::ostringstream out;
  out << "ID\tTweet\tAffect Dimension\t"
      << (kind == LabelKind::Intensity ? "Intensity Score" : "Intensity Class");
  if (kind == LabelKind::Both) out << "\tIntensity Score";
  out << '\n';
  for (const auto& ex : split.examples) {
    if (ex.text.find_first_of("\t\n") != std::string::npos)
      throw Error("format_dataset: tweet '" + ex.id + "' contains a tab or newline");
    out << ex.id << '\t' << ex.text << "\tvalence\t";
    const bool needs_class = kind != LabelKind::Intensity;
    const bool needs_intensity = kind != LabelKind::Classification;
    if ((needs_class && !ex.valence) || (needs_intensity && !ex.intensity))
      throw Error("format_dataset: tweet '" + ex.id + "' lacks a label required by the format");
    if (needs_class) {
      const auto c = *ex.valence;
      out << class_to_ordinal(c) << ": " << kDescriptions[class_index(c)];
      if (needs_intensity) out << '\t';
    }
    if (needs_intensity) out << format_double(*ex.intensity);
    out << '\n';
  }
  return out.str();
}

void save_dataset(const std::filesystem::path& path, const DatasetSplit& split, LabelKind kind) {
  write_file(path, format_dataset(split, kind));
}

std::size_t ClassHistogram::total() const {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

nlohmann::json ClassHistogram::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (auto c : kAllClasses) j[std::string(class_name(c))] = counts[class_index(c)];
  return j;
}

ClassHistogram histogram(const DatasetSplit& split) {
  ClassHistogram h;
  std::vector<std::string> unlabeled;
  for (const auto& ex : split.examples) {
    if (!ex.valence) {
      unlabeled.push_back(ex.id);
      continue;
    }
    ++h.counts[class_index(*ex.valence)];
  }
  if (!unlabeled.empty()) {
    std::string msg = "histogram: examples without valence:";
    for (const auto& id : unlabeled) msg += " " + id;
    throw Error(msg);
  }
  return h;
}

}  // namespace mtaffect::corpus
