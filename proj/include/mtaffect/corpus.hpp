#pragma once

// SemEval-2018 Affect-in-Tweets valence data: 7-point ordinal classes,
// real-valued intensities, TSV loading and class histograms.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace mtaffect::corpus {

enum class ValenceClass : int {
  NegV = 0,
  NegM,
  NegS,
  Neu,
  PosS,
  PosM,
  PosV,
};

inline constexpr std::size_t kNumClasses = 7;

inline constexpr std::array<ValenceClass, kNumClasses> kAllClasses = {
    ValenceClass::NegV, ValenceClass::NegM, ValenceClass::NegS, ValenceClass::Neu,
    ValenceClass::PosS, ValenceClass::PosM, ValenceClass::PosV};

// Neg-V -> -3 ... Neu -> 0 ... Pos-V -> +3.
constexpr int class_to_ordinal(ValenceClass c) { return static_cast<int>(c) - 3; }
ValenceClass ordinal_to_class(int ordinal);

// Dense index 0..6 in class order; used for logits and confusion matrices.
constexpr std::size_t class_index(ValenceClass c) { return static_cast<std::size_t>(c); }
ValenceClass class_from_index(std::size_t index);

std::string_view class_name(ValenceClass c);
ValenceClass class_from_name(std::string_view name);

struct LabeledTweet {
  std::string id;
  std::string text;
  std::optional<ValenceClass> valence;
  std::optional<double> intensity;

  bool operator==(const LabeledTweet&) const = default;
};

enum class SplitName { Train, Dev, Test };

std::string_view split_name(SplitName s);

struct DatasetSplit {
  SplitName name = SplitName::Train;
  std::vector<LabeledTweet> examples;

  std::size_t size() const { return examples.size(); }
  const LabeledTweet* find(std::string_view id) const;
};

enum class LabelKind { Classification, Intensity, Both };

// Columns: ID, Tweet, Affect Dimension, Label. With LabelKind::Both a fifth
// column carries the intensity and the fourth the class label.
DatasetSplit load_dataset(const std::filesystem::path& path, LabelKind kind,
                          SplitName name = SplitName::Train);
DatasetSplit parse_dataset(std::string_view text, LabelKind kind,
                           SplitName name = SplitName::Train);

// Joins a classification split with an intensity split on tweet id.
// Every id must appear in both inputs.
DatasetSplit merge_splits(const DatasetSplit& classes, const DatasetSplit& intensities);

// Writes the split in the format load_dataset reads for the given kind.
std::string format_dataset(const DatasetSplit& split, LabelKind kind);
void save_dataset(const std::filesystem::path& path, const DatasetSplit& split, LabelKind kind);

struct ClassHistogram {
  std::array<std::size_t, kNumClasses> counts{};

  std::size_t total() const;
  std::size_t operator[](ValenceClass c) const { return counts[class_index(c)]; }
  nlohmann::json to_json() const;
  bool operator==(const ClassHistogram&) const = default;
};

ClassHistogram histogram(const DatasetSplit& split);

}  // namespace mtaffect::corpus
