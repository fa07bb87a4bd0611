#include <doctest.h>

#include "mtaffect/corpus.hpp"
#include "mtaffect/error.hpp"
#include "support.hpp"

using namespace mtaffect;
using namespace mtaffect::corpus;

namespace {
const std::string kClassHeader = "ID\tTweet\tAffect Dimension\tIntensity Class\n";
const std::string kIntensityHeader = "ID\tTweet\tAffect Dimension\tIntensity Score\n";
}  // namespace

TEST_CASE("ordinal mapping is a monotone bijection onto -3..3") {
  CHECK(class_to_ordinal(ValenceClass::Neu) == 0);
  CHECK(class_to_ordinal(ValenceClass::NegV) == -3);
  CHECK(class_to_ordinal(ValenceClass::PosV) == 3);
  int prev = -4;
  for (auto c : kAllClasses) {
    CHECK(ordinal_to_class(class_to_ordinal(c)) == c);
    CHECK(class_to_ordinal(c) > prev);
    prev = class_to_ordinal(c);
    CHECK(class_from_name(class_name(c)) == c);
  }
  CHECK_THROWS_AS(ordinal_to_class(4), Error);
}

TEST_CASE("classification rows parse the leading integer of the label") {
  const auto split = parse_dataset(kClassHeader +
                                       "2018-En-001\tso happy today\tvalence\t2: moderately positive emotional state can be inferred\n"
                                       "2018-En-002\tmeh\tvalence\t0: neutral or mixed emotional state can be inferred\n"
                                       "2018-En-003\tawful\tvalence\t-3: very negative emotional state can be inferred\n",
                                   LabelKind::Classification);
  REQUIRE(split.size() == 3);
  CHECK(split.examples[0].valence == ValenceClass::PosM);
  CHECK(split.examples[1].valence == ValenceClass::Neu);
  CHECK(split.examples[2].valence == ValenceClass::NegV);
  CHECK_FALSE(split.examples[0].intensity.has_value());
  CHECK(split.find("2018-En-002")->text == "meh");
}

TEST_CASE("intensity rows parse decimals in [0,1]") {
  const auto split = parse_dataset(kIntensityHeader + "a\tx\tvalence\t0.677\nb\ty\tvalence\t1\n", LabelKind::Intensity);
  REQUIRE(split.size() == 2);
  CHECK(*split.examples[0].intensity == 0.677);
  CHECK(*split.examples[1].intensity == 1.0);
}

TEST_CASE("empty file after header is an empty split") {
  CHECK(parse_dataset(kClassHeader, LabelKind::Classification).size() == 0);
  CHECK(histogram(parse_dataset(kClassHeader, LabelKind::Classification)).total() == 0);
}

TEST_CASE("malformed rows are rejected with their line number") {
  auto message = [](const std::string& text, LabelKind kind) {
    try {
      parse_dataset(text, kind);
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(kClassHeader + "a\tx\tvalence\t4: too high\n", LabelKind::Classification).find("line 2") !=
        std::string::npos);
  CHECK(message(kClassHeader + "a\tx\tvalence\t1: ok\nb\tx\tvalence\n", LabelKind::Classification).find("line 3") !=
        std::string::npos);
  CHECK(message(kIntensityHeader + "a\tx\tvalence\t1.5\n", LabelKind::Intensity).find("line 2") != std::string::npos);
  CHECK(message(kIntensityHeader + "a\tx\tvalence\t-0.1\n", LabelKind::Intensity) != "");
  CHECK(message(kClassHeader + "a\tNONE\tvalence\t1: x\n", LabelKind::Classification) != "");
  CHECK(message(kClassHeader + "a\tx\tvalence\t\n", LabelKind::Classification) != "");
  CHECK(message(kClassHeader + "a\tx\tvalence\tabc\n", LabelKind::Classification) != "");
  CHECK(message(kClassHeader + "a\tx\tvalence\t1: x\na\ty\tvalence\t2: y\n", LabelKind::Classification) != "");
  CHECK(message("", LabelKind::Classification) != "");
}

TEST_CASE("serialization round-trips for every label kind") {
  DatasetSplit split;
  split.examples.push_back({"id1", "hello there", ValenceClass::NegS, 0.125});
  split.examples.push_back({"id2", "another tweet !", ValenceClass::PosV, 0.9871234567891234});
  split.examples.push_back({"id3", "x", ValenceClass::Neu, 0.0});
  for (auto kind : {LabelKind::Classification, LabelKind::Intensity, LabelKind::Both}) {
    const auto back = parse_dataset(format_dataset(split, kind), kind);
    REQUIRE(back.size() == split.size());
    for (std::size_t i = 0; i < split.size(); ++i) {
      CHECK(back.examples[i].id == split.examples[i].id);
      CHECK(back.examples[i].text == split.examples[i].text);
      if (kind != LabelKind::Intensity) CHECK(back.examples[i].valence == split.examples[i].valence);
      if (kind != LabelKind::Classification) CHECK(back.examples[i].intensity == split.examples[i].intensity);
    }
    if (kind == LabelKind::Both) CHECK(back.examples == split.examples);
  }
}

TEST_CASE("merging a classification and an intensity split joins by id") {
  const auto classes = parse_dataset(kClassHeader + "a\tx\tvalence\t1: s\nb\ty\tvalence\t-2: m\n", LabelKind::Classification);
  const auto intens = parse_dataset(kIntensityHeader + "b\ty\tvalence\t0.2\na\tx\tvalence\t0.7\n", LabelKind::Intensity);
  const auto merged = merge_splits(classes, intens);
  REQUIRE(merged.size() == 2);
  CHECK(merged.examples[0].id == "a");
  CHECK(*merged.examples[0].intensity == 0.7);
  CHECK(merged.examples[1].valence == ValenceClass::NegM);
  const auto partial = parse_dataset(kIntensityHeader + "a\tx\tvalence\t0.7\n", LabelKind::Intensity);
  CHECK_THROWS_AS(merge_splits(classes, partial), Error);
}

TEST_CASE("histogram counts sum to split size and export as JSON") {
  std::mt19937_64 rng(3);
  DatasetSplit split;
  std::array<std::size_t, kNumClasses> expected{};
  for (int i = 0; i < 500; ++i) {
    const auto c = class_from_index(rng() % kNumClasses);
    ++expected[class_index(c)];
    split.examples.push_back({"t" + std::to_string(i), "x", c, std::nullopt});
  }
  const auto h = histogram(split);
  CHECK(h.total() == split.size());
  for (auto c : kAllClasses) CHECK(h[c] == expected[class_index(c)]);
  CHECK(h.to_json()["Neu"].get<std::size_t>() == expected[3]);

  DatasetSplit unlabeled;
  unlabeled.examples.push_back({"q", "x", std::nullopt, 0.5});
  CHECK_THROWS_AS(histogram(unlabeled), Error);
}

TEST_CASE("load_dataset reads files from disk") {
  testing::TempDir dir;
  testing::write_text(dir / "d.tsv", kClassHeader + "a\tx\tvalence\t3: very positive\n");
  CHECK(load_dataset(dir / "d.tsv", LabelKind::Classification).examples[0].valence == ValenceClass::PosV);
  CHECK_THROWS_AS(load_dataset(dir / "missing.tsv", LabelKind::Classification), Error);
}
