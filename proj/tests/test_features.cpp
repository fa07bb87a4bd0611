#include <doctest.h>

#include "mtaffect/error.hpp"
#include "mtaffect/features.hpp"
#include "support.hpp"

using namespace mtaffect;
using namespace mtaffect::features;

namespace {

ScoredLexicon afinn() {
  ScoredLexicon l("afinn", 1);
  l.add("good", {3});
  l.add("bad", {-3});
  return l;
}

std::string external_text(const std::string& name, std::size_t dim, std::size_t rows, std::size_t bad_row = 99) {
  std::string out = name + "\t" + std::to_string(dim) + "\n";
  for (std::size_t r = 0; r < rows; ++r) {
    out += "id" + std::to_string(r) + "\t";
    const std::size_t width = r == bad_row ? dim - 1 : dim;
    for (std::size_t i = 0; i < width; ++i) out += (i ? " " : "") + std::to_string(0.01 * static_cast<double>(i + r));
    out += "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("lexicon blocks are column sums plus match count") {
  const std::vector<ScoredLexicon> lex = {afinn()};
  CHECK(lexicon_features({"good"}, lex) == std::vector<double>{3, 1});
  CHECK(lexicon_features({"good", "good"}, lex) == std::vector<double>{6, 2});
  CHECK(lexicon_features({}, lex) == std::vector<double>{0, 0});
  CHECK(lexicon_features({"meh", "bad", "good"}, lex) == std::vector<double>{0, 2});
  CHECK_THROWS_AS(lexicon_features({"good"}, {}), Error);
}

TEST_CASE("lexicon features are additive over token multisets") {
  const std::vector<ScoredLexicon> lex = {ScoredLexicon::load(testing::data_dir() / "afinn.tsv"),
                                          ScoredLexicon::load(testing::data_dir() / "vad.tsv")};
  CHECK(lex[1].width() == 4);
  const std::vector<std::string> vocab = {"good", "bad", "happy", "sad", "love", "hate", "the", "x", "joy"};
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> a, b;
    for (std::size_t i = rng() % 6; i > 0; --i) a.push_back(vocab[rng() % vocab.size()]);
    for (std::size_t i = rng() % 6; i > 0; --i) b.push_back(vocab[rng() % vocab.size()]);
    auto ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const auto fa = lexicon_features(a, lex), fb = lexicon_features(b, lex), fab = lexicon_features(ab, lex);
    REQUIRE(fab.size() == 2 + 4);
    for (std::size_t i = 0; i < fab.size(); ++i) CHECK(fab[i] == doctest::Approx(fa[i] + fb[i]).epsilon(1e-12));
  }
}

TEST_CASE("sentiwordnet synsets are averaged per word") {
  testing::TempDir dir;
  testing::write_text(dir / "swn.txt",
                      "# comment\n"
                      "a\t00001\t0.5\t0\tgood#1 nice#2\tgloss\n"
                      "a\t00002\t0.25\t0.25\tgood#2\tgloss\n"
                      "n\t00003\t0\t0.75\tbad_thing#1\tgloss\n");
  const auto lex = build_sentiwordnet_lexicon(dir / "swn.txt");
  CHECK(lex.arity() == 3);
  const auto* good = lex.find("good");
  REQUIRE(good != nullptr);
  CHECK((*good)[0] == doctest::Approx(0.375));
  CHECK((*good)[1] == doctest::Approx(0.125));
  CHECK((*good)[2] == doctest::Approx(0.5));
  CHECK(lex.find("nice") != nullptr);
}

TEST_CASE("external feature files") {
  testing::TempDir dir;
  testing::write_text(dir / "dm.tsv", external_text("deepmoji_softmax", 64, 2));
  const auto set = ExternalFeatureSet::load(dir / "dm.tsv", 64);
  CHECK(set.size() == 2);
  CHECK(set.find("id1") != nullptr);
  CHECK(set.find("absent") == nullptr);
  testing::write_text(dir / "bad.tsv", external_text("deepmoji_softmax", 64, 2, 1));
  CHECK_THROWS_AS(ExternalFeatureSet::load(dir / "bad.tsv", 64), Error);
  CHECK_THROWS_AS(ExternalFeatureSet::load(dir / "dm.tsv", 63), Error);
  testing::write_text(dir / "dup.tsv", external_text("x", 2, 2) + "id0\t1 2\n");
  CHECK_THROWS_AS(ExternalFeatureSet::load(dir / "dup.tsv", 2), Error);

  CHECK(known_external_dim("deepmoji_softmax") == 64u);
  CHECK(known_external_dim("deepmoji_attention") == 2304u);
  CHECK(known_external_dim("skipthought") == 4800u);
  CHECK(known_external_dim("sentiment_neuron") == 4096u);
  CHECK_FALSE(known_external_dim("other").has_value());
}

const std::string kLex(kLexiconSource);

TEST_CASE("assembler concatenates sources in config order") {
  ExternalFeatureSet dm("deepmoji_softmax", 64);
  dm.add("t1", std::vector<double>(64, 0.5));
  FeatureAssembler only_lex({kLex}, {afinn()}, {});
  CHECK(only_lex.width() == 2);
  CHECK(only_lex.assemble("t1", {"good"}).values == std::vector<double>{3, 1});

  FeatureAssembler both({"deepmoji_softmax", kLex}, {afinn()}, {dm});
  const Layout expected = {{"deepmoji_softmax", 0, 64}, {kLex, 64, 2}};
  CHECK(both.layout() == expected);
  const auto v = both.assemble("t1", {"bad"});
  CHECK(v.values.size() == 66);
  CHECK(v.values[0] == 0.5);
  CHECK(v.values[64] == -3);
  CHECK(layout_from_json(layout_to_json(both.layout())) == both.layout());

  CHECK_THROWS_AS(both.assemble("missing", {}), Error);
  FeatureAssembler lenient({"deepmoji_softmax", kLex}, {afinn()}, {dm}, true);
  const auto filled = lenient.assemble("missing", {"good"});
  CHECK(filled.values.size() == 66);
  CHECK(std::all_of(filled.values.begin(), filled.values.begin() + 64, [](double x) { return x == 0.0; }));
  CHECK(filled.missing_sources == std::vector<std::string>{"deepmoji_softmax"});

  CHECK_THROWS_AS(FeatureAssembler(std::vector<std::string>{}, {afinn()}, {}), Error);
  CHECK_THROWS_AS(FeatureAssembler(std::vector<std::string>{"skipthought"}, {afinn()}, {}), Error);
}

TEST_CASE("all four transfer sources plus lexicons") {
  std::vector<ExternalFeatureSet> ext;
  const std::vector<std::string> names = {"deepmoji_softmax", "deepmoji_attention", "skipthought", "sentiment_neuron"};
  for (const auto& n : names) {
    ExternalFeatureSet s(n, *known_external_dim(n));
    s.add("t", std::vector<double>(s.dim(), 1.0));
    ext.push_back(std::move(s));
  }
  auto sources = names;
  sources.push_back(kLex);
  FeatureAssembler a(sources, {afinn()}, ext);
  CHECK(a.width() == 64 + 2304 + 4800 + 4096 + 2);
  CHECK(a.assemble("t", {"good"}).values.size() == a.width());
}
