#include <doctest.h>

#include "mtaffect/embed.hpp"
#include "mtaffect/error.hpp"
#include "support.hpp"

using namespace mtaffect;
using namespace mtaffect::embed;

namespace {

std::string table_text(const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  std::string out;
  for (const auto& [tok, v] : rows) {
    out += tok;
    for (double x : v) out += " " + std::to_string(x);
    out += "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("embedding tables load and validate dimensions") {
  testing::TempDir dir;
  std::mt19937_64 rng(2);
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (int i = 0; i < 3; ++i) rows.push_back({"w" + std::to_string(i), testing::random_vector(rng, 200)});
  testing::write_text(dir / "ok.txt", table_text(rows));
  const auto t = EmbeddingTable::load(dir / "ok.txt", 200, "glove");
  CHECK(t.size() == 3);
  CHECK(t.dim() == 200);
  CHECK(t.contains("w1"));

  rows.push_back({"short", testing::random_vector(rng, 199)});
  testing::write_text(dir / "bad.txt", table_text(rows));
  try {
    EmbeddingTable::load(dir / "bad.txt", 200);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
}

TEST_CASE("duplicate tokens keep the first vector") {
  testing::TempDir dir;
  testing::write_text(dir / "dup.txt", "a 1 2\nb 3 4\na 5 6\nc 7 8\nb 9 9\n");
  const auto t = EmbeddingTable::load(dir / "dup.txt", 2);
  const std::size_t lines = 5, duplicates = 2;
  CHECK(t.size() == lines - duplicates);
  CHECK(*t.find("a") == std::vector<double>{1, 2});
}

TEST_CASE("composition branches") {
  EmbeddingTable glove("glove", 2), emo("emoji", 3), chars("chars", 3);
  glove.add("hi", {1, 2});
  emo.add("😀", {7, 8, 9});
  chars.add("a", {3, 0, 0});
  chars.add("b", {0, 6, 0});
  EmbeddingTables tables{&glove, &emo, &chars, 3};
  tables.validate();

  CHECK(compose_word_vector("hi", tables) == std::vector<double>{1, 2, 0});
  CHECK(branch_for("hi", tables) == Branch::Glove);
  CHECK(compose_word_vector("😀", tables) == std::vector<double>{7, 8, 9});
  CHECK(compose_word_vector("ab", tables) == std::vector<double>{1.5, 3, 0});
  CHECK(compose_word_vector("ax", tables) == std::vector<double>{1.5, 0, 0});
  CHECK(compose_word_vector("zz", tables) == std::vector<double>{0, 0, 0});
  CHECK(branch_for("zz", tables) == Branch::Characters);
}

TEST_CASE("glove vectors are padded with zeros at the end") {
  std::mt19937_64 rng(4);
  EmbeddingTable glove("glove", 200);
  const auto v = testing::random_vector(rng, 200);
  glove.add("word", v);
  EmbeddingTables tables{&glove, nullptr, nullptr, 300};
  const auto out = compose_word_vector("word", tables);
  REQUIRE(out.size() == 300);
  CHECK(std::equal(v.begin(), v.end(), out.begin()));
  for (std::size_t i = 200; i < 300; ++i) CHECK(out[i] == 0.0);
}

TEST_CASE("mismatched table widths are rejected") {
  EmbeddingTable glove("glove", 4), emo("emoji", 2);
  EmbeddingTables tables{&glove, &emo, nullptr, 3};
  CHECK_THROWS_AS(tables.validate(), Error);
}

TEST_CASE("utf8 characters split by code point") {
  CHECK(utf8_characters("ab") == std::vector<std::string>{"a", "b"});
  CHECK(utf8_characters("é😀") == std::vector<std::string>{"é", "😀"});
}

TEST_CASE("tweet encoding pads and truncates") {
  EmbeddingTable glove("glove", 2);
  glove.add("a", {1, 1});
  glove.add("b", {2, 2});
  EmbeddingTables tables{&glove, nullptr, nullptr, 3};

  text::NormalizedTweet t{{"a", "b", "a"}, "id"};
  const auto m = encode_tweet(t, tables, 50);
  CHECK(m.length == 3);
  CHECK(m.values.size() == 150);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(m.mask[i] == (i < 3));
    if (i >= 3)
      for (std::size_t d = 0; d < 3; ++d) CHECK(m.values[i * 3 + d] == 0.0);
  }
  CHECK(m.row(1)[0] == 2.0);

  text::NormalizedTweet long_tweet;
  for (int i = 0; i < 60; ++i) long_tweet.tokens.push_back(i < 50 ? "a" : "b");
  const auto lm = encode_tweet(long_tweet, tables, 50);
  CHECK(lm.length == 50);
  for (std::size_t i = 0; i < 50; ++i) CHECK(lm.row(i)[0] == 1.0);

  const auto em = encode_tweet(text::NormalizedTweet{}, tables, 50);
  CHECK(em.length == 0);
  CHECK(std::all_of(em.values.begin(), em.values.end(), [](double v) { return v == 0.0; }));
  CHECK(std::none_of(em.mask.begin(), em.mask.end(), [](bool b) { return b; }));
}
