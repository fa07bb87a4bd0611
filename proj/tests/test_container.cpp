#include <doctest.h>

#include <cstring>

#include "mtaffect/container.hpp"
#include "mtaffect/error.hpp"
#include "support.hpp"

using namespace mtaffect;

TEST_CASE("container bytes follow the documented layout") {
  Container c;
  c.meta["kind"] = "test";
  c.arrays.push_back({"a", {2, 2}, {1.0, -2.5, 3.25, 0.0}});
  c.arrays.push_back({"b", {1}, {42.0}});
  const auto bytes = encode_container(c);
  REQUIRE(bytes.size() > 16);
  CHECK(bytes.substr(0, 8) == "MTAFCNT1");
  std::uint64_t header_len = 0;
  for (int i = 7; i >= 0; --i) header_len = (header_len << 8) | static_cast<unsigned char>(bytes[8 + i]);
  const auto header = nlohmann::json::parse(bytes.substr(16, header_len));
  CHECK(header["arrays"][0]["name"] == "a");
  CHECK(header["arrays"][0]["shape"] == nlohmann::json({2, 2}));
  CHECK(bytes.size() == 16 + header_len + 5 * 8);
  double second = 0;
  std::memcpy(&second, bytes.data() + 16 + header_len + 8, 8);
  CHECK(second == -2.5);
}

TEST_CASE("container round-trips bit-exactly") {
  std::mt19937_64 rng(1);
  Container c;
  c.meta["x"] = {{"nested", 1}};
  c.arrays.push_back({"w", {3, 7}, testing::random_vector(rng, 21)});
  c.arrays.push_back({"empty", {0}, {}});
  const auto back = decode_container(encode_container(c));
  CHECK(back.meta["x"]["nested"] == 1);
  REQUIRE(back.arrays.size() == 2);
  CHECK(back.array("w").data == c.arrays[0].data);
  CHECK(back.array("w").shape == c.arrays[0].shape);
  CHECK(back.has_array("empty"));
  CHECK_FALSE(back.has_array("nope"));
  CHECK_THROWS_AS(back.array("nope"), Error);

  testing::TempDir dir;
  save_container(dir / "c.bin", c);
  CHECK(load_container(dir / "c.bin").array("w").data == c.arrays[0].data);
}

TEST_CASE("corrupt containers are rejected") {
  Container c;
  c.arrays.push_back({"w", {2}, {1.0, 2.0}});
  auto bytes = encode_container(c);
  CHECK_THROWS_AS(decode_container(bytes.substr(0, bytes.size() - 3)), Error);
  CHECK_THROWS_AS(decode_container("NOTMAGIC" + bytes.substr(8)), Error);
  CHECK_THROWS_AS(decode_container(""), Error);
}

TEST_CASE("hash_json is stable and key-order independent") {
  const auto a = nlohmann::json::parse(R"({"x":1,"y":[1,2]})");
  const auto b = nlohmann::json::parse(R"({"y":[1,2],"x":1})");
  CHECK(hash_json(a) == hash_json(b));
  CHECK(hash_json(a).size() == 16);
  CHECK(hash_json(a) != hash_json(nlohmann::json::parse(R"({"x":2,"y":[1,2]})")));
}
