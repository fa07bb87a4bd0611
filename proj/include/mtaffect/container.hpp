#pragma once

// Self-describing binary container shared by checkpoints, shallow models and
// encoded splits:
//
//   bytes 0..7    magic "MTAFCNT1"
//   bytes 8..15   header length L (uint64, little-endian)
//   next L bytes  JSON header; header["arrays"] lists {name, shape} in order
//   rest          every array as little-endian IEEE-754 float64, header order

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace mtaffect {

struct NamedArray {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> data;
};

struct Container {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  const NamedArray& array(const std::string& name) const;
  bool has_array(const std::string& name) const;
};

std::string encode_container(const Container& c);
Container decode_container(const std::string& bytes);

void save_container(const std::filesystem::path& path, const Container& c);
Container load_container(const std::filesystem::path& path);

// FNV-1a 64-bit over a canonical JSON dump, rendered as 16 hex digits.
std::string hash_json(const nlohmann::json& j);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace mtaffect
