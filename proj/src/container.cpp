#include "mtaffect/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mtaffect/error.hpp"

namespace mtaffect {

namespace {

constexpr char kMagic[8] = {'M', 'T', 'A', 'F', 'C', 'N', 'T', '1'};

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint64_t get_u64(const std::string& in, std::size_t pos) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

std::size_t product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

}  // namespace

const NamedArray& Container::array(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return a;
  throw Error("container: no array named '" + name + "'");
}

bool Container::has_array(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return true;
  return false;
}

std::string encode_container(const Container& c) {
  nlohmann::json header = c.meta;
  header["arrays"] = nlohmann::json::array();
  for (const auto& a : c.arrays) {
    if (product(a.shape) != a.data.size())
      throw Error("container: array '" + a.name + "' shape does not match data length");
    header["arrays"].push_back({{"name", a.name}, {"shape", a.shape}});
  }
  const std::string text = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put_u64(out, text.size());
  out += text;
  for (const auto& a : c.arrays) {
    for (double d : a.data) put_u64(out, std::bit_cast<std::uint64_t>(d));
  }
  return out;
}

Container decode_container(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw Error("container: bad magic");
  const std::uint64_t hlen = get_u64(bytes, 8);
  if (16 + hlen > bytes.size()) throw Error("container: truncated header");

  Container c;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(16, hlen));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("container: malformed header: ") + e.what());
  }
  std::size_t pos = 16 + hlen;
  for (const auto& entry : header.at("arrays")) {
    NamedArray a;
    a.name = entry.at("name").get<std::string>();
    a.shape = entry.at("shape").get<std::vector<std::size_t>>();
    const std::size_t n = product(a.shape);
    if (pos + 8 * n > bytes.size()) throw Error("container: truncated array '" + a.name + "'");
    a.data.resize(n);
    for (std::size_t i = 0; i < n; ++i, pos += 8)
      a.data[i] = std::bit_cast<double>(get_u64(bytes, pos));
    c.arrays.push_back(std::move(a));
  }
  if (pos != bytes.size()) throw Error("container: trailing bytes");
  header.erase("arrays");
  c.meta = std::move(header);
  return c;
}

void save_container(const std::filesystem::path& path, const Container& c) {
  write_file(path, encode_container(c));
}

Container load_container(const std::filesystem::path& path) {
  return decode_container(read_file(path));
}

std::string hash_json(const nlohmann::json& j) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 0xfu];
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace mtaffect
