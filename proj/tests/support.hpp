#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "mtaffect/model.hpp"

namespace testing {

namespace fs = std::filesystem;

inline fs::path data_dir() { return fs::path(MTAFFECT_TEST_DATA); }

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("mtaffect-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline mtaffect::corpus::ValenceClass class_from_latent(double s) {
  const int ord = static_cast<int>(std::lround(std::clamp(s, -1.0, 1.0) * 3.0));
  return mtaffect::corpus::ordinal_to_class(ord);
}

inline double intensity_from_latent(double s) { return std::clamp(0.5 + 0.5 * s, 0.0, 1.0); }

// Sequences of random vectors whose mean along one direction is a latent
// score; class and intensity both derive from it.
inline std::vector<mtaffect::model::EncodedExample> latent_examples(std::size_t n, std::size_t max_len,
                                                                    std::size_t dim, std::size_t feature_dim,
                                                                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> len_dist(1, max_len);
  std::vector<mtaffect::model::EncodedExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    mtaffect::model::EncodedExample ex;
    ex.id = "t" + std::to_string(i);
    const double latent = u(rng);
    const std::size_t len = len_dist(rng);
    ex.matrix.max_len = max_len;
    ex.matrix.dim = dim;
    ex.matrix.length = len;
    ex.matrix.values.assign(max_len * dim, 0.0);
    ex.matrix.mask.assign(max_len, false);
    for (std::size_t t = 0; t < len; ++t) {
      ex.matrix.mask[t] = true;
      for (std::size_t d = 0; d < dim; ++d) ex.matrix.values[t * dim + d] = 0.3 * u(rng);
      ex.matrix.values[t * dim] = latent + 0.2 * u(rng);
    }
    for (std::size_t f = 0; f < feature_dim; ++f) ex.features.push_back(0.5 * u(rng));
    ex.valence = class_from_latent(latent);
    ex.intensity = intensity_from_latent(latent);
    out.push_back(std::move(ex));
  }
  return out;
}

inline mtaffect::model::ModelConfig tiny_config(mtaffect::model::TaskMode mode = mtaffect::model::TaskMode::Mtl) {
  mtaffect::model::ModelConfig c;
  c.max_len = 6;
  c.embed_dim = 4;
  c.glove_dim = 4;
  c.gru_hidden = 3;
  c.filter_widths = {2, 3};
  c.filters_per_width = 2;
  c.dropout = 0.0;
  c.batch_size = 8;
  c.max_epochs = 3;
  c.patience = 3;
  c.task_mode = mode;
  c.seed = 7;
  return c;
}

}  // namespace testing
