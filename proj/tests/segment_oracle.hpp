#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mtaffect/normalize.hpp"

namespace testing {

inline double unigram_log_prob(const std::string& w, const mtaffect::text::FrequencyLexicon& freq) {
  const double total = static_cast<double>(freq.total());
  const auto c = freq.count(w);
  if (c > 0) return std::log(static_cast<double>(c) / total);
  return -std::log(total) - static_cast<double>(w.size()) * std::log(10.0);
}

struct Segmentation {
  double score = -INFINITY;
  std::vector<std::string> words;
  int ties = 0;
};

// Enumerates all 2^(n-1) ways to cut the tag.
inline Segmentation brute_force_segment(const std::string& tag, const mtaffect::text::FrequencyLexicon& freq) {
  Segmentation best;
  const std::size_t n = tag.size();
  for (std::uint64_t mask = 0; mask < (1ull << (n - 1)); ++mask) {
    std::vector<std::string> words;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= n; ++i) {
      if (i == n || (mask >> (i - 1)) & 1u) {
        words.push_back(tag.substr(start, i - start));
        start = i;
      }
    }
    double s = 0;
    for (const auto& w : words) s += unigram_log_prob(w, freq);
    if (s > best.score + 1e-12) {
      best = {s, words, 1};
    } else if (std::abs(s - best.score) <= 1e-12) {
      ++best.ties;
    }
  }
  return best;
}

inline const std::vector<std::string>& golden_hashtags() {
  static const std::vector<std::string> tags = {
      "iamcool", "laughter", "x", "thisisgood", "lovethis", "goodmorning", "happyday", "ilovecats", "notbad",
      "sohappy", "sunnyday", "bestdayever", "gohome", "wewonthegame", "feelingsad", "qzxv", "catsatwork", "itsnow"};
  return tags;
}

}  // namespace testing
