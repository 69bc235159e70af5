#pragma once

// Shared test helpers: scratch directories and synthetic image corpora.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "coimg/combinatorics.hpp"
#include "coimg/image.hpp"

namespace coimg::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "coimg") {
    std::string templ = (fs::temp_directory_path() / (prefix + "-XXXXXX")).string();
    if (mkdtemp(templ.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
    path_ = templ;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

/// Deterministic textured image: a diagonal gradient plus seeded noise, so
/// distinct seeds give distinct pixels.
inline Image pattern_image(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 1);
  Image img(w, h);
  const int base = static_cast<int>(rng() % 200);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t* px = img.at(x, y);
      const int g = (x * 255 / std::max(1, w - 1) + y * 255 / std::max(1, h - 1)) / 2;
      px[0] = static_cast<std::uint8_t>((g + base) % 256);
      px[1] = static_cast<std::uint8_t>(rng() % 256);
      px[2] = static_cast<std::uint8_t>((255 - g + base / 2) % 256);
    }
  }
  return img;
}

/// White cross on black, for checks that a rotation changes pixels.
inline Image cross_image(int side) {
  Image img(side, side);
  for (int i = 0; i < side; ++i) {
    for (int t = side / 2 - 1; t <= side / 2; ++t) {
      std::fill_n(img.at(i, t), 3, 255);
      std::fill_n(img.at(t, i), 3, 255);
    }
  }
  return img;
}

/// Writes <root>/<class>/img_<i>.png for each (class, count).
inline void make_corpus(const fs::path& root, const std::vector<std::pair<std::string, int>>& sizes, int side = 32) {
  std::uint64_t seed = 1;
  for (const auto& [name, count] : sizes) {
    fs::create_directories(root / name);
    for (int i = 0; i < count; ++i) {
      char file[32];
      std::snprintf(file, sizeof file, "img_%05d.png", i);
      encode_image(root / name / file, pattern_image(side, side, seed++));
    }
  }
}

inline const std::vector<std::pair<std::string, int>>& octdl_sizes() {
  static const std::vector<std::pair<std::string, int>> sizes{
      {"AMD", 1231}, {"DME", 147}, {"ERM", 155}, {"NO", 332}, {"RVO", 101}, {"VID", 76}, {"RAO", 22}};
  return sizes;
}

/// Brute-force lexicographic enumeration of sorted k-tuples over n symbols,
/// strictly increasing or (with repetition) non-decreasing.
inline std::vector<IndexTuple> enumerate_tuples(std::uint64_t n, std::uint64_t k, bool with_repetition) {
  std::vector<IndexTuple> out;
  IndexTuple cur;
  auto rec = [&](auto&& self, std::uint64_t start) -> void {
    if (cur.size() == k) {
      out.push_back(cur);
      return;
    }
    for (std::uint64_t v = start; v < n; ++v) {
      cur.push_back(v);
      self(self, with_repetition ? v : v + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

}  // namespace coimg::testing
