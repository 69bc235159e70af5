#pragma once

// Grouping policies: which same-class images share a composite.
//
// Every policy maps a combination rank to a member tuple. The similarity
// policies reorder class indices by total similarity before unranking, so the
// rank-to-tuple assignment changes but the tuple set does not.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "coimg/combinatorics.hpp"
#include "coimg/error.hpp"
#include "coimg/image.hpp"
#include "coimg/manifest.hpp"
#include "coimg/parallel.hpp"

namespace coimg {

enum class PolicyKind { class_based, similarity_high, similarity_low, heterogeneous_mix };

inline std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::class_based: return "class_based";
    case PolicyKind::similarity_high: return "similarity_high";
    case PolicyKind::similarity_low: return "similarity_low";
    case PolicyKind::heterogeneous_mix: return "heterogeneous_mix";
  }
  return "class_based";
}

inline PolicyKind parse_policy_kind(std::string_view text) {
  for (auto kind : {PolicyKind::class_based, PolicyKind::similarity_high, PolicyKind::similarity_low,
                    PolicyKind::heterogeneous_mix}) {
    if (text == to_string(kind)) return kind;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown selection policy: " + std::string(text));
}

struct SelectionPolicy {
  PolicyKind kind = PolicyKind::class_based;
  double high_fraction = 0.5;  // heterogeneous_mix only
  bool with_repetition = false;

  bool needs_similarity() const { return kind != PolicyKind::class_based; }

  // Distinct ranks always give distinct member sets.
  bool bijective() const { return kind != PolicyKind::heterogeneous_mix; }

  std::uint64_t high_count(std::uint64_t k) const {
    return static_cast<std::uint64_t>(std::llround(high_fraction * static_cast<double>(k)));
  }

  void validate() const {
    if (!(high_fraction >= 0.0 && high_fraction <= 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "high_fraction must lie in [0, 1]");
    }
  }
};

inline constexpr int kThumbnailSide = 32;
inline constexpr std::size_t kMaxSimilarityClass = 5000;

using Thumbnail = std::vector<std::uint8_t>;  // kThumbnailSide^2 gray samples

inline Thumbnail make_thumbnail(const Image& img) {
  return to_gray(resize_bilinear(img, kThumbnailSide, kThumbnailSide));
}

/// 1 - mean absolute difference of the two thumbnails, scaled to [0, 1].
inline double similarity(const Thumbnail& a, const Thumbnail& b) {
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] > b[i] ? a[i] - b[i] : b[i] - a[i];
  return 1.0 - static_cast<double>(sum) / (static_cast<double>(a.size()) * 255.0);
}

inline double similarity(const Image& a, const Image& b) { return similarity(make_thumbnail(a), make_thumbnail(b)); }

struct SimilarityMatrix {
  std::string class_name;
  std::size_t n = 0;
  std::vector<double> scores;  // row-major n*n

  double at(std::size_t i, std::size_t j) const { return scores[i * n + j]; }

  double row_sum(std::size_t i) const {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += at(i, j);
    return s;
  }

  friend bool operator==(const SimilarityMatrix&, const SimilarityMatrix&) = default;
};

inline SimilarityMatrix build_similarity_matrix(std::string class_name, std::span<const Thumbnail> thumbs,
                                                unsigned workers = default_workers()) {
  const std::size_t n = thumbs.size();
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "similarity matrix needs at least one image");
  if (n > kMaxSimilarityClass) {
    throw Error(ErrorKind::SimilarityTooLarge, "class " + class_name + " has " + std::to_string(n) +
                                                   " images; similarity policies are limited to " +
                                                   std::to_string(kMaxSimilarityClass));
  }
  SimilarityMatrix m{std::move(class_name), n, std::vector<double>(n * n, 0.0)};
  parallel_for(n, workers, [&](std::size_t i) {
    m.scores[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = similarity(thumbs[i], thumbs[j]);
      m.scores[i * n + j] = s;
      m.scores[j * n + i] = s;
    }
  });
  return m;
}

inline SimilarityMatrix build_similarity_matrix(std::string class_name, std::span<const Image> images,
                                                unsigned workers = default_workers()) {
  std::vector<Thumbnail> thumbs(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) thumbs[i] = make_thumbnail(images[i]);
  return build_similarity_matrix(std::move(class_name), std::span<const Thumbnail>(thumbs), workers);
}

namespace detail {

inline std::optional<SimilarityMatrix> load_similarity_cache(const fs::path& file, const std::string& digest) {
  std::ifstream in(file);
  if (!in) return std::nullopt;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("class_digest").get<std::string>() != digest) return std::nullopt;
    SimilarityMatrix m{j.at("class").get<std::string>(), j.at("n").get<std::size_t>(), {}};
    m.scores = j.at("scores").get<std::vector<double>>();
    if (m.scores.size() != m.n * m.n) return std::nullopt;
    return m;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

inline void save_similarity_cache(const fs::path& file, const std::string& digest, const SimilarityMatrix& m) {
  fs::create_directories(file.parent_path());
  std::ofstream out(file);
  const nlohmann::json j{{"class", m.class_name}, {"class_digest", digest}, {"n", m.n}, {"scores", m.scores}};
  out << j.dump();
  if (!out) throw Error(ErrorKind::WriteFailure, "cannot write similarity cache " + file.string());
}

}  // namespace detail

/// Decodes one class of the manifest and scores every pair. With a cache
/// directory, matrices are stored as <dir>/<class digest>.json and reused when
/// the digest matches; doubles round-trip exactly through the JSON form.
inline SimilarityMatrix build_similarity_matrix(const DatasetManifest& manifest, const ClassEntries& cls,
                                                const std::optional<fs::path>& cache_dir = std::nullopt,
                                                unsigned workers = default_workers()) {
  if (cls.size() > kMaxSimilarityClass) {
    throw Error(ErrorKind::SimilarityTooLarge, "class " + cls.name + " is too large for similarity policies");
  }
  const std::string digest = class_digest(cls);
  if (cache_dir) {
    if (auto hit = detail::load_similarity_cache(*cache_dir / (digest + ".json"), digest)) {
      hit->class_name = cls.name;
      return *hit;
    }
  }
  std::vector<Thumbnail> thumbs(cls.size());
  std::vector<std::string> failures(cls.size());
  parallel_for(cls.size(), workers, [&](std::size_t i) {
    try {
      thumbs[i] = make_thumbnail(decode_image(manifest.resolve(cls.entries[i])));
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (!failures[i].empty()) {
      throw Error(ErrorKind::DecodeFailure, cls.entries[i].relative_path + ": " + failures[i]);
    }
  }
  auto m = build_similarity_matrix(cls.name, std::span<const Thumbnail>(thumbs), workers);
  if (cache_dir) detail::save_similarity_cache(*cache_dir / (digest + ".json"), digest, m);
  return m;
}

/// Class indices sorted by total similarity (row sum), ties by index.
inline std::vector<std::uint64_t> similarity_order(const SimilarityMatrix& sim, bool descending) {
  std::vector<double> sums(sim.n);
  for (std::size_t i = 0; i < sim.n; ++i) sums[i] = sim.row_sum(i);
  std::vector<std::uint64_t> order(sim.n);
  for (std::size_t i = 0; i < sim.n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::uint64_t a, std::uint64_t b) {
    return descending ? sums[a] > sums[b] : sums[a] < sums[b];
  });
  return order;
}

/// Rank -> member tuple for one class under one policy. Orders are computed
/// once at construction, so select() is cheap enough to call per record.
class Selector {
 public:
  Selector(const SelectionPolicy& policy, const CombinationSpace& space, const SimilarityMatrix* sim = nullptr)
      : policy_(policy), space_(space) {
    policy_.validate();
    if (policy_.needs_similarity()) {
      if (sim == nullptr) {
        throw Error(ErrorKind::PolicyMissingSimilarity,
                    std::string(to_string(policy_.kind)) + " requires a similarity matrix");
      }
      if (sim->n != space.n) throw Error(ErrorKind::InvalidArgument, "similarity matrix size does not match class");
      descending_ = similarity_order(*sim, true);
      ascending_ = similarity_order(*sim, false);
    }
  }

  const CombinationSpace& space() const { return space_; }

  IndexTuple select(u128 rank) const {
    IndexTuple positions = unrank_combination(space_, rank);
    switch (policy_.kind) {
      case PolicyKind::class_based:
        return positions;
      case PolicyKind::similarity_high:
        return remap(positions, descending_);
      case PolicyKind::similarity_low:
        return remap(positions, ascending_);
      case PolicyKind::heterogeneous_mix:
        return mix(positions);
    }
    return positions;
  }

 private:
  static IndexTuple remap(const IndexTuple& positions, const std::vector<std::uint64_t>& order) {
    IndexTuple out;
    out.reserve(positions.size());
    for (auto p : positions) out.push_back(order[p]);
    std::sort(out.begin(), out.end());
    return out;
  }

  // The first round(high_fraction * k) slots read the descending order, the
  // rest the ascending order. Without repetition, a slot whose image is taken
  // advances along its own order until it finds a free one.
  IndexTuple mix(const IndexTuple& positions) const {
    const std::uint64_t high = policy_.high_count(space_.k);
    const std::uint64_t n = space_.n;
    IndexTuple out;
    out.reserve(positions.size());
    std::unordered_set<std::uint64_t> used;
    for (std::size_t i = 0; i < positions.size(); ++i) {
      const auto& order = i < high ? descending_ : ascending_;
      std::uint64_t p = positions[i];
      std::uint64_t idx = order[p];
      while (!policy_.with_repetition && used.contains(idx)) {
        p = (p + 1) % n;
        idx = order[p];
      }
      used.insert(idx);
      out.push_back(idx);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  SelectionPolicy policy_;
  CombinationSpace space_;
  std::vector<std::uint64_t> descending_;
  std::vector<std::uint64_t> ascending_;
};

inline IndexTuple select_members(const SelectionPolicy& policy, const CombinationSpace& space,
                                 const SimilarityMatrix* sim, u128 rank) {
  return Selector(policy, space, sim).select(rank);
}

}  // namespace coimg
