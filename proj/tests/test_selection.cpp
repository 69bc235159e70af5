#include <gtest/gtest.h>

#include <random>
#include <set>

#include "coimg/manifest.hpp"
#include "coimg/selection.hpp"
#include "fixtures.hpp"

namespace coimg {
namespace {

using testing::TempDir;

Image solid(std::uint8_t v, int side = 32) { return Image::filled(side, side, v, v, v); }

SimilarityMatrix random_matrix(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SimilarityMatrix m{"r", n, std::vector<double>(n * n, 1.0)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = static_cast<double>(rng() % 1000) / 1000.0;
      m.scores[i * n + j] = s;
      m.scores[j * n + i] = s;
    }
  }
  return m;
}

// Row sums: 0 -> 1.8, 1 -> 1.5, 2 -> 1.9, so the descending order is (2, 0, 1).
SimilarityMatrix ordering_201() {
  return {"c", 3, {1.0, 0.2, 0.6, 0.2, 1.0, 0.3, 0.6, 0.3, 1.0}};
}

TEST(Similarity, Examples) {
  const Image x = testing::pattern_image(40, 30, 9);
  EXPECT_EQ(similarity(x, x), 1.0);
  EXPECT_EQ(similarity(solid(0), solid(255)), 0.0);
  // Every thumbnail sample differs by 128, so the score is 1 - 128/255.
  EXPECT_NEAR(similarity(solid(0), solid(128)), 1.0 - 128.0 / 255.0, 1e-12);
  EXPECT_NEAR(similarity(solid(0), solid(128)), 0.498, 5e-4);
}

TEST(Similarity, SymmetricAndBounded) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Image a = testing::pattern_image(17 + s, 23, s);
    const Image b = testing::pattern_image(31, 9 + s, s + 100);
    const double ab = similarity(a, b);
    EXPECT_EQ(ab, similarity(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(SimilarityMatrix, SmallCases) {
  const std::vector<Image> one{solid(10)};
  const auto m1 = build_similarity_matrix("a", std::span<const Image>(one));
  EXPECT_EQ(m1.scores, std::vector<double>{1.0});

  const std::vector<Image> twins{solid(70), solid(70)};
  EXPECT_EQ(build_similarity_matrix("a", std::span<const Image>(twins)).scores, std::vector<double>(4, 1.0));

  const std::vector<Image> three{solid(0), solid(255), solid(128)};
  const auto m3 = build_similarity_matrix("a", std::span<const Image>(three), 3);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(m3.at(i, j), similarity(three[i], three[j])) << i << j;
  }
}

TEST(SimilarityMatrix, WorkerCountDoesNotMatter) {
  std::vector<Image> imgs;
  for (std::uint64_t s = 0; s < 25; ++s) imgs.push_back(testing::pattern_image(20, 20, s));
  EXPECT_EQ(build_similarity_matrix("a", std::span<const Image>(imgs), 1),
            build_similarity_matrix("a", std::span<const Image>(imgs), 5));
}

TEST(SimilarityMatrix, RefusesHugeClasses) {
  const std::vector<Thumbnail> thumbs(kMaxSimilarityClass + 1, Thumbnail(kThumbnailSide * kThumbnailSide, 0));
  try {
    build_similarity_matrix("big", std::span<const Thumbnail>(thumbs));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SimilarityTooLarge);
  }
}

TEST(SimilarityMatrix, CacheHitIsBitIdentical) {
  TempDir dir;
  testing::make_corpus(dir / "data", {{"a", 12}}, 16);
  const auto manifest = scan_dataset(dir / "data", default_extensions()).manifest;
  const auto& cls = manifest.classes[0];
  const auto fresh = build_similarity_matrix(manifest, cls, std::nullopt, 2);
  const auto stored = build_similarity_matrix(manifest, cls, dir / "cache", 2);
  EXPECT_TRUE(fs::exists(dir / "cache" / (class_digest(cls) + ".json")));
  // Remove the sources: a second call must be served from the cache.
  fs::remove_all(dir / "data");
  const auto cached = build_similarity_matrix(manifest, cls, dir / "cache", 2);
  EXPECT_EQ(fresh, stored);
  EXPECT_EQ(fresh, cached);
}

TEST(SimilarityMatrix, DecodeFailureNamesTheEntry) {
  TempDir dir;
  testing::make_corpus(dir.path(), {{"a", 3}}, 8);
  const auto manifest = scan_dataset(dir.path(), default_extensions()).manifest;
  fs::remove(dir / "a/img_00001.png");
  try {
    build_similarity_matrix(manifest, manifest.classes[0]);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DecodeFailure);
    EXPECT_NE(std::string(e.what()).find("a/img_00001.png"), std::string::npos);
  }
}

TEST(SelectMembers, ClassBasedDelegatesToUnrank) {
  const auto space = CombinationSpace::make(4, 2, false);
  EXPECT_EQ(select_members({}, space, nullptr, 0), (IndexTuple{0, 1}));
  for (u128 r = 0; r < space.size; ++r) EXPECT_EQ(select_members({}, space, nullptr, r), unrank_combination(space, r));
}

TEST(SelectMembers, SimilarityHighWorkedExample) {
  const auto sim = ordering_201();
  EXPECT_EQ(similarity_order(sim, true), (std::vector<std::uint64_t>{2, 0, 1}));
  const SelectionPolicy high{PolicyKind::similarity_high, 0.5, false};
  EXPECT_EQ(select_members(high, CombinationSpace::make(3, 2, false), &sim, 0), (IndexTuple{0, 2}));
  const SelectionPolicy low{PolicyKind::similarity_low, 0.5, false};
  EXPECT_EQ(select_members(low, CombinationSpace::make(3, 2, false), &sim, 0), (IndexTuple{0, 1}));
}

TEST(SelectMembers, MixBoundariesReduceToPurePolicies) {
  for (std::uint64_t n : {5ull, 8ull}) {
    const auto sim = random_matrix(n, n);
    for (std::uint64_t k : {2ull, 3ull}) {
      const auto space = CombinationSpace::make(n, k, false);
      const Selector mix_hi({PolicyKind::heterogeneous_mix, 1.0, false}, space, &sim);
      const Selector high({PolicyKind::similarity_high, 0.5, false}, space, &sim);
      const Selector mix_lo({PolicyKind::heterogeneous_mix, 0.0, false}, space, &sim);
      const Selector low({PolicyKind::similarity_low, 0.5, false}, space, &sim);
      for (u128 r = 0; r < space.size; ++r) {
        EXPECT_EQ(mix_hi.select(r), high.select(r));
        EXPECT_EQ(mix_lo.select(r), low.select(r));
      }
    }
  }
}

TEST(SelectMembers, HighAndLowCoverTheSameTupleSet) {
  for (std::uint64_t n = 2; n <= 8; ++n) {
    const auto sim = random_matrix(n, 100 + n);
    for (std::uint64_t k = 1; k <= n; ++k) {
      const auto space = CombinationSpace::make(n, k, false);
      std::set<IndexTuple> all, high, low;
      const Selector hs({PolicyKind::similarity_high, 0.5, false}, space, &sim);
      const Selector ls({PolicyKind::similarity_low, 0.5, false}, space, &sim);
      for (u128 r = 0; r < space.size; ++r) {
        all.insert(unrank_combination(space, r));
        high.insert(hs.select(r));
        low.insert(ls.select(r));
      }
      EXPECT_EQ(high, all);
      EXPECT_EQ(low, all);
    }
  }
}

TEST(SelectMembers, EveryPolicyYieldsDistinctSortedIndices) {
  for (auto kind : {PolicyKind::class_based, PolicyKind::similarity_high, PolicyKind::similarity_low,
                    PolicyKind::heterogeneous_mix}) {
    for (double frac : {0.0, 0.34, 0.5, 0.67, 1.0}) {
      const auto sim = random_matrix(9, 3);
      const auto space = CombinationSpace::make(9, 4, false);
      const Selector sel({kind, frac, false}, space, &sim);
      for (u128 r = 0; r < space.size; ++r) {
        const auto t = sel.select(r);
        ASSERT_EQ(t.size(), 4u);
        for (std::size_t i = 1; i < t.size(); ++i) ASSERT_LT(t[i - 1], t[i]);
        ASSERT_LT(t.back(), 9u);
      }
    }
  }
}

TEST(SelectMembers, Errors) {
  const auto space = CombinationSpace::make(3, 2, false);
  try {
    select_members({PolicyKind::similarity_low, 0.5, false}, space, nullptr, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::PolicyMissingSimilarity);
  }
  const auto sim = ordering_201();
  try {
    select_members({PolicyKind::similarity_high, 0.5, false}, space, &sim, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RankOutOfRange);
  }
  EXPECT_THROW(select_members({PolicyKind::heterogeneous_mix, 1.5, false}, space, &sim, 0), Error);
}

TEST(SelectionPolicy, Parsing) {
  EXPECT_EQ(parse_policy_kind("heterogeneous_mix"), PolicyKind::heterogeneous_mix);
  EXPECT_THROW(parse_policy_kind("clustered"), Error);
  EXPECT_EQ((SelectionPolicy{PolicyKind::heterogeneous_mix, 0.5, false}.high_count(3)), 2u);
}

}  // namespace
}  // namespace coimg
