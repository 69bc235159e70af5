#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "coimg/combinatorics.hpp"
#include "coimg/random.hpp"
#include "fixtures.hpp"

namespace coimg {
namespace {

using testing::enumerate_tuples;

TEST(Binomial, OctdlClassProfile) {
  EXPECT_EQ(binomial(1231, 3), u128{310'144'295});
  EXPECT_EQ(binomial(147, 3), u128{518'665});
  EXPECT_EQ(binomial(155, 3), u128{608'685});
  EXPECT_EQ(binomial(332, 3), u128{6'044'060});
  EXPECT_EQ(binomial(101, 3), u128{166'650});
  EXPECT_EQ(binomial(76, 3), u128{70'300});
  EXPECT_EQ(binomial(22, 3), u128{1'540});
}

TEST(Binomial, OctdlProfileSum) {
  u128 sum = 0;
  for (std::uint64_t n : {1231, 147, 155, 332, 101, 76, 22}) sum += binomial(n, 3);
  EXPECT_EQ(sum, u128{317'554'195});
}

TEST(Binomial, EdgeCases) {
  for (std::uint64_t n : {0, 1, 5, 1000}) EXPECT_EQ(binomial(n, 0), u128{1});
  EXPECT_EQ(binomial(3, 4), u128{0});
  EXPECT_EQ(binomial(0, 1), u128{0});
  EXPECT_EQ(binomial(2064, 3), u128{1'463'343'664});
}

TEST(Binomial, LargeExactValue) {
  EXPECT_EQ(to_string(binomial(128, 64)), "23951146041928082866135587776380551750");
}

TEST(Binomial, OverflowIsReported) {
  EXPECT_THROW(binomial(200, 100), Error);
  try {
    binomial(400, 200);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Overflow);
  }
}

TEST(Binomial, PascalAndSymmetry) {
  for (std::uint64_t n = 1; n <= 60; ++n) {
    for (std::uint64_t k = 1; k <= n; ++k) {
      EXPECT_EQ(binomial(n, k), binomial(n - 1, k - 1) + binomial(n - 1, k)) << n << "," << k;
    }
    for (std::uint64_t k = 0; k <= n; ++k) EXPECT_EQ(binomial(n, k), binomial(n, n - k));
  }
}

TEST(MultisetBinomial, Examples) {
  EXPECT_EQ(multiset_binomial(3, 2), u128{6});
  EXPECT_EQ(multiset_binomial(1, 5), u128{1});
  EXPECT_EQ(multiset_binomial(22, 3), u128{enumerate_tuples(22, 3, true).size()});
  EXPECT_EQ(multiset_binomial(22, 3), u128{2'024});
  EXPECT_THROW(multiset_binomial(0, 2), Error);
}

TEST(Unrank, WorkedExamples) {
  const auto s42 = CombinationSpace::make(4, 2, false);
  EXPECT_EQ(unrank_combination(s42, 0), (IndexTuple{0, 1}));
  EXPECT_EQ(unrank_combination(s42, 5), (IndexTuple{2, 3}));
  const auto s32r = CombinationSpace::make(3, 2, true);
  EXPECT_EQ(unrank_combination(s32r, 2), (IndexTuple{0, 2}));
}

TEST(Rank, WorkedExamples) {
  const auto s42 = CombinationSpace::make(4, 2, false);
  EXPECT_EQ(rank_combination(s42, IndexTuple{0, 1}), u128{0});
  EXPECT_EQ(rank_combination(s42, IndexTuple{2, 3}), u128{5});
  EXPECT_EQ(rank_combination(CombinationSpace::make(3, 2, true), IndexTuple{2, 2}), u128{5});
}

TEST(Unrank, MatchesBruteForceOnSmallSpaces) {
  for (bool rep : {false, true}) {
    for (std::uint64_t n = 1; n <= 9; ++n) {
      for (std::uint64_t k = 0; k <= n; ++k) {
        const auto space = CombinationSpace::make(n, k, rep);
        const auto expected = enumerate_tuples(n, k, rep);
        ASSERT_EQ(space.size, u128{expected.size()});
        for (std::size_t r = 0; r < expected.size(); ++r) {
          ASSERT_EQ(unrank_combination(space, r), expected[r]) << n << " " << k << " " << rep;
          ASSERT_EQ(rank_combination(space, expected[r]), u128{r});
        }
      }
    }
  }
}

TEST(Unrank, RoundTripOnLargeSpaces) {
  std::mt19937_64 rng(7);
  for (auto [n, k, rep] : {std::tuple{1231ull, 3ull, false}, std::tuple{2064ull, 3ull, false},
                           std::tuple{1000ull, 12ull, false}, std::tuple{500ull, 6ull, true}}) {
    const auto space = CombinationSpace::make(n, k, rep);
    Engine engine(rng());
    for (int i = 0; i < 300; ++i) {
      const u128 r = draw_below(engine, space.size);
      const auto t = unrank_combination(space, r);
      ASSERT_EQ(t.size(), k);
      for (std::size_t j = 1; j < t.size(); ++j) ASSERT_TRUE(rep ? t[j] >= t[j - 1] : t[j] > t[j - 1]);
      ASSERT_LT(t.back(), n);
      ASSERT_EQ(rank_combination(space, t), r);
    }
    EXPECT_EQ(unrank_combination(space, space.size - 1).front(), rep ? n - 1 : n - k);
  }
}

TEST(Unrank, Errors) {
  const auto space = CombinationSpace::make(4, 2, false);
  try {
    unrank_combination(space, 6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::RankOutOfRange);
  }
  auto malformed = [&](IndexTuple t) {
    try {
      rank_combination(space, t);
      return false;
    } catch (const Error& e) {
      return e.kind() == ErrorKind::MalformedTuple;
    }
  };
  EXPECT_TRUE(malformed({1, 0}));
  EXPECT_TRUE(malformed({1, 1}));
  EXPECT_TRUE(malformed({0, 4}));
  EXPECT_TRUE(malformed({0}));
}

TEST(SampleDistinctRanks, ExhaustiveWhenCountEqualsSpace) {
  for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
    const auto ranks = sample_distinct_ranks(10, 10, seed);
    ASSERT_EQ(ranks.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_EQ(ranks[i], u128{i});
  }
}

TEST(SampleDistinctRanks, DeterministicAtLargeScale) {
  const auto a = sample_distinct_ranks(310'144'295, 1'540, 42);
  const auto b = sample_distinct_ranks(310'144'295, 1'540, 42);
  ASSERT_EQ(a.size(), 1540u);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(std::adjacent_find(a.begin(), a.end(), [](u128 x, u128 y) { return x >= y; }) == a.end());
  EXPECT_LT(a.back(), u128{310'144'295});
  EXPECT_NE(a, sample_distinct_ranks(310'144'295, 1'540, 43));
}

TEST(SampleDistinctRanks, ComplementBranch) {
  for (u128 count : {u128{51}, u128{90}, u128{99}}) {
    const auto r = sample_distinct_ranks(100, count, 5);
    ASSERT_EQ(r.size(), static_cast<std::size_t>(count));
    EXPECT_TRUE(std::is_sorted(r.begin(), r.end()));
    EXPECT_EQ(std::set<u128>(r.begin(), r.end()).size(), r.size());
    EXPECT_LT(r.back(), u128{100});
  }
}

TEST(SampleDistinctRanks, CountExceedsSpace) {
  try {
    sample_distinct_ranks(5, 6, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CountExceedsSpace);
  }
  EXPECT_TRUE(sample_distinct_ranks(0, 0, 0).empty());
}

TEST(SampleDistinctRanks, RoughlyUniformMarginals) {
  // Each rank of [0, 20) should appear in about 5/20 of 4000 draws of size 5.
  std::vector<int> hits(20, 0);
  for (std::uint64_t seed = 0; seed < 4000; ++seed) {
    for (u128 r : sample_distinct_ranks(20, 5, seed)) ++hits[static_cast<std::size_t>(r)];
  }
  for (int h : hits) {
    EXPECT_GT(h, 850);
    EXPECT_LT(h, 1150);
  }
}

TEST(RankStream, VisitsEveryRankOnce) {
  RankStream stream(1000, 3);
  std::set<u128> seen;
  while (auto r = stream.next()) ASSERT_TRUE(seen.insert(*r).second);
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_EQ(*seen.rbegin(), u128{999});
}

TEST(Seeds, SplitMixReferenceValue) {
  // First output of the reference SplitMix64 generator seeded with 0.
  EXPECT_EQ(mix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(Seeds, ClassSeedDependsOnlyOnSeedAndName) {
  EXPECT_EQ(derive_class_seed(7, "AMD"), derive_class_seed(7, "AMD"));
  EXPECT_NE(derive_class_seed(7, "AMD"), derive_class_seed(7, "RAO"));
  EXPECT_NE(derive_class_seed(7, "AMD"), derive_class_seed(8, "AMD"));
}

TEST(DrawBelow, StaysInRange) {
  Engine engine(11);
  const u128 big = (static_cast<u128>(1) << 100) + 12345;
  for (int i = 0; i < 1000; ++i) {
    EXPECT_LT(draw_below(engine, 7), u128{7});
    EXPECT_LT(draw_below(engine, big), big);
  }
  EXPECT_EQ(draw_below(engine, 1), u128{0});
}

}  // namespace
}  // namespace coimg
