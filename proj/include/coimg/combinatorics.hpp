#pragma once

// Exact counting, ranking and unranking over k-combinations and k-multisets,
// plus distinct-rank sampling. Tuples are ordered lexicographically over
// ascending index sequences.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "coimg/error.hpp"
#include "coimg/random.hpp"
#include "coimg/uint128.hpp"

namespace coimg {

using IndexTuple = std::vector<std::uint64_t>;

/// C(n, k), exact. Returns 0 for k > n and throws Overflow when the result
/// does not fit in 128 bits.
///
/// Each step computes C(n, i+1) = C(n, i) * (n-i) / (i+1) after cancelling
/// gcd(n-i, i+1), so intermediates never exceed the final value.
inline u128 binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  u128 result = 1;
  for (std::uint64_t i = 0; i < k; ++i) {
    std::uint64_t num = n - i;
    std::uint64_t den = i + 1;
    const std::uint64_t g = std::gcd(num, den);
    num /= g;
    den /= g;
    result /= den;  // exact: den divides C(n, i) once gcd(num, den) = 1
    u128 next = 0;
    if (__builtin_mul_overflow(result, static_cast<u128>(num), &next)) {
      throw Error(ErrorKind::Overflow,
                  "C(" + std::to_string(n) + "," + std::to_string(k) + ") exceeds 128 bits");
    }
    result = next;
  }
  return result;
}

/// Number of size-k multisets over n symbols, C(n+k-1, k).
inline u128 multiset_binomial(std::uint64_t n, std::uint64_t k) {
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "multiset_binomial requires n >= 1");
  if (k > UINT64_MAX - (n - 1)) throw Error(ErrorKind::Overflow, "n + k - 1 exceeds 64 bits");
  return binomial(n + k - 1, k);
}

/// The set of k-tuples drawn from n class-local indices.
struct CombinationSpace {
  std::uint64_t n = 0;
  std::uint64_t k = 0;
  bool with_repetition = false;
  u128 size = 0;

  static CombinationSpace make(std::uint64_t n, std::uint64_t k, bool with_repetition) {
    CombinationSpace space{n, k, with_repetition, 0};
    if (!with_repetition) {
      space.size = binomial(n, k);
    } else if (n == 0) {
      space.size = k == 0 ? 1 : 0;
    } else {
      space.size = multiset_binomial(n, k);
    }
    return space;
  }

  // Multisets over n map onto strictly increasing tuples over n+k-1 via
  // a_i -> a_i + i; the map preserves lexicographic order.
  std::uint64_t strict_population() const { return with_repetition && n > 0 ? n + k - 1 : n; }

  friend bool operator==(const CombinationSpace&, const CombinationSpace&) = default;
};

/// The rank-th tuple of `space` in lexicographic order.
inline IndexTuple unrank_combination(const CombinationSpace& space, u128 rank) {
  if (rank >= space.size) {
    throw Error(ErrorKind::RankOutOfRange,
                "rank " + to_string(rank) + " not below space size " + to_string(space.size));
  }
  const std::uint64_t population = space.strict_population();
  IndexTuple tuple;
  tuple.reserve(space.k);
  std::uint64_t lo = 0;
  for (std::uint64_t i = 0; i < space.k; ++i) {
    const std::uint64_t remaining = space.k - i;
    // Tuples whose next element is below c, among those with next element >= lo:
    //   C(population-lo, remaining) - C(population-c, remaining).
    // Binary search for the largest c whose preceding block does not exceed rank.
    const u128 total = binomial(population - lo, remaining);
    std::uint64_t a = lo;
    std::uint64_t b = population - remaining;
    while (a < b) {
      const std::uint64_t mid = a + (b - a + 1) / 2;
      if (total - binomial(population - mid, remaining) <= rank) {
        a = mid;
      } else {
        b = mid - 1;
      }
    }
    rank -= total - binomial(population - a, remaining);
    tuple.push_back(space.with_repetition ? a - i : a);
    lo = a + 1;
  }
  return tuple;
}

/// Inverse of unrank_combination.
inline u128 rank_combination(const CombinationSpace& space, std::span<const std::uint64_t> tuple) {
  if (tuple.size() != space.k) {
    throw Error(ErrorKind::MalformedTuple,
                "expected " + std::to_string(space.k) + " indices, got " + std::to_string(tuple.size()));
  }
  const std::uint64_t population = space.strict_population();
  u128 rank = 0;
  std::uint64_t lo = 0;
  for (std::uint64_t i = 0; i < space.k; ++i) {
    if (tuple[i] >= space.n) throw Error(ErrorKind::MalformedTuple, "index out of range");
    if (i > 0) {
      const bool ordered = space.with_repetition ? tuple[i] >= tuple[i - 1] : tuple[i] > tuple[i - 1];
      if (!ordered) throw Error(ErrorKind::MalformedTuple, "tuple is not sorted as required");
    }
    const std::uint64_t c = space.with_repetition ? tuple[i] + i : tuple[i];
    const std::uint64_t remaining = space.k - i;
    rank += binomial(population - lo, remaining) - binomial(population - c, remaining);
    lo = c + 1;
  }
  return rank;
}

namespace detail {

inline constexpr u128 kMaxMaterialized = static_cast<u128>(1) << 40;

inline void draw_distinct(Engine& engine, u128 space_size, u128 count,
                          std::unordered_set<u128, U128Hash>& chosen) {
  chosen.reserve(static_cast<std::size_t>(count));
  while (chosen.size() < count) chosen.insert(draw_below(engine, space_size));
}

}  // namespace detail

/// `count` distinct ranks from [0, space_size), uniform over subsets and
/// returned in ascending order. Rejection against a hash set while
/// count <= space_size / 2; above that, the complement is sampled instead.
inline std::vector<u128> sample_distinct_ranks(u128 space_size, u128 count, std::uint64_t seed) {
  if (count > space_size) {
    throw Error(ErrorKind::CountExceedsSpace,
                "cannot draw " + to_string(count) + " distinct ranks from " + to_string(space_size));
  }
  if (count > detail::kMaxMaterialized) {
    throw Error(ErrorKind::InvalidArgument, "sample of " + to_string(count) + " ranks is too large");
  }
  Engine engine(seed);
  std::vector<u128> out;
  out.reserve(static_cast<std::size_t>(count));
  std::unordered_set<u128, U128Hash> chosen;
  if (count > space_size / 2) {
    // space_size < 2 * count + 2 here, so walking the whole space is O(count).
    detail::draw_distinct(engine, space_size, space_size - count, chosen);
    for (u128 r = 0; r < space_size; ++r) {
      if (!chosen.contains(r)) out.push_back(r);
    }
    return out;
  }
  detail::draw_distinct(engine, space_size, count, chosen);
  out.assign(chosen.begin(), chosen.end());
  std::sort(out.begin(), out.end());
  return out;
}

/// Streams distinct ranks of [0, space_size) in uniformly random order using a
/// sparse Fisher-Yates shuffle. Used when the caller cannot know up front how
/// many ranks it will consume.
class RankStream {
 public:
  RankStream(u128 space_size, std::uint64_t seed) : engine_(seed), size_(space_size) {}

  std::optional<u128> next() {
    if (position_ >= size_) return std::nullopt;
    const u128 pick = position_ + draw_below(engine_, size_ - position_);
    const u128 value = lookup(pick);
    swapped_[pick] = lookup(position_);
    swapped_.erase(position_);
    ++position_;
    return value;
  }

  u128 drawn() const { return position_; }

 private:
  u128 lookup(u128 slot) const {
    const auto it = swapped_.find(slot);
    return it == swapped_.end() ? slot : it->second;
  }

  Engine engine_;
  u128 size_;
  u128 position_ = 0;
  std::unordered_map<u128, u128, U128Hash> swapped_;
};

}  // namespace coimg
