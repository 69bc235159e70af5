#pragma once

// Per-class composite budgets.
//
// The balancing target T is the smallest per-class combination count. Every
// class then contributes exactly T records:
//   M >  T  sampled     T distinct ranks drawn with the class seed
//   M == T  exhaustive  every rank once
//   M <  T  completion  every unique tuple once per epoch, epochs 0, 1, ...
// M < T only happens with an explicit target override, with --disjoint, or
// when a non-bijective policy runs out of distinct member sets.

#include <algorithm>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coimg/combinatorics.hpp"
#include "coimg/composer.hpp"
#include "coimg/error.hpp"
#include "coimg/manifest.hpp"
#include "coimg/random.hpp"
#include "coimg/selection.hpp"
#include "coimg/version.hpp"

namespace coimg {

enum class PlanMode { exhaustive, sampled, completion, capped };

inline std::string_view to_string(PlanMode mode) {
  switch (mode) {
    case PlanMode::exhaustive: return "exhaustive";
    case PlanMode::sampled: return "sampled";
    case PlanMode::completion: return "completion";
    case PlanMode::capped: return "capped";
  }
  return "exhaustive";
}

inline PlanMode parse_plan_mode(std::string_view text) {
  for (auto m : {PlanMode::exhaustive, PlanMode::sampled, PlanMode::completion, PlanMode::capped}) {
    if (text == to_string(m)) return m;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown plan mode: " + std::string(text));
}

struct ClassPlan {
  std::string class_name;
  std::uint64_t n = 0;
  u128 space_size = 0;
  PlanMode mode = PlanMode::exhaustive;
  std::vector<u128> sampled_ranks;  // sampled mode only
  std::uint64_t epochs_needed = 0;  // completion mode only
  std::vector<CompositeRecord> records;
};

struct CompositePlan {
  bool balanced = true;
  u128 target = 0;  // 0 for unbalanced plans
  std::uint64_t k = 0;
  Layout layout;
  SelectionPolicy policy;
  std::uint64_t seed = 0;
  bool disjoint = false;
  double max_rotation_degrees = 3.0;
  std::string manifest_digest;
  nlohmann::ordered_json config;  // fully resolved generation config, for provenance
  std::vector<ClassPlan> classes;

  std::uint64_t total_records() const {
    std::uint64_t total = 0;
    for (const auto& c : classes) total += c.records.size();
    return total;
  }
};

struct PlanOptions {
  double max_rotation_degrees = 3.0;
  std::optional<u128> override_target;
  std::optional<u128> per_class_cap;  // unbalanced plans only
  bool disjoint = false;
  u128 generation_limit = 1'000'000;
  std::string image_extension = "png";
  std::map<std::string, SimilarityMatrix> similarities;  // required for similarity policies
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
};

/// SHA-256 over (class, path, digest) of every entry; ties a plan to a manifest.
inline std::string manifest_digest(const DatasetManifest& manifest) {
  Sha256 h;
  for (const auto& c : manifest.classes) {
    for (const auto& e : c.entries) h.update(c.name + "\t" + e.relative_path + "\t" + e.digest + "\n");
  }
  return to_hex(h.finish());
}

inline CombinationSpace class_space(const ClassEntries& cls, std::uint64_t k, bool with_repetition) {
  return CombinationSpace::make(cls.size(), k, with_repetition);
}

/// T = min over classes of the class's combination count.
inline u128 compute_target(const DatasetManifest& manifest, std::uint64_t k, bool with_repetition = false) {
  if (manifest.classes.empty()) throw Error(ErrorKind::EmptyDataset, "manifest has no classes");
  u128 target = kU128Max;
  for (const auto& cls : manifest.classes) {
    const u128 m = class_space(cls, k, with_repetition).size;
    if (m == 0) {
      throw Error(ErrorKind::DegenerateClass, "class " + cls.name + " has " + std::to_string(cls.size()) +
                                                  " images, fewer than k = " + std::to_string(k));
    }
    target = std::min(target, m);
  }
  return target;
}

namespace detail {

struct UniqueTuple {
  u128 rank;
  IndexTuple members;
};

inline void check_materializable(u128 per_class, std::size_t classes, const PlanOptions& options) {
  u128 total = 0;
  if (__builtin_mul_overflow(per_class, static_cast<u128>(classes), &total)) {
    throw Error(options.override_target ? ErrorKind::OverrideTooLarge : ErrorKind::PlanTooLarge,
                "record count overflows 128 bits");
  }
  if (total > options.generation_limit) {
    throw Error(ErrorKind::PlanTooLarge, "plan needs " + to_string(total) + " records, above the generation limit " +
                                             to_string(options.generation_limit));
  }
}

inline const SimilarityMatrix* similarity_for(const SelectionPolicy& policy, const ClassEntries& cls,
                                              const PlanOptions& options) {
  if (!policy.needs_similarity()) return nullptr;
  const auto it = options.similarities.find(cls.name);
  if (it == options.similarities.end()) {
    throw Error(ErrorKind::PolicyMissingSimilarity, "no similarity matrix for class " + cls.name);
  }
  return &it->second;
}

// Walks ranks in the given order and keeps those whose member set has not
// been seen, stopping at `want` tuples.
template <typename NextRank>
std::vector<UniqueTuple> distinct_tuples(const Selector& selector, u128 want, NextRank&& next_rank) {
  std::vector<UniqueTuple> out;
  std::set<IndexTuple> seen;
  while (out.size() < want) {
    const std::optional<u128> rank = next_rank();
    if (!rank) break;
    IndexTuple members = selector.select(*rank);
    if (seen.insert(members).second) out.push_back({*rank, std::move(members)});
  }
  std::sort(out.begin(), out.end(), [](const UniqueTuple& a, const UniqueTuple& b) { return a.rank < b.rank; });
  return out;
}

inline std::vector<UniqueTuple> ranks_in_order(const Selector& selector, u128 want) {
  u128 next = 0;
  const u128 size = selector.space().size;
  return distinct_tuples(selector, want, [&]() -> std::optional<u128> {
    if (next >= size) return std::nullopt;
    return next++;
  });
}

// Disjoint groups: a seeded shuffle of the class indices cut into consecutive
// runs of k. At most floor(n / k) groups.
inline std::vector<UniqueTuple> disjoint_groups(const CombinationSpace& space, std::uint64_t class_seed, u128 want) {
  std::vector<std::uint64_t> order(space.n);
  for (std::uint64_t i = 0; i < space.n; ++i) order[i] = i;
  Engine engine(mix64(class_seed ^ 0xD15C0117ULL));
  for (std::uint64_t i = space.n; i > 1; --i) {
    const auto j = static_cast<std::uint64_t>(draw_below(engine, i));
    std::swap(order[i - 1], order[j]);
  }
  std::vector<UniqueTuple> out;
  for (std::uint64_t g = 0; space.k > 0 && (g + 1) * space.k <= space.n && out.size() < want; ++g) {
    IndexTuple members(order.begin() + g * space.k, order.begin() + (g + 1) * space.k);
    std::sort(members.begin(), members.end());
    out.push_back({rank_combination(space, members), std::move(members)});
  }
  std::sort(out.begin(), out.end(), [](const UniqueTuple& a, const UniqueTuple& b) { return a.rank < b.rank; });
  return out;
}

inline void emit_records(ClassPlan& plan, const std::vector<UniqueTuple>& unique, u128 count, std::uint64_t seed,
                         std::uint64_t k, const PlanOptions& options) {
  if (unique.empty()) throw Error(ErrorKind::DegenerateClass, "class " + plan.class_name + " has no composites");
  const std::size_t u = unique.size();
  const auto total = static_cast<std::size_t>(count);
  plan.records.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    const UniqueTuple& t = unique[i % u];
    const std::uint64_t epoch = i / u;
    plan.records.push_back({plan.class_name, t.rank, t.members,
                            derive_slot_transforms(seed, plan.class_name, t.rank, epoch, k,
                                                   options.max_rotation_degrees),
                            epoch, composite_path(plan.class_name, t.rank, epoch, options.image_extension)});
  }
  plan.epochs_needed = total == 0 ? 0 : (total + u - 1) / u - 1;
}

}  // namespace detail

inline CompositePlan make_plan_header(const DatasetManifest& manifest, const Layout& layout,
                                      const SelectionPolicy& policy, std::uint64_t seed, const PlanOptions& options) {
  layout.validate();
  policy.validate();
  if (!(options.max_rotation_degrees >= 0.0)) throw Error(ErrorKind::InvalidArgument, "max rotation must be >= 0");
  if (options.disjoint && (policy.with_repetition || policy.kind != PolicyKind::class_based)) {
    throw Error(ErrorKind::InvalidArgument, "disjoint mode requires the class_based policy without repetition");
  }
  CompositePlan plan;
  plan.k = layout.k();
  plan.layout = layout;
  plan.policy = policy;
  plan.seed = seed;
  plan.disjoint = options.disjoint;
  plan.max_rotation_degrees = options.max_rotation_degrees;
  plan.manifest_digest = manifest_digest(manifest);
  plan.config = options.config;
  return plan;
}

/// Balanced plan: every class gets exactly T records.
inline CompositePlan plan_balanced(const DatasetManifest& manifest, const Layout& layout,
                                   const SelectionPolicy& policy, std::uint64_t seed,
                                   const PlanOptions& options = {}) {
  CompositePlan plan = make_plan_header(manifest, layout, policy, seed, options);
  const u128 natural = compute_target(manifest, plan.k, policy.with_repetition);
  if (options.override_target && *options.override_target == 0) {
    throw Error(ErrorKind::InvalidArgument, "override target must be at least 1");
  }
  const u128 target = options.override_target.value_or(natural);
  detail::check_materializable(target, manifest.classes.size(), options);
  plan.balanced = true;
  plan.target = target;

  for (const auto& cls : manifest.classes) {
    const CombinationSpace space = class_space(cls, plan.k, policy.with_repetition);
    const Selector selector(policy, space, detail::similarity_for(policy, cls, options));
    const std::uint64_t class_seed = derive_class_seed(seed, cls.name);
    ClassPlan cp{cls.name, cls.size(), space.size, PlanMode::exhaustive, {}, 0, {}};

    std::vector<detail::UniqueTuple> unique;
    if (space.size > target && options.disjoint) {
      unique = detail::disjoint_groups(space, class_seed, target);
      cp.mode = unique.size() == target ? PlanMode::sampled : PlanMode::completion;
    } else if (space.size > target) {
      if (policy.bijective()) {
        for (u128 r : sample_distinct_ranks(space.size, target, class_seed)) unique.push_back({r, selector.select(r)});
      } else {
        RankStream stream(space.size, class_seed);
        unique = detail::distinct_tuples(selector, target, [&] { return stream.next(); });
      }
      cp.mode = unique.size() == target ? PlanMode::sampled : PlanMode::completion;
    } else {
      unique = detail::ranks_in_order(selector, target);
      cp.mode = space.size == target && unique.size() == target ? PlanMode::exhaustive : PlanMode::completion;
    }
    if (cp.mode == PlanMode::sampled) {
      for (const auto& t : unique) cp.sampled_ranks.push_back(t.rank);
    }
    detail::emit_records(cp, unique, target, seed, plan.k, options);
    plan.classes.push_back(std::move(cp));
  }
  return plan;
}

/// Exact per-class combination counts, without materializing anything.
inline std::vector<std::pair<std::string, u128>> count_unbalanced(const DatasetManifest& manifest, std::uint64_t k,
                                                                  bool with_repetition = false) {
  std::vector<std::pair<std::string, u128>> out;
  for (const auto& cls : manifest.classes) out.emplace_back(cls.name, class_space(cls, k, with_repetition).size);
  return out;
}

/// Unbalanced plan: per class the first min(cap, M) distinct tuples in rank
/// order. Without a cap this is the full combination space, which is refused
/// above the generation limit.
inline CompositePlan plan_unbalanced(const DatasetManifest& manifest, const Layout& layout,
                                     const SelectionPolicy& policy, std::uint64_t seed,
                                     const PlanOptions& options = {}) {
  CompositePlan plan = make_plan_header(manifest, layout, policy, seed, options);
  if (options.disjoint) throw Error(ErrorKind::InvalidArgument, "disjoint mode applies to balanced plans only");
  plan.balanced = false;
  u128 total = 0;
  std::vector<u128> counts;
  for (const auto& cls : manifest.classes) {
    const u128 m = class_space(cls, plan.k, policy.with_repetition).size;
    const u128 c = options.per_class_cap ? std::min(*options.per_class_cap, m) : m;
    counts.push_back(c);
    if (__builtin_add_overflow(total, c, &total)) throw Error(ErrorKind::PlanTooLarge, "record count overflows");
  }
  if (total > options.generation_limit) {
    throw Error(ErrorKind::PlanTooLarge, "plan needs " + to_string(total) + " records, above the generation limit " +
                                             to_string(options.generation_limit));
  }
  for (std::size_t i = 0; i < manifest.classes.size(); ++i) {
    const auto& cls = manifest.classes[i];
    const CombinationSpace space = class_space(cls, plan.k, policy.with_repetition);
    const Selector selector(policy, space, detail::similarity_for(policy, cls, options));
    ClassPlan cp{cls.name, cls.size(), space.size, PlanMode::capped, {}, 0, {}};
    const auto unique = detail::ranks_in_order(selector, counts[i]);
    cp.mode = unique.size() == space.size ? PlanMode::exhaustive : PlanMode::capped;
    if (!unique.empty()) detail::emit_records(cp, unique, unique.size(), seed, plan.k, options);
    plan.classes.push_back(std::move(cp));
  }
  return plan;
}

// --- serialization --------------------------------------------------------

inline nlohmann::ordered_json to_json(const SelectionPolicy& p) {
  return {{"kind", to_string(p.kind)}, {"high_fraction", p.high_fraction}, {"with_repetition", p.with_repetition}};
}

inline SelectionPolicy policy_from_json(const nlohmann::ordered_json& j) {
  SelectionPolicy p;
  p.kind = parse_policy_kind(j.value("kind", std::string("class_based")));
  p.high_fraction = j.value("high_fraction", p.high_fraction);
  p.with_repetition = j.value("with_repetition", p.with_repetition);
  return p;
}

inline nlohmann::ordered_json plan_header_json(const CompositePlan& plan) {
  return {{"tool_version", kToolVersion},
          {"balanced", plan.balanced},
          {"target", count_to_json(plan.target)},
          {"k", plan.k},
          {"layout", to_json(plan.layout)},
          {"policy", to_json(plan.policy)},
          {"seed", plan.seed},
          {"disjoint", plan.disjoint},
          {"max_rotation_degrees", plan.max_rotation_degrees},
          {"manifest_digest", plan.manifest_digest},
          {"config", plan.config}};
}

inline nlohmann::ordered_json to_json(const CompositePlan& plan) {
  nlohmann::ordered_json j = plan_header_json(plan);
  nlohmann::ordered_json classes = nlohmann::ordered_json::array();
  for (const auto& c : plan.classes) {
    nlohmann::ordered_json records = nlohmann::ordered_json::array();
    for (const auto& r : c.records) records.push_back(to_json(r));
    classes.push_back({{"name", c.class_name},
                       {"n", c.n},
                       {"space_size", count_to_json(c.space_size)},
                       {"mode", to_string(c.mode)},
                       {"epochs_needed", c.epochs_needed},
                       {"records", std::move(records)}});
  }
  j["classes"] = std::move(classes);
  return j;
}

inline CompositePlan plan_from_json(const nlohmann::ordered_json& j) {
  CompositePlan plan;
  try {
    plan.balanced = j.at("balanced").get<bool>();
    plan.target = count_from_json(j.at("target"));
    plan.k = j.at("k").get<std::uint64_t>();
    plan.layout = layout_from_json(j.at("layout"));
    plan.policy = policy_from_json(j.at("policy"));
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.disjoint = j.value("disjoint", false);
    plan.max_rotation_degrees = j.at("max_rotation_degrees").get<double>();
    plan.manifest_digest = j.at("manifest_digest").get<std::string>();
    plan.config = j.value("config", nlohmann::ordered_json::object());
    for (const auto& c : j.at("classes")) {
      ClassPlan cp;
      cp.class_name = c.at("name").get<std::string>();
      cp.n = c.at("n").get<std::uint64_t>();
      cp.space_size = count_from_json(c.at("space_size"));
      cp.mode = parse_plan_mode(c.at("mode").get<std::string>());
      cp.epochs_needed = c.at("epochs_needed").get<std::uint64_t>();
      for (const auto& r : c.at("records")) cp.records.push_back(record_from_json(r));
      if (cp.mode == PlanMode::sampled) {
        for (const auto& r : cp.records) cp.sampled_ranks.push_back(r.rank);
      }
      plan.classes.push_back(std::move(cp));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed plan: ") + e.what());
  }
  if (plan.layout.k() != plan.k) throw Error(ErrorKind::InvalidArgument, "plan k does not match its layout");
  return plan;
}

/// Text summary: class, N_c, M, mode and record count, then totals.
inline std::string explain_plan(const CompositePlan& plan) {
  std::ostringstream out;
  out << std::left << std::setw(16) << "class" << std::right << std::setw(10) << "N_c" << std::setw(14) << "M"
      << std::setw(13) << "mode" << std::setw(12) << "records" << "\n";
  std::uint64_t total_n = 0;
  u128 total_m = 0;
  bool m_overflow = false;
  for (const auto& c : plan.classes) {
    out << std::left << std::setw(16) << c.class_name << std::right << std::setw(10) << c.n << std::setw(14)
        << to_string(c.space_size) << std::setw(13) << to_string(c.mode) << std::setw(12) << c.records.size()
        << "\n";
    total_n += c.n;
    m_overflow = m_overflow || __builtin_add_overflow(total_m, c.space_size, &total_m);
  }
  out << std::left << std::setw(16) << "Total" << std::right << std::setw(10) << total_n << std::setw(14)
      << (m_overflow ? std::string("overflow") : to_string(total_m)) << std::setw(13) << "" << std::setw(12)
      << plan.total_records() << "\n";
  out << "k = " << plan.k << " (" << plan.layout.rows << "x" << plan.layout.cols << ")";
  if (plan.balanced) {
    out << ", T = " << to_string(plan.target) << ", balanced total = " << plan.total_records() << " (T x "
        << plan.classes.size() << ")";
  } else {
    out << ", unbalanced";
  }
  out << "\n";
  return out.str();
}

}  // namespace coimg
