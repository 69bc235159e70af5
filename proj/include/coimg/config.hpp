#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "coimg/balancer.hpp"
#include "coimg/composer.hpp"
#include "coimg/error.hpp"
#include "coimg/manifest.hpp"
#include "coimg/selection.hpp"

namespace coimg {

inline const std::set<std::string>& lossless_formats() {
  static const std::set<std::string> formats{"png", "bmp", "ppm", "tiff"};
  return formats;
}

/// Everything that determines a generated dataset. The seed has no default:
/// planning without one is an error.
struct GenerationConfig {
  std::string input_root;
  std::string output_root;
  Layout layout;
  SelectionPolicy policy;
  std::optional<std::uint64_t> seed;
  double max_rotation_degrees = 3.0;
  std::string image_format = "png";
  std::optional<u128> override_target;
  std::optional<u128> per_class_cap;
  bool disjoint = false;
  bool balanced = true;
  u128 generation_limit = 1'000'000;
  std::set<std::string> extensions = default_extensions();
  std::optional<std::string> similarity_cache;

  std::uint64_t k() const { return layout.k(); }

  void validate() const {
    layout.validate();
    policy.validate();
    if (!(max_rotation_degrees >= 0.0)) throw Error(ErrorKind::InvalidArgument, "max_rotation_degrees must be >= 0");
    if (!lossless_formats().contains(image_format)) {
      throw Error(ErrorKind::InvalidArgument, "unsupported image_format " + image_format + " (use png, bmp, ppm or tiff)");
    }
    if (balanced && per_class_cap) throw Error(ErrorKind::InvalidArgument, "per_class_cap applies to unbalanced plans");
    if (!balanced && override_target) {
      throw Error(ErrorKind::InvalidArgument, "override_target applies to balanced plans");
    }
  }

  std::uint64_t require_seed() const {
    if (!seed) throw Error(ErrorKind::InvalidArgument, "a seed is required (config key \"seed\" or --seed)");
    return *seed;
  }
};

inline nlohmann::ordered_json to_json(const GenerationConfig& c) {
  nlohmann::ordered_json j{{"input_root", c.input_root},
                           {"output_root", c.output_root},
                           {"layout", to_json(c.layout)},
                           {"policy", to_string(c.policy.kind)},
                           {"high_fraction", c.policy.high_fraction},
                           {"with_repetition", c.policy.with_repetition},
                           {"seed", nullptr},
                           {"max_rotation_degrees", c.max_rotation_degrees},
                           {"image_format", c.image_format},
                           {"override_target", nullptr},
                           {"per_class_cap", nullptr},
                           {"disjoint", c.disjoint},
                           {"balanced", c.balanced},
                           {"generation_limit", count_to_json(c.generation_limit)},
                           {"extensions", c.extensions},
                           {"similarity_cache", nullptr}};
  if (c.seed) j["seed"] = *c.seed;
  if (c.override_target) j["override_target"] = count_to_json(*c.override_target);
  if (c.per_class_cap) j["per_class_cap"] = count_to_json(*c.per_class_cap);
  if (c.similarity_cache) j["similarity_cache"] = *c.similarity_cache;
  return j;
}

inline GenerationConfig config_from_json(const nlohmann::ordered_json& j) {
  static const std::set<std::string> known{"input_root", "output_root", "layout", "policy", "high_fraction",
                                           "with_repetition", "seed", "max_rotation_degrees", "image_format",
                                           "override_target", "per_class_cap", "disjoint", "balanced",
                                           "generation_limit", "extensions", "similarity_cache"};
  if (!j.is_object()) throw Error(ErrorKind::InvalidArgument, "config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw Error(ErrorKind::InvalidArgument, "unknown config key: " + key);
  }
  GenerationConfig c;
  try {
    c.input_root = j.value("input_root", c.input_root);
    c.output_root = j.value("output_root", c.output_root);
    if (j.contains("layout")) c.layout = layout_from_json(j.at("layout"));
    if (j.contains("policy")) c.policy.kind = parse_policy_kind(j.at("policy").get<std::string>());
    c.policy.high_fraction = j.value("high_fraction", c.policy.high_fraction);
    c.policy.with_repetition = j.value("with_repetition", c.policy.with_repetition);
    if (j.contains("seed") && !j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
    c.max_rotation_degrees = j.value("max_rotation_degrees", c.max_rotation_degrees);
    c.image_format = j.value("image_format", c.image_format);
    if (j.contains("override_target") && !j.at("override_target").is_null()) {
      c.override_target = count_from_json(j.at("override_target"));
    }
    if (j.contains("per_class_cap") && !j.at("per_class_cap").is_null()) {
      c.per_class_cap = count_from_json(j.at("per_class_cap"));
    }
    c.disjoint = j.value("disjoint", c.disjoint);
    c.balanced = j.value("balanced", c.balanced);
    if (j.contains("generation_limit")) c.generation_limit = count_from_json(j.at("generation_limit"));
    if (j.contains("extensions")) c.extensions = j.at("extensions").get<std::set<std::string>>();
    if (j.contains("similarity_cache") && !j.at("similarity_cache").is_null()) {
      c.similarity_cache = j.at("similarity_cache").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed config: ") + e.what());
  }
  return c;
}

inline nlohmann::ordered_json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open " + path.string());
  try {
    return nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, path.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorKind::WriteFailure, "cannot write " + path.string());
}

inline void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

/// Builds a plan from a resolved config. Similarity matrices are computed (or
/// loaded from the cache) here when the policy needs them.
inline CompositePlan plan_from_config(const GenerationConfig& config, const DatasetManifest& manifest,
                                      unsigned workers = default_workers()) {
  config.validate();
  const std::uint64_t seed = config.require_seed();
  PlanOptions options;
  options.max_rotation_degrees = config.max_rotation_degrees;
  options.override_target = config.override_target;
  options.per_class_cap = config.per_class_cap;
  options.disjoint = config.disjoint;
  options.generation_limit = config.generation_limit;
  options.image_extension = config.image_format;
  options.config = to_json(config);
  if (config.policy.needs_similarity()) {
    std::optional<fs::path> cache;
    if (config.similarity_cache) cache = fs::path(*config.similarity_cache);
    for (const auto& cls : manifest.classes) {
      options.similarities.emplace(cls.name, build_similarity_matrix(manifest, cls, cache, workers));
    }
  }
  return config.balanced ? plan_balanced(manifest, config.layout, config.policy, seed, options)
                         : plan_unbalanced(manifest, config.layout, config.policy, seed, options);
}

}  // namespace coimg
