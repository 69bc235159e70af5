#pragma once

// Generation and verification of a composite dataset.
//
// Output layout under the output root:
//   <class>/<class>_<rank>[_e<epoch>].<ext>   one file per record
//   generation.jsonl                          one record per line, plan order, with pixel digest
//   generation_meta.json                      plan header + source manifest (used by verify)

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "coimg/balancer.hpp"
#include "coimg/combinatorics.hpp"
#include "coimg/composer.hpp"
#include "coimg/config.hpp"
#include "coimg/error.hpp"
#include "coimg/manifest.hpp"
#include "coimg/parallel.hpp"

namespace coimg {

inline constexpr const char* kGenerationManifest = "generation.jsonl";
inline constexpr const char* kGenerationMeta = "generation_meta.json";

struct GeneratedRecord {
  CompositeRecord record;
  std::string digest;  // empty on failure
  int width = 0;
  int height = 0;
  std::string error;
};

struct GenerationOutcome {
  std::vector<GeneratedRecord> rows;  // plan order
  std::size_t failures = 0;
  fs::path manifest_path;
};

inline nlohmann::ordered_json to_json(const GeneratedRecord& g) {
  nlohmann::ordered_json j = to_json(g.record);
  if (g.error.empty()) {
    j["digest"] = g.digest;
    j["width"] = g.width;
    j["height"] = g.height;
  } else {
    j["digest"] = nullptr;
    j["error"] = g.error;
  }
  return j;
}

inline GeneratedRecord generated_from_json(const nlohmann::ordered_json& j) {
  GeneratedRecord g;
  g.record = record_from_json(j);
  if (j.contains("digest") && j.at("digest").is_string()) g.digest = j.at("digest").get<std::string>();
  g.width = j.value("width", 0);
  g.height = j.value("height", 0);
  g.error = j.value("error", std::string());
  return g;
}

/// Renders every record of `plan`. Per-record failures are collected rather
/// than thrown; the manifest lines are always written in plan order, so the
/// result does not depend on the worker count.
inline GenerationOutcome generate_dataset(const CompositePlan& plan, const DatasetManifest& manifest,
                                          const fs::path& output_root, unsigned workers = default_workers()) {
  if (plan.manifest_digest != manifest_digest(manifest)) {
    throw Error(ErrorKind::InvalidArgument, "plan was built for a different manifest");
  }
  std::vector<const CompositeRecord*> records;
  for (const auto& c : plan.classes) {
    for (const auto& r : c.records) records.push_back(&r);
  }
  std::error_code ec;
  fs::create_directories(output_root, ec);
  if (ec) throw Error(ErrorKind::WriteFailure, output_root.string() + ": " + ec.message());

  GenerationOutcome outcome;
  outcome.rows.resize(records.size());
  parallel_for(records.size(), workers, [&](std::size_t i) {
    GeneratedRecord& row = outcome.rows[i];
    row.record = *records[i];
    try {
      const RenderResult r = render_and_encode(row.record, manifest, plan.layout, output_root);
      row.digest = r.digest;
      row.width = r.width;
      row.height = r.height;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  });

  std::ostringstream lines;
  for (const auto& row : outcome.rows) {
    if (!row.error.empty()) ++outcome.failures;
    lines << to_json(row).dump() << "\n";
  }
  outcome.manifest_path = output_root / kGenerationManifest;
  write_text_file(outcome.manifest_path, lines.str());

  nlohmann::ordered_json meta{{"tool_version", kToolVersion},
                              {"plan", plan_header_json(plan)},
                              {"records", outcome.rows.size()},
                              {"failures", outcome.failures},
                              {"manifest", to_json(manifest)}};
  write_json_file(output_root / kGenerationMeta, meta);
  return outcome;
}

struct VerifyCheck {
  std::string name;
  bool passed = true;
  std::vector<std::string> violations;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
  }

  std::string text(std::size_t max_violations = 20) const {
    std::ostringstream out;
    for (const auto& c : checks) {
      out << (c.passed ? "PASS " : "FAIL ") << c.name;
      if (!c.passed) out << " (" << c.violations.size() << " violations)";
      out << "\n";
      for (std::size_t i = 0; i < c.violations.size() && i < max_violations; ++i) out << "  " << c.violations[i] << "\n";
    }
    out << (passed() ? "verify: PASS" : "verify: FAIL") << "\n";
    return out.str();
  }
};

struct VerifyOptions {
  fs::path generation_manifest;  // defaults to <output_root>/generation.jsonl
  std::uint64_t spot_checks = 100;
  std::uint64_t seed = 0;
  unsigned workers = default_workers();
};

/// Checks an output tree against its generation manifest:
///   class-counts  every class has exactly T records (balanced plans)
///   distinct      no repeated (class, members, epoch), no repeated epoch-0 member set, no shared paths
///   files         every file exists and decodes to the layout dimensions
///   spot-check    for D sampled records: decoded file digest, re-rendered digest and
///                 re-derived transforms all match the manifest
inline VerifyReport verify_output(const fs::path& output_root, VerifyOptions options = {}) {
  if (options.generation_manifest.empty()) options.generation_manifest = output_root / kGenerationManifest;
  const nlohmann::ordered_json meta = read_json_file(output_root / kGenerationMeta);
  CompositePlan header;
  DatasetManifest manifest;
  try {
    const auto& p = meta.at("plan");
    header.balanced = p.at("balanced").get<bool>();
    header.target = count_from_json(p.at("target"));
    header.layout = layout_from_json(p.at("layout"));
    header.k = p.at("k").get<std::uint64_t>();
    header.seed = p.at("seed").get<std::uint64_t>();
    header.max_rotation_degrees = p.at("max_rotation_degrees").get<double>();
    manifest = manifest_from_json(meta.at("manifest"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed generation metadata: ") + e.what());
  }

  std::vector<GeneratedRecord> rows;
  {
    std::ifstream in(options.generation_manifest);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open " + options.generation_manifest.string());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      try {
        rows.push_back(generated_from_json(nlohmann::ordered_json::parse(line)));
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::InvalidArgument, std::string("malformed generation manifest line: ") + e.what());
      }
    }
  }
  auto label = [](const CompositeRecord& r) { return r.output_path; };

  VerifyReport report;

  VerifyCheck counts{"class-counts", true, {}};
  if (header.balanced) {
    std::map<std::string, u128> per_class;
    for (const auto& c : manifest.classes) per_class[c.name] = 0;
    for (const auto& row : rows) ++per_class[row.record.class_name];
    for (const auto& [name, n] : per_class) {
      if (n != header.target) {
        counts.violations.push_back("class " + name + ": " + to_string(n) + " records, expected T = " +
                                    to_string(header.target));
      }
    }
  }
  counts.passed = counts.violations.empty();
  report.checks.push_back(std::move(counts));

  VerifyCheck distinct{"distinct", true, {}};
  {
    std::set<std::tuple<std::string, IndexTuple, std::uint64_t>> keyed;
    std::set<std::pair<std::string, IndexTuple>> epoch0;
    std::set<std::string> paths;
    for (const auto& row : rows) {
      const auto& r = row.record;
      if (!keyed.emplace(r.class_name, r.member_indices, r.augmentation_epoch).second) {
        distinct.violations.push_back("duplicate (members, epoch): " + label(r));
      }
      if (r.augmentation_epoch == 0 && !epoch0.emplace(r.class_name, r.member_indices).second) {
        distinct.violations.push_back("duplicate member set at epoch 0: " + label(r));
      }
      if (!paths.insert(r.output_path).second) distinct.violations.push_back("duplicate output path: " + label(r));
      if (!row.error.empty()) distinct.violations.push_back("record failed during generation: " + label(r));
    }
  }
  distinct.passed = distinct.violations.empty();
  report.checks.push_back(std::move(distinct));

  std::vector<std::string> file_digest(rows.size());
  std::vector<std::string> file_problem(rows.size());
  parallel_for(rows.size(), options.workers, [&](std::size_t i) {
    const fs::path path = output_root / fs::path(rows[i].record.output_path);
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) {
      file_problem[i] = "missing file: " + label(rows[i].record);
      return;
    }
    try {
      const Image img = decode_image(path);
      if (img.width != header.layout.width() || img.height != header.layout.height()) {
        file_problem[i] = "wrong dimensions " + std::to_string(img.width) + "x" + std::to_string(img.height) + ": " +
                          label(rows[i].record);
      }
      file_digest[i] = to_hex(pixel_digest(img));
    } catch (const std::exception& e) {
      file_problem[i] = std::string("undecodable file: ") + e.what();
    }
  });
  VerifyCheck files{"files", true, {}};
  for (const auto& p : file_problem) {
    if (!p.empty()) files.violations.push_back(p);
  }
  files.passed = files.violations.empty();
  report.checks.push_back(std::move(files));

  VerifyCheck spot{"spot-check", true, {}};
  if (!rows.empty() && options.spot_checks > 0) {
    const u128 d = std::min<u128>(options.spot_checks, rows.size());
    const auto picks = sample_distinct_ranks(rows.size(), d, options.seed);
    std::vector<std::string> problems(picks.size());
    parallel_for(picks.size(), options.workers, [&](std::size_t p) {
      const auto i = static_cast<std::size_t>(picks[p]);
      const auto& row = rows[i];
      const auto& r = row.record;
      if (file_problem[i].empty() && file_digest[i] != row.digest) {
        problems[p] = "file digest differs from manifest: " + label(r);
        return;
      }
      const auto expected = derive_slot_transforms(header.seed, r.class_name, r.rank, r.augmentation_epoch, header.k,
                                                   header.max_rotation_degrees);
      if (expected != r.slot_transforms) {
        problems[p] = "transforms do not match their derivation: " + label(r);
        return;
      }
      try {
        if (to_hex(pixel_digest(render_composite(r, manifest, header.layout))) != row.digest) {
          problems[p] = "re-rendered digest differs: " + label(r);
        }
      } catch (const std::exception& e) {
        problems[p] = std::string("re-render failed: ") + e.what();
      }
    });
    for (const auto& p : problems) {
      if (!p.empty()) spot.violations.push_back(p);
    }
  }
  spot.passed = spot.violations.empty();
  report.checks.push_back(std::move(spot));
  return report;
}

}  // namespace coimg
