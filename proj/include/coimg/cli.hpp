#pragma once

// Command-line front end: scan, stats, plan, generate, verify.
//
// Exit codes: 0 success, 2 validation error, 3 generation error,
// 4 verification failure. Errors are reported on stderr as one JSON object.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "coimg/balancer.hpp"
#include "coimg/config.hpp"
#include "coimg/error.hpp"
#include "coimg/manifest.hpp"
#include "coimg/pipeline.hpp"
#include "coimg/version.hpp"

namespace coimg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitGeneration = 3;
inline constexpr int kExitVerification = 4;

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::VerificationFailed: return kExitVerification;
    case ErrorKind::DecodeFailure:
    case ErrorKind::WriteFailure: return kExitGeneration;
    default: return kExitValidation;
  }
}

class PhaseLog {
 public:
  PhaseLog(std::ostream& err, std::string phase)
      : err_(err), phase_(std::move(phase)), start_(std::chrono::steady_clock::now()) {}

  PhaseLog& kv(const std::string& key, const std::string& value) {
    fields_ << " " << key << "=" << value;
    return *this;
  }
  template <typename T>
  PhaseLog& kv(const std::string& key, const T& value) {
    fields_ << " " << key << "=" << value;
    return *this;
  }

  void emit() {
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_).count();
    err_ << "coimg phase=" << phase_ << fields_.str() << " elapsed_ms=" << ms << "\n";
  }

 private:
  std::ostream& err_;
  std::string phase_;
  std::ostringstream fields_;
  std::chrono::steady_clock::time_point start_;
};

inline std::vector<std::pair<std::string, std::uint64_t>> parse_class_sizes(const std::string& text) {
  std::vector<std::pair<std::string, std::uint64_t>> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorKind::InvalidArgument, "class sizes must look like NAME=COUNT,NAME=COUNT");
    }
    out.emplace_back(item.substr(0, eq), static_cast<std::uint64_t>(low64(parse_u128(item.substr(eq + 1)))));
  }
  if (out.empty()) throw Error(ErrorKind::InvalidArgument, "no class sizes given");
  return out;
}

inline std::string format_stats(const DatasetManifest& manifest) {
  std::ostringstream out;
  out << std::left << std::setw(16) << "class" << std::right << std::setw(10) << "images" << std::setw(12)
      << "fraction" << "\n";
  for (const auto& s : class_stats(manifest)) {
    out << std::left << std::setw(16) << s.class_name << std::right << std::setw(10) << s.count << std::setw(12)
        << std::fixed << std::setprecision(6) << s.fraction << "\n";
  }
  out << std::left << std::setw(16) << "Total" << std::right << std::setw(10) << manifest.total_images() << "\n";
  return out.str();
}

/// Flags that override config keys. Unset flags leave the config untouched.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::string> input_root, output_root, policy, image_format, similarity_cache;
  std::optional<int> rows, cols, cell_width, cell_height;
  std::optional<double> high_fraction, max_rotation;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> override_target, per_class_cap, generation_limit;
  bool with_repetition = false, disjoint = false, unbalanced = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--input-root", input_root, "dataset root");
    cmd->add_option("--output-root,--out", output_root, "output directory");
    cmd->add_option("--rows", rows, "layout rows m");
    cmd->add_option("--cols", cols, "layout columns n");
    cmd->add_option("--cell-width", cell_width, "cell width in pixels");
    cmd->add_option("--cell-height", cell_height, "cell height in pixels");
    cmd->add_option("--policy", policy, "class_based | similarity_high | similarity_low | heterogeneous_mix");
    cmd->add_option("--high-fraction", high_fraction, "heterogeneous_mix share of high-similarity slots");
    cmd->add_flag("--with-repetition", with_repetition, "allow an image to fill several slots of one composite");
    cmd->add_option("--seed", seed, "64-bit seed");
    cmd->add_option("--max-rotation", max_rotation, "rotation bound in degrees");
    cmd->add_option("--image-format", image_format, "png | bmp | ppm | tiff");
    cmd->add_option("--override-target", override_target, "per-class target instead of the minimum");
    cmd->add_option("--cap", per_class_cap, "per-class cap for unbalanced plans");
    cmd->add_flag("--disjoint", disjoint, "majority-class composites share no images");
    cmd->add_flag("--unbalanced", unbalanced, "plan min(cap, M) composites per class instead of T");
    cmd->add_option("--generation-limit", generation_limit, "maximum number of records to materialize");
    cmd->add_option("--similarity-cache", similarity_cache, "directory for cached similarity matrices");
  }

  GenerationConfig resolve() const {
    GenerationConfig c = config_path.empty() ? GenerationConfig{} : config_from_json(read_json_file(config_path));
    if (input_root) c.input_root = *input_root;
    if (output_root) c.output_root = *output_root;
    if (rows) c.layout.rows = *rows;
    if (cols) c.layout.cols = *cols;
    if (cell_width) c.layout.cell_width = *cell_width;
    if (cell_height) c.layout.cell_height = *cell_height;
    if (policy) c.policy.kind = parse_policy_kind(*policy);
    if (high_fraction) c.policy.high_fraction = *high_fraction;
    if (with_repetition) c.policy.with_repetition = true;
    if (seed) c.seed = *seed;
    if (max_rotation) c.max_rotation_degrees = *max_rotation;
    if (image_format) c.image_format = *image_format;
    if (override_target) c.override_target = parse_u128(*override_target);
    if (per_class_cap) c.per_class_cap = parse_u128(*per_class_cap);
    if (generation_limit) c.generation_limit = parse_u128(*generation_limit);
    if (similarity_cache) c.similarity_cache = *similarity_cache;
    if (disjoint) c.disjoint = true;
    if (unbalanced) c.balanced = false;
    c.validate();
    return c;
  }
};

inline void report_error(std::ostream& err, ErrorKind kind, const std::string& message) {
  const nlohmann::ordered_json j{{"error", to_string(kind)}, {"message", message}};
  err << j.dump() << "\n";
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"coimg: class-balanced composite image datasets"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<unsigned> workers_flag;
  app.add_option("--workers", workers_flag, "render/decode pool size (default: COIMG_WORKERS or all cores)");

  // scan
  auto* scan = app.add_subcommand("scan", "inventory a directory-per-class image corpus");
  std::string scan_root;
  std::string scan_out;
  std::vector<std::string> scan_ext;
  scan->add_option("root", scan_root, "dataset root")->required();
  scan->add_option("-o,--output", scan_out, "manifest JSON to write");
  scan->add_option("--ext", scan_ext, "file extensions to include")->delimiter(',');

  // stats
  auto* stats = app.add_subcommand("stats", "per-class statistics of a manifest");
  std::string stats_manifest;
  stats->add_option("manifest", stats_manifest, "manifest JSON")->required();

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "compute the per-class composite plan");
  ConfigFlags plan_flags;
  plan_flags.attach(plan_cmd);
  std::string plan_manifest;
  std::string plan_sizes;
  std::string plan_out;
  bool explain = false;
  plan_cmd->add_option("--manifest", plan_manifest, "manifest JSON from `scan`");
  plan_cmd->add_option("--class-sizes", plan_sizes, "count-only classes, e.g. AMD=1231,RAO=22");
  plan_cmd->add_option("-o,--output", plan_out, "plan JSON to write");
  plan_cmd->add_flag("--explain", explain, "print the per-class summary table");

  // generate
  auto* gen = app.add_subcommand("generate", "render every record of a plan");
  std::string gen_manifest;
  std::string gen_plan;
  std::optional<std::string> gen_out;
  gen->add_option("--manifest", gen_manifest, "manifest JSON from `scan`")->required();
  gen->add_option("--plan", gen_plan, "plan JSON from `plan`")->required();
  gen->add_option("--out,--output-root", gen_out, "output directory (default: the plan's output_root)");
  bool gen_verbose = false;
  gen->add_flag("-v,--verbose", gen_verbose, "log every record (ignored above 10^4 records)");

  // verify
  auto* ver = app.add_subcommand("verify", "check a generated output tree");
  std::string ver_out;
  std::string ver_manifest;
  std::uint64_t ver_spot = 100;
  std::uint64_t ver_seed = 0;
  ver->add_option("--out,--output-root", ver_out, "output directory produced by `generate`")->required();
  ver->add_option("--generation-manifest", ver_manifest, "defaults to <out>/generation.jsonl");
  ver->add_option("--spot-checks", ver_spot, "number of records to re-render");
  ver->add_option("--seed", ver_seed, "seed for choosing spot-checked records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }
  const unsigned workers = workers_flag.value_or(default_workers());

  try {
    if (*scan) {
      PhaseLog log(err, "scan");
      std::set<std::string> exts = scan_ext.empty() ? default_extensions()
                                                    : std::set<std::string>(scan_ext.begin(), scan_ext.end());
      const ScanResult result = scan_dataset(scan_root, exts, workers);
      for (const auto& issue : result.issues) {
        err << "warning: " << to_string(issue.kind) << " " << issue.path << ": " << issue.message << "\n";
      }
      if (!scan_out.empty()) write_json_file(scan_out, to_json(result.manifest));
      out << format_stats(result.manifest);
      out << "warnings: " << result.issues.size() << "\n";
      log.kv("classes", result.manifest.classes.size())
          .kv("images", result.manifest.total_images())
          .kv("warnings", result.issues.size())
          .emit();
      return kExitOk;
    }
    if (*stats) {
      out << format_stats(manifest_from_json(read_json_file(stats_manifest)));
      return kExitOk;
    }
    if (*plan_cmd) {
      PhaseLog log(err, "plan");
      const GenerationConfig config = plan_flags.resolve();
      if (plan_manifest.empty() == plan_sizes.empty()) {
        throw Error(ErrorKind::InvalidArgument, "give exactly one of --manifest or --class-sizes");
      }
      const DatasetManifest manifest = plan_manifest.empty()
                                           ? count_only_manifest(parse_class_sizes(plan_sizes))
                                           : manifest_from_json(read_json_file(plan_manifest));
      const CompositePlan plan = plan_from_config(config, manifest, workers);
      if (!plan_out.empty()) write_json_file(plan_out, to_json(plan));
      if (explain || plan_out.empty()) out << explain_plan(plan);
      log.kv("classes", plan.classes.size())
          .kv("k", plan.k)
          .kv("target", to_string(plan.target))
          .kv("records", plan.total_records())
          .emit();
      return kExitOk;
    }
    if (*gen) {
      PhaseLog log(err, "generate");
      const CompositePlan plan = plan_from_json(read_json_file(gen_plan));
      const DatasetManifest manifest = manifest_from_json(read_json_file(gen_manifest));
      std::string root = gen_out.value_or(plan.config.value("output_root", std::string()));
      if (root.empty()) throw Error(ErrorKind::InvalidArgument, "no output root (use --out or config output_root)");
      const u128 limit = plan.config.contains("generation_limit") ? count_from_json(plan.config.at("generation_limit"))
                                                                  : u128{1'000'000};
      if (plan.total_records() > limit) throw Error(ErrorKind::PlanTooLarge, "plan exceeds its generation limit");
      const GenerationOutcome result = generate_dataset(plan, manifest, root, workers);
      if (gen_verbose && result.rows.size() < 10'000) {
        for (const auto& row : result.rows) {
          err << "record " << row.record.output_path << " " << (row.error.empty() ? row.digest : row.error) << "\n";
        }
      }
      for (const auto& row : result.rows) {
        if (!row.error.empty()) err << "error: " << row.record.output_path << ": " << row.error << "\n";
      }
      out << "generated " << result.rows.size() - result.failures << " of " << result.rows.size()
          << " composites into " << root << "\n";
      log.kv("records", result.rows.size()).kv("failures", result.failures).kv("workers", workers).emit();
      if (result.failures > 0) {
        report_error(err, ErrorKind::DecodeFailure, std::to_string(result.failures) + " records failed");
        return kExitGeneration;
      }
      return kExitOk;
    }
    if (*ver) {
      PhaseLog log(err, "verify");
      VerifyOptions options;
      options.generation_manifest = ver_manifest;
      options.spot_checks = ver_spot;
      options.seed = ver_seed;
      options.workers = workers;
      const VerifyReport report = verify_output(ver_out, options);
      out << report.text();
      log.kv("result", report.passed() ? "pass" : "fail").emit();
      if (!report.passed()) {
        std::string failed;
        for (const auto& c : report.checks) {
          if (!c.passed) failed += (failed.empty() ? "" : ",") + c.name;
        }
        report_error(err, ErrorKind::VerificationFailed, "failed checks: " + failed);
        return kExitVerification;
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    report_error(err, e.kind(), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    report_error(err, ErrorKind::InvalidArgument, e.what());
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace coimg::cli
