#pragma once

// Directory-per-class corpus inventory.
//
// Each immediate subdirectory of the root is one class; files inside it are
// collected recursively. Entries within a class are ordered by their
// root-relative path (byte-wise), which fixes what a combination rank means.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "coimg/digest.hpp"
#include "coimg/error.hpp"
#include "coimg/image.hpp"
#include "coimg/parallel.hpp"
#include "coimg/version.hpp"

namespace coimg {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

struct ImageEntry {
  std::string class_name;
  std::uint64_t index = 0;
  std::string relative_path;  // relative to the manifest root, '/'-separated
  int width = 0;
  int height = 0;
  std::string digest;  // hex SHA-256 of the decoded RGB buffer

  friend bool operator==(const ImageEntry&, const ImageEntry&) = default;
};

struct ClassEntries {
  std::string name;
  std::vector<ImageEntry> entries;

  std::uint64_t size() const { return entries.size(); }
  friend bool operator==(const ClassEntries&, const ClassEntries&) = default;
};

struct DatasetManifest {
  std::string root;
  std::vector<ClassEntries> classes;  // ascending by name
  std::string created_at;
  std::string tool_version = std::string(kToolVersion);

  std::uint64_t total_images() const {
    std::uint64_t total = 0;
    for (const auto& c : classes) total += c.size();
    return total;
  }

  const ClassEntries* find(std::string_view name) const {
    for (const auto& c : classes) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  fs::path resolve(const ImageEntry& entry) const { return fs::path(root) / fs::path(entry.relative_path); }
};

struct ScanIssue {
  ErrorKind kind;
  std::string path;
  std::string message;
};

struct ScanResult {
  DatasetManifest manifest;
  std::vector<ScanIssue> issues;
};

inline std::set<std::string> default_extensions() {
  return {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".ppm", ".pgm"};
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

inline bool hidden(const fs::path& p) {
  const std::string name = p.filename().string();
  return !name.empty() && name.front() == '.';
}

}  // namespace detail

/// Builds the manifest for `root`. Files that match an extension but fail to
/// decode are excluded and reported as UnreadableImage issues. Classes left
/// without any decodable image are dropped (with an EmptyDataset issue);
/// if no class remains the scan throws EmptyDataset.
inline ScanResult scan_dataset(const fs::path& root, const std::set<std::string>& extensions,
                               unsigned workers = default_workers()) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorKind::InvalidArgument, "dataset root is not a directory: " + root.string());
  }
  std::set<std::string> wanted;
  for (const auto& e : extensions) wanted.insert(detail::lower(e.starts_with('.') ? e : "." + e));

  struct Candidate {
    std::string class_name;
    std::string relative;
  };
  std::vector<std::string> class_names;
  for (const auto& dir : fs::directory_iterator(root)) {
    if (dir.is_directory() && !detail::hidden(dir.path())) class_names.push_back(dir.path().filename().string());
  }
  std::sort(class_names.begin(), class_names.end());

  std::vector<Candidate> candidates;
  for (const auto& name : class_names) {
    std::vector<std::string> files;
    for (auto it = fs::recursive_directory_iterator(root / name); it != fs::recursive_directory_iterator(); ++it) {
      if (detail::hidden(it->path())) {
        if (it->is_directory()) it.disable_recursion_pending();
        continue;
      }
      if (!it->is_regular_file()) continue;
      if (!wanted.contains(detail::lower(it->path().extension().string()))) continue;
      files.push_back(fs::relative(it->path(), root).generic_string());
    }
    std::sort(files.begin(), files.end());
    for (auto& f : files) candidates.push_back({name, std::move(f)});
  }

  struct Decoded {
    std::optional<ImageEntry> entry;
    std::string error;
  };
  std::vector<Decoded> decoded(candidates.size());
  parallel_for(candidates.size(), workers, [&](std::size_t i) {
    try {
      const Image img = decode_image(root / fs::path(candidates[i].relative));
      decoded[i].entry = ImageEntry{candidates[i].class_name, 0, candidates[i].relative, img.width,
                                    img.height, to_hex(pixel_digest(img))};
    } catch (const std::exception& e) {
      decoded[i].error = e.what();
    }
  });

  ScanResult result;
  result.manifest.root = root.string();
  result.manifest.created_at = utc_timestamp();
  std::size_t cursor = 0;
  for (const auto& name : class_names) {
    ClassEntries cls{name, {}};
    for (; cursor < candidates.size() && candidates[cursor].class_name == name; ++cursor) {
      auto& d = decoded[cursor];
      if (!d.entry) {
        result.issues.push_back({ErrorKind::UnreadableImage, candidates[cursor].relative, d.error});
        continue;
      }
      d.entry->index = cls.entries.size();
      cls.entries.push_back(std::move(*d.entry));
    }
    if (cls.entries.empty()) {
      result.issues.push_back({ErrorKind::EmptyDataset, name, "class has no decodable images; skipped"});
      continue;
    }
    result.manifest.classes.push_back(std::move(cls));
  }
  if (result.manifest.classes.empty()) {
    throw Error(ErrorKind::EmptyDataset, "no class under " + root.string() + " contains a decodable image");
  }
  return result;
}

/// A manifest carrying only class sizes. Good for counting and planning with
/// the class_based policy; it cannot be rendered.
inline DatasetManifest count_only_manifest(const std::vector<std::pair<std::string, std::uint64_t>>& sizes) {
  DatasetManifest m;
  m.root = "";
  std::map<std::string, std::uint64_t> sorted(sizes.begin(), sizes.end());
  if (sorted.size() != sizes.size()) throw Error(ErrorKind::DuplicateClass, "class listed twice");
  for (const auto& [name, n] : sorted) {
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "class " + name + " has no images");
    ClassEntries cls{name, {}};
    cls.entries.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) cls.entries.push_back({name, i, name + "/#" + std::to_string(i), 0, 0, ""});
    m.classes.push_back(std::move(cls));
  }
  return m;
}

struct ClassStat {
  std::string class_name;
  std::uint64_t count = 0;
  double fraction = 0.0;
};

inline std::vector<ClassStat> class_stats(const DatasetManifest& manifest) {
  const double total = static_cast<double>(manifest.total_images());
  std::vector<ClassStat> out;
  for (const auto& c : manifest.classes) out.push_back({c.name, c.size(), total > 0 ? c.size() / total : 0.0});
  return out;
}

inline ordered_json to_json(const DatasetManifest& m) {
  ordered_json classes = ordered_json::array();
  ordered_json entries = ordered_json::array();
  for (const auto& c : m.classes) {
    classes.push_back({{"name", c.name}, {"count", c.size()}});
    for (const auto& e : c.entries) {
      entries.push_back({{"class", e.class_name},
                         {"index", e.index},
                         {"path", e.relative_path},
                         {"width", e.width},
                         {"height", e.height},
                         {"digest", e.digest}});
    }
  }
  return {{"root", m.root},
          {"tool_version", m.tool_version},
          {"created_at", m.created_at},
          {"classes", std::move(classes)},
          {"entries", std::move(entries)}};
}

inline DatasetManifest manifest_from_json(const ordered_json& j) {
  DatasetManifest m;
  try {
    m.root = j.at("root").get<std::string>();
    m.tool_version = j.value("tool_version", "");
    m.created_at = j.value("created_at", "");
    for (const auto& c : j.at("classes")) m.classes.push_back({c.at("name").get<std::string>(), {}});
    for (const auto& e : j.at("entries")) {
      ImageEntry entry{e.at("class").get<std::string>(), e.at("index").get<std::uint64_t>(),
                       e.at("path").get<std::string>(), e.at("width").get<int>(),
                       e.at("height").get<int>(), e.at("digest").get<std::string>()};
      auto it = std::find_if(m.classes.begin(), m.classes.end(),
                             [&](const ClassEntries& c) { return c.name == entry.class_name; });
      if (it == m.classes.end()) throw Error(ErrorKind::InvalidArgument, "entry for unlisted class " + entry.class_name);
      if (entry.index != it->entries.size()) {
        throw Error(ErrorKind::InvalidArgument, "non-contiguous index in class " + entry.class_name);
      }
      it->entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("malformed manifest: ") + e.what());
  }
  for (std::size_t i = 1; i < m.classes.size(); ++i) {
    if (!(m.classes[i - 1].name < m.classes[i].name)) {
      throw Error(ErrorKind::InvalidArgument, "manifest classes are not unique and ascending");
    }
  }
  return m;
}

/// SHA-256 over a class's entry digests, one per line. Keys similarity caches.
inline std::string class_digest(const ClassEntries& cls) {
  Sha256 h;
  for (const auto& e : cls.entries) h.update(e.digest + "\n");
  return to_hex(h.finish());
}

}  // namespace coimg
