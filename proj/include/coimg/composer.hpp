#pragma once

// Composite rendering: k member images laid out on an m x n grid.
//
// Slot (i, j), 1-based, receives member (i-1)*n + j. Each member is first
// transformed (rotation about its centre, optional translation and contrast,
// black fill, bilinear sampling), then letterboxed into its cell with an
// aspect-preserving bilinear scale and black padding.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coimg/combinatorics.hpp"
#include "coimg/digest.hpp"
#include "coimg/error.hpp"
#include "coimg/image.hpp"
#include "coimg/manifest.hpp"
#include "coimg/random.hpp"

namespace coimg {

struct Layout {
  int rows = 3;
  int cols = 1;
  int cell_width = 224;
  int cell_height = 224;

  std::uint64_t k() const { return static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols); }
  int width() const { return cols * cell_width; }
  int height() const { return rows * cell_height; }

  void validate() const {
    if (rows < 1 || cols < 1) throw Error(ErrorKind::InvalidArgument, "layout needs rows >= 1 and cols >= 1");
    if (cell_width < 1 || cell_height < 1) throw Error(ErrorKind::InvalidArgument, "cell size must be positive");
  }

  friend bool operator==(const Layout&, const Layout&) = default;
};

struct SlotTransform {
  double rotation_degrees = 0.0;
  int translate_x = 0;
  int translate_y = 0;
  double contrast_scale = 1.0;

  bool identity() const {
    return rotation_degrees == 0.0 && translate_x == 0 && translate_y == 0 && contrast_scale == 1.0;
  }

  friend bool operator==(const SlotTransform&, const SlotTransform&) = default;
};

struct CompositeRecord {
  std::string class_name;
  u128 rank = 0;
  IndexTuple member_indices;
  std::vector<SlotTransform> slot_transforms;
  std::uint64_t augmentation_epoch = 0;
  std::string output_path;  // relative to the output root

  friend bool operator==(const CompositeRecord&, const CompositeRecord&) = default;
};

/// <class>/<class>_<rank, zero-padded to 10 digits>[_e<epoch>].<ext>
inline std::string composite_path(const std::string& class_name, u128 rank, std::uint64_t epoch,
                                  const std::string& extension = "png") {
  std::string digits = to_string(rank);
  if (digits.size() < 10) digits.insert(0, 10 - digits.size(), '0');
  std::string name = class_name + "_" + digits;
  if (epoch > 0) name += "_e" + std::to_string(epoch);
  return class_name + "/" + name + "." + extension;
}

/// Per-slot transforms keyed by (seed, class, rank, epoch). Rotations are
/// uniform in [-max_rot, +max_rot]; from epoch 1 on, each slot also gets a
/// translation in [-2, 2] px per axis and a contrast scale in [0.9, 1.1].
inline std::vector<SlotTransform> derive_slot_transforms(std::uint64_t seed, const std::string& class_name,
                                                         u128 rank, std::uint64_t epoch, std::uint64_t k,
                                                         double max_rot) {
  if (!(max_rot >= 0.0)) throw Error(ErrorKind::InvalidArgument, "max rotation must be >= 0");
  std::uint64_t key = derive_class_seed(seed, class_name);
  key = mix64(key ^ low64(rank));
  key = mix64(key ^ high64(rank));
  key = mix64(key ^ epoch);
  Engine engine(key);
  std::vector<SlotTransform> out(k);
  for (auto& t : out) {
    const double u = draw_unit(engine);
    t.rotation_degrees = max_rot == 0.0 ? 0.0 : (2.0 * u - 1.0) * max_rot;
    if (epoch > 0) {
      t.translate_x = static_cast<int>(draw_unit(engine) * 5.0) - 2;
      t.translate_y = static_cast<int>(draw_unit(engine) * 5.0) - 2;
      t.contrast_scale = 0.9 + 0.2 * draw_unit(engine);
    }
  }
  return out;
}

namespace detail {

inline double sample_or_black(const Image& src, double fx, double fy, int c) {
  const double x0f = std::floor(fx);
  const double y0f = std::floor(fy);
  const int x0 = static_cast<int>(x0f);
  const int y0 = static_cast<int>(y0f);
  const double wx = fx - x0f;
  const double wy = fy - y0f;
  auto texel = [&](int x, int y) -> double {
    if (x < 0 || y < 0 || x >= src.width || y >= src.height) return 0.0;
    return src.at(x, y)[c];
  };
  const double top = texel(x0, y0) * (1.0 - wx) + texel(x0 + 1, y0) * wx;
  const double bottom = texel(x0, y0 + 1) * (1.0 - wx) + texel(x0 + 1, y0 + 1) * wx;
  return top * (1.0 - wy) + bottom * wy;
}

}  // namespace detail

/// Rotates counter-clockwise (as displayed) by rotation_degrees about the
/// image centre, shifts by the translation, then rescales contrast around
/// mid-gray. Output keeps the source dimensions.
inline Image apply_slot_transform(const Image& src, const SlotTransform& t) {
  if (t.identity()) return src;
  const double theta = t.rotation_degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double cx = src.width / 2.0;
  const double cy = src.height / 2.0;
  Image out(src.width, src.height);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      const double dx = x + 0.5 - cx - t.translate_x;
      const double dy = y + 0.5 - cy - t.translate_y;
      const double sx = cx + dx * cs - dy * sn - 0.5;
      const double sy = cy + dx * sn + dy * cs - 0.5;
      std::uint8_t* dst = out.at(x, y);
      for (int c = 0; c < 3; ++c) {
        double v = detail::sample_or_black(src, sx, sy, c);
        if (t.contrast_scale != 1.0) v = (v - 127.5) * t.contrast_scale + 127.5;
        dst[c] = to_channel(v);
      }
    }
  }
  return out;
}

/// Aspect-preserving bilinear fit into a (cell_w x cell_h) black cell, centred.
inline Image letterbox(const Image& src, int cell_w, int cell_h) {
  const double scale = std::min(static_cast<double>(cell_w) / src.width, static_cast<double>(cell_h) / src.height);
  const int w = std::clamp(static_cast<int>(std::round(src.width * scale)), 1, cell_w);
  const int h = std::clamp(static_cast<int>(std::round(src.height * scale)), 1, cell_h);
  const Image scaled = resize_bilinear(src, w, h);
  if (w == cell_w && h == cell_h) return scaled;
  Image cell(cell_w, cell_h);
  const int ox = (cell_w - w) / 2;
  const int oy = (cell_h - h) / 2;
  for (int y = 0; y < h; ++y) {
    std::copy_n(scaled.at(0, y), static_cast<std::size_t>(w) * 3, cell.at(ox, oy + y));
  }
  return cell;
}

inline Image create_coimg(std::span<const Image> members, const Layout& layout,
                          std::span<const SlotTransform> transforms) {
  layout.validate();
  if (members.size() != layout.k() || transforms.size() != layout.k()) {
    throw Error(ErrorKind::MemberCountMismatch, "layout needs " + std::to_string(layout.k()) + " members, got " +
                                                    std::to_string(members.size()) + " images and " +
                                                    std::to_string(transforms.size()) + " transforms");
  }
  Image out(layout.width(), layout.height());
  for (int i = 0; i < layout.rows; ++i) {
    for (int j = 0; j < layout.cols; ++j) {
      const std::size_t w = static_cast<std::size_t>(i) * layout.cols + j;
      if (members[w].empty()) throw Error(ErrorKind::DecodeFailure, "empty member image");
      const Image cell = letterbox(apply_slot_transform(members[w], transforms[w]), layout.cell_width,
                                   layout.cell_height);
      for (int y = 0; y < layout.cell_height; ++y) {
        std::copy_n(cell.at(0, y), static_cast<std::size_t>(layout.cell_width) * 3,
                    out.at(j * layout.cell_width, i * layout.cell_height + y));
      }
    }
  }
  return out;
}

/// Decodes the record's members from the manifest and composes them. A member
/// whose decoded digest no longer matches the manifest is a DecodeFailure.
inline Image render_composite(const CompositeRecord& record, const DatasetManifest& manifest, const Layout& layout) {
  const ClassEntries* cls = manifest.find(record.class_name);
  if (cls == nullptr) throw Error(ErrorKind::DecodeFailure, "class not in manifest: " + record.class_name);
  std::vector<Image> members;
  members.reserve(record.member_indices.size());
  for (auto idx : record.member_indices) {
    if (idx >= cls->size()) throw Error(ErrorKind::DecodeFailure, "member index out of range");
    const ImageEntry& entry = cls->entries[idx];
    Image img = decode_image(manifest.resolve(entry));
    if (!entry.digest.empty() && to_hex(pixel_digest(img)) != entry.digest) {
      throw Error(ErrorKind::DecodeFailure, entry.relative_path + ": pixels changed since the manifest was built");
    }
    members.push_back(std::move(img));
  }
  return create_coimg(members, layout, record.slot_transforms);
}

struct RenderResult {
  std::string digest;  // hex SHA-256 of the pre-encoding RGB buffer
  int width = 0;
  int height = 0;
};

inline RenderResult render_and_encode(const CompositeRecord& record, const DatasetManifest& manifest,
                                      const Layout& layout, const fs::path& output_root) {
  const Image img = render_composite(record, manifest, layout);
  const fs::path target = output_root / fs::path(record.output_path);
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  if (ec) throw Error(ErrorKind::WriteFailure, target.parent_path().string() + ": " + ec.message());
  encode_image(target, img);
  return {to_hex(pixel_digest(img)), img.width, img.height};
}

// JSON forms. Ranks and counts are emitted as numbers when they fit in 64 bits
// and as decimal strings otherwise; both forms are accepted on input.

inline nlohmann::ordered_json count_to_json(u128 value) {
  if (fits_u64(value)) return low64(value);
  return to_string(value);
}

inline u128 count_from_json(const nlohmann::ordered_json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<u128>(j.get<std::int64_t>());
  if (j.is_string()) return parse_u128(j.get<std::string>());
  throw Error(ErrorKind::InvalidArgument, "expected a non-negative integer, got " + j.dump());
}

inline nlohmann::ordered_json to_json(const Layout& l) {
  return {{"rows", l.rows}, {"cols", l.cols}, {"cell_width", l.cell_width}, {"cell_height", l.cell_height}};
}

inline Layout layout_from_json(const nlohmann::ordered_json& j) {
  Layout l;
  l.rows = j.value("rows", l.rows);
  l.cols = j.value("cols", l.cols);
  l.cell_width = j.value("cell_width", l.cell_width);
  l.cell_height = j.value("cell_height", l.cell_height);
  return l;
}

inline nlohmann::ordered_json to_json(const CompositeRecord& r) {
  nlohmann::ordered_json transforms = nlohmann::ordered_json::array();
  for (const auto& t : r.slot_transforms) {
    transforms.push_back({{"rotation", t.rotation_degrees},
                          {"translate", {t.translate_x, t.translate_y}},
                          {"contrast", t.contrast_scale}});
  }
  return {{"class", r.class_name},
          {"rank", count_to_json(r.rank)},
          {"members", r.member_indices},
          {"epoch", r.augmentation_epoch},
          {"transforms", std::move(transforms)},
          {"path", r.output_path}};
}

inline CompositeRecord record_from_json(const nlohmann::ordered_json& j) {
  CompositeRecord r;
  r.class_name = j.at("class").get<std::string>();
  r.rank = count_from_json(j.at("rank"));
  r.member_indices = j.at("members").get<IndexTuple>();
  r.augmentation_epoch = j.at("epoch").get<std::uint64_t>();
  for (const auto& t : j.at("transforms")) {
    r.slot_transforms.push_back({t.at("rotation").get<double>(), t.at("translate").at(0).get<int>(),
                                 t.at("translate").at(1).get<int>(), t.at("contrast").get<double>()});
  }
  r.output_path = j.at("path").get<std::string>();
  return r;
}

}  // namespace coimg
