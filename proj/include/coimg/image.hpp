#pragma once

// 8-bit RGB rasters, codec glue and the resampling primitives shared by the
// similarity metric and the composer.
//
// Rasterization rule: every float-to-channel conversion rounds half away from
// zero and clamps to [0, 255]. Pixel centres sit at (x + 0.5, y + 0.5).

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coimg/digest.hpp"
#include "coimg/error.hpp"

namespace coimg {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB, 3 bytes per pixel

  Image() = default;
  Image(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}

  static Image filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Image img(w, h);
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
      img.pixels[i] = r;
      img.pixels[i + 1] = g;
      img.pixels[i + 2] = b;
    }
    return img;
  }

  bool empty() const { return width <= 0 || height <= 0; }

  std::uint8_t* at(int x, int y) { return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

inline std::uint8_t to_channel(double value) {
  return static_cast<std::uint8_t>(std::clamp(std::round(value), 0.0, 255.0));
}

/// SHA-256 of the raw RGB buffer.
inline Digest pixel_digest(const Image& img) { return sha256(img.pixels); }

/// Decodes any format OpenCV's imgcodecs understands into RGB8. Grayscale is
/// replicated, alpha dropped, deeper samples reduced to 8 bits; EXIF
/// orientation is ignored so the raster matches the stored samples.
inline Image decode_image(const std::filesystem::path& path) {
  cv::Mat bgr;
  try {
    bgr = cv::imread(path.string(), cv::IMREAD_COLOR | cv::IMREAD_IGNORE_ORIENTATION);
  } catch (const cv::Exception& e) {
    throw Error(ErrorKind::DecodeFailure, path.string() + ": " + e.what());
  }
  if (bgr.empty() || bgr.type() != CV_8UC3) {
    throw Error(ErrorKind::DecodeFailure, path.string() + ": not a decodable image");
  }
  Image img(bgr.cols, bgr.rows);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<std::uint8_t>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      std::uint8_t* px = img.at(x, y);
      px[0] = row[3 * x + 2];
      px[1] = row[3 * x + 1];
      px[2] = row[3 * x];
    }
  }
  return img;
}

/// Writes `img` in the format implied by the path's extension.
inline void encode_image(const std::filesystem::path& path, const Image& img) {
  cv::Mat bgr(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y) {
    auto* row = bgr.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.width; ++x) {
      const std::uint8_t* px = img.at(x, y);
      row[3 * x] = px[2];
      row[3 * x + 1] = px[1];
      row[3 * x + 2] = px[0];
    }
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), bgr);
  } catch (const cv::Exception& e) {
    throw Error(ErrorKind::WriteFailure, path.string() + ": " + e.what());
  }
  if (!ok) throw Error(ErrorKind::WriteFailure, path.string() + ": encoder refused the write");
}

/// Bilinear resample to (w, h) with edge clamping.
inline Image resize_bilinear(const Image& src, int w, int h) {
  if (src.width == w && src.height == h) return src;
  Image out(w, h);
  const double sx = static_cast<double>(src.width) / w;
  const double sy = static_cast<double>(src.height) / h;
  for (int y = 0; y < h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      const std::uint8_t* p00 = src.at(x0, y0);
      const std::uint8_t* p10 = src.at(x1, y0);
      const std::uint8_t* p01 = src.at(x0, y1);
      const std::uint8_t* p11 = src.at(x1, y1);
      std::uint8_t* dst = out.at(x, y);
      for (int c = 0; c < 3; ++c) {
        const double top = p00[c] + (p10[c] - p00[c]) * wx;
        const double bottom = p01[c] + (p11[c] - p01[c]) * wx;
        dst[c] = to_channel(top + (bottom - top) * wy);
      }
    }
  }
  return out;
}

/// Luma with integer BT.601 weights: (77 R + 150 G + 29 B + 128) >> 8.
inline std::vector<std::uint8_t> to_gray(const Image& img) {
  std::vector<std::uint8_t> gray(static_cast<std::size_t>(img.width) * img.height);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    const std::uint8_t* px = img.pixels.data() + i * 3;
    gray[i] = static_cast<std::uint8_t>((77u * px[0] + 150u * px[1] + 29u * px[2] + 128u) >> 8);
  }
  return gray;
}

}  // namespace coimg
