// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <png.h>

#include "rsbench/error.hpp"

namespace rsbench {

/// H x W x 3 image with interleaved float channels in [0, 1].
class RgbImage {
 public:
  RgbImage() = default;
  RgbImage(std::size_t height, std::size_t width, float fill = 0.0f)
      : height_(height), width_(width), values_(height * width * 3, std::clamp(fill, 0.0f, 1.0f)) {
    if (height == 0 || width == 0) throw Error(ErrorKind::Validation, "image dimensions must be >= 1");
  }

  /// Takes interleaved RGB values; anything outside [0, 1] is clamped.
  RgbImage(std::size_t height, std::size_t width, std::vector<float> values)
      : height_(height), width_(width), values_(std::move(values)) {
    if (height == 0 || width == 0) throw Error(ErrorKind::Validation, "image dimensions must be >= 1");
    if (values_.size() != height * width * 3) {
      throw Error(ErrorKind::Validation, "image buffer size does not match dimensions");
    }
    for (float& v : values_) v = std::isnan(v) ? 0.0f : std::clamp(v, 0.0f, 1.0f);
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t min_side() const { return std::min(height_, width_); }

  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return values_[(y * width_ + x) * 3 + c];
  }
  void set(std::size_t y, std::size_t x, std::size_t c, float v) {
    values_[(y * width_ + x) * 3 + c] = std::clamp(v, 0.0f, 1.0f);
  }

  const std::vector<float>& values() const { return values_; }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<float> values_;
};

struct ImageInfo {
  std::size_t height = 0;
  std::size_t width = 0;
};

/// Reads only the PNG header; throws if the file is not a decodable PNG.
inline ImageInfo probe_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw Error(ErrorKind::Io, "cannot decode image " + path.string() + ": " + img.message);
  }
  ImageInfo info{img.height, img.width};
  png_image_free(&img);
  return info;
}

inline RgbImage read_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw Error(ErrorKind::Io, "cannot decode image " + path.string() + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorKind::Io, "cannot decode image " + path.string() + ": " + msg);
  }
  std::vector<float> values(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) values[i] = static_cast<float>(buf[i]) / 255.0f;
  return RgbImage(img.height, img.width, std::move(values));
}

inline std::vector<std::uint8_t> to_rgb8(const RgbImage& image) {
  std::vector<std::uint8_t> buf(image.values().size());
  for (std::size_t i = 0; i < buf.size(); ++i) {
    buf[i] = static_cast<std::uint8_t>(std::lround(image.values()[i] * 255.0f));
  }
  return buf;
}

inline void write_png(const std::filesystem::path& path, const RgbImage& image) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  const auto buf = to_rgb8(image);
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorKind::Io, "cannot write image " + path.string() + ": " + msg);
  }
}

}  // namespace rsbench
