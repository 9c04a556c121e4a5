// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <optional>

#include <algorithm>
#include <complex>
#include <functional>
#include <numbers>
#include <random>

#include "rsbench/error.hpp"
#include "rsbench/types.hpp"
#include "rsbench/hash.hpp"
#include "rsbench/image.hpp"

namespace rsbench::testing {

enum class Scene { Farmland, Urban, Coast };

/// Procedural overhead-scene stand-ins used as natural test images.
inline RgbImage scene_image(Scene scene, std::size_t h = 96, std::size_t w = 96) {
  std::vector<float> v(h * w * 3);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double fy = static_cast<double>(y) / static_cast<double>(h);
      const double fx = static_cast<double>(x) / static_cast<double>(w);
      const double grain = unit_interval(hash_combine(static_cast<std::uint64_t>(scene), y, x)) - 0.5;
      double r = 0, g = 0, b = 0;
      switch (scene) {
        case Scene::Farmland: {
          const auto cell = (y / 16) * 7 + (x / 20) * 3;
          const bool crop = cell % 3 == 0;
          const bool soil = cell % 3 == 1;
          r = crop ? 0.22 : soil ? 0.62 : 0.42;
          g = crop ? 0.36 : soil ? 0.50 : 0.66;
          b = crop ? 0.14 : soil ? 0.42 : 0.30;
          r += 0.1 * fx;
          break;
        }
        case Scene::Urban: {
          const bool road = (x % 24) < 4 || (y % 24) < 4;
          const bool roof = ((x / 12) + (y / 12)) % 2 == 0;
          r = road ? 0.15 : roof ? 0.70 : 0.35;
          g = road ? 0.15 : roof ? 0.65 : 0.38;
          b = road ? 0.17 : roof ? 0.60 : 0.33;
          break;
        }
        case Scene::Coast: {
          const double shore = 0.4 + 0.1 * std::sin(fy * 6.28318);
          const bool water = fx < shore;
          r = water ? 0.08 + 0.1 * fx : 0.70 - 0.3 * fy;
          g = water ? 0.25 + 0.1 * fy : 0.62 - 0.2 * fy;
          b = water ? 0.30 + 0.2 * fx : 0.62 - 0.2 * fy;
          break;
        }
      }
      const std::size_t i = (y * w + x) * 3;
      v[i] = static_cast<float>(r + 0.06 * grain);
      v[i + 1] = static_cast<float>(g + 0.06 * grain);
      v[i + 2] = static_cast<float>(b + 0.06 * grain);
    }
  }
  return RgbImage(h, w, std::move(v));
}

struct ChannelStats {
  double mean[3] = {0, 0, 0};
  double stddev[3] = {0, 0, 0};
  double mean_all = 0;
};

inline ChannelStats channel_stats(const RgbImage& img) {
  ChannelStats s;
  const double n = static_cast<double>(img.height() * img.width());
  for (std::size_t c = 0; c < 3; ++c) {
    double sum = 0, sq = 0;
    for (std::size_t y = 0; y < img.height(); ++y) {
      for (std::size_t x = 0; x < img.width(); ++x) {
        const double v = img.at(y, x, c);
        sum += v;
        sq += v * v;
      }
    }
    s.mean[c] = sum / n;
    s.stddev[c] = std::sqrt(std::max(0.0, sq / n - s.mean[c] * s.mean[c]));
  }
  s.mean_all = (s.mean[0] + s.mean[1] + s.mean[2]) / 3.0;
  return s;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("rsbench-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary | std::ios::trunc) << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct BandPower {
  double low = 0;   // mean power over the lowest-frequency quarter of bins
  double high = 0;  // mean power over the highest-frequency quarter
};

/// Direct 2-D DFT of a real field (mean removed), with the non-DC bins ranked
/// by radial frequency and split into quartiles.
inline BandPower band_power(const std::vector<float>& values, std::size_t h, std::size_t w) {
  using cd = std::complex<double>;
  double mean = 0;
  for (float v : values) mean += v;
  mean /= static_cast<double>(values.size());
  std::vector<cd> rows(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t k = 0; k < w; ++k) {
      cd acc = 0;
      for (std::size_t x = 0; x < w; ++x) {
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(k * x) / static_cast<double>(w);
        acc += (values[y * w + x] - mean) * std::polar(1.0, ang);
      }
      rows[y * w + k] = acc;
    }
  }
  std::vector<std::pair<double, double>> bins;  // (radial frequency, power)
  for (std::size_t l = 0; l < h; ++l) {
    for (std::size_t k = 0; k < w; ++k) {
      if (k == 0 && l == 0) continue;
      cd acc = 0;
      for (std::size_t y = 0; y < h; ++y) {
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(l * y) / static_cast<double>(h);
        acc += rows[y * w + k] * std::polar(1.0, ang);
      }
      const double fx = static_cast<double>(std::min(k, w - k)) / static_cast<double>(w);
      const double fy = static_cast<double>(std::min(l, h - l)) / static_cast<double>(h);
      bins.emplace_back(std::hypot(fx, fy), std::norm(acc));
    }
  }
  std::stable_sort(bins.begin(), bins.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  const std::size_t q = bins.size() / 4;
  BandPower out;
  for (std::size_t i = 0; i < q; ++i) {
    out.low += bins[i].second;
    out.high += bins[bins.size() - 1 - i].second;
  }
  out.low /= static_cast<double>(q);
  out.high /= static_cast<double>(q);
  return out;
}

/// Random box with corners in [0, extent), never degenerate.
inline BoundingBox random_box(std::mt19937_64& rng, double extent = 100.0) {
  std::uniform_real_distribution<double> u(0.0, extent);
  while (true) {
    if (auto b = BoundingBox::make(u(rng), u(rng), u(rng), u(rng))) return *b;
  }
}

inline BoxSet random_boxes(std::mt19937_64& rng, std::size_t n, double extent = 100.0) {
  BoxSet out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_box(rng, extent));
  return out;
}

/// Exhaustive maximum of the summed similarity over all one-to-one matchings,
/// each sum accumulated in reference order.
template <typename Sim>
double brute_force_best(const BoxSet& g, const BoxSet& p, Sim sim) {
  std::vector<bool> used(p.size(), false);
  std::function<double(std::size_t, std::size_t, double)> go = [&](std::size_t i, std::size_t matched, double acc) {
    if (i == g.size()) {
      return matched == std::min(g.size(), p.size()) ? acc : -INFINITY;
    }
    double best = go(i + 1, matched, acc);
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (used[j]) continue;
      used[j] = true;
      best = std::max(best, go(i + 1, matched + 1, acc + sim(g[i], p[j])));
      used[j] = false;
    }
    return best;
  };
  return go(0, 0, 0.0);
}

/// Kind of the rsbench::Error thrown by `fn`, or nullopt when it returns.
template <typename Fn>
std::optional<ErrorKind> error_kind(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

/// Message of the rsbench::Error thrown by `fn`, or "" when it returns.
template <typename Fn>
std::string error_message(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

inline void write_tiny_png(const std::filesystem::path& p, Scene scene = Scene::Urban) {
  std::filesystem::create_directories(p.parent_path());
  write_png(p, scene_image(scene, 8, 8));
}

}  // namespace rsbench::testing
