// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "rsbench/error.hpp"
#include "rsbench/hash.hpp"
#include "rsbench/image.hpp"

namespace rsbench {

/// Parameters of the atmospheric perturbation. The single strength scalar
/// drives cloud/fog opacity, contrast loss, brightness lift and blur together.
struct PerturbParams {
  double strength = 0.45;
  std::uint64_t seed = 0;
  int octaves = 5;
  double persistence = 0.5;
  std::optional<double> base_period;  // pixels; defaults to min(H, W) / 4
  std::array<double, 3> fog_color = {0.92, 0.92, 0.94};
  double contrast_floor = 0.55;
  double brightness_lift_max = 0.18;
  double blur_sigma_max_frac = 0.006;

  void validate() const {
    auto fail = [](const char* what) { throw Error(ErrorKind::Config, what); };
    if (!(strength >= 0.0 && strength <= 1.0)) fail("strength must lie in [0, 1]");
    if (octaves < 1) fail("octaves must be >= 1");
    if (!(persistence > 0.0 && persistence < 1.0)) fail("persistence must lie in (0, 1)");
    if (base_period && !(*base_period > 0.0)) fail("base_period must be positive");
    for (double c : fog_color) {
      if (!(c >= 0.0 && c <= 1.0)) fail("fog_color components must lie in [0, 1]");
    }
    if (!(contrast_floor > 0.0 && contrast_floor <= 1.0)) fail("contrast_floor must lie in (0, 1]");
    if (!(brightness_lift_max >= 0.0)) fail("brightness_lift_max must be >= 0");
    if (!(blur_sigma_max_frac >= 0.0)) fail("blur_sigma_max_frac must be >= 0");
  }

  double contrast_factor() const { return 1.0 - (1.0 - contrast_floor) * strength; }
  double brightness_lift() const { return brightness_lift_max * strength; }
  double fog_opacity() const { return strength; }
  /// Cloud coverage grows with strength: the mask is lifted toward full
  /// overcast, M_s = M + s (1 - M).
  double coverage(double mask) const { return mask + strength * (1.0 - mask); }
  double blur_sigma(std::size_t height, std::size_t width) const {
    return blur_sigma_max_frac * static_cast<double>(std::min(height, width)) * strength;
  }
};

/// Single-channel float field, row-major.
struct Field {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> values;

  float at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
};

namespace detail {

inline double fade(double t) { return t * t * (3.0 - 2.0 * t); }

inline double lattice_value(std::uint64_t seed, int octave, std::int64_t ix, std::int64_t iy) {
  return unit_interval(hash_combine(seed, static_cast<std::uint64_t>(octave),
                                    static_cast<std::uint64_t>(ix), static_cast<std::uint64_t>(iy)));
}

}  // namespace detail

/// Multi-octave value noise in [0, 1]. Octave o has period base_period / 2^o
/// (at least one pixel) and amplitude persistence^o; the weighted sum is
/// divided by the total amplitude.
inline Field cloud_mask(std::size_t height, std::size_t width, const PerturbParams& params) {
  if (height == 0 || width == 0) throw Error(ErrorKind::Validation, "mask dimensions must be >= 1");
  params.validate();
  const double base =
      params.base_period.value_or(static_cast<double>(std::min(height, width)) / 4.0);

  std::vector<double> acc(height * width, 0.0);
  double amp_total = 0.0;
  double amp = 1.0;
  for (int o = 0; o < params.octaves; ++o) {
    const double period = std::max(base / std::ldexp(1.0, o), 1.0);
    for (std::size_t y = 0; y < height; ++y) {
      const double gy = static_cast<double>(y) / period;
      const double fy = std::floor(gy);
      const auto iy = static_cast<std::int64_t>(fy);
      const double ty = detail::fade(gy - fy);
      for (std::size_t x = 0; x < width; ++x) {
        const double gx = static_cast<double>(x) / period;
        const double fx = std::floor(gx);
        const auto ix = static_cast<std::int64_t>(fx);
        const double tx = detail::fade(gx - fx);
        const double v00 = detail::lattice_value(params.seed, o, ix, iy);
        const double v10 = detail::lattice_value(params.seed, o, ix + 1, iy);
        const double v01 = detail::lattice_value(params.seed, o, ix, iy + 1);
        const double v11 = detail::lattice_value(params.seed, o, ix + 1, iy + 1);
        const double top = v00 + (v10 - v00) * tx;
        const double bottom = v01 + (v11 - v01) * tx;
        acc[y * width + x] += amp * (top + (bottom - top) * ty);
      }
    }
    amp_total += amp;
    amp *= params.persistence;
  }

  Field field{height, width, std::vector<float>(height * width)};
  for (std::size_t i = 0; i < acc.size(); ++i) {
    field.values[i] = static_cast<float>(std::clamp(acc[i] / amp_total, 0.0, 1.0));
  }
  return field;
}

/// Normalized Gaussian kernel truncated at 3 sigma.
inline std::vector<double> gaussian_kernel(double sigma) {
  const auto radius = static_cast<std::size_t>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(radius);
    k[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

namespace detail {

// Symmetric reflection: ... 2 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...
inline std::size_t reflect(std::ptrdiff_t i, std::size_t n) {
  const auto len = static_cast<std::ptrdiff_t>(n);
  if (len == 1) return 0;
  const std::ptrdiff_t period = 2 * len;
  i %= period;
  if (i < 0) i += period;
  return static_cast<std::size_t>(i < len ? i : period - 1 - i);
}

}  // namespace detail

/// Separable Gaussian blur with reflective borders on an unclamped
/// interleaved RGB buffer.
inline void gaussian_blur(std::vector<double>& rgb, std::size_t height, std::size_t width,
                          double sigma) {
  if (!(sigma > 0.0)) return;
  const auto kernel = gaussian_kernel(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  std::vector<double> tmp(rgb.size(), 0.0);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        double s = 0.0;
        for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
          const auto xx = detail::reflect(static_cast<std::ptrdiff_t>(x) + k, width);
          s += kernel[static_cast<std::size_t>(k + radius)] * rgb[(y * width + xx) * 3 + c];
        }
        tmp[(y * width + x) * 3 + c] = s;
      }
    }
  }
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        double s = 0.0;
        for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
          const auto yy = detail::reflect(static_cast<std::ptrdiff_t>(y) + k, height);
          s += kernel[static_cast<std::size_t>(k + radius)] * tmp[(yy * width + x) * 3 + c];
        }
        rgb[(y * width + x) * 3 + c] = s;
      }
    }
  }
}

/// Atmospheric perturbation, applied in this order:
///   1. contrast attenuation toward each channel mean, factor 1 - (1 - floor) s
///   2. uniform brightness lift of lift_max * s
///   3. Gaussian blur with sigma = frac * min(H, W) * s
///   4. fog veil I' = (1 - v) I + v fog, with v = s * M_s and M_s the cloud
///      mask lifted toward full coverage (see PerturbParams::coverage)
/// followed by a single clamp to [0, 1]. s = 0 returns an exact copy.
inline RgbImage perturb_image(const RgbImage& image, const PerturbParams& params) {
  params.validate();
  if (params.strength == 0.0) return image;

  const std::size_t h = image.height();
  const std::size_t w = image.width();
  const std::size_t n = h * w;
  std::vector<double> rgb(image.values().begin(), image.values().end());

  std::array<double, 3> mean{};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) mean[c] += rgb[i * 3 + c];
  }
  for (double& m : mean) m /= static_cast<double>(n);

  const double contrast = params.contrast_factor();
  const double lift = params.brightness_lift();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      double& v = rgb[i * 3 + c];
      v = mean[c] + contrast * (v - mean[c]) + lift;
    }
  }

  gaussian_blur(rgb, h, w, params.blur_sigma(h, w));

  const Field mask = cloud_mask(h, w, params);
  const double alpha = params.fog_opacity();
  std::vector<float> out(rgb.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double veil = alpha * params.coverage(mask.values[i]);
    for (std::size_t c = 0; c < 3; ++c) {
      const double v = (1.0 - veil) * rgb[i * 3 + c] + veil * params.fog_color[c];
      out[i * 3 + c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return RgbImage(h, w, std::move(out));
}

}  // namespace rsbench
