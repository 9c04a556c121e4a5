// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "rsbench/dataset.hpp"
#include "rsbench/hash.hpp"
#include "rsbench/image.hpp"
#include "rsbench/jobs.hpp"
#include "rsbench/scoring.hpp"
#include "rsbench/types.hpp"

namespace rsbench::synthetic {

// A small procedurally drawn dataset covering every task, plus a scripted
// responder that stands in for the external model.

inline constexpr std::size_t kSize = 128;

inline constexpr std::array<std::string_view, 5> kSceneClasses = {
    "farmland", "residential", "beach", "forest", "parking lot"};

inline constexpr std::array<std::string_view, 3> kObjects = {"tennis court", "swimming pool",
                                                             "storage tank"};

using Rgb = std::array<double, 3>;

class Canvas {
 public:
  explicit Canvas(std::uint64_t seed) : seed_(seed), px_(kSize * kSize * 3, 0.0) {}

  void fill(Rgb c) {
    for (std::size_t i = 0; i < kSize * kSize; ++i) set(i, c);
  }

  void rect(int x1, int y1, int x2, int y2, Rgb c) {
    for (int y = std::max(0, y1); y < std::min<int>(kSize, y2); ++y) {
      for (int x = std::max(0, x1); x < std::min<int>(kSize, x2); ++x) set(idx(x, y), c);
    }
  }

  void outline(int x1, int y1, int x2, int y2, Rgb c) {
    rect(x1, y1, x2, y1 + 1, c);
    rect(x1, y2 - 1, x2, y2, c);
    rect(x1, y1, x1 + 1, y2, c);
    rect(x2 - 1, y1, x2, y2, c);
  }

  void disc(double cx, double cy, double r, Rgb c) {
    for (std::size_t y = 0; y < kSize; ++y) {
      for (std::size_t x = 0; x < kSize; ++x) {
        const double dx = static_cast<double>(x) + 0.5 - cx;
        const double dy = static_cast<double>(y) + 0.5 - cy;
        if (dx * dx + dy * dy <= r * r) set(y * kSize + x, c);
      }
    }
  }

  Rgb get(std::size_t x, std::size_t y) const {
    const std::size_t i = idx(static_cast<int>(x), static_cast<int>(y)) * 3;
    return {px_[i], px_[i + 1], px_[i + 2]};
  }
  void put(std::size_t x, std::size_t y, Rgb c) { set(idx(static_cast<int>(x), static_cast<int>(y)), c); }

  RgbImage finish(double grain) const {
    std::vector<float> v(px_.size());
    for (std::size_t i = 0; i < kSize * kSize; ++i) {
      const double n = grain * (unit_interval(hash_combine(seed_, 0x6772616EULL, i)) - 0.5);
      for (std::size_t c = 0; c < 3; ++c) v[i * 3 + c] = static_cast<float>(px_[i * 3 + c] + n);
    }
    return RgbImage(kSize, kSize, std::move(v));
  }

 private:
  static std::size_t idx(int x, int y) { return static_cast<std::size_t>(y) * kSize + static_cast<std::size_t>(x); }
  void set(std::size_t i, Rgb c) {
    for (std::size_t k = 0; k < 3; ++k) px_[i * 3 + k] = c[k];
  }

  std::uint64_t seed_;
  std::vector<double> px_;
};

inline constexpr Rgb kGrass = {0.36, 0.50, 0.30};
inline constexpr Rgb kRoof = {0.55, 0.53, 0.50};

struct Box {
  int x1, y1, x2, y2;
};

inline void draw_object(Canvas& cv, std::string_view object, const Box& b) {
  if (object == "tennis court") {
    cv.rect(b.x1, b.y1, b.x2, b.y2, {0.22, 0.52, 0.46});
    cv.outline(b.x1, b.y1, b.x2, b.y2, {0.95, 0.95, 0.95});
    const int mx = (b.x1 + b.x2) / 2;
    cv.rect(mx, b.y1, mx + 1, b.y2, {0.95, 0.95, 0.95});
  } else if (object == "swimming pool") {
    cv.rect(b.x1, b.y1, b.x2, b.y2, {0.88, 0.88, 0.86});
    cv.rect(b.x1 + 2, b.y1 + 2, b.x2 - 2, b.y2 - 2, {0.18, 0.58, 0.85});
  } else {
    const double cx = (b.x1 + b.x2) / 2.0, cy = (b.y1 + b.y2) / 2.0;
    cv.disc(cx + 2, cy + 2, (b.x2 - b.x1) / 2.0, {0.20, 0.22, 0.20});
    cv.disc(cx, cy, (b.x2 - b.x1) / 2.0, {0.90, 0.90, 0.88});
  }
}

inline Box object_extent(std::string_view object) {
  if (object == "tennis court") return {0, 0, 36, 20};
  if (object == "swimming pool") return {0, 0, 26, 14};
  return {0, 0, 18, 18};
}

/// Places an object of `object`'s size at a hash-chosen spot inside the
/// region [rx1, rx2) x [ry1, ry2).
inline Box place(std::string_view object, std::uint64_t h, int rx1, int ry1, int rx2, int ry2) {
  const Box e = object_extent(object);
  const int w = e.x2, hgt = e.y2;
  const int sx = std::max(1, rx2 - rx1 - w);
  const int sy = std::max(1, ry2 - ry1 - hgt);
  const int x = rx1 + static_cast<int>(hash_combine(h, 1) % static_cast<std::uint64_t>(sx));
  const int y = ry1 + static_cast<int>(hash_combine(h, 2) % static_cast<std::uint64_t>(sy));
  return {x, y, x + w, y + hgt};
}

inline void draw_background(Canvas& cv, std::uint64_t h) {
  cv.fill(kGrass);
  // a couple of buildings away from the object regions
  for (int k = 0; k < 3; ++k) {
    const int x = 4 + static_cast<int>(hash_combine(h, 10, k) % 100);
    cv.rect(x, 112, x + 12, 124, kRoof);
  }
  cv.rect(0, 104, kSize, 108, {0.25, 0.25, 0.26});
}

inline void draw_scene(Canvas& cv, std::string_view cls, std::uint64_t h) {
  if (cls == "farmland") {
    const Rgb bands[3] = {{0.35, 0.55, 0.20}, {0.55, 0.45, 0.30}, {0.70, 0.65, 0.35}};
    for (int b = 0; b < 8; ++b) {
      cv.rect(0, b * 16, kSize, b * 16 + 16, bands[hash_combine(h, b) % 3]);
    }
  } else if (cls == "residential") {
    cv.fill({0.48, 0.48, 0.46});
    for (int gy = 0; gy < 5; ++gy) {
      for (int gx = 0; gx < 5; ++gx) {
        const bool red = hash_combine(h, gx, gy) % 2 == 0;
        const Rgb roof = red ? Rgb{0.66, 0.30, 0.25} : Rgb{0.85, 0.85, 0.82};
        cv.rect(gx * 26 + 4, gy * 26 + 4, gx * 26 + 18, gy * 26 + 18, roof);
      }
    }
  } else if (cls == "beach") {
    for (std::size_t y = 0; y < kSize; ++y) {
      const double shore = 52 + 10 * std::sin(static_cast<double>(y) / 14.0);
      for (std::size_t x = 0; x < kSize; ++x) {
        const double fx = static_cast<double>(x);
        const Rgb c = fx < shore ? Rgb{0.10, 0.32, 0.55}
                      : fx < shore + 3 ? Rgb{0.92, 0.94, 0.95}
                                       : Rgb{0.86, 0.78, 0.60};
        cv.put(x, y, c);
      }
    }
  } else if (cls == "forest") {
    cv.fill({0.12, 0.30, 0.14});
    for (int k = 0; k < 60; ++k) {
      const double cx = static_cast<double>(hash_combine(h, 20, k) % kSize);
      const double cy = static_cast<double>(hash_combine(h, 21, k) % kSize);
      const double g = 0.32 + 0.15 * unit_interval(hash_combine(h, 22, k));
      cv.disc(cx, cy, 5.0, {0.10, g, 0.12});
    }
  } else {
    cv.fill({0.30, 0.30, 0.31});
    for (int row = 0; row < 4; ++row) {
      const int y = 10 + row * 30;
      for (int col = 0; col < 12; ++col) {
        const int x = 6 + col * 10;
        cv.rect(x, y, x + 1, y + 20, {0.92, 0.92, 0.90});
        if (hash_combine(h, row, col) % 3 != 0) {
          const double t = unit_interval(hash_combine(h, 30, row, col));
          cv.rect(x + 2, y + 3, x + 8, y + 16, {0.2 + 0.7 * t, 0.25, 0.8 - 0.6 * t});
        }
      }
    }
  }
}

inline std::string box_text(std::string_view label, const Box& b) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.*s [%d, %d, %d, %d]", static_cast<int>(label.size()), label.data(),
                b.x1, b.y1, b.x2, b.y2);
  return buf;
}

struct Generated {
  SampleRecord sample;
  RgbImage image;
};

/// Builds sample `i` (0-based). Tasks rotate scene / VQA discrete / VQA count
/// / grounding.
inline Generated generate_sample(std::size_t i, std::uint64_t seed) {
  const std::uint64_t h = hash_combine(seed, 0x73796EULL, i);
  const std::size_t t = i / 4;
  char id[32];
  std::snprintf(id, sizeof id, "syn-%03zu", i);
  SampleRecord s;
  s.sample_id = id;
  s.image_path = std::string("images/") + id + ".png";
  Canvas cv(h);
  switch (i % 4) {
    case 0: {
      const std::string_view cls = kSceneClasses[t % kSceneClasses.size()];
      draw_scene(cv, cls, h);
      s.task = {TaskKind::SceneClassification, AnswerStructure::Discrete};
      s.query = "Which scene category best describes this image? Options: farmland, residential, "
                "beach, forest, parking lot.";
      s.reference_target = std::string(cls);
      break;
    }
    case 1: {
      draw_background(cv, h);
      const std::string_view obj = kObjects[t % kObjects.size()];
      const bool present = t % 2 == 0;
      if (present) draw_object(cv, obj, place(obj, h, 8, 8, 120, 96));
      // a distractor of another kind
      const std::string_view other = kObjects[(t + 1) % kObjects.size()];
      draw_object(cv, other, place(other, hash_combine(h, 99), 8, 8, 120, 96));
      s.task = {TaskKind::Vqa, AnswerStructure::Discrete};
      s.query = "Is there a " + std::string(obj) + " in this image? Answer yes or no.";
      s.reference_target = present ? "yes" : "no";
      break;
    }
    case 2: {
      draw_background(cv, h);
      const std::size_t count = 1 + hash_combine(h, 3) % 6;
      std::array<int, 9> cells = {0, 1, 2, 3, 4, 5, 6, 7, 8};
      for (std::size_t k = cells.size() - 1; k > 0; --k) {
        std::swap(cells[k], cells[hash_combine(h, 4, k) % (k + 1)]);
      }
      for (std::size_t k = 0; k < count; ++k) {
        const int cx = 8 + (cells[k] % 3) * 36;
        const int cy = 4 + (cells[k] / 3) * 32;
        draw_object(cv, "storage tank", place("storage tank", hash_combine(h, 5, k), cx, cy, cx + 32, cy + 28));
      }
      s.task = {TaskKind::Vqa, AnswerStructure::Count};
      s.query = "How many storage tanks are visible in this image?";
      s.reference_target = std::to_string(count);
      break;
    }
    default: {
      draw_background(cv, h);
      const std::string_view obj = kObjects[(t + 1) % kObjects.size()];
      const bool pair = t % 2 == 1;
      std::vector<Box> boxes;
      if (pair) {
        boxes.push_back(place(obj, hash_combine(h, 6), 4, 4, 62, 98));
        boxes.push_back(place(obj, hash_combine(h, 7), 66, 4, 124, 98));
      } else {
        boxes.push_back(place(obj, hash_combine(h, 6), 8, 8, 120, 96));
      }
      std::string target;
      for (const Box& b : boxes) {
        draw_object(cv, obj, b);
        if (!target.empty()) target += ", ";
        target += box_text(obj, b);
      }
      s.task = {TaskKind::VisualGrounding};
      s.query = pair ? "Locate every " + std::string(obj) + " in the image and give their bounding boxes."
                     : "Locate the " + std::string(obj) + " in the image and give its bounding box.";
      s.reference_target = target;
      break;
    }
  }
  return {std::move(s), cv.finish(0.04)};
}

/// Rewrite of `query` in the style of `regime`, standing in for the external
/// LLM. Every style keeps the original wording, so anchors survive.
inline std::string scripted_rewrite(std::string_view query, TextRegime regime) {
  const std::string q(query);
  switch (regime) {
    case TextRegime::Naturalistic: return "Looking at this overhead photo: " + q;
    case TextRegime::Conversational: return "hey, quick question for you. " + q + " thanks a lot!";
    case TextRegime::ShorthandNotes: return "img review -> " + q + " (short answer pls)";
    case TextRegime::Persona: return "As a land-use surveyor checking this tile, I need to know: " + q;
    case TextRegime::Homoglyph: break;
  }
  throw Error(ErrorKind::UnsupportedRegime, "homoglyph queries are not rewritten");
}

struct DatasetOptions {
  std::size_t samples = 20;
  std::uint64_t seed = 7;
};

/// Writes images/, manifest.jsonl and rewrites.jsonl under `dir`.
inline Manifest make_dataset(const fs::path& dir, const DatasetOptions& opts = {}) {
  if (opts.samples == 0) throw Error(ErrorKind::Config, "dataset needs at least one sample");
  fs::create_directories(dir / "images");
  Manifest m;
  m.convention = CoordinateConvention::Pixel;
  m.base_dir = dir.string();
  for (std::size_t i = 0; i < opts.samples; ++i) {
    Generated g = generate_sample(i, opts.seed);
    write_png(dir / g.sample.image_path, g.image);
    m.samples.push_back(std::move(g.sample));
  }
  m.samples = assign_regimes(std::move(m.samples), opts.seed);
  write_manifest(dir / "manifest.jsonl", m);

  JsonlWriter w(dir / "rewrites.jsonl");
  for (const auto& s : m.samples) {
    w.write({{"sample_id", s.sample_id}, {"rewritten", scripted_rewrite(s.query, *s.regime)}});
  }
  w.close();
  return m;
}

// ---------------------------------------------------------------------------
// Scripted responder

struct ResponderOptions {
  std::uint64_t seed = 11;
  double strength = 0.45;  // image strength the conditions were rendered at
  double text_penalty = 0.2;
  double noise = 0.4;       // spread of the per-draw jitter
  std::string responder_id = "scripted";
};

/// Whether the responder answers this job correctly. Each sample has a fixed
/// ability u in [0, 1); a job is answered correctly when u plus draw jitter
/// reaches the condition's difficulty (strength for a perturbed image, plus
/// text_penalty for a perturbed query). Greedy draws carry no jitter, so the
/// greedy accuracy under j = 4 is non-increasing in strength.
inline bool scripted_correct(const InferenceJob& job, const ResponderOptions& o) {
  const std::uint64_t sid = fnv1a64(job.sample_id);
  if (unit_interval(hash_combine(o.seed, sid, 0xEA5EULL)) < 0.2) return true;
  const double ability = unit_interval(hash_combine(o.seed, sid, 0xAB1EULL));
  const bool img = job.condition_index == 2 || job.condition_index == 4;
  const bool txt = job.condition_index == 3 || job.condition_index == 4;
  const double difficulty = (img ? o.strength : 0.0) + (txt ? o.text_penalty : 0.0);
  const double jitter =
      job.draw_index == 0
          ? 0.0
          : o.noise * (unit_interval(hash_combine(o.seed, sid, job.condition_index, job.draw_index)) - 0.5);
  return ability + jitter >= difficulty;
}

inline std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

inline std::string scripted_answer(const InferenceJob& job, const SampleRecord& sample,
                                   const ResponderOptions& o) {
  const bool correct = scripted_correct(job, o);
  const std::uint64_t h = hash_combine(o.seed, fnv1a64(job.sample_id), job.condition_index,
                                       job.draw_index, 0x7478ULL);
  const std::string& ref = sample.reference_target;
  switch (sample.task.structure()) {
    case AnswerStructure::Discrete: {
      std::string ans = ref;
      if (!correct) {
        if (ref == "yes" || ref == "no") {
          ans = ref == "yes" ? "no" : "yes";
        } else {
          auto it = std::find(kSceneClasses.begin(), kSceneClasses.end(), ref);
          const std::size_t base = it == kSceneClasses.end() ? 0 : static_cast<std::size_t>(it - kSceneClasses.begin());
          ans = std::string(kSceneClasses[(base + 1 + h % 4) % kSceneClasses.size()]);
        }
      }
      switch (h % 3) {
        case 0: return ans;
        case 1: return capitalize(ans) + ".";
        default: return " " + capitalize(ans);
      }
    }
    case AnswerStructure::Count: {
      const std::uint64_t g = *extract_count(ref);
      const std::uint64_t n = correct ? g : g + 1 + h % 3;
      if (h % 2 == 0) return "There are " + std::to_string(n) + " storage tanks.";
      return std::to_string(n);
    }
    case AnswerStructure::Boxes: break;
  }
  if (!correct && h % 4 == 0) return "I could not find it in this image.";
  std::string out;
  int k = 0;
  for (const auto& lb : parse_labeled_boxes(ref, CoordinateConvention::Pixel)) {
    const std::uint64_t hk = hash_combine(h, k++);
    const int jit = job.draw_index == 0 && correct ? 0 : static_cast<int>(hk % 5) - 2;
    const int shift = correct ? 0 : 30 + static_cast<int>(hk % 20);
    const auto clampc = [](double v) { return std::clamp(static_cast<int>(std::lround(v)), 0, static_cast<int>(kSize)); };
    Box b{clampc(lb.box.x_min() + jit + shift), clampc(lb.box.y_min() + jit),
          clampc(lb.box.x_max() + jit + shift), clampc(lb.box.y_max() - jit)};
    if (b.x2 <= b.x1) b.x1 = std::max(0, b.x2 - 8);
    if (!out.empty()) out += ", ";
    out += box_text(lb.label, b);
  }
  return out;
}

/// Answers every job with the scripted responder.
inline std::vector<ResponseRecord> script_responses(const std::vector<InferenceJob>& jobs,
                                                    const Manifest& manifest,
                                                    const ResponderOptions& o = {}) {
  std::map<std::string, const SampleRecord*> by_id;
  for (const auto& s : manifest.samples) by_id.emplace(s.sample_id, &s);
  std::vector<ResponseRecord> out;
  out.reserve(jobs.size());
  for (const auto& job : jobs) {
    auto it = by_id.find(job.sample_id);
    if (it == by_id.end()) throw Error(ErrorKind::Validation, "job for unknown sample " + job.sample_id);
    ResponseRecord r;
    r.sample_id = job.sample_id;
    r.condition_index = job.condition_index;
    r.draw_index = job.draw_index;
    r.greedy = job.greedy;
    r.responder_id = o.responder_id;
    r.text = scripted_answer(job, *it->second, o);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace rsbench::synthetic
