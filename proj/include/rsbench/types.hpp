// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rsbench/error.hpp"

namespace rsbench {

enum class TaskKind { SceneClassification, Vqa, VisualGrounding };

// Answer structure decides which scoring rule applies to a response.
enum class AnswerStructure { Discrete, Count, Boxes };

enum class CoordinateConvention { Pixel, Normalized };

enum class TextRegime { Naturalistic, Conversational, ShorthandNotes, Persona, Homoglyph };

inline constexpr std::array<TextRegime, 4> kRewriteRegimes = {
    TextRegime::Naturalistic, TextRegime::Conversational, TextRegime::ShorthandNotes,
    TextRegime::Persona};

/// Homoglyph is held out from training-set assignment and only used for evaluation.
inline constexpr bool is_unseen(TextRegime r) { return r == TextRegime::Homoglyph; }

inline std::string_view to_string(TaskKind t) {
  switch (t) {
    case TaskKind::SceneClassification: return "scene_classification";
    case TaskKind::Vqa: return "vqa";
    case TaskKind::VisualGrounding: return "visual_grounding";
  }
  return "";
}

inline std::string_view to_string(AnswerStructure a) {
  switch (a) {
    case AnswerStructure::Discrete: return "discrete";
    case AnswerStructure::Count: return "count";
    case AnswerStructure::Boxes: return "boxes";
  }
  return "";
}

inline std::string_view to_string(CoordinateConvention c) {
  return c == CoordinateConvention::Pixel ? "pixel" : "normalized";
}

inline std::string_view to_string(TextRegime r) {
  switch (r) {
    case TextRegime::Naturalistic: return "naturalistic";
    case TextRegime::Conversational: return "conversational";
    case TextRegime::ShorthandNotes: return "shorthand_notes";
    case TextRegime::Persona: return "persona";
    case TextRegime::Homoglyph: return "homoglyph";
  }
  return "";
}

inline std::optional<TaskKind> parse_task_kind(std::string_view s) {
  if (s == "scene_classification") return TaskKind::SceneClassification;
  if (s == "vqa") return TaskKind::Vqa;
  if (s == "visual_grounding") return TaskKind::VisualGrounding;
  return std::nullopt;
}

inline std::optional<AnswerStructure> parse_answer_structure(std::string_view s) {
  if (s == "discrete") return AnswerStructure::Discrete;
  if (s == "count") return AnswerStructure::Count;
  if (s == "boxes") return AnswerStructure::Boxes;
  return std::nullopt;
}

inline std::optional<CoordinateConvention> parse_convention(std::string_view s) {
  if (s == "pixel") return CoordinateConvention::Pixel;
  if (s == "normalized") return CoordinateConvention::Normalized;
  return std::nullopt;
}

inline std::optional<TextRegime> parse_regime(std::string_view s) {
  if (s == "naturalistic") return TextRegime::Naturalistic;
  if (s == "conversational") return TextRegime::Conversational;
  if (s == "shorthand_notes") return TextRegime::ShorthandNotes;
  if (s == "persona") return TextRegime::Persona;
  if (s == "homoglyph") return TextRegime::Homoglyph;
  return std::nullopt;
}

/// Task plus, for VQA, the answer-structure tag.
struct Task {
  TaskKind kind = TaskKind::SceneClassification;
  AnswerStructure vqa_structure = AnswerStructure::Discrete;

  AnswerStructure structure() const {
    switch (kind) {
      case TaskKind::SceneClassification: return AnswerStructure::Discrete;
      case TaskKind::Vqa: return vqa_structure;
      case TaskKind::VisualGrounding: return AnswerStructure::Boxes;
    }
    return AnswerStructure::Discrete;
  }

  friend bool operator==(const Task&, const Task&) = default;
};

/// Axis-aligned box with canonical corners (x_min < x_max, y_min < y_max).
class BoundingBox {
 public:
  /// Swaps inverted corners; returns nullopt for zero-area or non-finite boxes.
  static std::optional<BoundingBox> make(double x1, double y1, double x2, double y2) {
    if (!(std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2))) {
      return std::nullopt;
    }
    BoundingBox b;
    b.x_min_ = std::min(x1, x2);
    b.x_max_ = std::max(x1, x2);
    b.y_min_ = std::min(y1, y2);
    b.y_max_ = std::max(y1, y2);
    if (!(b.x_min_ < b.x_max_ && b.y_min_ < b.y_max_)) return std::nullopt;
    return b;
  }

  double x_min() const { return x_min_; }
  double y_min() const { return y_min_; }
  double x_max() const { return x_max_; }
  double y_max() const { return y_max_; }
  double width() const { return x_max_ - x_min_; }
  double height() const { return y_max_ - y_min_; }
  double area() const { return width() * height(); }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

 private:
  BoundingBox() = default;
  double x_min_ = 0, y_min_ = 0, x_max_ = 0, y_max_ = 0;
};

using BoxSet = std::vector<BoundingBox>;

struct SampleRecord {
  std::string sample_id;
  std::string image_path;  // as written in the manifest (relative to its directory)
  std::string query;
  std::string reference_target;
  Task task;
  std::optional<TextRegime> regime;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct Manifest {
  CoordinateConvention convention = CoordinateConvention::Pixel;
  std::string base_dir;  // directory that relative image paths resolve against
  std::vector<SampleRecord> samples;
};

struct ResponseRecord {
  std::string sample_id;
  int condition_index = 1;  // 1..4
  int draw_index = 1;       // 1..N, or 0 for a greedy-decoded output
  std::string responder_id;
  std::string text;
  std::optional<double> logprob_sum;
  bool greedy = false;

  friend bool operator==(const ResponseRecord&, const ResponseRecord&) = default;
};

struct Condition {
  std::string image_path;
  std::string query;

  friend bool operator==(const Condition&, const Condition&) = default;
};

/// The four semantically equivalent inputs of one sample: clean, image-only
/// perturbed, text-only perturbed, jointly perturbed.
class ConditionSet {
 public:
  ConditionSet(std::string sample_id, Condition clean, Condition perturbed)
      : sample_id_(std::move(sample_id)),
        conditions_{Condition{clean.image_path, clean.query},
                    Condition{perturbed.image_path, clean.query},
                    Condition{clean.image_path, perturbed.query},
                    Condition{perturbed.image_path, perturbed.query}} {
    if (clean.query == perturbed.query) {
      warnings_.push_back("degenerate rewrite: perturbed query equals clean query for " +
                          sample_id_);
    }
  }

  const std::string& sample_id() const { return sample_id_; }

  /// 1-based condition index j in {1,2,3,4}.
  const Condition& at(int j) const {
    if (j < 1 || j > 4) {
      throw Error(ErrorKind::Validation, "condition index out of range: " + std::to_string(j));
    }
    return conditions_[static_cast<std::size_t>(j - 1)];
  }

  const std::array<Condition, 4>& conditions() const { return conditions_; }
  const std::vector<std::string>& warnings() const { return warnings_; }

 private:
  std::string sample_id_;
  std::array<Condition, 4> conditions_;
  std::vector<std::string> warnings_;
};

}  // namespace rsbench
