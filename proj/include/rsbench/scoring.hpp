// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "rsbench/error.hpp"
#include "rsbench/geometry.hpp"
#include "rsbench/normalize.hpp"
#include "rsbench/types.hpp"

namespace rsbench {

/// Extracted count; nullopt encodes a parse failure.
using CountValue = std::optional<std::uint64_t>;

struct DiscreteLabel {
  std::string normalized;
  friend bool operator==(const DiscreteLabel&, const DiscreteLabel&) = default;
};

using ParsedAnswer = std::variant<DiscreteLabel, CountValue, BoxSet>;

struct QualityScore {
  double value = 0.0;  // always in [0, 1]
  AnswerStructure structure = AnswerStructure::Discrete;
};

inline QualityScore score_discrete(std::string_view o, std::string_view y_star) {
  return {normalize(o) == normalize(y_star) ? 1.0 : 0.0, AnswerStructure::Discrete};
}

namespace detail {

inline constexpr std::array<std::string_view, 21> kNumberWords = {
    "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    "eleven", "twelve", "thirteen", "fourteen", "fifteen", "sixteen", "seventeen", "eighteen",
    "nineteen", "twenty"};

inline const std::regex& count_pattern() {
  static const std::regex re(
      R"((\d+)|\b(zero|one|two|three|four|five|six|seven|eight|nine|ten|eleven|twelve|thirteen|fourteen|fifteen|sixteen|seventeen|eighteen|nineteen|twenty)\b)",
      std::regex::ECMAScript | std::regex::optimize);
  return re;
}

inline constexpr const char* kNum = R"(\s*([-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)\s*)";

// Matches "[x1, y1, x2, y2]" or "{<x1><y1><x2><y2>}".
inline const std::regex& box_pattern() {
  static const std::regex re(std::string(R"(\[)") + kNum + "," + kNum + "," + kNum + "," + kNum +
                                 R"(\]|\{\s*<)" + kNum + "><" + kNum + "><" + kNum + "><" + kNum +
                                 R"(>\s*\})",
                             std::regex::ECMAScript | std::regex::optimize);
  return re;
}

inline bool in_convention(const BoundingBox& b, CoordinateConvention c) {
  if (c == CoordinateConvention::Pixel) return true;
  return b.x_min() >= 0 && b.y_min() >= 0 && b.x_max() <= 1 && b.y_max() <= 1;
}

}  // namespace detail

/// First integer literal in the text: a digit run or an English number word
/// from zero to twenty. Returns a parse failure when none is present.
inline CountValue extract_count(std::string_view text) {
  const std::string lowered = utf8::encode(detail::nfkc_lower(text));
  std::smatch m;
  if (!std::regex_search(lowered, m, detail::count_pattern())) return std::nullopt;
  if (m[1].matched) {
    std::uint64_t v = 0;
    const std::string digits = m[1].str();
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc{}) return std::nullopt;
    return v;
  }
  const std::string word = m[2].str();
  for (std::size_t i = 0; i < detail::kNumberWords.size(); ++i) {
    if (detail::kNumberWords[i] == word) return static_cast<std::uint64_t>(i);
  }
  return std::nullopt;
}

/// Relative-error count score: 1 on exact match, 0 for parse failures, wrong
/// answers to a zero reference, or relative error above 0.5, otherwise
/// exp(-3 * relative error).
inline QualityScore score_count(CountValue p, CountValue g) {
  if (!g) throw Error(ErrorKind::InvalidReference, "reference count is not parseable");
  QualityScore s{0.0, AnswerStructure::Count};
  if (!p) return s;
  if (*p == *g) {
    s.value = 1.0;
    return s;
  }
  if (*g == 0) return s;
  const double pd = static_cast<double>(*p);
  const double gd = static_cast<double>(*g);
  const double rel = std::abs(pd - gd) / gd;
  if (rel > 0.5) return s;
  s.value = std::exp(-3.0 * rel);
  return s;
}

struct LabeledBox {
  std::string label;  // text preceding the box, trimmed; may be empty
  BoundingBox box;
};

/// Every well-formed box in the text together with the phrase that precedes it.
/// Zero-area boxes and, under the normalized convention, boxes outside [0,1]
/// are dropped.
inline std::vector<LabeledBox> parse_labeled_boxes(std::string_view text,
                                                   CoordinateConvention convention) {
  std::vector<LabeledBox> out;
  const std::string s(text);
  auto begin = std::sregex_iterator(s.begin(), s.end(), detail::box_pattern());
  std::size_t last_end = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const std::smatch& m = *it;
    const std::size_t base = m[1].matched ? 1 : 5;
    std::array<double, 4> v{};
    bool ok = true;
    for (std::size_t k = 0; k < 4; ++k) {
      try {
        v[k] = std::stod(m[base + k].str());
      } catch (const std::exception&) {
        ok = false;
      }
    }
    const auto pos = static_cast<std::size_t>(m.position(0));
    std::string label = s.substr(last_end, pos - last_end);
    last_end = pos + static_cast<std::size_t>(m.length(0));
    if (!ok) continue;
    auto box = BoundingBox::make(v[0], v[1], v[2], v[3]);
    if (!box || !detail::in_convention(*box, convention)) continue;

    static const std::regex tags(R"(</?[A-Za-z]+>)");
    label = std::regex_replace(label, tags, " ");
    static const std::regex edges(R"(^[\s,;:.|]*(and\s+)?|[\s,;:.|]+$)");
    label = std::regex_replace(label, edges, "");
    out.push_back({std::move(label), *box});
  }
  return out;
}

inline BoxSet parse_boxes(std::string_view text, CoordinateConvention convention) {
  BoxSet boxes;
  for (auto& lb : parse_labeled_boxes(text, convention)) boxes.push_back(lb.box);
  return boxes;
}

/// Hungarian-matched IoU summed over matched pairs and divided by |G|.
inline double grounding_score(const BoxSet& g, const BoxSet& p) {
  if (g.empty()) throw Error(ErrorKind::InvalidReference, "reference has no boxes");
  if (p.empty()) return 0.0;
  const double total = matched_iou_total(g, p, hungarian_match(g, p));
  return std::clamp(total / static_cast<double>(g.size()), 0.0, 1.0);
}

inline QualityScore score_grounding(std::string_view o, std::string_view y_star,
                                    CoordinateConvention convention) {
  const BoxSet g = parse_boxes(y_star, convention);
  if (g.empty()) {
    throw Error(ErrorKind::InvalidReference, "reference target yields no boxes");
  }
  return {grounding_score(g, parse_boxes(o, convention)), AnswerStructure::Boxes};
}

/// Parses text under the given answer structure.
inline ParsedAnswer parse_answer(std::string_view text, AnswerStructure structure,
                                 CoordinateConvention convention) {
  switch (structure) {
    case AnswerStructure::Discrete: return DiscreteLabel{normalize(text)};
    case AnswerStructure::Count: return extract_count(text);
    case AnswerStructure::Boxes: return parse_boxes(text, convention);
  }
  return DiscreteLabel{normalize(text)};
}

/// Unified quality score of a response against the reference target,
/// dispatched on the sample's answer structure.
inline QualityScore score_response(std::string_view o, std::string_view y_star, const Task& task,
                                   CoordinateConvention convention) {
  switch (task.structure()) {
    case AnswerStructure::Discrete: return score_discrete(o, y_star);
    case AnswerStructure::Count: return score_count(extract_count(o), extract_count(y_star));
    case AnswerStructure::Boxes: return score_grounding(o, y_star, convention);
  }
  return score_discrete(o, y_star);
}

/// Checks that a reference target parses under its task; throws
/// InvalidReference otherwise.
inline void validate_reference(std::string_view y_star, const Task& task,
                               CoordinateConvention convention) {
  switch (task.structure()) {
    case AnswerStructure::Discrete:
      if (normalize(y_star).empty()) {
        throw Error(ErrorKind::InvalidReference, "discrete reference is empty after normalization");
      }
      break;
    case AnswerStructure::Count:
      if (!extract_count(y_star)) {
        throw Error(ErrorKind::InvalidReference, "count reference has no integer");
      }
      break;
    case AnswerStructure::Boxes:
      if (parse_boxes(y_star, convention).empty()) {
        throw Error(ErrorKind::InvalidReference, "grounding reference has no parseable box");
      }
      break;
  }
}

}  // namespace rsbench
