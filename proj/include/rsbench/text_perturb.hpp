// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rsbench/error.hpp"
#include "rsbench/hash.hpp"
#include "rsbench/normalize.hpp"
#include "rsbench/scoring.hpp"
#include "rsbench/types.hpp"
#include "rsbench/utf8.hpp"

namespace rsbench {

// ---------------------------------------------------------------------------
// Homoglyph substitution (Latin -> visually identical Cyrillic)

struct HomoglyphPair {
  char32_t latin;
  char32_t cyrillic;
};

inline constexpr std::array<HomoglyphPair, 18> kHomoglyphTable = {{
    {U'a', U'а'}, {U'c', U'с'}, {U'e', U'е'}, {U'o', U'о'},
    {U'p', U'р'}, {U'x', U'х'}, {U'y', U'у'}, {U'A', U'А'},
    {U'B', U'В'}, {U'C', U'С'}, {U'E', U'Е'}, {U'H', U'Н'},
    {U'K', U'К'}, {U'M', U'М'}, {U'O', U'О'}, {U'P', U'Р'},
    {U'T', U'Т'}, {U'X', U'Х'},
}};

inline std::optional<char32_t> homoglyph_of(char32_t latin) {
  for (const auto& p : kHomoglyphTable) {
    if (p.latin == latin) return p.cyrillic;
  }
  return std::nullopt;
}

inline std::optional<char32_t> latin_of(char32_t cyrillic) {
  for (const auto& p : kHomoglyphTable) {
    if (p.cyrillic == cyrillic) return p.latin;
  }
  return std::nullopt;
}

/// Replaces each mappable character independently with probability `rate`.
/// The decision for a character depends only on (seed, code point position).
inline std::string homoglyph_perturb(std::string_view query, double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw Error(ErrorKind::Validation, "homoglyph rate must lie in [0, 1]");
  }
  std::u32string cps = utf8::decode(query);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const auto sub = homoglyph_of(cps[i]);
    if (!sub) continue;
    if (unit_interval(hash_combine(seed, 0x686F6D6FULL, i)) < rate) cps[i] = *sub;
  }
  return utf8::encode(cps);
}

/// Inverse of the substitution table applied to every character.
inline std::string homoglyph_restore(std::string_view text) {
  std::u32string cps = utf8::decode(text);
  for (auto& cp : cps) {
    if (auto l = latin_of(cp)) cp = *l;
  }
  return utf8::encode(cps);
}

// ---------------------------------------------------------------------------
// Rewrite jobs for an external LLM

inline constexpr std::string_view kQuerySlot = "{query}";

/// Prompt templates, one plain-text file per regime named `<regime>.txt`,
/// each containing the `{query}` slot.
class TemplateSet {
 public:
  static TemplateSet load(const std::filesystem::path& dir) {
    TemplateSet set;
    for (TextRegime r : kRewriteRegimes) {
      const auto path = dir / (std::string(to_string(r)) + ".txt");
      std::ifstream in(path, std::ios::binary);
      if (!in) throw Error(ErrorKind::Io, "cannot read template " + path.string());
      std::ostringstream ss;
      ss << in.rdbuf();
      set.set(r, ss.str());
    }
    return set;
  }

  void set(TextRegime r, std::string text) {
    if (is_unseen(r)) throw Error(ErrorKind::UnsupportedRegime, "homoglyph has no rewrite template");
    if (text.find(kQuerySlot) == std::string::npos) {
      throw Error(ErrorKind::Config, std::string("template for ") + std::string(to_string(r)) +
                                         " lacks the {query} slot");
    }
    templates_[r] = std::move(text);
  }

  const std::string& get(TextRegime r) const {
    auto it = templates_.find(r);
    if (it == templates_.end()) {
      throw Error(ErrorKind::UnsupportedRegime, "no template for regime " + std::string(to_string(r)));
    }
    return it->second;
  }

 private:
  std::map<TextRegime, std::string> templates_;
};

struct RewriteJob {
  std::string sample_id;
  TextRegime regime = TextRegime::Naturalistic;
  std::string source_query;
  std::string prompt;
  std::vector<std::string> anchors;
};

/// Task-critical phrases a rewrite must keep: the labels attached to the
/// reference boxes of grounding samples. Other tasks carry none.
inline std::vector<std::string> extract_anchors(const SampleRecord& sample,
                                                CoordinateConvention convention) {
  std::vector<std::string> anchors;
  if (sample.task.kind != TaskKind::VisualGrounding) return anchors;
  for (const auto& lb : parse_labeled_boxes(sample.reference_target, convention)) {
    if (lb.label.empty()) continue;
    if (std::find(anchors.begin(), anchors.end(), lb.label) == anchors.end()) {
      anchors.push_back(lb.label);
    }
  }
  return anchors;
}

inline std::string render_template(std::string_view tmpl, std::string_view query) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t at = tmpl.find(kQuerySlot, pos);
    if (at == std::string_view::npos) break;
    out.append(tmpl.substr(pos, at - pos));
    out.append(query);
    pos = at + kQuerySlot.size();
  }
  out.append(tmpl.substr(pos));
  return out;
}

inline RewriteJob render_rewrite_job(const SampleRecord& sample, TextRegime regime,
                                     const TemplateSet& templates,
                                     CoordinateConvention convention = CoordinateConvention::Pixel) {
  if (is_unseen(regime)) {
    throw Error(ErrorKind::UnsupportedRegime,
                "homoglyph perturbation is applied locally, not by rewriting");
  }
  RewriteJob job;
  job.sample_id = sample.sample_id;
  job.regime = regime;
  job.source_query = sample.query;
  job.prompt = render_template(templates.get(regime), sample.query);
  job.anchors = extract_anchors(sample, convention);
  if (sample.task.kind == TaskKind::VisualGrounding && job.anchors.empty()) {
    throw Error(ErrorKind::Validation, "grounding sample " + sample.sample_id +
                                           " has no labeled reference box to anchor the rewrite");
  }
  return job;
}

struct RewriteRejection {
  std::string sample_id;
  std::string rewritten;
  std::string reason;
};

struct RewriteIngest {
  std::vector<std::pair<std::string, std::string>> accepted;  // (sample_id, perturbed query)
  std::vector<RewriteRejection> rejected;
};

/// Acceptance rule for one rewrite. Returns an empty string when accepted,
/// else the rejection reason.
inline std::string check_rewrite(const RewriteJob& job, const std::string& rewritten) {
  if (fold_for_matching(rewritten).empty()) return "empty";
  if (rewritten == job.source_query) return "identical";
  const std::string folded = fold_for_matching(rewritten);
  for (const auto& anchor : job.anchors) {
    if (folded.find(fold_for_matching(anchor)) == std::string::npos) {
      return "anchor lost: " + anchor;
    }
  }
  return {};
}

/// Applies the acceptance rules to externally produced rewrites keyed by
/// sample id. Every job must have a rewrite entry.
inline RewriteIngest ingest_rewrites(const std::vector<RewriteJob>& jobs,
                                     const std::map<std::string, std::string>& rewrites) {
  RewriteIngest result;
  for (const auto& job : jobs) {
    auto it = rewrites.find(job.sample_id);
    if (it == rewrites.end()) {
      throw Error(ErrorKind::MissingRewrite, "no rewrite for sample " + job.sample_id);
    }
    std::string reason = check_rewrite(job, it->second);
    if (reason.empty()) {
      result.accepted.emplace_back(job.sample_id, it->second);
    } else {
      result.rejected.push_back({job.sample_id, it->second, std::move(reason)});
    }
  }
  return result;
}

}  // namespace rsbench
