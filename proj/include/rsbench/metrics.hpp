// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rsbench/error.hpp"
#include "rsbench/geometry.hpp"
#include "rsbench/normalize.hpp"
#include "rsbench/scoring.hpp"
#include "rsbench/types.hpp"

namespace rsbench {

/// Neumaier-compensated sum over values sorted ascending, so the result does
/// not depend on the order the terms were produced in.
inline double stable_sum(std::vector<double> terms) {
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  double comp = 0.0;
  for (double t : terms) {
    const double next = sum + t;
    if (std::abs(sum) >= std::abs(t)) {
      comp += (sum - next) + t;
    } else {
      comp += (t - next) + sum;
    }
    sum = next;
  }
  return sum + comp;
}

inline double stable_mean(std::vector<double> terms) {
  const auto n = static_cast<double>(terms.size());
  return stable_sum(std::move(terms)) / n;
}

namespace detail {

template <typename A, typename B>
void require_same_nonempty(const A& a, const B& b, const char* what) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::LengthMismatch, std::string(what) + ": " + std::to_string(a.size()) +
                                               " vs " + std::to_string(b.size()));
  }
  if (a.empty()) throw Error(ErrorKind::EmptyInput, std::string(what) + ": no samples");
}

}  // namespace detail

/// Mean exact-match accuracy for discrete or count answers.
inline double accuracy(const std::vector<std::string>& predictions,
                       const std::vector<std::string>& references, AnswerStructure structure) {
  detail::require_same_nonempty(predictions, references, "accuracy");
  std::vector<double> hits;
  hits.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    switch (structure) {
      case AnswerStructure::Discrete:
        hits.push_back(score_discrete(predictions[i], references[i]).value);
        break;
      case AnswerStructure::Count: {
        const CountValue g = extract_count(references[i]);
        if (!g) throw Error(ErrorKind::InvalidReference, "count reference has no integer");
        const CountValue p = extract_count(predictions[i]);
        hits.push_back(p && *p == *g ? 1.0 : 0.0);
        break;
      }
      case AnswerStructure::Boxes:
        throw Error(ErrorKind::Validation, "accuracy is defined for discrete and count answers only");
    }
  }
  return stable_mean(std::move(hits));
}

/// Fraction of samples whose Hungarian-matched per-reference IoU reaches 0.5
/// (closed threshold).
inline double acc_at_05(const std::vector<BoxSet>& predictions,
                        const std::vector<BoxSet>& references) {
  detail::require_same_nonempty(predictions, references, "acc@0.5");
  std::vector<double> hits;
  hits.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    hits.push_back(grounding_score(references[i], predictions[i]) >= 0.5 ? 1.0 : 0.0);
  }
  return stable_mean(std::move(hits));
}

/// Per-sample gIoU: boxes matched by maximum total gIoU, averaged over the
/// reference boxes; unmatched references count as -1.
inline double sample_g_iou(const BoxSet& reference, const BoxSet& prediction) {
  if (reference.empty()) throw Error(ErrorKind::InvalidReference, "reference has no boxes");
  const auto pairs = match_boxes(reference, prediction,
                                 [](const BoundingBox& a, const BoundingBox& b) { return g_iou(a, b); });
  double total = -static_cast<double>(reference.size() - pairs.size());
  for (const auto& pr : pairs) total += g_iou(reference[pr.g_index], prediction[pr.p_index]);
  return total / static_cast<double>(reference.size());
}

inline double mean_g_iou(const std::vector<BoxSet>& predictions,
                         const std::vector<BoxSet>& references) {
  detail::require_same_nonempty(predictions, references, "gIoU");
  std::vector<double> terms;
  terms.reserve(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    terms.push_back(sample_g_iou(references[i], predictions[i]));
  }
  return stable_mean(std::move(terms));
}

/// Relative performance drop in percent. Negative when the perturbed metric
/// exceeds the clean one.
inline double rpd(double m_clean, double m_pert) {
  if (!(m_clean > 0)) {
    throw Error(ErrorKind::DegenerateClean, "clean metric must be positive, got " +
                                                std::to_string(m_clean));
  }
  return (m_clean - m_pert) / m_clean * 100.0;
}

/// Most frequent normalized output; ties go to the lexicographically smallest.
inline std::string group_mode(const std::vector<std::string>& group) {
  if (group.empty()) throw Error(ErrorKind::EmptyInput, "mode of an empty output group");
  std::map<std::string, std::size_t> counts;
  for (const auto& o : group) ++counts[normalize(o)];
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

using OutputGroup = std::vector<std::string>;

inline double cca_text(const std::vector<OutputGroup>& clean, const std::vector<OutputGroup>& pert) {
  detail::require_same_nonempty(clean, pert, "CCA-text");
  std::vector<double> agree;
  agree.reserve(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (clean[i].size() != pert[i].size()) {
      throw Error(ErrorKind::LengthMismatch, "CCA-text: group sizes differ at sample " + std::to_string(i));
    }
    agree.push_back(group_mode(clean[i]) == group_mode(pert[i]) ? 1.0 : 0.0);
  }
  return stable_mean(std::move(agree));
}

/// Matched IoU between two sampled box sets, normalized by the larger set.
/// Both empty agree perfectly; exactly one empty scores 0.
inline double pair_iou(const BoxSet& a, const BoxSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;
  const auto pairs = hungarian_match(a, b);
  std::vector<double> ious;
  ious.reserve(pairs.size());
  for (const auto& pr : pairs) ious.push_back(iou(a[pr.g_index], b[pr.p_index]));
  const double denom = static_cast<double>(std::max(a.size(), b.size()));
  return std::clamp(stable_sum(std::move(ious)) / denom, 0.0, 1.0);
}

using BoxGroup = std::vector<BoxSet>;

inline double cca_vg(const std::vector<BoxGroup>& clean, const std::vector<BoxGroup>& pert) {
  detail::require_same_nonempty(clean, pert, "CCA-vg");
  std::vector<double> per_sample;
  per_sample.reserve(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const auto& c = clean[i];
    const auto& p = pert[i];
    if (c.size() != p.size() || c.empty()) {
      throw Error(ErrorKind::LengthMismatch, "CCA-vg: group sizes differ or are empty at sample " +
                                                 std::to_string(i));
    }
    std::vector<double> terms;
    terms.reserve(c.size() * p.size());
    for (const auto& bc : c) {
      for (const auto& bp : p) terms.push_back(pair_iou(bc, bp));
    }
    const double k2 = static_cast<double>(c.size() * p.size());
    per_sample.push_back(stable_sum(std::move(terms)) / k2);
  }
  return std::clamp(stable_mean(std::move(per_sample)), 0.0, 1.0);
}

struct MetricReport {
  Task task;
  double m_clean = 0.0;
  double m_pert = 0.0;
  std::optional<double> rpd_percent;  // absent when m_clean == 0
  double cca = 0.0;
  std::optional<double> giou_clean;
  std::optional<double> giou_pert;
  std::size_t samples = 0;
  std::size_t k = 0;
  std::optional<double> strength;
};

/// Per-sample outputs of one evaluation run: a greedy-decoded output and K
/// sampled outputs under each of the clean and perturbed conditions.
struct EvalSample {
  std::string sample_id;
  std::string reference;
  std::string greedy_clean;
  std::string greedy_pert;
  OutputGroup sampled_clean;
  OutputGroup sampled_pert;
};

struct EvalRun {
  Task task;
  CoordinateConvention convention = CoordinateConvention::Pixel;
  std::size_t k = 5;
  std::vector<EvalSample> samples;
};

inline MetricReport evaluate_run(const EvalRun& run) {
  if (run.samples.empty()) throw Error(ErrorKind::EmptyInput, "evaluation run has no samples");
  if (run.k < 1) throw Error(ErrorKind::Validation, "K must be at least 1");
  for (const auto& s : run.samples) {
    if (s.sampled_clean.size() != run.k || s.sampled_pert.size() != run.k) {
      throw Error(ErrorKind::LengthMismatch,
                  "sample " + s.sample_id + " does not have K=" + std::to_string(run.k) +
                      " sampled outputs under both conditions");
    }
  }
  MetricReport report;
  report.task = run.task;
  report.samples = run.samples.size();
  report.k = run.k;

  const AnswerStructure structure = run.task.structure();
  if (structure == AnswerStructure::Boxes) {
    std::vector<BoxSet> refs, clean, pert;
    std::vector<BoxGroup> gc, gp;
    for (const auto& s : run.samples) {
      refs.push_back(parse_boxes(s.reference, run.convention));
      if (refs.back().empty()) {
        throw Error(ErrorKind::InvalidReference, "sample " + s.sample_id + " has no reference box");
      }
      clean.push_back(parse_boxes(s.greedy_clean, run.convention));
      pert.push_back(parse_boxes(s.greedy_pert, run.convention));
      BoxGroup c, p;
      for (const auto& o : s.sampled_clean) c.push_back(parse_boxes(o, run.convention));
      for (const auto& o : s.sampled_pert) p.push_back(parse_boxes(o, run.convention));
      gc.push_back(std::move(c));
      gp.push_back(std::move(p));
    }
    report.m_clean = acc_at_05(clean, refs);
    report.m_pert = acc_at_05(pert, refs);
    report.giou_clean = mean_g_iou(clean, refs);
    report.giou_pert = mean_g_iou(pert, refs);
    report.cca = cca_vg(gc, gp);
  } else {
    std::vector<std::string> refs, clean, pert;
    std::vector<OutputGroup> gc, gp;
    for (const auto& s : run.samples) {
      refs.push_back(s.reference);
      clean.push_back(s.greedy_clean);
      pert.push_back(s.greedy_pert);
      gc.push_back(s.sampled_clean);
      gp.push_back(s.sampled_pert);
    }
    report.m_clean = accuracy(clean, refs, structure);
    report.m_pert = accuracy(pert, refs, structure);
    if (structure == AnswerStructure::Count) {
      // the mode is taken over predictions: count outputs compare by value
      auto canon = [](OutputGroup& g) {
        for (auto& o : g) {
          const CountValue n = extract_count(o);
          o = n ? std::to_string(*n) : normalize(o);
        }
      };
      for (auto& g : gc) canon(g);
      for (auto& g : gp) canon(g);
    }
    report.cca = cca_text(gc, gp);
  }
  if (report.m_clean > 0) report.rpd_percent = rpd(report.m_clean, report.m_pert);
  return report;
}

}  // namespace rsbench
