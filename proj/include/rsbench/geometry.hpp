// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <utility>
#include <vector>

#include "rsbench/hungarian.hpp"
#include "rsbench/types.hpp"

namespace rsbench {

inline double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double w = std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min());
  const double h = std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min());
  return (w > 0 && h > 0) ? w * h : 0.0;
}

inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

/// Generalized IoU: IoU minus the fraction of the smallest enclosing box not
/// covered by the union. Range [-1, 1].
inline double g_iou(const BoundingBox& a, const BoundingBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  const double cw = std::max(a.x_max(), b.x_max()) - std::min(a.x_min(), b.x_min());
  const double ch = std::max(a.y_max(), b.y_max()) - std::min(a.y_min(), b.y_min());
  const double enclosing = cw * ch;
  return inter / uni - (enclosing - uni) / enclosing;
}

struct BoxPair {
  std::size_t g_index;
  std::size_t p_index;
  friend bool operator==(const BoxPair&, const BoxPair&) = default;
};

template <typename Similarity>
Matrix similarity_matrix(const BoxSet& g, const BoxSet& p, Similarity sim) {
  Matrix m(g.size(), p.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) m(i, j) = sim(g[i], p[j]);
  }
  return m;
}

/// One-to-one matching of size min(|G|, |P|) maximizing the summed similarity.
template <typename Similarity>
std::vector<BoxPair> match_boxes(const BoxSet& g, const BoxSet& p, Similarity sim) {
  std::vector<BoxPair> pairs;
  for (auto [r, c] : max_similarity_matching(similarity_matrix(g, p, sim))) {
    pairs.push_back({r, c});
  }
  return pairs;
}

/// Hungarian matching between reference boxes G and predicted boxes P that
/// maximizes total IoU.
inline std::vector<BoxPair> hungarian_match(const BoxSet& g, const BoxSet& p) {
  return match_boxes(g, p, [](const BoundingBox& a, const BoundingBox& b) { return iou(a, b); });
}

/// Sum of IoU over a matching, accumulated in reference-index order.
inline double matched_iou_total(const BoxSet& g, const BoxSet& p,
                                const std::vector<BoxPair>& pairs) {
  double total = 0.0;
  for (const auto& pr : pairs) total += iou(g[pr.g_index], p[pr.p_index]);
  return total;
}

}  // namespace rsbench
