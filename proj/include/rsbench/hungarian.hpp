// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace rsbench {

/// Dense row-major matrix of doubles, just enough for assignment problems.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Minimum-cost assignment (Kuhn-Munkres with potentials, O(n^2 m)).
///
/// Works on any rectangular matrix. Returns one (row, col) pair for each of
/// the min(rows, cols) assignments, sorted by row index.
inline std::vector<std::pair<std::size_t, std::size_t>> solve_assignment(const Matrix& cost) {
  const bool transposed = cost.rows() > cost.cols();
  const std::size_t n = transposed ? cost.cols() : cost.rows();
  const std::size_t m = transposed ? cost.rows() : cost.cols();
  std::vector<std::pair<std::size_t, std::size_t>> result;
  if (n == 0) return result;

  auto at = [&](std::size_t i, std::size_t j) {
    return transposed ? cost(j, i) : cost(i, j);
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // 1-based arrays; column 0 is the virtual source.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> owner(m + 1, 0), way(m + 1, 0);

  for (std::size_t i = 1; i <= n; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<bool> used(m + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = owner[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  result.reserve(n);
  for (std::size_t j = 1; j <= m; ++j) {
    if (owner[j] == 0) continue;
    const std::size_t r = owner[j] - 1;
    const std::size_t c = j - 1;
    result.emplace_back(transposed ? c : r, transposed ? r : c);
  }
  std::sort(result.begin(), result.end());
  return result;
}

/// Maximum-similarity one-to-one matching of size min(rows, cols).
inline std::vector<std::pair<std::size_t, std::size_t>> max_similarity_matching(
    const Matrix& similarity) {
  Matrix cost(similarity.rows(), similarity.cols());
  for (std::size_t r = 0; r < similarity.rows(); ++r) {
    for (std::size_t c = 0; c < similarity.cols(); ++c) cost(r, c) = -similarity(r, c);
  }
  return solve_assignment(cost);
}

}  // namespace rsbench
