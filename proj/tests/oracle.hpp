#pragma once

// Straight-line scaling-vector form of the alternating normalization, written
// without the library: P = diag(r) K diag(c) with the φ scalings pinned at 1.

#include <cmath>
#include <vector>

namespace oracle {

using Grid = std::vector<std::vector<double>>;

/// `cost` is (n+1) x (m+1), φ last. Returns the plan after `iters` row-then-column passes.
inline Grid sinkhorn(const Grid& cost, double lambda, double eps, int iters) {
  const std::size_t rows = cost.size(), cols = cost[0].size();
  const std::size_t n = rows - 1, m = cols - 1;
  Grid k(rows, std::vector<double>(cols, 0.0));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j)
      k[i][j] = (i == n && j == m) ? 0.0 : std::exp(-cost[i][j] / lambda) + eps;
  std::vector<double> r(rows, 1.0), c(cols, 1.0);
  for (int it = 0; it < iters; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0;
      for (std::size_t j = 0; j < cols; ++j) s += k[i][j] * c[j];
      r[i] = 1.0 / s;
    }
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0;
      for (std::size_t i = 0; i < rows; ++i) s += r[i] * k[i][j];
      c[j] = 1.0 / s;
    }
  }
  Grid p(rows, std::vector<double>(cols, 0.0));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) p[i][j] = r[i] * k[i][j] * c[j];
  return p;
}

}  // namespace oracle
